// Trained networks <-> checkpoint containers.
#pragma once

#include "gyrodiff/denoiser.hpp"
#include "gyrodiff/heading.hpp"
#include "gyrodiff/io.hpp"
#include "gyrodiff/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace gyrodiff::models {

struct StoredDenoiser {
    diffusion::DenoiserNetwork network;
    diffusion::NoiseSchedule schedule;
    std::string sha256; ///< of the checkpoint file
};

/// How the inputs of a heading network were produced.
struct Preprocessing {
    bool denoised = false;
    std::string denoiser_sha256; ///< file hash of the denoiser checkpoint
    pipeline::PipelineConfig pipeline;
};

struct StoredHeading {
    heading::HeadingNetwork network;
    std::string method;
    Preprocessing preprocessing;
};

/// `extra_json` is merged into the header (config echo, curves summary, ...).
void save_denoiser(const std::filesystem::path& path, const diffusion::DenoiserNetwork& net,
                   const diffusion::NoiseSchedule& sched, const std::string& extra_json = "{}");
StoredDenoiser load_denoiser(const std::filesystem::path& path);

void save_heading(const std::filesystem::path& path, const heading::HeadingNetwork& net,
                  const std::string& method, const Preprocessing& prep,
                  const std::string& extra_json = "{}");
StoredHeading load_heading(const std::filesystem::path& path);

} // namespace gyrodiff::models
