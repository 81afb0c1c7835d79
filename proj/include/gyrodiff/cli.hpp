// Command implementations behind the gyrodiff executable.
#pragma once

#include "gyrodiff/config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gyrodiff::cli {

namespace fs = std::filesystem;

struct Context {
    config::ExperimentConfig config;
    fs::path out;
    int jobs = 1;
    bool quiet = false;
};

/// Fixed artifact locations below the output directory.
struct Layout {
    fs::path root;

    fs::path clean() const { return root / "data" / "clean"; }
    fs::path noisy() const { return root / "data" / "noisy"; }
    fs::path recorded() const { return root / "data" / "recorded"; }
    fs::path denoiser_dir() const { return root / "denoiser"; }
    fs::path denoiser() const { return denoiser_dir() / "denoiser.ckpt"; }
    fs::path heading_dir(config::HeadingMethod m) const {
        return root / ("heading-" + std::string(config::to_string(m)));
    }
    fs::path heading(config::HeadingMethod m) const { return heading_dir(m) / "heading.ckpt"; }
    fs::path eval_dir() const { return root / "eval"; }
    fs::path sweep_dir() const { return root / "sweep"; }
    fs::path ablation_dir() const { return root / "ablation"; }
};

/// Synthetic clean and noisy datasets.
void cmd_generate(const Context& ctx);
/// Recorded CSV files plus labels.json from `input`.
void cmd_ingest(const Context& ctx, const fs::path& input);
void cmd_train_denoiser(const Context& ctx);
/// Throws MissingArtifact for the aided method without a denoiser checkpoint.
void cmd_train_heading(const Context& ctx, config::HeadingMethod method);
void cmd_evaluate(const Context& ctx);
void cmd_sweep(const Context& ctx, std::optional<bool> retrain);
void cmd_ablate(const Context& ctx);
/// Renders the SVG for a report.json.
void cmd_plot(const fs::path& report, const fs::path& output);

/// Parses arguments, runs one command and maps errors to exit codes.
int run(int argc, const char* const* argv);

} // namespace gyrodiff::cli
