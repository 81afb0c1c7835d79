// Experiment configuration: one JSON document covering every stage.
#pragma once

#include "gyrodiff/denoiser.hpp"
#include "gyrodiff/heading.hpp"
#include "gyrodiff/normalize.hpp"
#include "gyrodiff/pipeline.hpp"
#include "gyrodiff/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gyrodiff::config {

struct DatasetConfig {
    std::string source = "synthetic"; ///< "synthetic" or "recorded" for learned stages
    double increment_deg = 0.5;
    double duration_s = 100.0;
    double sample_rate_hz = 3.0;
    double source_rate_hz = 600.0; ///< rate at which sensor noise is injected
    double latitude_deg = 0.0;
    synth::SplitRatio split;
};

struct NoiseConfig {
    double white_noise_std_deg_s = 0.05;    ///< at source_rate_hz
    double constant_bias_std_deg_s = 1e-4;
};

struct ScheduleConfig {
    int steps = 1000;
    double beta_min = 1e-4;
    double beta_max = 5e-4;
};

struct DenoiserConfig {
    diffusion::DenoiserArchitecture architecture;
    int batch_size = 50;
    double learning_rate = 1e-3;
    int max_epochs = 50;
    int patience = 20;
    double svd_threshold = 0.1;
    int svd_window = 1;
};

/// Shared heading settings; variant-specific batch sizes and dropout.
struct HeadingConfig {
    int layers = 2;
    int hidden = 24;
    double lr_max = 0.005;
    double lr_min = 0.0005;
    int epochs = 300;
    int patience = 30;
    int baseline_batch_size = 100;
    int enhanced_batch_size = 32;
    double enhanced_dropout = 0.05;
};

struct PipelineSection {
    int t_back = 950;
    NormScope scope = NormScope::per_sequence;
    bool stochastic = true;
    int chunk = 64;
    std::vector<int> sweep_values{100, 300, 500, 700, 900, 950, 980};
    bool sweep_retrain = true;
    std::vector<double> durations_s{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
};

struct IngestConfig {
    double source_rate_hz = 600.0;
    double target_rate_hz = 3.0;
    int train = 24;
    int val = 4;
    int test = 6;
    int augment_count = 100;
    double augment_half_range_deg = 20.0;
};

struct ExperimentConfig {
    std::uint64_t base_seed = 0;
    std::string output_dir = "runs/default";
    DatasetConfig dataset;
    NoiseConfig noise;
    ScheduleConfig schedule;
    DenoiserConfig denoiser;
    HeadingConfig heading;
    PipelineSection pipeline;
    IngestConfig ingest;
};

/// The two learned heading methods compared against the classical one.
enum class HeadingMethod { baseline, aided };

std::string_view to_string(HeadingMethod m);
HeadingMethod heading_method_from_string(std::string_view text);

/// Parses a config document. Missing fields keep their defaults; unknown
/// fields, wrong types and out-of-range values throw ConfigError naming the
/// field, and syntax errors report `source:line:column`. A run manifest is
/// accepted too, in which case its embedded config is used.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Complete document with every field spelled out.
std::string to_json(const ExperimentConfig& cfg);

/// SHA-256 of the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);

// Derived settings.
synth::SyntheticConfig synthetic_config(const ExperimentConfig& cfg);
synth::NoiseModel noise_model(const ExperimentConfig& cfg);
diffusion::NoiseSchedule schedule(const ExperimentConfig& cfg);
diffusion::DiffusionTrainConfig denoiser_train_config(const ExperimentConfig& cfg);
heading::HeadingTrainConfig heading_train_config(const ExperimentConfig& cfg, HeadingMethod m);
heading::HeadingArchitecture heading_architecture(const ExperimentConfig& cfg, HeadingMethod m);
pipeline::PipelineConfig pipeline_config(const ExperimentConfig& cfg, int jobs = 1);

} // namespace gyrodiff::config
