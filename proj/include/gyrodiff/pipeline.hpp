// Normalize -> denoise -> denormalize wrapper, end-to-end inference and the
// evaluation harnesses.
#pragma once

#include "gyrodiff/denoiser.hpp"
#include "gyrodiff/heading.hpp"
#include "gyrodiff/normalize.hpp"
#include "gyrodiff/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gyrodiff::pipeline {

struct PipelineConfig {
    int t_back = 950;
    NormScope scope = NormScope::per_sequence;
    bool stochastic = true;    ///< reverse-process noise injection
    std::uint64_t seed = 0;    ///< reverse-process noise; sequence i uses seed + id
    int chunk = 64;            ///< sequences per batched reverse pass
    int jobs = 1;              ///< worker threads over chunks
};

/// A frozen denoiser with its schedule, as used in front of the heading model.
struct DenoisingStage {
    const diffusion::DenoiserNetwork* network = nullptr;
    diffusion::NoiseSchedule schedule;
    PipelineConfig config;

    /// True when the stage would run zero reverse iterations.
    bool is_identity() const;

    /// Applies the stage to every sequence. Sequences are processed in fixed
    /// chunks of config.chunk in input order, so the output does not depend
    /// on config.jobs. An identity stage returns the input unchanged.
    std::vector<TimeSequence> operator()(const std::vector<TimeSequence>& seqs) const;
};

/// Everything end_to_end_heading() computes on the way.
struct Intermediates {
    SampleMatrix normalized;
    NormStats stats;
    SampleMatrix denoised;
    SampleMatrix denormalized;
    SampleMatrix heading_input; ///< after the heading network's input scaling
};

/**
 * @brief normalize -> denoise(t_back) -> denormalize -> heading network.
 *
 * The heading network applies its own stored input scaling. With t_back = T
 * (or no denoiser) the raw samples go straight to the heading network.
 */
heading::HeadingPrediction end_to_end_heading(const TimeSequence& raw, const DenoisingStage& stage,
                                              const heading::HeadingNetwork& net,
                                              Intermediates* dump = nullptr);

/// Inference-mode headings for many sequences, evaluated in fixed chunks.
std::vector<double> predict_headings(const heading::HeadingNetwork& net,
                                     const std::vector<TimeSequence>& seqs, int chunk = 128);

/// CRMSE [rad] of net over labelled sequences.
double evaluate_crmse(const heading::HeadingNetwork& net, const std::vector<TimeSequence>& seqs);

/// Classical gyrocompass CRMSE [rad] using the first `window_s` seconds.
double classical_crmse(const std::vector<TimeSequence>& seqs, double window_s);

struct ReportRow {
    std::string method;
    double duration_s = 0.0;
    std::optional<int> t_back;
    std::optional<NormScope> scope;
    double crmse_deg = 0.0;
    std::uint64_t seed = 0;
    std::string split = "test";
};

/**
 * @brief Table of CRMSE values plus the metadata needed to trace them.
 *
 * `metadata` is a free-form JSON document (seeds, configs, dataset hashes).
 */
struct EvalReport {
    std::string name;
    std::vector<ReportRow> rows;
    std::string metadata_json = "{}";

    /// Columns: method, duration_s, t_back, scope, crmse_deg, seed, split.
    std::string to_csv() const;
    std::string to_json() const;
    static EvalReport from_json(const std::string& text);

    /// Rows matching a method name (in insertion order).
    std::vector<ReportRow> rows_for(const std::string& method) const;
};

struct ComparisonModels {
    const heading::HeadingNetwork* baseline = nullptr; ///< trained on raw sequences
    const heading::HeadingNetwork* aided = nullptr;    ///< trained on denoised sequences
    DenoisingStage stage;
};

/// Classical CRMSE at each duration, baseline and denoiser-aided networks at
/// the full duration, all on the same test sequences. Throws
/// MissingCheckpoint when a network is absent.
EvalReport run_method_comparison(const std::vector<TimeSequence>& test,
                                 const ComparisonModels& models,
                                 const std::vector<double>& durations_s, std::uint64_t seed);

struct SweepOptions {
    bool retrain = true;
    heading::HeadingTrainConfig train_config;
    heading::HeadingArchitecture architecture;
    const heading::HeadingNetwork* reuse = nullptr; ///< required when retrain is off
};

/// Validation CRMSE of the full pipeline for each t_back. Throws ConfigError
/// for values outside [0, T] or a reuse sweep without a network.
EvalReport run_tback_sweep(const synth::DatasetSplit& data, const std::vector<int>& values,
                           const DenoisingStage& stage, const SweepOptions& options);

/// Trains and evaluates the heading pipeline under both normalization
/// scopes; reports train and validation CRMSE per scope. The metadata names
/// the scope with the lower validation CRMSE.
EvalReport run_normalization_ablation(const synth::DatasetSplit& data, const DenoisingStage& stage,
                                      const heading::HeadingTrainConfig& train_config,
                                      const heading::HeadingArchitecture& architecture);

/// Lower-validation scope of an ablation report.
NormScope preferred_scope(const EvalReport& ablation);

} // namespace gyrodiff::pipeline
