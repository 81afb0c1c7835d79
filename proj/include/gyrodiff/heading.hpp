// Bidirectional LSTM heading regressor, cyclic error metric and training.
#pragma once

#include "gyrodiff/nn/lstm.hpp"
#include "gyrodiff/normalize.hpp"
#include "gyrodiff/sequence.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace gyrodiff::heading {

enum class Variant { baseline, enhanced };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view text);

struct HeadingArchitecture {
    int layers = 2;
    int hidden = 24;      ///< per direction
    double dropout = 0.05;

    bool operator==(const HeadingArchitecture&) const = default;
};

/// Dropout 0.05 for the enhanced variant, none for the baseline.
HeadingArchitecture architecture_for(Variant v);

struct HeadingTrainConfig {
    double lr_max = 0.005;
    double lr_min = 0.0005;
    int epochs = 300;
    int batch_size = 32;
    int patience = 30;
    Variant variant = Variant::enhanced;
    std::uint64_t base_seed = 0;

    /// Constant learning rate (lr_max) and batch size 100.
    static HeadingTrainConfig baseline();
    /// Exponential decay from lr_max to lr_min and batch size 32.
    static HeadingTrainConfig enhanced();
};

/// eta_t = eta_max * gamma^t with gamma = (eta_min / eta_max)^(1/N).
/// Throws ConfigError when N = 0 and eta_min != eta_max, or when the rates are
/// not 0 < eta_min <= eta_max.
double lr_at_epoch(int epoch, const HeadingTrainConfig& cfg);

/// sqrt(mean(atan2(sin d, cos d)^2)), d = gt - pred, in radians. Throws
/// EmptyBatch for empty input and ShapeError for unequal lengths.
double crmse(std::span<const double> preds, std::span<const double> gts);

/// Mean squared wrapped error of atan2(s, c) against the labels for a [2 x n]
/// block of (s, c) outputs. `d_sc` (optional) receives the gradient.
double cyclic_loss(const nn::Matrix& sc, std::span<const double> labels,
                   nn::Matrix* d_sc = nullptr);

struct HeadingPrediction {
    double heading = 0.0; ///< [rad], [0, 2pi)
    std::int64_t sequence_id = 0;
};

/**
 * @brief Stacked bidirectional LSTM with a fully connected head.
 *
 * The head reads the last forward state and the first backward state,
 * emits an (s, c) pair and returns atan2(s, c) wrapped into [0, 2pi).
 * Inputs pass through the network's ChannelScaler first.
 */
class HeadingNetwork {
public:
    explicit HeadingNetwork(HeadingArchitecture arch = {});

    void initialize(std::uint64_t seed);

    const HeadingArchitecture& architecture() const { return arch_; }
    nn::Vector& parameters() { return params_; }
    const nn::Vector& parameters() const { return params_; }
    ChannelScaler& input_scaler() { return scaler_; }
    const ChannelScaler& input_scaler() const { return scaler_; }

    /// Inference-mode headings [rad]; dropout is off.
    std::vector<double> predict(const std::vector<SampleMatrix>& batch) const;

    HeadingPrediction predict_heading(const TimeSequence& seq) const;

    /// Flattened [n_time * 3] input; throws ShapeError on bad length.
    HeadingPrediction predict_heading(std::span<const double> flattened) const;

    /**
     * @brief Mean squared cyclic error of a batch and its gradient.
     *
     * With a non-null `dropout_rng` the network runs in training mode.
     * `grad` is overwritten; `predictions` (optional) receives the headings.
     */
    double loss_and_gradient(const std::vector<SampleMatrix>& batch,
                             std::span<const double> labels, nn::Rng* dropout_rng,
                             nn::Vector& grad, std::vector<double>* predictions = nullptr) const;

private:
    struct Trace;
    nn::Matrix forward(const std::vector<SampleMatrix>& batch, nn::Rng* dropout_rng,
                       Trace* trace) const;

    HeadingArchitecture arch_;
    std::vector<nn::BiLstmSlots> layers_;
    nn::LinearSlots head_;
    nn::Vector params_;
    ChannelScaler scaler_;
};

struct HeadingEpoch {
    int epoch = 0;
    double learning_rate = 0.0;
    double train_crmse = 0.0; ///< [rad], training-mode predictions of the epoch
    double val_crmse = 0.0;   ///< [rad], inference mode
};

struct HeadingTrainingResult {
    HeadingNetwork network;
    std::vector<HeadingEpoch> curve;
    int best_epoch = 0;
};

/// Maps raw sequences to what the network should see (e.g. the frozen
/// denoiser with its normalization wrapper).
using Preprocessor = std::function<std::vector<TimeSequence>(const std::vector<TimeSequence>&)>;

/**
 * @brief Mini-batch ADAM training on the squared cyclic error.
 *
 * The optional preprocessor runs once over both sets before training. The
 * input scaler is fitted on the (preprocessed) training set. Returns the
 * weights with the best validation CRMSE. Throws MissingLabel for unlabelled
 * sequences and DivergenceError on a non-finite loss.
 */
HeadingTrainingResult train_heading(const std::vector<TimeSequence>& train,
                                    const std::vector<TimeSequence>& val,
                                    const HeadingTrainConfig& cfg,
                                    const HeadingArchitecture& arch,
                                    const Preprocessor& preprocessor = {},
                                    const std::function<void(const HeadingEpoch&)>& on_epoch = {});

} // namespace gyrodiff::heading
