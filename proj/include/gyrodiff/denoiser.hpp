// Step-conditioned bidirectional LSTM noise predictor, its training loop and
// the reverse (denoising) process.
#pragma once

#include "gyrodiff/nn/lstm.hpp"
#include "gyrodiff/schedule.hpp"
#include "gyrodiff/sequence.hpp"
#include "gyrodiff/synth.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gyrodiff::diffusion {

struct DenoiserArchitecture {
    int layers = 5;
    int hidden = 64;     ///< per direction
    int embed_dim = 20;

    bool operator==(const DenoiserArchitecture&) const = default;
};

/**
 * @brief epsilon_theta(x_t, t).
 *
 * Every bidirectional layer receives its input plus a learned linear image of
 * the step embedding, broadcast over time. A linear head maps the last
 * layer's features back to the channel count at each time step.
 */
class DenoiserNetwork {
public:
    explicit DenoiserNetwork(DenoiserArchitecture arch = {});

    /// Deterministic initialization from a seed.
    void initialize(std::uint64_t seed);

    const DenoiserArchitecture& architecture() const { return arch_; }
    nn::Vector& parameters() { return params_; }
    const nn::Vector& parameters() const { return params_; }

    /// Predicted noise for a batch; all inputs share one length. Throws
    /// ShapeError for ragged batches or a wrong channel count.
    std::vector<SampleMatrix> predict(const std::vector<SampleMatrix>& x_t,
                                      std::span<const int> steps) const;

    SampleMatrix predict_noise(const SampleMatrix& x_t, int t) const;

    /// Forward + svd_mse_loss(prediction, target) + backward. Overwrites
    /// `grad` with the loss gradient and returns the loss.
    double loss_and_gradient(const std::vector<SampleMatrix>& x_t, std::span<const int> steps,
                             const std::vector<SampleMatrix>& target_noise, double tau,
                             nn::Vector& grad, int svd_window = 1) const;

    /// Loss only (no backward pass).
    double loss(const std::vector<SampleMatrix>& x_t, std::span<const int> steps,
                const std::vector<SampleMatrix>& target_noise, double tau,
                int svd_window = 1) const;

private:
    struct Trace;
    nn::Matrix forward(const nn::Matrix& input, const nn::Matrix& embedding,
                       nn::SequenceShape shape, Trace* trace) const;

    DenoiserArchitecture arch_;
    std::vector<nn::BiLstmSlots> layers_;
    std::vector<nn::LinearSlots> step_maps_;
    nn::LinearSlots head_;
    nn::Vector params_;
};

struct DiffusionTrainConfig {
    int batch_size = 50;
    double learning_rate = 1e-3;
    int max_epochs = 50;
    int patience = 20;
    double svd_threshold = 0.1;
    int svd_window = 1; ///< time steps per row of the filtered matrix
    std::uint64_t base_seed = 0;
};

struct DiffusionEpoch {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct DenoiserTrainingResult {
    DenoiserNetwork network;
    std::vector<DiffusionEpoch> curve;
    int best_epoch = 0;
};

/**
 * @brief Noise-prediction training: per sample draw t ~ U{1..T} and
 * eps ~ N(0, I), form x_t in closed form and take ADAM steps on the
 * spectrally filtered MSE between predicted and drawn noise.
 *
 * `data` must already be normalized. Validation draws are fixed once so the
 * per-epoch validation loss is comparable. Stops after max_epochs or
 * `patience` epochs without validation improvement and returns the best
 * validation weights. Throws DivergenceError on a non-finite loss.
 */
DenoiserTrainingResult train_denoiser(const synth::DatasetSplit& data,
                                      const DiffusionTrainConfig& cfg,
                                      const NoiseSchedule& sched,
                                      const DenoiserArchitecture& arch = {},
                                      const std::function<void(const DiffusionEpoch&)>& on_epoch = {});

using NoisePredictor = std::function<SampleMatrix(const SampleMatrix& x_t, int t)>;

struct DenoiseOptions {
    bool stochastic = true; ///< add sqrt(beta_t) eps on all but the final step
};

/**
 * @brief Reverse process from x_T down to x_{t_back} (T - t_back steps):
 * x_{t-1} = (x_t - (1 - alpha_t) / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t)
 *           + sqrt(beta_t) eps.
 *
 * t_back = T returns the input unchanged. Throws ConfigError for t_back
 * outside [0, T].
 */
SampleMatrix denoise(const NoisePredictor& predictor, const SampleMatrix& x, int t_back,
                     const NoiseSchedule& sched, nn::Rng& rng, DenoiseOptions options = {});

SampleMatrix denoise(const DenoiserNetwork& net, const SampleMatrix& x, int t_back,
                     const NoiseSchedule& sched, nn::Rng& rng, DenoiseOptions options = {});

/// Batched reverse process; sequence i draws its stochastic terms from an
/// engine seeded with seeds[i], so results do not depend on batch grouping
/// beyond floating-point reassociation inside the network.
std::vector<SampleMatrix> denoise_batch(const DenoiserNetwork& net,
                                        std::vector<SampleMatrix> x, int t_back,
                                        const NoiseSchedule& sched,
                                        std::span<const std::uint64_t> seeds,
                                        DenoiseOptions options = {});

} // namespace gyrodiff::diffusion
