// Linear variance schedule and the closed-form / Markov forward processes.
#pragma once

#include "gyrodiff/nn/params.hpp"

#include <span>
#include <vector>

namespace gyrodiff::diffusion {

/**
 * @brief Precomputed beta_t, alpha_t and cumulative alpha products.
 *
 * Index t runs 1..T; the arrays are stored zero-based, so beta(t) reads
 * betas[t - 1].
 */
struct NoiseSchedule {
    int steps = 1000;
    double beta_min = 1e-4;
    double beta_max = 5e-4;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    double beta(int t) const { return betas.at(static_cast<std::size_t>(t - 1)); }
    double alpha(int t) const { return alphas.at(static_cast<std::size_t>(t - 1)); }
    double alpha_bar(int t) const { return alpha_bars.at(static_cast<std::size_t>(t - 1)); }
};

/// beta_t = beta_min + t (beta_max - beta_min) / T, alpha_t = 1 - beta_t and
/// alpha_bar_t = prod_{s <= t} alpha_s. Throws ConfigError unless
/// 0 < beta_min < beta_max < 1 and T >= 1.
NoiseSchedule build_schedule(int steps = 1000, double beta_min = 1e-4, double beta_max = 5e-4);

/// Schedule from explicit betas (no monotonicity requirement). Used for the
/// degenerate schedules in tests.
NoiseSchedule schedule_from_betas(std::vector<double> betas);

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps. Throws ShapeError
/// on size mismatch and ConfigError for t outside 1..T.
std::vector<double> forward_noise(std::span<const double> x0, int t, std::span<const double> eps,
                                  const NoiseSchedule& sched);

/// Applies the single-step kernel N(sqrt(1 - beta_s) x, beta_s I) for s = 1..t.
std::vector<double> forward_noise_markov(std::span<const double> x0, int t, nn::Rng& rng,
                                         const NoiseSchedule& sched);

/// Sinusoidal encoding of the diffusion step: entries 2k and 2k+1 are
/// sin(t w_k) and cos(t w_k) with w_k = 10000^(-2k/dim).
Eigen::VectorXd embed_tstep(int t, int dim = 20);

} // namespace gyrodiff::diffusion
