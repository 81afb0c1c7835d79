#include "gyrodiff/schedule.hpp"

#include "gyrodiff/errors.hpp"

#include <cmath>
#include <string>

namespace gyrodiff::diffusion {

namespace {

void check_step(int t, const NoiseSchedule& sched) {
    if (t < 1 || t > sched.steps) {
        throw ConfigError("diffusion step " + std::to_string(t) + " outside 1.." +
                          std::to_string(sched.steps));
    }
}

} // namespace

NoiseSchedule schedule_from_betas(std::vector<double> betas) {
    if (betas.empty()) {
        throw ConfigError("schedule needs at least one step");
    }
    NoiseSchedule s;
    s.steps = static_cast<int>(betas.size());
    s.beta_min = betas.front();
    s.beta_max = betas.back();
    s.betas = std::move(betas);
    s.alphas.resize(s.betas.size());
    s.alpha_bars.resize(s.betas.size());
    double running = 1.0;
    for (std::size_t i = 0; i < s.betas.size(); ++i) {
        if (!(s.betas[i] >= 0.0 && s.betas[i] < 1.0)) {
            throw ConfigError("beta values must lie in [0, 1)");
        }
        s.alphas[i] = 1.0 - s.betas[i];
        running *= s.alphas[i];
        s.alpha_bars[i] = running;
    }
    return s;
}

NoiseSchedule build_schedule(int steps, double beta_min, double beta_max) {
    if (steps < 1) {
        throw ConfigError("schedule needs T >= 1");
    }
    if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0)) {
        throw ConfigError("schedule needs 0 < beta_min < beta_max < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int t = 1; t <= steps; ++t) {
        betas[static_cast<std::size_t>(t - 1)] =
            beta_min + static_cast<double>(t) * (beta_max - beta_min) / static_cast<double>(steps);
    }
    auto s = schedule_from_betas(std::move(betas));
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    return s;
}

std::vector<double> forward_noise(std::span<const double> x0, int t, std::span<const double> eps,
                                  const NoiseSchedule& sched) {
    check_step(t, sched);
    if (x0.size() != eps.size()) {
        throw ShapeError("x0 has " + std::to_string(x0.size()) + " entries but eps has " +
                         std::to_string(eps.size()));
    }
    const double a = std::sqrt(sched.alpha_bar(t));
    const double b = std::sqrt(1.0 - sched.alpha_bar(t));
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        out[i] = a * x0[i] + b * eps[i];
    }
    return out;
}

std::vector<double> forward_noise_markov(std::span<const double> x0, int t, nn::Rng& rng,
                                         const NoiseSchedule& sched) {
    check_step(t, sched);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(x0.begin(), x0.end());
    for (int s = 1; s <= t; ++s) {
        const double keep = std::sqrt(1.0 - sched.beta(s));
        const double spread = std::sqrt(sched.beta(s));
        for (double& v : x) {
            v = keep * v + spread * normal(rng);
        }
    }
    return x;
}

Eigen::VectorXd embed_tstep(int t, int dim) {
    if (dim < 2 || dim % 2 != 0) {
        throw ConfigError("embedding dimension must be a positive even number");
    }
    Eigen::VectorXd e(dim);
    const int pairs = dim / 2;
    for (int k = 0; k < pairs; ++k) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * k) / dim);
        e[2 * k] = std::sin(t * freq);
        e[2 * k + 1] = std::cos(t * freq);
    }
    return e;
}

} // namespace gyrodiff::diffusion
