#include "gyrodiff/denoiser.hpp"

#include "gyrodiff/errors.hpp"
#include "gyrodiff/nn/adam.hpp"
#include "gyrodiff/nn/batch.hpp"
#include "gyrodiff/svd_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gyrodiff::diffusion {

namespace {

constexpr Eigen::Index kChannels = 3;

std::vector<Eigen::MatrixXd> folded(const std::vector<SampleMatrix>& m, int window) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(m.size());
    for (const auto& x : m) {
        out.push_back(fold_rows(x, window));
    }
    return out;
}

using nn::batch_shape;
using nn::pack;
using nn::unpack;

nn::Matrix step_embeddings(std::span<const int> steps, int dim) {
    nn::Matrix e(dim, static_cast<Eigen::Index>(steps.size()));
    for (std::size_t b = 0; b < steps.size(); ++b) {
        e.col(static_cast<Eigen::Index>(b)) = embed_tstep(steps[b], dim);
    }
    return e;
}

void check_steps(std::span<const int> steps, nn::SequenceShape shape) {
    if (static_cast<Eigen::Index>(steps.size()) != shape.batch) {
        throw ShapeError("one diffusion step per batch element required");
    }
}

} // namespace

struct DenoiserNetwork::Trace {
    std::vector<nn::Matrix> inputs;
    std::vector<nn::BiLstmTrace> lstm;
    nn::Matrix last_hidden;
};

DenoiserNetwork::DenoiserNetwork(DenoiserArchitecture arch) : arch_(arch) {
    if (arch.layers < 1 || arch.hidden < 1 || arch.embed_dim < 2 || arch.embed_dim % 2 != 0) {
        throw ConfigError("invalid denoiser architecture");
    }
    nn::ParameterLayout layout;
    Eigen::Index width = kChannels;
    for (int l = 0; l < arch.layers; ++l) {
        step_maps_.push_back(nn::add_linear(layout, arch.embed_dim, width));
        layers_.push_back(nn::add_bilstm(layout, width, arch.hidden));
        width = layers_.back().output_size();
    }
    head_ = nn::add_linear(layout, width, kChannels);
    params_ = nn::Vector::Zero(layout.size());
}

void DenoiserNetwork::initialize(std::uint64_t seed) {
    nn::Rng rng(seed);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        nn::init_linear(params_, step_maps_[l], rng);
        nn::init_bilstm(params_, layers_[l], rng);
    }
    nn::init_linear(params_, head_, rng);
}

nn::Matrix DenoiserNetwork::forward(const nn::Matrix& input, const nn::Matrix& embedding,
                                    nn::SequenceShape shape, Trace* trace) const {
    if (trace) {
        trace->inputs.resize(layers_.size());
        trace->lstm.resize(layers_.size());
    }
    nn::Matrix x = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        nn::Matrix shift = nn::view(params_, step_maps_[l].weight) * embedding;
        shift.colwise() += nn::view(params_, step_maps_[l].bias).col(0);
        for (Eigen::Index t = 0; t < shape.n_time; ++t) {
            x.middleCols(t * shape.batch, shape.batch) += shift;
        }
        nn::Matrix h = nn::bilstm_forward(params_, layers_[l], x, shape,
                                          trace ? &trace->lstm[l] : nullptr);
        if (trace) {
            trace->inputs[l] = std::move(x);
        }
        x = std::move(h);
    }
    nn::Matrix out = nn::view(params_, head_.weight) * x;
    out.colwise() += nn::view(params_, head_.bias).col(0);
    if (trace) {
        trace->last_hidden = std::move(x);
    }
    return out;
}

std::vector<SampleMatrix> DenoiserNetwork::predict(const std::vector<SampleMatrix>& x_t,
                                                   std::span<const int> steps) const {
    const auto shape = batch_shape(x_t);
    check_steps(steps, shape);
    return unpack(forward(pack(x_t, shape), step_embeddings(steps, arch_.embed_dim), shape, nullptr),
                  shape);
}

SampleMatrix DenoiserNetwork::predict_noise(const SampleMatrix& x_t, int t) const {
    const int steps[] = {t};
    return predict({x_t}, steps).front();
}

double DenoiserNetwork::loss(const std::vector<SampleMatrix>& x_t, std::span<const int> steps,
                             const std::vector<SampleMatrix>& target_noise, double tau,
                             int svd_window) const {
    const auto pred = predict(x_t, steps);
    return svd_mse_loss(folded(pred, svd_window), folded(target_noise, svd_window), tau);
}

double DenoiserNetwork::loss_and_gradient(const std::vector<SampleMatrix>& x_t,
                                          std::span<const int> steps,
                                          const std::vector<SampleMatrix>& target_noise,
                                          double tau, nn::Vector& grad, int svd_window) const {
    const auto shape = batch_shape(x_t);
    check_steps(steps, shape);
    const nn::Matrix embedding = step_embeddings(steps, arch_.embed_dim);

    Trace trace;
    const nn::Matrix out = forward(pack(x_t, shape), embedding, shape, &trace);
    const auto pred = unpack(out, shape);

    std::vector<Eigen::MatrixXd> d_pred;
    const double value =
        svd_mse_loss(folded(pred, svd_window), folded(target_noise, svd_window), tau, &d_pred);

    std::vector<SampleMatrix> d_pred_rows;
    for (const auto& d : d_pred) {
        d_pred_rows.emplace_back(unfold_rows(d, svd_window));
    }
    const nn::Matrix d_out = pack(d_pred_rows, shape);

    grad = nn::Vector::Zero(params_.size());
    nn::view(grad, head_.weight).noalias() += d_out * trace.last_hidden.transpose();
    nn::view(grad, head_.bias) += d_out.rowwise().sum();
    nn::Matrix d_x = nn::view(params_, head_.weight).transpose() * d_out;

    for (std::size_t l = layers_.size(); l-- > 0;) {
        nn::Matrix d_in = nn::Matrix::Zero(trace.inputs[l].rows(), shape.columns());
        nn::bilstm_backward(params_, layers_[l], trace.inputs[l], shape, trace.lstm[l], d_x, grad,
                            d_in);
        nn::Matrix d_shift = nn::Matrix::Zero(d_in.rows(), shape.batch);
        for (Eigen::Index t = 0; t < shape.n_time; ++t) {
            d_shift += d_in.middleCols(t * shape.batch, shape.batch);
        }
        nn::view(grad, step_maps_[l].weight).noalias() += d_shift * embedding.transpose();
        nn::view(grad, step_maps_[l].bias) += d_shift.rowwise().sum();
        d_x = std::move(d_in);
    }
    return value;
}

namespace {

struct NoisedBatch {
    std::vector<SampleMatrix> x_t;
    std::vector<int> steps;
    std::vector<SampleMatrix> eps;
};

// Step and noise draws for a list of clean sequences, in list order.
NoisedBatch draw_noised(const std::vector<const SampleMatrix*>& clean, const NoiseSchedule& sched,
                        nn::Rng& rng) {
    std::uniform_int_distribution<int> step_dist(1, sched.steps);
    std::normal_distribution<double> normal(0.0, 1.0);
    NoisedBatch out;
    for (const SampleMatrix* x0 : clean) {
        const int t = step_dist(rng);
        SampleMatrix eps(x0->rows(), kChannels);
        for (Eigen::Index i = 0; i < eps.size(); ++i) {
            eps.data()[i] = normal(rng);
        }
        const double a = std::sqrt(sched.alpha_bar(t));
        const double b = std::sqrt(1.0 - sched.alpha_bar(t));
        out.x_t.emplace_back(a * (*x0) + b * eps);
        out.steps.push_back(t);
        out.eps.push_back(std::move(eps));
    }
    return out;
}

void check_finite(double value, int epoch) {
    if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch));
    }
}

} // namespace

DenoiserTrainingResult train_denoiser(const synth::DatasetSplit& data,
                                      const DiffusionTrainConfig& cfg,
                                      const NoiseSchedule& sched,
                                      const DenoiserArchitecture& arch,
                                      const std::function<void(const DiffusionEpoch&)>& on_epoch) {
    if (cfg.batch_size < 1 || !(cfg.svd_threshold >= 0.0 && cfg.svd_threshold < 1.0) || cfg.svd_window < 1 ||
        cfg.max_epochs < 1 || !(cfg.learning_rate > 0.0)) {
        throw ConfigError("invalid diffusion training configuration");
    }
    if (data.train.empty()) {
        throw ConfigError("denoiser training needs at least one training sequence");
    }

    DenoiserNetwork net(arch);
    net.initialize(cfg.base_seed);
    nn::Adam adam(net.parameters().size());
    nn::Rng shuffle_rng(cfg.base_seed + 1);
    nn::Rng draw_rng(cfg.base_seed + 2);
    nn::Rng val_rng(cfg.base_seed + 3);

    const auto& val_source = data.val.empty() ? data.train : data.val;
    std::vector<const SampleMatrix*> val_clean;
    for (const auto& s : val_source) {
        val_clean.push_back(&s.samples);
    }
    const NoisedBatch val_draws = draw_noised(val_clean, sched, val_rng);

    auto validation_loss = [&](const DenoiserNetwork& model) {
        double total = 0.0;
        const std::size_t n = val_draws.x_t.size();
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<SampleMatrix> x(val_draws.x_t.begin() + start, val_draws.x_t.begin() + stop);
            std::vector<SampleMatrix> e(val_draws.eps.begin() + start, val_draws.eps.begin() + stop);
            std::span<const int> steps(val_draws.steps.data() + start, stop - start);
            total += model.loss(x, steps, e, cfg.svd_threshold, cfg.svd_window) * static_cast<double>(stop - start);
        }
        return total / static_cast<double>(n);
    };

    DenoiserTrainingResult result{net, {}, 0};
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<std::size_t> order(data.train.size());
    nn::Vector grad;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double train_total = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<const SampleMatrix*> clean;
            for (std::size_t k = start; k < stop; ++k) {
                clean.push_back(&data.train[order[k]].samples);
            }
            const auto batch = draw_noised(clean, sched, draw_rng);
            const double value =
                net.loss_and_gradient(batch.x_t, batch.steps, batch.eps, cfg.svd_threshold, grad,
                                      cfg.svd_window);
            check_finite(value, epoch);
            adam.step(net.parameters(), grad, cfg.learning_rate);
            train_total += value * static_cast<double>(stop - start);
        }

        DiffusionEpoch stats{epoch, train_total / static_cast<double>(order.size()),
                             validation_loss(net)};
        check_finite(stats.val_loss, epoch);
        result.curve.push_back(stats);
        if (on_epoch) {
            on_epoch(stats);
        }
        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            result.network = net;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

SampleMatrix denoise(const NoisePredictor& predictor, const SampleMatrix& x, int t_back,
                     const NoiseSchedule& sched, nn::Rng& rng, DenoiseOptions options) {
    if (t_back < 0 || t_back > sched.steps) {
        throw ConfigError("t_back " + std::to_string(t_back) + " outside [0, " +
                          std::to_string(sched.steps) + "]");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    SampleMatrix current = x;
    for (int t = sched.steps; t > t_back; --t) {
        const SampleMatrix eps_hat = predictor(current, t);
        const double coef = (1.0 - sched.alpha(t)) / std::sqrt(1.0 - sched.alpha_bar(t));
        current = (current - coef * eps_hat) / std::sqrt(sched.alpha(t));
        if (options.stochastic && t - 1 > t_back) {
            const double spread = std::sqrt(sched.beta(t));
            normal.reset();
            for (Eigen::Index i = 0; i < current.size(); ++i) {
                current.data()[i] += spread * normal(rng);
            }
        }
    }
    return current;
}

SampleMatrix denoise(const DenoiserNetwork& net, const SampleMatrix& x, int t_back,
                     const NoiseSchedule& sched, nn::Rng& rng, DenoiseOptions options) {
    return denoise([&net](const SampleMatrix& x_t, int t) { return net.predict_noise(x_t, t); }, x,
                   t_back, sched, rng, options);
}

std::vector<SampleMatrix> denoise_batch(const DenoiserNetwork& net, std::vector<SampleMatrix> x,
                                        int t_back, const NoiseSchedule& sched,
                                        std::span<const std::uint64_t> seeds,
                                        DenoiseOptions options) {
    if (t_back < 0 || t_back > sched.steps) {
        throw ConfigError("t_back " + std::to_string(t_back) + " outside [0, " +
                          std::to_string(sched.steps) + "]");
    }
    if (seeds.size() != x.size()) {
        throw ShapeError("one seed per sequence required");
    }
    if (x.empty() || t_back == sched.steps) {
        return x;
    }
    std::vector<nn::Rng> rngs;
    rngs.reserve(seeds.size());
    for (const auto seed : seeds) {
        rngs.emplace_back(seed);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<int> steps(x.size());
    for (int t = sched.steps; t > t_back; --t) {
        std::fill(steps.begin(), steps.end(), t);
        const auto eps_hat = net.predict(x, steps);
        const double coef = (1.0 - sched.alpha(t)) / std::sqrt(1.0 - sched.alpha_bar(t));
        const double sqrt_alpha = std::sqrt(sched.alpha(t));
        const double spread = std::sqrt(sched.beta(t));
        for (std::size_t b = 0; b < x.size(); ++b) {
            x[b] = (x[b] - coef * eps_hat[b]) / sqrt_alpha;
            if (options.stochastic && t - 1 > t_back) {
                normal.reset();
                for (Eigen::Index i = 0; i < x[b].size(); ++i) {
                    x[b].data()[i] += spread * normal(rngs[b]);
                }
            }
        }
    }
    return x;
}

} // namespace gyrodiff::diffusion
