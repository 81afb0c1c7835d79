#include "gyrodiff/heading.hpp"

#include "gyrodiff/errors.hpp"
#include "gyrodiff/geo.hpp"
#include "gyrodiff/nn/adam.hpp"
#include "gyrodiff/nn/batch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gyrodiff::heading {

std::string_view to_string(Variant v) { return v == Variant::baseline ? "baseline" : "enhanced"; }

Variant variant_from_string(std::string_view text) {
    if (text == "baseline") {
        return Variant::baseline;
    }
    if (text == "enhanced") {
        return Variant::enhanced;
    }
    throw ConfigError("unknown heading variant '" + std::string(text) +
                      "' (expected baseline or enhanced)");
}

HeadingArchitecture architecture_for(Variant v) {
    HeadingArchitecture arch;
    arch.dropout = v == Variant::enhanced ? 0.05 : 0.0;
    return arch;
}

HeadingTrainConfig HeadingTrainConfig::baseline() {
    HeadingTrainConfig cfg;
    cfg.variant = Variant::baseline;
    cfg.batch_size = 100;
    return cfg;
}

HeadingTrainConfig HeadingTrainConfig::enhanced() { return {}; }

double lr_at_epoch(int epoch, const HeadingTrainConfig& cfg) {
    if (!(cfg.lr_min > 0.0 && cfg.lr_min <= cfg.lr_max)) {
        throw ConfigError("learning rates must satisfy 0 < lr_min <= lr_max");
    }
    if (cfg.epochs == 0) {
        if (cfg.lr_min != cfg.lr_max) {
            throw ConfigError("decay over zero epochs is undefined unless lr_min == lr_max");
        }
        return cfg.lr_max;
    }
    if (epoch < 0 || epoch > cfg.epochs) {
        throw ConfigError("epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(cfg.epochs) + "]");
    }
    if (epoch == cfg.epochs) {
        return cfg.lr_min;
    }
    const double gamma = std::pow(cfg.lr_min / cfg.lr_max, 1.0 / cfg.epochs);
    return cfg.lr_max * std::pow(gamma, epoch);
}

double crmse(std::span<const double> preds, std::span<const double> gts) {
    if (preds.empty() || gts.empty()) {
        throw EmptyBatch("CRMSE of an empty batch");
    }
    if (preds.size() != gts.size()) {
        throw ShapeError("CRMSE needs equal lengths (" + std::to_string(preds.size()) + " vs " +
                         std::to_string(gts.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = geo::wrap_pi(gts[i] - preds[i]);
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(preds.size()));
}

double cyclic_loss(const nn::Matrix& sc, std::span<const double> labels, nn::Matrix* d_sc) {
    if (sc.rows() != 2 || static_cast<std::size_t>(sc.cols()) != labels.size()) {
        throw ShapeError("cyclic loss needs a [2 x n] output and n labels");
    }
    if (labels.empty()) {
        throw EmptyBatch("cyclic loss of an empty batch");
    }
    const double n = static_cast<double>(labels.size());
    if (d_sc) {
        d_sc->resize(2, sc.cols());
    }
    double loss = 0.0;
    for (Eigen::Index b = 0; b < sc.cols(); ++b) {
        const double s = sc(0, b), c = sc(1, b);
        const double err = geo::wrap_pi(labels[static_cast<std::size_t>(b)] - std::atan2(s, c));
        loss += err * err;
        if (d_sc) {
            const double d_psi = -2.0 * err / n;
            const double r2 = s * s + c * c;
            (*d_sc)(0, b) = r2 > 0.0 ? d_psi * c / r2 : 0.0;
            (*d_sc)(1, b) = r2 > 0.0 ? -d_psi * s / r2 : 0.0;
        }
    }
    return loss / n;
}

struct HeadingNetwork::Trace {
    std::vector<nn::Matrix> inputs;    // input of each recurrent layer (after dropout)
    std::vector<nn::Matrix> masks;     // dropout mask applied to each layer input (layers > 0)
    std::vector<nn::BiLstmTrace> lstm;
    nn::Matrix pooled;                 // head input after dropout
    nn::Matrix pooled_mask;
    nn::SequenceShape shape;
};

HeadingNetwork::HeadingNetwork(HeadingArchitecture arch) : arch_(arch) {
    if (arch.layers < 1 || arch.hidden < 1 || !(arch.dropout >= 0.0 && arch.dropout < 1.0)) {
        throw ConfigError("invalid heading architecture");
    }
    nn::ParameterLayout layout;
    Eigen::Index width = 3;
    for (int l = 0; l < arch.layers; ++l) {
        layers_.push_back(nn::add_bilstm(layout, width, arch.hidden));
        width = layers_.back().output_size();
    }
    head_ = nn::add_linear(layout, width, 2);
    params_ = nn::Vector::Zero(layout.size());
}

void HeadingNetwork::initialize(std::uint64_t seed) {
    nn::Rng rng(seed);
    for (const auto& layer : layers_) {
        nn::init_bilstm(params_, layer, rng);
    }
    nn::init_linear(params_, head_, rng);
}

namespace {

nn::Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, nn::Rng& rng) {
    std::bernoulli_distribution keep(1.0 - rate);
    nn::Matrix mask(rows, cols);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = keep(rng) ? scale : 0.0;
    }
    return mask;
}

} // namespace

nn::Matrix HeadingNetwork::forward(const std::vector<SampleMatrix>& batch, nn::Rng* dropout_rng,
                                   Trace* trace) const {
    const auto shape = nn::batch_shape(batch);
    std::vector<SampleMatrix> scaled;
    scaled.reserve(batch.size());
    for (const auto& m : batch) {
        scaled.push_back(scaler_.apply(m));
    }
    const bool training = dropout_rng != nullptr && arch_.dropout > 0.0;
    if (trace) {
        trace->shape = shape;
        trace->inputs.resize(layers_.size());
        trace->masks.resize(layers_.size());
        trace->lstm.resize(layers_.size());
    }

    nn::Matrix x = nn::pack(scaled, shape);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (l > 0 && training) {
            nn::Matrix mask = dropout_mask(x.rows(), x.cols(), arch_.dropout, *dropout_rng);
            x.array() *= mask.array();
            if (trace) {
                trace->masks[l] = std::move(mask);
            }
        }
        nn::Matrix h = nn::bilstm_forward(params_, layers_[l], x, shape,
                                          trace ? &trace->lstm[l] : nullptr);
        if (trace) {
            trace->inputs[l] = std::move(x);
        }
        x = std::move(h);
    }

    const auto& last = layers_.back();
    const Eigen::Index hf = last.forward.hidden;
    const Eigen::Index hb = last.backward.hidden;
    nn::Matrix pooled(hf + hb, shape.batch);
    pooled.topRows(hf) = x.topRows(hf).middleCols((shape.n_time - 1) * shape.batch, shape.batch);
    pooled.bottomRows(hb) = x.bottomRows(hb).leftCols(shape.batch);
    if (training) {
        nn::Matrix mask = dropout_mask(pooled.rows(), pooled.cols(), arch_.dropout, *dropout_rng);
        pooled.array() *= mask.array();
        if (trace) {
            trace->pooled_mask = std::move(mask);
        }
    }
    nn::Matrix out = nn::view(params_, head_.weight) * pooled;
    out.colwise() += nn::view(params_, head_.bias).col(0);
    if (trace) {
        trace->pooled = std::move(pooled);
    }
    return out;
}

std::vector<double> HeadingNetwork::predict(const std::vector<SampleMatrix>& batch) const {
    const nn::Matrix out = forward(batch, nullptr, nullptr);
    std::vector<double> headings(static_cast<std::size_t>(out.cols()));
    for (Eigen::Index b = 0; b < out.cols(); ++b) {
        headings[static_cast<std::size_t>(b)] = geo::wrap_two_pi(std::atan2(out(0, b), out(1, b)));
    }
    return headings;
}

HeadingPrediction HeadingNetwork::predict_heading(const TimeSequence& seq) const {
    return {predict({seq.samples}).front(), seq.id};
}

HeadingPrediction HeadingNetwork::predict_heading(std::span<const double> flattened) const {
    return predict_heading(unflatten(flattened));
}

double HeadingNetwork::loss_and_gradient(const std::vector<SampleMatrix>& batch,
                                         std::span<const double> labels, nn::Rng* dropout_rng,
                                         nn::Vector& grad,
                                         std::vector<double>* predictions) const {
    if (labels.size() != batch.size()) {
        throw ShapeError("one label per sequence required");
    }
    Trace trace;
    const nn::Matrix out = forward(batch, dropout_rng, &trace);
    const auto shape = trace.shape;
    const bool training = dropout_rng != nullptr && arch_.dropout > 0.0;

    nn::Matrix d_out;
    const double loss = cyclic_loss(out, labels, &d_out);
    if (predictions) {
        predictions->resize(batch.size());
        for (Eigen::Index b = 0; b < shape.batch; ++b) {
            (*predictions)[static_cast<std::size_t>(b)] =
                geo::wrap_two_pi(std::atan2(out(0, b), out(1, b)));
        }
    }

    grad = nn::Vector::Zero(params_.size());
    nn::view(grad, head_.weight).noalias() += d_out * trace.pooled.transpose();
    nn::view(grad, head_.bias) += d_out.rowwise().sum();
    nn::Matrix d_pooled = nn::view(params_, head_.weight).transpose() * d_out;
    if (training) {
        d_pooled.array() *= trace.pooled_mask.array();
    }

    const auto& last = layers_.back();
    const Eigen::Index hf = last.forward.hidden;
    const Eigen::Index hb = last.backward.hidden;
    nn::Matrix d_x = nn::Matrix::Zero(hf + hb, shape.columns());
    d_x.topRows(hf).middleCols((shape.n_time - 1) * shape.batch, shape.batch) = d_pooled.topRows(hf);
    d_x.bottomRows(hb).leftCols(shape.batch) = d_pooled.bottomRows(hb);

    for (std::size_t l = layers_.size(); l-- > 0;) {
        nn::Matrix d_in = nn::Matrix::Zero(trace.inputs[l].rows(), shape.columns());
        nn::bilstm_backward(params_, layers_[l], trace.inputs[l], shape, trace.lstm[l], d_x, grad,
                            d_in);
        if (l > 0 && training) {
            d_in.array() *= trace.masks[l].array();
        }
        d_x = std::move(d_in);
    }
    return loss;
}

namespace {

std::vector<double> labels_of(const std::vector<TimeSequence>& seqs) {
    std::vector<double> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) {
        if (!s.heading) {
            throw MissingLabel("heading training needs labelled sequences (id " +
                               std::to_string(s.id) + ")");
        }
        out.push_back(*s.heading);
    }
    return out;
}

std::vector<SampleMatrix> samples_of(const std::vector<TimeSequence>& seqs) {
    std::vector<SampleMatrix> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) {
        out.push_back(s.samples);
    }
    return out;
}

double evaluate_crmse(const HeadingNetwork& net, const std::vector<SampleMatrix>& x,
                      const std::vector<double>& labels, int chunk) {
    std::vector<double> preds;
    preds.reserve(x.size());
    for (std::size_t start = 0; start < x.size(); start += static_cast<std::size_t>(chunk)) {
        const std::size_t stop = std::min(x.size(), start + static_cast<std::size_t>(chunk));
        const auto p = net.predict({x.begin() + static_cast<std::ptrdiff_t>(start),
                                    x.begin() + static_cast<std::ptrdiff_t>(stop)});
        preds.insert(preds.end(), p.begin(), p.end());
    }
    return crmse(preds, labels);
}

} // namespace

HeadingTrainingResult train_heading(const std::vector<TimeSequence>& train_raw,
                                    const std::vector<TimeSequence>& val_raw,
                                    const HeadingTrainConfig& cfg,
                                    const HeadingArchitecture& arch,
                                    const Preprocessor& preprocessor,
                                    const std::function<void(const HeadingEpoch&)>& on_epoch) {
    if (cfg.batch_size < 1 || cfg.epochs < 1) {
        throw ConfigError("heading training needs batch_size >= 1 and epochs >= 1");
    }
    lr_at_epoch(0, cfg); // validates the learning-rate pair
    if (train_raw.empty()) {
        throw ConfigError("heading training needs at least one training sequence");
    }
    const auto train = preprocessor ? preprocessor(train_raw) : train_raw;
    const auto val_in = preprocessor ? (val_raw.empty() ? train : preprocessor(val_raw))
                                     : (val_raw.empty() ? train_raw : val_raw);

    const auto train_x = samples_of(train);
    const auto train_y = labels_of(train);
    const auto val_x = samples_of(val_in);
    const auto val_y = labels_of(val_in);

    HeadingNetwork net(arch);
    net.initialize(cfg.base_seed);
    net.input_scaler() = ChannelScaler::fit(train);

    nn::Adam adam(net.parameters().size());
    nn::Rng shuffle_rng(cfg.base_seed + 1);
    nn::Rng dropout_rng(cfg.base_seed + 2);
    const int eval_chunk = 128;

    HeadingTrainingResult result{net, {}, 0};
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<std::size_t> order(train_x.size());
    nn::Vector grad;
    std::vector<double> preds;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.variant == Variant::enhanced ? lr_at_epoch(epoch, cfg) : cfg.lr_max;
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double sq_total = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<SampleMatrix> x;
            std::vector<double> y;
            for (std::size_t k = start; k < stop; ++k) {
                x.push_back(train_x[order[k]]);
                y.push_back(train_y[order[k]]);
            }
            const double loss = net.loss_and_gradient(x, y, &dropout_rng, grad, &preds);
            if (!std::isfinite(loss) || !grad.allFinite()) {
                throw DivergenceError("non-finite heading loss in epoch " + std::to_string(epoch));
            }
            adam.step(net.parameters(), grad, lr);
            sq_total += loss * static_cast<double>(stop - start);
        }

        HeadingEpoch stats;
        stats.epoch = epoch;
        stats.learning_rate = lr;
        stats.train_crmse = std::sqrt(sq_total / static_cast<double>(order.size()));
        stats.val_crmse = evaluate_crmse(net, val_x, val_y, eval_chunk);
        if (!std::isfinite(stats.val_crmse)) {
            throw DivergenceError("non-finite validation CRMSE in epoch " + std::to_string(epoch));
        }
        result.curve.push_back(stats);
        if (on_epoch) {
            on_epoch(stats);
        }
        if (stats.val_crmse < best_val) {
            best_val = stats.val_crmse;
            result.network = net;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

} // namespace gyrodiff::heading
