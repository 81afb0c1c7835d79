#include "gyrodiff/normalize.hpp"

#include "gyrodiff/errors.hpp"

#include <cmath>
#include <string>

namespace gyrodiff {

namespace {
constexpr double kDegenerateStd = 1e-18;
constexpr double kScalerFloor = 1e-300;
} // namespace

std::string_view to_string(NormScope scope) {
    return scope == NormScope::per_sample ? "per_sample" : "per_sequence";
}

NormScope norm_scope_from_string(std::string_view text) {
    if (text == "per_sample") {
        return NormScope::per_sample;
    }
    if (text == "per_sequence") {
        return NormScope::per_sequence;
    }
    throw ConfigError("unknown normalization scope '" + std::string(text) +
                      "' (expected per_sample or per_sequence)");
}

std::pair<SampleMatrix, NormStats> normalize(const SampleMatrix& samples, NormScope scope) {
    if (samples.rows() == 0) {
        throw DegenerateSequence("empty sequence");
    }
    NormStats stats;
    stats.scope = scope;
    if (scope == NormScope::per_sequence) {
        const Eigen::RowVector3d mean = samples.colwise().mean();
        const Eigen::RowVector3d var =
            (samples.rowwise() - mean).array().square().colwise().mean();
        stats.mean = mean;
        stats.std = var.array().sqrt();
    } else {
        stats.mean.resize(samples.rows(), 3);
        stats.std.resize(samples.rows(), 3);
        for (Eigen::Index t = 0; t < samples.rows(); ++t) {
            const double mean = samples.row(t).mean();
            const double var = (samples.row(t).array() - mean).square().mean();
            stats.mean.row(t).setConstant(mean);
            stats.std.row(t).setConstant(std::sqrt(var));
        }
    }
    if ((stats.std.array() < kDegenerateStd).any()) {
        throw DegenerateSequence("a channel has (near-)zero spread; cannot normalize with scope " +
                                 std::string(to_string(scope)));
    }
    SampleMatrix out(samples.rows(), 3);
    if (scope == NormScope::per_sequence) {
        out = (samples.rowwise() - stats.mean.row(0)).array().rowwise() / stats.std.row(0).array();
    } else {
        out = (samples - stats.mean).array() / stats.std.array();
    }
    return {std::move(out), std::move(stats)};
}

SampleMatrix denormalize(const SampleMatrix& samples, const NormStats& stats) {
    SampleMatrix out(samples.rows(), 3);
    if (stats.scope == NormScope::per_sequence) {
        if (stats.mean.rows() != 1 || stats.std.rows() != 1) {
            throw ShapeError("per-sequence stats must hold one row");
        }
        out = (samples.array().rowwise() * stats.std.row(0).array()).rowwise() +
              stats.mean.row(0).array();
    } else {
        if (stats.mean.rows() != samples.rows() || stats.std.rows() != samples.rows()) {
            throw ShapeError("per-sample stats cover " + std::to_string(stats.mean.rows()) +
                             " steps but the sequence has " + std::to_string(samples.rows()));
        }
        out = samples.array() * stats.std.array() + stats.mean.array();
    }
    return out;
}

ChannelScaler ChannelScaler::fit(const std::vector<TimeSequence>& data) {
    ChannelScaler s;
    Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
    double count = 0.0;
    for (const auto& seq : data) {
        sum += seq.samples.colwise().sum();
        count += static_cast<double>(seq.n_time());
    }
    if (count == 0.0) {
        return s;
    }
    s.mean = sum / count;
    Eigen::RowVector3d sq = Eigen::RowVector3d::Zero();
    for (const auto& seq : data) {
        sq += (seq.samples.rowwise() - s.mean).array().square().colwise().sum().matrix();
    }
    for (int c = 0; c < 3; ++c) {
        const double sd = std::sqrt(sq(c) / count);
        // Spread at round-off level relative to the mean counts as constant.
        const bool flat = sd <= 1e-9 * std::abs(s.mean(c)) || sd < kScalerFloor;
        s.scale(c) = flat ? 1.0 : sd;
    }
    return s;
}

SampleMatrix ChannelScaler::apply(const SampleMatrix& samples) const {
    return (samples.rowwise() - mean).array().rowwise() / scale.array();
}

SampleMatrix ChannelScaler::invert(const SampleMatrix& samples) const {
    return (samples.array().rowwise() * scale.array()).rowwise() + mean.array();
}

} // namespace gyrodiff
