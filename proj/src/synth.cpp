#include "gyrodiff/synth.hpp"

#include "gyrodiff/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace gyrodiff::synth {

namespace {

constexpr double kIntegerTolerance = 1e-9;

// Returns the nearest integer when value is within tolerance of it, else -1.
long long as_exact_integer(double value) {
    const double rounded = std::round(value);
    if (std::abs(value - rounded) > kIntegerTolerance * std::max(1.0, std::abs(value))) {
        return -1;
    }
    return static_cast<long long>(rounded);
}

} // namespace

TimeSequence generate_clean_sequence(double heading, double latitude, double duration_s,
                                     double rate_hz) {
    const long long n = as_exact_integer(duration_s * rate_hz);
    if (n <= 0) {
        throw ConfigError("duration * rate must be a positive integer (got " +
                          std::to_string(duration_s * rate_hz) + ")");
    }
    const auto rate = geo::earth_rate_in_body({0.0, 0.0, heading}, {latitude, 0.0});

    TimeSequence seq;
    seq.samples.resize(n, 3);
    seq.samples.col(0).setConstant(rate.x);
    seq.samples.col(1).setConstant(rate.y);
    seq.samples.col(2).setConstant(rate.z);
    seq.sample_rate_hz = rate_hz;
    seq.heading = geo::wrap_two_pi(heading);
    seq.latitude = latitude;
    seq.source = SourceTag::synthetic;
    return seq;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatio& ratio) {
    const double sum = ratio.train + ratio.val + ratio.test;
    if (ratio.train < 0.0 || ratio.val < 0.0 || ratio.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be non-negative and sum to 1");
    }
    const auto n_train = static_cast<std::size_t>(std::llround(ratio.train * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train,
                                static_cast<std::size_t>(std::llround(ratio.val * static_cast<double>(n))));
    return {n_train, n_val, n - n_train - n_val};
}

std::vector<int> stratified_assignment(std::size_t n, const SplitRatio& ratio) {
    const auto counts = split_counts(n, ratio);
    std::array<std::size_t, 3> assigned{};
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        int best = -1;
        double best_deficit = 0.0;
        for (int k = 0; k < 3; ++k) {
            if (assigned[k] >= counts[k]) {
                continue;
            }
            const double expected =
                static_cast<double>(counts[k]) * static_cast<double>(i + 1) / static_cast<double>(n);
            const double deficit = expected - static_cast<double>(assigned[k]);
            if (best < 0 || deficit > best_deficit + 1e-12) {
                best = k;
                best_deficit = deficit;
            }
        }
        out[i] = best;
        ++assigned[best];
    }
    return out;
}

DatasetSplit generate_synthetic_dataset(const SyntheticConfig& config) {
    if (!(config.increment > 0.0)) {
        throw ConfigError("heading increment must be positive");
    }
    const long long n = as_exact_integer(2.0 * std::numbers::pi / config.increment);
    if (n <= 0) {
        throw ConfigError("heading increment " + std::to_string(geo::rad2deg(config.increment)) +
                          " deg does not divide 360 deg");
    }

    DatasetSplit out;
    out.ratio = config.split;
    const auto assignment = stratified_assignment(static_cast<std::size_t>(n), config.split);
    for (long long i = 0; i < n; ++i) {
        // Multiply rather than accumulate so labels stay exact multiples.
        const double heading = static_cast<double>(i) * (2.0 * std::numbers::pi / static_cast<double>(n));
        auto seq = generate_clean_sequence(heading, config.latitude, config.duration_s,
                                           config.sample_rate_hz);
        seq.id = i;
        switch (assignment[static_cast<std::size_t>(i)]) {
        case 0: out.train.push_back(std::move(seq)); break;
        case 1: out.val.push_back(std::move(seq)); break;
        default: out.test.push_back(std::move(seq)); break;
        }
    }
    return out;
}

TimeSequence add_sensor_noise(const TimeSequence& seq, const NoiseModel& noise) {
    if (noise.white_noise_std < 0.0 || noise.constant_bias_std < 0.0) {
        throw ConfigError("noise standard deviations must be non-negative");
    }
    TimeSequence out = seq;
    if (noise.white_noise_std == 0.0 && noise.constant_bias_std == 0.0) {
        return out;
    }
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::RowVector3d bias;
    for (int c = 0; c < 3; ++c) {
        bias(c) = noise.constant_bias_std * normal(rng);
    }
    for (Eigen::Index t = 0; t < out.samples.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            out.samples(t, c) += bias(c) + noise.white_noise_std * normal(rng);
        }
    }
    return out;
}

std::vector<TimeSequence> augment_by_heading_rotation(const TimeSequence& seq, int count,
                                                      double half_range) {
    if (!seq.heading) {
        throw MissingLabel("heading augmentation needs a labelled sequence");
    }
    if (count < 1 || half_range < 0.0) {
        throw ConfigError("augmentation needs count >= 1 and half_range >= 0");
    }
    std::vector<TimeSequence> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double offset =
            count == 1 ? 0.0 : -half_range + 2.0 * half_range * k / static_cast<double>(count - 1);
        TimeSequence rotated = seq;
        if (offset != 0.0) {
            const double c = std::cos(offset), s = std::sin(offset);
            const Eigen::VectorXd x = seq.samples.col(0);
            const Eigen::VectorXd y = seq.samples.col(1);
            rotated.samples.col(0) = c * x + s * y;
            rotated.samples.col(1) = -s * x + c * y;
            rotated.heading = geo::wrap_two_pi(*seq.heading + offset);
        }
        out.push_back(std::move(rotated));
    }
    return out;
}

TimeSequence downsample(const TimeSequence& seq, double target_rate_hz) {
    if (!(target_rate_hz > 0.0)) {
        throw RateMismatch("target rate must be positive");
    }
    const long long ratio = as_exact_integer(seq.sample_rate_hz / target_rate_hz);
    if (ratio <= 0) {
        throw RateMismatch("source rate " + std::to_string(seq.sample_rate_hz) +
                           " Hz is not an integer multiple of " + std::to_string(target_rate_hz) +
                           " Hz");
    }
    if (seq.n_time() % ratio != 0) {
        throw RateMismatch(std::to_string(seq.n_time()) + " samples do not split into blocks of " +
                           std::to_string(ratio));
    }
    const Eigen::Index n_out = seq.n_time() / ratio;
    SampleMatrix blocks(n_out, 3);
    for (Eigen::Index i = 0; i < n_out; ++i) {
        blocks.row(i) = seq.samples.middleRows(i * ratio, ratio).colwise().mean();
    }
    TimeSequence out = seq.with_samples(std::move(blocks));
    out.sample_rate_hz = target_rate_hz;
    return out;
}

TimeSequence upsample_hold(const TimeSequence& seq, double source_rate_hz) {
    const long long ratio = as_exact_integer(source_rate_hz / seq.sample_rate_hz);
    if (ratio <= 0) {
        throw RateMismatch("source rate must be an integer multiple of the sequence rate");
    }
    SampleMatrix held(seq.n_time() * ratio, 3);
    for (Eigen::Index i = 0; i < seq.n_time(); ++i) {
        held.middleRows(i * ratio, ratio).rowwise() = seq.samples.row(i);
    }
    TimeSequence out = seq.with_samples(std::move(held));
    out.sample_rate_hz = source_rate_hz;
    return out;
}

TimeSequence synthesize_measurement(const TimeSequence& clean, double source_rate_hz,
                                    const NoiseModel& noise) {
    const auto noisy = add_sensor_noise(upsample_hold(clean, source_rate_hz), noise);
    return downsample(noisy, clean.sample_rate_hz);
}

DatasetSplit synthesize_noisy_dataset(const DatasetSplit& clean, double source_rate_hz,
                                      NoiseModel noise, std::uint64_t base_seed) {
    DatasetSplit out;
    out.ratio = clean.ratio;
    auto convert = [&](const std::vector<TimeSequence>& in, std::vector<TimeSequence>& dst) {
        dst.reserve(in.size());
        for (const auto& seq : in) {
            noise.seed = base_seed + static_cast<std::uint64_t>(seq.id);
            dst.push_back(synthesize_measurement(seq, source_rate_hz, noise));
        }
    };
    convert(clean.train, out.train);
    convert(clean.val, out.val);
    convert(clean.test, out.test);
    return out;
}

} // namespace gyrodiff::synth
