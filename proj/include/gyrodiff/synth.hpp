// Synthetic data generation, sensor-noise injection and dataset shaping.
#pragma once

#include "gyrodiff/geo.hpp"
#include "gyrodiff/sequence.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace gyrodiff::synth {

/**
 * @brief Constant bias plus white noise, both zero-mean Gaussian.
 *
 * The bias is drawn once per sequence and channel; white noise is i.i.d. per
 * sample. Standard deviations refer to the rate of the sequence the model is
 * applied to.
 */
struct NoiseModel {
    double white_noise_std = 0.0;   ///< [rad/s]
    double constant_bias_std = 0.0; ///< [rad/s]
    std::uint64_t seed = 0;
};

struct SplitRatio {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct DatasetSplit {
    std::vector<TimeSequence> train;
    std::vector<TimeSequence> val;
    std::vector<TimeSequence> test;
    SplitRatio ratio;

    std::size_t size() const { return train.size() + val.size() + test.size(); }
};

/// Synthetic set over the full heading circle.
struct SyntheticConfig {
    double increment = geo::deg2rad(0.5); ///< heading spacing [rad]
    double duration_s = 100.0;
    double sample_rate_hz = 3.0;
    double latitude = 0.0; ///< [rad]
    SplitRatio split;
};

/// Leveled, noiseless earth-rate recording. Throws ConfigError unless
/// duration * rate is a positive integer.
TimeSequence generate_clean_sequence(double heading, double latitude, double duration_s,
                                     double rate_hz);

/// Clean sequences at headings {0, inc, 2 inc, ...} split by stratified
/// interleaving so every split spans the full circle.
DatasetSplit generate_synthetic_dataset(const SyntheticConfig& config);

/// Target counts for a ratio (train and val rounded, test takes the rest).
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatio& ratio);

/// Split index (0 train, 1 val, 2 test) for each of n ordered items. The
/// assignment interleaves splits so each one samples the whole ordering.
std::vector<int> stratified_assignment(std::size_t n, const SplitRatio& ratio);

/// output = input + bias + white noise; bitwise identity when both stds are 0.
TimeSequence add_sensor_noise(const TimeSequence& seq, const NoiseModel& noise);

/**
 * @brief Rotates the horizontal channels to synthesize new headings.
 *
 * Offsets are evenly spaced on [-half_range, +half_range]; a single copy uses
 * offset 0. Each output has x,y rotated by R(-offset) about z, so a clean
 * recording at heading psi becomes a clean recording at psi + offset.
 */
std::vector<TimeSequence> augment_by_heading_rotation(const TimeSequence& seq, int count,
                                                      double half_range);

/// Block mean over rate_ratio consecutive samples. Throws RateMismatch for a
/// non-integer ratio or a sample count that the ratio does not divide.
TimeSequence downsample(const TimeSequence& seq, double target_rate_hz);

/// Holds each sample for an integer number of source ticks (exact for the
/// constant synthetic signals).
TimeSequence upsample_hold(const TimeSequence& seq, double source_rate_hz);

/**
 * @brief Noisy counterpart of a clean sequence as seen by a real sensor.
 *
 * The signal is held at source_rate_hz, corrupted there by the noise model and
 * block-averaged back to the sequence's own rate.
 */
TimeSequence synthesize_measurement(const TimeSequence& clean, double source_rate_hz,
                                    const NoiseModel& noise);

/// Noisy copy of a dataset. Sequence with id i uses seed base_seed + i.
DatasetSplit synthesize_noisy_dataset(const DatasetSplit& clean, double source_rate_hz,
                                      NoiseModel noise, std::uint64_t base_seed);

} // namespace gyrodiff::synth
