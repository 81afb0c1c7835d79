// Per-sequence / per-sample normalization with exact inversion, and the
// dataset-level channel scaling used for network inputs.
#pragma once

#include "gyrodiff/sequence.hpp"

#include <string_view>
#include <vector>

namespace gyrodiff {

enum class NormScope { per_sample, per_sequence };

std::string_view to_string(NormScope scope);
NormScope norm_scope_from_string(std::string_view text);

/**
 * @brief Statistics retained next to normalized data.
 *
 * per_sequence keeps one row (per-channel mean and std over the whole
 * recording). per_sample keeps one row per time step, each holding that
 * step's scalar mean and std replicated over the three channels.
 */
struct NormStats {
    NormScope scope = NormScope::per_sequence;
    SampleMatrix mean;
    SampleMatrix std;
};

/// Throws DegenerateSequence when any standard deviation is below 1e-18.
std::pair<SampleMatrix, NormStats> normalize(const SampleMatrix& samples, NormScope scope);

/// Exact affine inverse of normalize(). Throws ShapeError when the stats do
/// not fit the sample count.
SampleMatrix denormalize(const SampleMatrix& samples, const NormStats& stats);

/**
 * @brief Fixed per-channel affine scaling fitted over a whole dataset.
 *
 * Channels whose spread is numerically zero (e.g. the vertical channel of a
 * clean equatorial set) keep unit scale.
 */
struct ChannelScaler {
    Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
    Eigen::RowVector3d scale = Eigen::RowVector3d::Ones();

    static ChannelScaler fit(const std::vector<TimeSequence>& data);

    SampleMatrix apply(const SampleMatrix& samples) const;
    SampleMatrix invert(const SampleMatrix& samples) const;
};

} // namespace gyrodiff
