// Fixed-rate three-channel angular-rate recordings.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gyrodiff {

/// Row-major [n_time x 3] block so that the underlying storage is already the
/// interleaved [t0x, t0y, t0z, t1x, ...] layout.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

enum class SourceTag { synthetic, recorded };

std::string_view to_string(SourceTag tag);
SourceTag source_tag_from_string(std::string_view text);

class TimeSequence {
public:
    SampleMatrix samples;              ///< [rad/s]
    double sample_rate_hz = 3.0;
    std::optional<double> heading;     ///< ground-truth heading [rad], [0, 2pi)
    double latitude = 0.0;             ///< [rad]
    SourceTag source = SourceTag::synthetic;
    std::int64_t id = 0;               ///< position within the producing dataset

    Eigen::Index n_time() const { return samples.rows(); }
    double duration() const { return static_cast<double>(samples.rows()) / sample_rate_hz; }

    /// Copy with the same metadata but new samples.
    TimeSequence with_samples(SampleMatrix new_samples) const;
};

/// Row-major interleaving of the samples, length n_time * 3.
std::vector<double> flatten(const TimeSequence& seq);

/// Inverse of flatten(). Throws ShapeError unless values.size() == 3 * n_time.
TimeSequence unflatten(std::span<const double> values, Eigen::Index n_time,
                       double sample_rate_hz = 3.0);

/// Infers n_time = values.size() / 3. Throws ShapeError on non-divisible length.
TimeSequence unflatten(std::span<const double> values);

} // namespace gyrodiff
