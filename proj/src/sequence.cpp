#include "gyrodiff/sequence.hpp"

#include "gyrodiff/errors.hpp"

#include <algorithm>
#include <string>

namespace gyrodiff {

std::string_view to_string(SourceTag tag) {
    return tag == SourceTag::recorded ? "recorded" : "synthetic";
}

SourceTag source_tag_from_string(std::string_view text) {
    if (text == "synthetic") {
        return SourceTag::synthetic;
    }
    if (text == "recorded") {
        return SourceTag::recorded;
    }
    throw FormatError("unknown source tag '" + std::string(text) + "'");
}

TimeSequence TimeSequence::with_samples(SampleMatrix new_samples) const {
    TimeSequence out = *this;
    out.samples = std::move(new_samples);
    return out;
}

std::vector<double> flatten(const TimeSequence& seq) {
    return {seq.samples.data(), seq.samples.data() + seq.samples.size()};
}

TimeSequence unflatten(std::span<const double> values, Eigen::Index n_time,
                       double sample_rate_hz) {
    if (n_time <= 0 || values.size() != static_cast<std::size_t>(n_time) * 3) {
        throw ShapeError("cannot reshape " + std::to_string(values.size()) + " values into [" +
                         std::to_string(n_time) + " x 3]");
    }
    TimeSequence seq;
    seq.sample_rate_hz = sample_rate_hz;
    seq.samples.resize(n_time, 3);
    std::copy(values.begin(), values.end(), seq.samples.data());
    return seq;
}

TimeSequence unflatten(std::span<const double> values) {
    if (values.empty() || values.size() % 3 != 0) {
        throw ShapeError("flattened length " + std::to_string(values.size()) +
                         " is not a positive multiple of 3");
    }
    return unflatten(values, static_cast<Eigen::Index>(values.size() / 3));
}

} // namespace gyrodiff
