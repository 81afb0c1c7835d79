// Conversion between per-sequence sample matrices and packed batches.
#pragma once

#include "gyrodiff/errors.hpp"
#include "gyrodiff/nn/lstm.hpp"
#include "gyrodiff/sequence.hpp"

#include <string>
#include <vector>

namespace gyrodiff::nn {

/// Common shape of a non-empty, non-ragged batch; ShapeError otherwise.
inline SequenceShape batch_shape(const std::vector<SampleMatrix>& x) {
    if (x.empty()) {
        throw ShapeError("empty batch");
    }
    const Eigen::Index n_time = x.front().rows();
    for (const auto& m : x) {
        if (m.rows() != n_time || m.rows() == 0) {
            throw ShapeError("ragged batch: sequences of " + std::to_string(n_time) + " and " +
                             std::to_string(m.rows()) + " samples");
        }
    }
    return {n_time, static_cast<Eigen::Index>(x.size())};
}

/// [3 x n_time * batch] with column t * batch + b = row t of sequence b.
inline Matrix pack(const std::vector<SampleMatrix>& x, SequenceShape shape) {
    Matrix out(3, shape.columns());
    for (Eigen::Index b = 0; b < shape.batch; ++b) {
        const auto& m = x[static_cast<std::size_t>(b)];
        for (Eigen::Index t = 0; t < shape.n_time; ++t) {
            out.col(t * shape.batch + b) = m.row(t).transpose();
        }
    }
    return out;
}

inline std::vector<SampleMatrix> unpack(const Matrix& packed, SequenceShape shape) {
    std::vector<SampleMatrix> out(static_cast<std::size_t>(shape.batch),
                                  SampleMatrix(shape.n_time, 3));
    for (Eigen::Index b = 0; b < shape.batch; ++b) {
        auto& m = out[static_cast<std::size_t>(b)];
        for (Eigen::Index t = 0; t < shape.n_time; ++t) {
            m.row(t) = packed.col(t * shape.batch + b).transpose();
        }
    }
    return out;
}

} // namespace gyrodiff::nn
