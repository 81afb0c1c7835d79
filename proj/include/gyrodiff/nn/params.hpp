// Flat parameter storage shared by the recurrent networks.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace gyrodiff::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using Rng = std::mt19937_64;

/// A [rows x cols] column-major tensor living at offset inside a flat vector.
struct Slot {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    Eigen::Index size() const { return rows * cols; }
};

/// Hands out consecutive slots; the final size() is the parameter count.
class ParameterLayout {
public:
    Slot add(Eigen::Index rows, Eigen::Index cols) {
        Slot slot{size_, rows, cols};
        size_ += rows * cols;
        return slot;
    }
    Eigen::Index size() const { return size_; }

private:
    Eigen::Index size_ = 0;
};

inline MatrixMap view(Vector& flat, const Slot& s) {
    return {flat.data() + s.offset, s.rows, s.cols};
}
inline ConstMatrixMap view(const Vector& flat, const Slot& s) {
    return {flat.data() + s.offset, s.rows, s.cols};
}

/// Fills a slot with U(-bound, bound) draws in storage order.
inline void fill_uniform(Vector& flat, const Slot& s, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        flat[s.offset + i] = dist(rng);
    }
}

/// Fully connected layer y = W x + b applied column-wise.
struct LinearSlots {
    Slot weight; ///< [out x in]
    Slot bias;   ///< [out x 1]
};

inline LinearSlots add_linear(ParameterLayout& layout, Eigen::Index in, Eigen::Index out) {
    LinearSlots s;
    s.weight = layout.add(out, in);
    s.bias = layout.add(out, 1);
    return s;
}

inline void init_linear(Vector& flat, const LinearSlots& s, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.weight.cols));
    fill_uniform(flat, s.weight, bound, rng);
    fill_uniform(flat, s.bias, bound, rng);
}

/// Vectorizable logistic and tanh (Eigen only vectorizes exp for doubles).
template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 / (1.0 + (-x).exp());
}
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

} // namespace gyrodiff::nn
