// ADAM optimizer over a flat parameter vector.
#pragma once

#include "gyrodiff/nn/params.hpp"

#include <cmath>

namespace gyrodiff::nn {

class Adam {
public:
    explicit Adam(Eigen::Index n_params, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8)
        : m_(Vector::Zero(n_params)), v_(Vector::Zero(n_params)), beta1_(beta1), beta2_(beta2),
          epsilon_(epsilon) {}

    void step(Vector& params, const Vector& grad, double learning_rate) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        params.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
    }

    long long steps() const { return t_; }

private:
    Vector m_;
    Vector v_;
    double beta1_;
    double beta2_;
    double epsilon_;
    long long t_ = 0;
};

} // namespace gyrodiff::nn
