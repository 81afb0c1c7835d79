#include "gyrodiff/svd_loss.hpp"

#include "gyrodiff/errors.hpp"

#include <Eigen/SVD>

#include <string>

namespace gyrodiff::diffusion {

namespace {

void check_tau(double tau) {
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw ConfigError("svd threshold must satisfy 0 <= tau < 1, got " + std::to_string(tau));
    }
}

struct Filtered {
    Eigen::MatrixXd value;
    Eigen::MatrixXd v;          // full right singular basis [n x n]
    Eigen::VectorXd eigen;      // S_i^2 padded with zeros to n entries
    std::vector<bool> kept;     // per column of v
};

Filtered filter_with_basis(const Eigen::MatrixXd& m, double tau) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double s_max = s.size() > 0 ? s.maxCoeff() : 0.0;

    Filtered out;
    out.v = svd.matrixV();
    const Eigen::Index n = m.cols();
    out.eigen = Eigen::VectorXd::Zero(n);
    out.kept.assign(static_cast<std::size_t>(n), false);

    Eigen::VectorXd s_filtered = s;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        out.eigen[i] = s[i] * s[i];
        const bool keep = s[i] > tau * s_max;
        out.kept[static_cast<std::size_t>(i)] = keep;
        if (!keep) {
            s_filtered[i] = 0.0;
        }
    }
    out.value = svd.matrixU() * s_filtered.asDiagonal() * out.v.leftCols(s.size()).transpose();
    return out;
}

// Gradient of <upstream, F(P)> with respect to P, where F(P) = P Pi and Pi
// projects onto the kept eigenvectors of G = P^T P.
Eigen::MatrixXd filter_vjp(const Eigen::MatrixXd& p, const Filtered& f,
                           const Eigen::MatrixXd& upstream) {
    const Eigen::Index n = p.cols();
    Eigen::MatrixXd projector = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (f.kept[static_cast<std::size_t>(i)]) {
            projector.noalias() += f.v.col(i) * f.v.col(i).transpose();
        }
    }
    Eigen::MatrixXd result = upstream * projector;

    const Eigen::MatrixXd a = p.transpose() * upstream;
    const Eigen::MatrixXd a_sym = a + a.transpose();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!f.kept[static_cast<std::size_t>(i)]) {
            continue;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            if (f.kept[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double gap = f.eigen[i] - f.eigen[j];
            if (gap <= 0.0) {
                continue;
            }
            const double coupling = f.v.col(i).dot(a_sym * f.v.col(j)) / gap;
            b.noalias() += coupling * f.v.col(i) * f.v.col(j).transpose();
        }
    }
    result.noalias() += p * (b + b.transpose());
    return result;
}

} // namespace

Eigen::MatrixXd fold_rows(const Eigen::MatrixXd& m, int window) {
    if (window < 1 || m.rows() % window != 0) {
        throw ShapeError("svd window " + std::to_string(window) + " does not divide " +
                         std::to_string(m.rows()) + " rows");
    }
    const Eigen::Index c = m.cols();
    Eigen::MatrixXd out(m.rows() / window, c * window);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (int k = 0; k < window; ++k) {
            out.block(r, k * c, 1, c) = m.row(r * window + k);
        }
    }
    return out;
}

Eigen::MatrixXd unfold_rows(const Eigen::MatrixXd& m, int window) {
    if (window < 1 || m.cols() % window != 0) {
        throw ShapeError("svd window " + std::to_string(window) + " does not divide " +
                         std::to_string(m.cols()) + " columns");
    }
    const Eigen::Index c = m.cols() / window;
    Eigen::MatrixXd out(m.rows() * window, c);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (int k = 0; k < window; ++k) {
            out.row(r * window + k) = m.block(r, k * c, 1, c);
        }
    }
    return out;
}

Eigen::MatrixXd svd_filter(const Eigen::MatrixXd& m, double tau) {
    check_tau(tau);
    return filter_with_basis(m, tau).value;
}

double svd_mse_loss(const std::vector<Eigen::MatrixXd>& pred,
                    const std::vector<Eigen::MatrixXd>& target, double tau,
                    std::vector<Eigen::MatrixXd>* grad) {
    check_tau(tau);
    if (pred.empty() || pred.size() != target.size()) {
        throw ShapeError("svd loss needs equal, non-empty batches (" + std::to_string(pred.size()) +
                         " vs " + std::to_string(target.size()) + ")");
    }
    const double batch = static_cast<double>(pred.size());
    if (grad) {
        grad->resize(pred.size());
    }
    double total = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (pred[k].rows() != target[k].rows() || pred[k].cols() != target[k].cols() ||
            pred[k].size() == 0) {
            throw ShapeError("prediction and target shapes differ at batch index " +
                             std::to_string(k));
        }
        const auto fp = filter_with_basis(pred[k], tau);
        const auto ft = filter_with_basis(target[k], tau);
        const Eigen::MatrixXd diff = fp.value - ft.value;
        const double count = static_cast<double>(diff.size());
        total += diff.squaredNorm() / count;
        if (grad) {
            (*grad)[k] = filter_vjp(pred[k], fp, (2.0 / (count * batch)) * diff);
        }
    }
    return total / batch;
}

} // namespace gyrodiff::diffusion
