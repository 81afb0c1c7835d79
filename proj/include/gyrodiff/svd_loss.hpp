// Spectrally filtered MSE used to train the noise predictor.
#pragma once

#include <Eigen/Core>

#include <vector>

namespace gyrodiff::diffusion {

/// M = U S V^T with every S_i <= tau * S_max zeroed, then reassembled.
/// Requires 0 <= tau < 1 (ConfigError otherwise).
Eigen::MatrixXd svd_filter(const Eigen::MatrixXd& m, double tau);

/**
 * @brief Batch-mean of per-sequence mean squared differences between the
 * filtered prediction and filtered target matrices.
 *
 * Throws ShapeError for mismatched or empty batches. When `grad` is non-null
 * it receives d loss / d pred for each batch element, computed by
 * differentiating the filter through the eigen-projector of pred^T pred
 * (valid away from ties at the threshold).
 */
/// Regroups `window` consecutive rows of an [n x c] matrix into one row of an
/// [n / window x c window] matrix. Throws ShapeError unless window divides n.
Eigen::MatrixXd fold_rows(const Eigen::MatrixXd& m, int window);

/// Inverse of fold_rows for a matrix with c columns per original row.
Eigen::MatrixXd unfold_rows(const Eigen::MatrixXd& m, int window);

double svd_mse_loss(const std::vector<Eigen::MatrixXd>& pred,
                    const std::vector<Eigen::MatrixXd>& target, double tau,
                    std::vector<Eigen::MatrixXd>* grad = nullptr);

} // namespace gyrodiff::diffusion
