#include "fsens/fpca.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace fsens::fpca {

FpcaModel fit_fpca(const Eigen::MatrixXd& coeffs, const Eigen::MatrixXd& metric,
                   Eigen::Index n_pc) {
    const Eigen::Index n = coeffs.rows(), K = coeffs.cols();
    if (n < 2) throw std::invalid_argument("fit_fpca: need at least 2 samples");
    if (n_pc < 1 || n_pc > std::min(n - 1, K))
        throw std::invalid_argument("fit_fpca: n_pc=" + std::to_string(n_pc) +
                                    " out of range [1, min(n-1, K)] = [1, " +
                                    std::to_string(std::min(n - 1, K)) + "]");

    FpcaModel model;
    model.n_pc = n_pc;
    model.identity_metric = metric.size() == 0;
    if (!model.identity_metric) {
        if (metric.rows() != K || metric.cols() != K)
            throw std::invalid_argument("fit_fpca: metric must be K x K");
        Eigen::LLT<Eigen::MatrixXd> llt(metric);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("fit_fpca: metric is not symmetric positive definite");
        model.chol_R = llt.matrixL();
    }

    model.mean_coeff = coeffs.colwise().mean();
    Eigen::MatrixXd centered = coeffs.rowwise() - model.mean_coeff.transpose();
    // Row vectors transform as c_i^T = (R^T a_i)^T = a_i^T R.
    Eigen::MatrixXd ortho = model.identity_metric ? centered : (centered * model.chol_R).eval();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(ortho, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    model.eigenvalues = sv.array().square() / double(n - 1);

    model.eigvec_ortho = svd.matrixV().leftCols(n_pc);
    if (model.identity_metric) {
        model.eigvec_orig = model.eigvec_ortho;
    } else {
        model.eigvec_orig = model.chol_R.transpose()
                                .triangularView<Eigen::Upper>()
                                .solve(model.eigvec_ortho);
    }

    // Sign convention: largest-magnitude entry of each original-coordinate
    // eigenvector is positive.
    for (Eigen::Index l = 0; l < n_pc; ++l) {
        Eigen::Index imax = 0;
        model.eigvec_orig.col(l).cwiseAbs().maxCoeff(&imax);
        if (model.eigvec_orig(imax, l) < 0.0) {
            model.eigvec_orig.col(l) = -model.eigvec_orig.col(l);
            model.eigvec_ortho.col(l) = -model.eigvec_ortho.col(l);
        }
    }

    model.scores = ortho * model.eigvec_ortho;
    return model;
}

Eigen::VectorXd transform(const FpcaModel& model, const Eigen::VectorXd& alpha) {
    if (alpha.size() != model.dim())
        throw std::invalid_argument("fpca::transform: coefficient length mismatch");
    Eigen::VectorXd centered = alpha - model.mean_coeff;
    if (!model.identity_metric) centered = model.chol_R.transpose() * centered;
    return model.eigvec_ortho.transpose() * centered;
}

Eigen::VectorXd reconstruct(const FpcaModel& model, const Eigen::VectorXd& scores) {
    if (scores.size() != model.n_pc)
        throw std::invalid_argument("fpca::reconstruct: score length mismatch");
    return model.mean_coeff + model.eigvec_orig * scores;
}

Eigen::VectorXd eigenvalue_sensitivity_weights(const FpcaModel& model,
                                               bool discarded_in_denominator) {
    const Eigen::VectorXd retained = model.eigenvalues.head(model.n_pc);
    const double denom = discarded_in_denominator ? model.eigenvalues.sum() : retained.sum();
    if (!(denom > 0.0))
        throw std::invalid_argument("eigenvalue_sensitivity_weights: zero total inertia");
    return retained / denom;
}

}  // namespace fsens::fpca
