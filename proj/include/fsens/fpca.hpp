#pragma once

#include <Eigen/Core>
#include <optional>

namespace fsens::fpca {

// PCA of selected basis coefficients under an SPD metric G (functional PCA).
// Internally the data are mapped to c = R^T (alpha - mean) with R R^T = G and
// a standard SVD-based PCA is run there; eigenvectors are returned both in
// the orthonormalized coordinates (v_l) and in the original coefficient
// coordinates (w_l = R^-T v_l, G-orthonormal).
struct FpcaModel {
    Eigen::VectorXd mean_coeff;       // K~ empirical mean
    Eigen::VectorXd eigenvalues;      // full spectrum, descending, 1/(n-1) scale
    Eigen::MatrixXd eigvec_ortho;     // K~ x n_pc (v_l)
    Eigen::MatrixXd eigvec_orig;      // K~ x n_pc (w_l)
    Eigen::MatrixXd scores;           // n x n_pc, zero column means
    Eigen::Index n_pc = 0;
    bool identity_metric = true;
    Eigen::MatrixXd chol_R;           // lower R with R R^T = G (empty if identity)

    Eigen::Index dim() const { return mean_coeff.size(); }
    double total_inertia() const { return eigenvalues.sum(); }
    double explained_inertia() const {
        const double tot = total_inertia();
        return tot > 0.0 ? eigenvalues.head(n_pc).sum() / tot : 0.0;
    }
};

// G empty => identity metric.
FpcaModel fit_fpca(const Eigen::MatrixXd& coeffs, const Eigen::MatrixXd& metric,
                   Eigen::Index n_pc);

Eigen::VectorXd transform(const FpcaModel& model, const Eigen::VectorXd& alpha);
Eigen::VectorXd reconstruct(const FpcaModel& model, const Eigen::VectorXd& scores);

// Eigenvalue weights for generalized sensitivity aggregation. By default the
// weights are normalized over the retained components; discarded_in_denominator
// divides by the full spectrum instead, bounding the truncation effect.
Eigen::VectorXd eigenvalue_sensitivity_weights(const FpcaModel& model,
                                               bool discarded_in_denominator = false);

}  // namespace fsens::fpca
