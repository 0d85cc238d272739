#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fsens/grid.hpp"

namespace fsens::bspline {

// Degree-1 tensor-product B-spline ("hat function") basis on the map domain.
// Per axis, K_i knots equally spaced including the endpoints give K_i hat
// functions; tensor functions are ordered row-major in (k1,k2), i.e. basis
// column k = k1*K_2 + k2 with k1 along z1.
class BsplineBasis {
public:
    BsplineBasis(Eigen::VectorXd knots1, Eigen::VectorXd knots2);
    static BsplineBasis uniform(int k1, int k2, const Rect& domain);

    const Eigen::VectorXd& knots1() const { return knots1_; }
    const Eigen::VectorXd& knots2() const { return knots2_; }
    Eigen::Index size1() const { return knots1_.size(); }
    Eigen::Index size2() const { return knots2_.size(); }
    Eigen::Index size() const { return size1() * size2(); }
    Rect domain() const;

    // 1-D hat values at z for one axis (axis 1 = z1, axis 2 = z2).
    Eigen::VectorXd eval_axis(int axis, double z) const;

private:
    Eigen::VectorXd knots1_;
    Eigen::VectorXd knots2_;
};

// Gram matrix of the tensor basis under Lebesgue measure on the domain.
// Tensor structure G = G1 (x) G2 with tridiagonal axis factors, so the
// Cholesky square root is R = R1 (x) R2; dense views are materialized on
// demand only.
class GramMatrix {
public:
    explicit GramMatrix(const BsplineBasis& basis);

    const Eigen::MatrixXd& axis1() const { return g1_; }
    const Eigen::MatrixXd& axis2() const { return g2_; }
    const Eigen::MatrixXd& chol1() const { return r1_; }
    const Eigen::MatrixXd& chol2() const { return r2_; }
    Eigen::Index size() const { return g1_.rows() * g2_.rows(); }

    double entry(Eigen::Index k, Eigen::Index l) const;
    Eigen::MatrixXd dense() const;
    Eigen::MatrixXd chol_dense() const;
    // Restriction G[S,S] for a subset/permutation S of basis indices.
    Eigen::MatrixXd restricted(const std::vector<Eigen::Index>& subset) const;

private:
    Eigen::MatrixXd g1_, g2_;  // axis factors
    Eigen::MatrixXd r1_, r2_;  // lower Cholesky factors
};

// Per-axis evaluation matrices on a pixel grid: E1 is cols x K1 over z1,
// E2 is rows x K2 over z2. The full design matrix satisfies
// B[(r,c),(k1,k2)] = E1(c,k1)*E2(r,k2).
struct AxisEval {
    Eigen::MatrixXd e1;
    Eigen::MatrixXd e2;
};

AxisEval eval_axes(const BsplineBasis& basis, const GridSpec& grid);

// Dense design matrix (n_pixels x K, pixel rows in flatten order). Rows sum
// to 1 by the partition of unity.
Eigen::MatrixXd eval_basis(const BsplineBasis& basis, const GridSpec& grid);

// Sparse variant; each row has at most 4 nonzeros for degree-1 splines.
Eigen::SparseMatrix<double> eval_basis_sparse(const BsplineBasis& basis, const GridSpec& grid);

// Discrete least-squares projection of a map onto the basis, exploiting the
// tensor structure of the normal equations.
Eigen::VectorXd project(const SpatialMap& map, const BsplineBasis& basis);

// Fitted surface for a coefficient vector on a pixel grid.
Eigen::MatrixXd evaluate(const Eigen::VectorXd& coeff, const BsplineBasis& basis,
                         const GridSpec& grid);

// Metric square-root transform c = R^T alpha and its inverse alpha = R^-T c,
// computed through the Kronecker factors.
Eigen::VectorXd orthonormalize(const Eigen::VectorXd& alpha, const GramMatrix& gram);
Eigen::VectorXd deorthonormalize(const Eigen::VectorXd& c, const GramMatrix& gram);

}  // namespace fsens::bspline
