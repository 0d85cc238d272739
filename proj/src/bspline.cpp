#include "fsens/bspline.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace fsens::bspline {

namespace {

void check_knots(const Eigen::VectorXd& knots, const char* which) {
    if (knots.size() < 2)
        throw std::invalid_argument(std::string("bspline: need >= 2 knots on axis ") + which);
    for (Eigen::Index i = 1; i < knots.size(); ++i)
        if (!(knots[i] > knots[i - 1]))
            throw std::invalid_argument(std::string("bspline: knots not strictly increasing on axis ") +
                                        which);
}

// Hat values on one axis at z; z must lie within the knot span.
Eigen::VectorXd hat_values(const Eigen::VectorXd& t, double z) {
    const Eigen::Index K = t.size();
    const double tol = 1e-12 * std::max(1.0, std::abs(t[K - 1]) + std::abs(t[0]));
    if (z < t[0] - tol || z > t[K - 1] + tol)
        throw std::out_of_range("bspline: evaluation point " + std::to_string(z) +
                                " outside knot span [" + std::to_string(t[0]) + ", " +
                                std::to_string(t[K - 1]) + "]");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(K);
    // Locate the interval [t_j, t_{j+1}] containing z.
    Eigen::Index j = 0;
    while (j + 2 < K && z >= t[j + 1]) ++j;
    const double w = (z - t[j]) / (t[j + 1] - t[j]);
    v[j] = 1.0 - w;
    v[j + 1] = w;
    // Clamp round-off just outside the span onto the boundary hats.
    if (w < 0.0) { v[j] = 1.0; v[j + 1] = 0.0; }
    if (w > 1.0) { v[j] = 0.0; v[j + 1] = 1.0; }
    return v;
}

// Analytic Gram factor of a 1-D hat basis under Lebesgue measure:
// tridiagonal with diag (h_{k-1}+h_k)/3 and off-diagonal h_k/6.
Eigen::MatrixXd axis_gram(const Eigen::VectorXd& t) {
    const Eigen::Index K = t.size();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(K, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double h_left = k > 0 ? t[k] - t[k - 1] : 0.0;
        const double h_right = k + 1 < K ? t[k + 1] - t[k] : 0.0;
        g(k, k) = (h_left + h_right) / 3.0;
        if (k + 1 < K) {
            g(k, k + 1) = h_right / 6.0;
            g(k + 1, k) = h_right / 6.0;
        }
    }
    return g;
}

Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& g, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(std::string("bspline: Cholesky failed for ") + what);
    return llt.matrixL();
}

}  // namespace

BsplineBasis::BsplineBasis(Eigen::VectorXd knots1, Eigen::VectorXd knots2)
    : knots1_(std::move(knots1)), knots2_(std::move(knots2)) {
    check_knots(knots1_, "1");
    check_knots(knots2_, "2");
}

BsplineBasis BsplineBasis::uniform(int k1, int k2, const Rect& domain) {
    if (k1 < 2 || k2 < 2) throw std::invalid_argument("bspline: need >= 2 knots per axis");
    Eigen::VectorXd t1 = Eigen::VectorXd::LinSpaced(k1, domain.z1_min, domain.z1_max);
    Eigen::VectorXd t2 = Eigen::VectorXd::LinSpaced(k2, domain.z2_min, domain.z2_max);
    return BsplineBasis(std::move(t1), std::move(t2));
}

Rect BsplineBasis::domain() const {
    return Rect{knots1_[0], knots1_[knots1_.size() - 1], knots2_[0], knots2_[knots2_.size() - 1]};
}

Eigen::VectorXd BsplineBasis::eval_axis(int axis, double z) const {
    if (axis != 1 && axis != 2) throw std::invalid_argument("bspline: axis must be 1 or 2");
    return hat_values(axis == 1 ? knots1_ : knots2_, z);
}

GramMatrix::GramMatrix(const BsplineBasis& basis)
    : g1_(axis_gram(basis.knots1())), g2_(axis_gram(basis.knots2())) {
    r1_ = lower_cholesky(g1_, "axis-1 Gram factor");
    r2_ = lower_cholesky(g2_, "axis-2 Gram factor");
}

double GramMatrix::entry(Eigen::Index k, Eigen::Index l) const {
    const Eigen::Index K2 = g2_.rows();
    return g1_(k / K2, l / K2) * g2_(k % K2, l % K2);
}

Eigen::MatrixXd GramMatrix::dense() const {
    const Eigen::Index K1 = g1_.rows(), K2 = g2_.rows();
    Eigen::MatrixXd g(K1 * K2, K1 * K2);
    for (Eigen::Index a = 0; a < K1; ++a)
        for (Eigen::Index b = 0; b < K1; ++b)
            g.block(a * K2, b * K2, K2, K2) = g1_(a, b) * g2_;
    return g;
}

Eigen::MatrixXd GramMatrix::chol_dense() const {
    const Eigen::Index K1 = r1_.rows(), K2 = r2_.rows();
    Eigen::MatrixXd r(K1 * K2, K1 * K2);
    for (Eigen::Index a = 0; a < K1; ++a)
        for (Eigen::Index b = 0; b < K1; ++b)
            r.block(a * K2, b * K2, K2, K2) = r1_(a, b) * r2_;
    return r;
}

Eigen::MatrixXd GramMatrix::restricted(const std::vector<Eigen::Index>& subset) const {
    const Eigen::Index m = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) g(a, b) = entry(subset[std::size_t(a)], subset[std::size_t(b)]);
    return g;
}

AxisEval eval_axes(const BsplineBasis& basis, const GridSpec& grid) {
    AxisEval ax;
    ax.e1.resize(grid.cols, basis.size1());
    for (Eigen::Index c = 0; c < grid.cols; ++c)
        ax.e1.row(c) = basis.eval_axis(1, grid.z1_at(c)).transpose();
    ax.e2.resize(grid.rows, basis.size2());
    for (Eigen::Index r = 0; r < grid.rows; ++r)
        ax.e2.row(r) = basis.eval_axis(2, grid.z2_at(r)).transpose();
    return ax;
}

Eigen::MatrixXd eval_basis(const BsplineBasis& basis, const GridSpec& grid) {
    const AxisEval ax = eval_axes(basis, grid);
    const Eigen::Index K1 = basis.size1(), K2 = basis.size2();
    Eigen::MatrixXd b(grid.pixels(), K1 * K2);
    for (Eigen::Index r = 0; r < grid.rows; ++r)
        for (Eigen::Index c = 0; c < grid.cols; ++c) {
            const Eigen::Index p = r * grid.cols + c;
            for (Eigen::Index k1 = 0; k1 < K1; ++k1)
                for (Eigen::Index k2 = 0; k2 < K2; ++k2)
                    b(p, k1 * K2 + k2) = ax.e1(c, k1) * ax.e2(r, k2);
        }
    return b;
}

Eigen::SparseMatrix<double> eval_basis_sparse(const BsplineBasis& basis, const GridSpec& grid) {
    const AxisEval ax = eval_axes(basis, grid);
    const Eigen::Index K2 = basis.size2();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(grid.pixels()) * 4);
    for (Eigen::Index r = 0; r < grid.rows; ++r)
        for (Eigen::Index c = 0; c < grid.cols; ++c) {
            const Eigen::Index p = r * grid.cols + c;
            for (Eigen::Index k1 = 0; k1 < basis.size1(); ++k1) {
                if (ax.e1(c, k1) == 0.0) continue;
                for (Eigen::Index k2 = 0; k2 < K2; ++k2) {
                    if (ax.e2(r, k2) == 0.0) continue;
                    trips.emplace_back(p, k1 * K2 + k2, ax.e1(c, k1) * ax.e2(r, k2));
                }
            }
        }
    Eigen::SparseMatrix<double> b(grid.pixels(), basis.size());
    b.setFromTriplets(trips.begin(), trips.end());
    return b;
}

Eigen::VectorXd project(const SpatialMap& map, const BsplineBasis& basis) {
    const GridSpec grid = map.grid();
    if (basis.size() > grid.pixels())
        throw std::invalid_argument("bspline: basis larger than pixel count");
    const AxisEval ax = eval_axes(basis, grid);

    // Normal equations (E2'E2) X (E1'E1) = E2' M E1 with X(k2,k1) = A(k1,k2).
    Eigen::LLT<Eigen::MatrixXd> n1((ax.e1.transpose() * ax.e1).eval());
    Eigen::LLT<Eigen::MatrixXd> n2((ax.e2.transpose() * ax.e2).eval());
    if (n1.info() != Eigen::Success || n2.info() != Eigen::Success)
        throw std::runtime_error("bspline: rank-deficient normal equations (knots without covering pixels)");
    Eigen::MatrixXd rhs = ax.e2.transpose() * map.values() * ax.e1;  // K2 x K1
    Eigen::MatrixXd x = n2.solve(rhs);
    x = n1.solve(x.transpose()).transpose();  // K2 x K1

    const Eigen::Index K1 = basis.size1(), K2 = basis.size2();
    Eigen::VectorXd alpha(K1 * K2);
    for (Eigen::Index k1 = 0; k1 < K1; ++k1)
        for (Eigen::Index k2 = 0; k2 < K2; ++k2) alpha[k1 * K2 + k2] = x(k2, k1);
    return alpha;
}

Eigen::MatrixXd evaluate(const Eigen::VectorXd& coeff, const BsplineBasis& basis,
                         const GridSpec& grid) {
    if (coeff.size() != basis.size())
        throw std::invalid_argument("bspline: coefficient length != basis size");
    const AxisEval ax = eval_axes(basis, grid);
    const Eigen::Index K1 = basis.size1(), K2 = basis.size2();
    Eigen::MatrixXd a(K1, K2);
    for (Eigen::Index k1 = 0; k1 < K1; ++k1)
        for (Eigen::Index k2 = 0; k2 < K2; ++k2) a(k1, k2) = coeff[k1 * K2 + k2];
    return ax.e2 * a.transpose() * ax.e1.transpose();  // rows x cols
}

namespace {

// y = (A (x) B) x for row-major (k1,k2) coefficient ordering:
// reshape x to K1 x K2, apply A on the left and B^T on the right.
Eigen::VectorXd kron_apply(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::VectorXd& x) {
    const Eigen::Index K1 = a.cols(), K2 = b.cols();
    Eigen::MatrixXd xm(K1, K2);
    for (Eigen::Index k1 = 0; k1 < K1; ++k1) xm.row(k1) = x.segment(k1 * K2, K2);
    Eigen::MatrixXd ym = a * xm * b.transpose();
    Eigen::VectorXd y(ym.rows() * ym.cols());
    for (Eigen::Index k1 = 0; k1 < ym.rows(); ++k1) y.segment(k1 * ym.cols(), ym.cols()) = ym.row(k1);
    return y;
}

}  // namespace

Eigen::VectorXd orthonormalize(const Eigen::VectorXd& alpha, const GramMatrix& gram) {
    if (alpha.size() != gram.size())
        throw std::invalid_argument("orthonormalize: coefficient length != Gram size");
    return kron_apply(gram.chol1().transpose(), gram.chol2().transpose(), alpha);
}

Eigen::VectorXd deorthonormalize(const Eigen::VectorXd& c, const GramMatrix& gram) {
    if (c.size() != gram.size())
        throw std::invalid_argument("deorthonormalize: coefficient length != Gram size");
    // alpha = R^-T c = (R1^-T (x) R2^-T) c.
    Eigen::MatrixXd r1t_inv = gram.chol1().transpose().triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(gram.chol1().rows(), gram.chol1().rows()));
    Eigen::MatrixXd r2t_inv = gram.chol2().transpose().triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(gram.chol2().rows(), gram.chol2().rows()));
    return kron_apply(r1t_inv, r2t_inv, c);
}

}  // namespace fsens::bspline
