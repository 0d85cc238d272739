#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fsens/select.hpp"
#include "support/test_util.hpp"

using namespace fsens;
using select::EnergyOptions;
using select::LassoConfig;

TEST_CASE("single-sample energy weights") {
    Eigen::MatrixXd coeffs(1, 3);
    coeffs << 3, 4, 0;
    EnergyOptions opt;
    opt.p = 0.65;
    const auto res = select::energy_select(coeffs, opt);
    CHECK(res.lambda[0] == doctest::Approx(9.0 / 25.0).epsilon(1e-14));
    CHECK(res.lambda[1] == doctest::Approx(16.0 / 25.0).epsilon(1e-14));
    CHECK(res.lambda[2] == 0.0);
    REQUIRE(res.k_tilde == 1);
    CHECK(res.ranked_indices[0] == 1);  // 16/25 = 0.64 <= 0.65; adding 9/25 would exceed
    CHECK(res.fill_means.size() == 2);
    CHECK(res.fill_means[0] == 3.0);  // discarded index 0
    CHECK(res.fill_means[1] == 0.0);  // discarded index 2
}

TEST_CASE("uniform energies break ties by ascending index") {
    Eigen::MatrixXd coeffs(2, 4);
    coeffs << 1, 1, 1, 1, -2, 2, -2, 2;
    EnergyOptions opt;
    opt.k_target = 4;
    const auto res = select::energy_select(coeffs, opt);
    for (int k = 0; k < 4; ++k) {
        CHECK(res.lambda[k] == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(res.ranked_indices[std::size_t(k)] == k);
    }
}

TEST_CASE("weights sum to one and survive global rescaling") {
    Rng rng(41);
    const Eigen::MatrixXd coeffs = test::random_matrix(rng, 25, 40, -3, 3);
    EnergyOptions opt;
    opt.k_target = 10;
    const auto res = select::energy_select(coeffs, opt);
    CHECK(std::abs(res.lambda.sum() - 1.0) < 1e-10);

    const auto scaled = select::energy_select((-7.5 * coeffs).eval(), opt);
    CHECK((scaled.lambda - res.lambda).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(scaled.ranked_indices == res.ranked_indices);
}

TEST_CASE("zero-energy sample is rejected with guidance") {
    Eigen::MatrixXd coeffs(2, 3);
    coeffs << 1, 2, 3, 0, 0, 0;
    EnergyOptions opt;
    opt.k_target = 2;
    CHECK_THROWS_WITH_AS(select::energy_select(coeffs, opt), doctest::Contains("zero energy"),
                         std::invalid_argument);
}

TEST_CASE("threshold semantics: cumulative lambda <= p, next index would exceed") {
    Eigen::MatrixXd coeffs(1, 4);
    coeffs << std::sqrt(0.4), std::sqrt(0.3), std::sqrt(0.2), std::sqrt(0.1);
    EnergyOptions opt;
    opt.p = 0.95;
    const auto res = select::energy_select(coeffs, opt);
    CHECK(res.k_tilde == 3);  // 0.4+0.3+0.2 = 0.9 <= 0.95, adding 0.1 exceeds

    opt.p = 0.35;  // below the largest single contribution
    CHECK_THROWS(select::energy_select(coeffs, opt));

    Eigen::MatrixXd exact = Eigen::MatrixXd::Ones(1, 4);  // lambda = 0.25 each, exactly
    opt.p = 1.0;
    CHECK(select::energy_select(exact, opt).k_tilde == 4);
}

TEST_CASE("argument validation") {
    Eigen::MatrixXd coeffs = Eigen::MatrixXd::Ones(2, 3);
    EnergyOptions none;
    CHECK_THROWS(select::energy_select(coeffs, none));
    EnergyOptions both;
    both.p = 0.5;
    both.k_target = 2;
    CHECK_THROWS(select::energy_select(coeffs, both));
    EnergyOptions big;
    big.k_target = 4;
    CHECK_THROWS(select::energy_select(coeffs, big));
}

TEST_CASE("filling with column means dominates filling with zeros") {
    Rng rng(42);
    Eigen::MatrixXd coeffs = test::random_matrix(rng, 30, 12, -1, 1);
    coeffs.col(3).array() += 2.0;  // a biased discarded coefficient
    EnergyOptions opt;
    opt.k_target = 4;
    const auto res = select::energy_select(coeffs, opt);
    double sq_fill = 0.0, sq_zero = 0.0;
    const auto discarded = res.discarded_indices();
    for (std::size_t j = 0; j < discarded.size(); ++j) {
        const auto col = coeffs.col(discarded[j]);
        sq_fill += (col.array() - res.fill_means[static_cast<Eigen::Index>(j)]).square().sum();
        sq_zero += col.array().square().sum();
    }
    CHECK(sq_fill <= sq_zero + 1e-12);
}

TEST_CASE("selection is deterministic") {
    Rng rng(43);
    const Eigen::MatrixXd coeffs = test::random_matrix(rng, 10, 20);
    EnergyOptions opt;
    opt.k_target = 7;
    const auto a = select::energy_select(coeffs, opt);
    const auto b = select::energy_select(coeffs, opt);
    CHECK(a.ranked_indices == b.ranked_indices);
    CHECK((a.lambda - b.lambda).cwiseAbs().maxCoeff() == 0.0);
}

// ------------------------------------------------------------------ lasso

namespace {

Eigen::SparseMatrix<double> to_sparse(const Eigen::MatrixXd& m) {
    return m.sparseView();
}

}  // namespace

TEST_CASE("zero penalty reduces to least squares") {
    Rng rng(44);
    const Eigen::MatrixXd b = test::random_matrix(rng, 30, 5, -1, 1);
    const Eigen::VectorXd truth = test::random_vector(rng, 5, -2, 2);
    const Eigen::VectorXd y = b * truth;
    LassoConfig cfg;
    cfg.tol = 1e-10;
    const Eigen::VectorXd alpha = select::lasso_path_single(to_sparse(b), y, 0.0, cfg);
    const Eigen::VectorXd ls = (b.transpose() * b).ldlt().solve(b.transpose() * y);
    CHECK((alpha - ls).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("orthonormal design solves in closed form (soft threshold oracle)") {
    Rng rng(45);
    const Eigen::Index m = 40, K = 8;
    // Orthonormal columns via QR.
    const Eigen::MatrixXd raw = test::random_matrix(rng, m, K);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, K);
    const Eigen::VectorXd y = test::random_vector(rng, m, -2, 2);

    const double penalty = 0.01;
    const Eigen::VectorXd alpha = select::lasso_path_single(to_sparse(q), y, penalty);

    // Loss is (1/m)||y - Q a||^2 + penalty*||a||_1, so the closed form is
    // soft-threshold(Q^T y, penalty*m/2) per coordinate.
    const double thr = penalty * double(m) / 2.0;
    const Eigen::VectorXd rho = q.transpose() * y;
    for (Eigen::Index k = 0; k < K; ++k) {
        const double expected =
            rho[k] > thr ? rho[k] - thr : (rho[k] < -thr ? rho[k] + thr : 0.0);
        CHECK(alpha[k] == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("over-penalized problem yields the empty selection error") {
    Rng rng(46);
    const Eigen::MatrixXd b = test::random_matrix(rng, 20, 4);
    Eigen::MatrixXd targets = test::random_matrix(rng, 3, 20);
    const double huge = 2.0 * (b.transpose() * targets.transpose()).cwiseAbs().maxCoeff();
    CHECK_THROWS_WITH_AS(select::lasso_select(to_sparse(b), targets, huge, 2),
                         doctest::Contains("empty selection"), std::runtime_error);
}

TEST_CASE("non-convergence carries the residual change") {
    Rng rng(47);
    // Strongly correlated columns + tiny sweep budget.
    Eigen::MatrixXd b = test::random_matrix(rng, 30, 6);
    b.col(1) = b.col(0) + 1e-4 * b.col(1);
    const Eigen::VectorXd y = test::random_vector(rng, 30);
    LassoConfig cfg;
    cfg.max_sweeps = 1;
    cfg.tol = 1e-14;
    CHECK_THROWS_WITH_AS(select::lasso_path_single(to_sparse(b), y, 1e-6, cfg),
                         doctest::Contains("no convergence"), std::runtime_error);
}

TEST_CASE("lasso_select ranks by selection frequency with |mean| tie-break") {
    // Design with disjoint supports so per-sample fits are transparent:
    // column k fits pixel k exactly.
    const Eigen::Index m = 4, K = 4;
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, K);
    Eigen::MatrixXd targets(3, m);
    // col0 active in all samples, col1 in two, col2 in one, col3 never.
    targets << 1.0, 0.5, 0.0, 0.0,
               1.0, 0.5, 0.0, 0.0,
               1.0, 0.0, 0.9, 0.0;
    const double penalty = 0.01;  // threshold 0.02 per unit column
    const auto out = select::lasso_select(b.sparseView(), targets, penalty, 2);
    CHECK(out.selection.mode == select::Mode::Lasso);
    CHECK(out.selection.lambda[0] == doctest::Approx(1.0));
    CHECK(out.selection.lambda[1] == doctest::Approx(2.0 / 3.0));
    CHECK(out.selection.lambda[2] == doctest::Approx(1.0 / 3.0));
    CHECK(out.selection.lambda[3] == 0.0);
    CHECK(out.selection.ranked_indices[0] == 0);
    CHECK(out.selection.ranked_indices[1] == 1);
    CHECK(out.selection.k_tilde == 2);
    // Discarded fill means come from the per-sample coefficients.
    CHECK(out.selection.fill_means.size() == 2);
}

TEST_CASE("lasso frequency ties break by mean absolute coefficient") {
    const Eigen::Index m = 3;
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd targets(2, m);
    targets << 1.0, 3.0, 0.0,
               1.0, 3.0, 0.0;
    const auto out = select::lasso_select(b.sparseView(), targets, 0.01, 2);
    CHECK(out.selection.ranked_indices[0] == 1);  // same frequency, larger |mean|
    CHECK(out.selection.ranked_indices[1] == 0);
}
