#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fsens/gp.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace fsens;
using gp::GpConfig;
using gp::GpModel;

namespace {

std::vector<Bounds1d> unit_box(int d) { return std::vector<Bounds1d>(std::size_t(d), Bounds1d{0, 1}); }

// Smooth 2-D test target.
double smooth_fn(double a, double b) {
    return std::sin(3.0 * a) + 0.5 * std::cos(5.0 * b) + a * b;
}

}  // namespace

TEST_CASE("matern 5/2 kernel basics") {
    Eigen::VectorXd x(3), y(3), theta(3);
    x << 0.1, 0.5, 0.9;
    y << 0.3, 0.2, 0.8;
    theta << 0.5, 1.0, 2.0;
    CHECK(gp::kernel_matern52(x, x, theta, 2.5) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(gp::kernel_matern52(x, y, theta, 1.3) ==
          doctest::Approx(gp::kernel_matern52(y, x, theta, 1.3)).epsilon(1e-14));
    Eigen::VectorXd bad = theta;
    bad[1] = 0.0;
    CHECK_THROWS(gp::kernel_matern52(x, y, bad, 1.0));
    CHECK_THROWS(gp::kernel_matern52(x, y.head(2), theta, 1.0));
}

TEST_CASE("kernel matrices are positive semidefinite (eigensolver oracle)") {
    Rng rng(61);
    const Eigen::MatrixXd pts = test::random_matrix(rng, 20, 4, 0, 1);
    Eigen::VectorXd theta = test::random_vector(rng, 4, 0.2, 2.0);
    Eigen::MatrixXd k(20, 20);
    for (int a = 0; a < 20; ++a)
        for (int b = 0; b < 20; ++b)
            k(a, b) = gp::kernel_matern52(pts.row(a).transpose(), pts.row(b).transpose(), theta, 1.7);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("constant targets collapse to the constant predictor") {
    Rng rng(62);
    const Eigen::MatrixXd x = test::random_matrix(rng, 12, 2, 0, 1);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 4.2);
    const GpModel m = gp::fit_gp(x, y, unit_box(2));
    CHECK(m.constant_model);
    Eigen::VectorXd mean, var;
    gp::predict(m, test::random_matrix(rng, 5, 2, 0, 1), mean, var);
    CHECK((mean.array() - 4.2).abs().maxCoeff() < 1e-12);
    CHECK(var.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense sample of a linear function is predicted accurately") {
    const int n = 30;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = double(i) / (n - 1);
        y[i] = 3.0 * x(i, 0) - 1.0;
    }
    const GpModel m = gp::fit_gp(x, y, unit_box(1));
    Eigen::MatrixXd q(4, 1);
    q << 0.05, 0.37, 0.61, 0.93;
    const Eigen::VectorXd mean = gp::predict_mean(m, q);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(mean[i] - (3.0 * q(i, 0) - 1.0)) < 1e-2);
}

TEST_CASE("optimizer never returns worse than its seeds") {
    Rng rng(63);
    const int n = 25, d = 3;
    const Eigen::MatrixXd x = test::random_matrix(rng, n, d, 0, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = smooth_fn(x(i, 0), x(i, 1)) + 0.3 * x(i, 2);
    const GpModel m = gp::fit_gp(x, y, unit_box(d));
    REQUIRE(!m.diag.seed_nll.empty());
    for (double seed_val : m.diag.seed_nll) CHECK(m.diag.nll <= seed_val + 1e-9);
}

TEST_CASE("interpolation at training points") {
    Rng rng(64);
    const int n = 25, d = 2;
    const Eigen::MatrixXd x = test::random_matrix(rng, n, d, 0, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = smooth_fn(x(i, 0), x(i, 1));
    const GpModel m = gp::fit_gp(x, y, unit_box(d));
    const Eigen::VectorXd mean = gp::predict_mean(m, x);
    const double range = y.maxCoeff() - y.minCoeff();
    CHECK((mean - y).cwiseAbs().maxCoeff() < 1e-4 * range);
}

TEST_CASE("far queries revert to the prior") {
    Rng rng(65);
    const int n = 15;
    const Eigen::MatrixXd x = test::random_matrix(rng, n, 2, 0, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = smooth_fn(x(i, 0), x(i, 1));
    const GpModel m = gp::fit_gp(x, y, unit_box(2));

    Eigen::MatrixXd far(1, 2);
    far << 1e6, -1e6;
    Eigen::VectorXd mean, var;
    gp::predict(m, far, mean, var);
    CHECK(mean[0] == doctest::Approx(m.y_mean + m.y_scale * m.beta).epsilon(1e-9));
    CHECK(var[0] == doctest::Approx(m.y_scale * m.y_scale * m.sigma2_f).epsilon(1e-9));
}

TEST_CASE("predictive variance is clamped to [0, sigma2_f + nugget]") {
    Rng rng(66);
    const int n = 20;
    const Eigen::MatrixXd x = test::random_matrix(rng, n, 2, 0, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = smooth_fn(x(i, 0), x(i, 1));
    const GpModel m = gp::fit_gp(x, y, unit_box(2));

    const Eigen::MatrixXd q = test::random_matrix(rng, 1000, 2, -0.5, 1.5);
    Eigen::VectorXd mean, var;
    gp::predict(m, q, mean, var);
    const double cap = m.y_scale * m.y_scale * m.sigma2_f * (1.0 + m.nugget) + 1e-12;
    CHECK(var.minCoeff() >= 0.0);
    CHECK(var.maxCoeff() <= cap);
}

TEST_CASE("analytic likelihood gradient matches central differences") {
    Rng rng(67);
    for (int trial = 0; trial < 3; ++trial) {
        const int n = 12, d = 3;
        const Eigen::MatrixXd x = test::random_matrix(rng, n, d, 0, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = smooth_fn(x(i, 0), x(i, 1)) + 0.2 * x(i, 2) * x(i, 2);
        const Eigen::VectorXd ystd = (y.array() - y.mean()) / std::sqrt(y.squaredNorm() / n);
        const gp::GpObjective obj(x, ystd, 1e-8);

        const Eigen::VectorXd log_theta = test::random_vector(rng, d, std::log(0.3), std::log(2.0));
        Eigen::VectorXd grad;
        obj.eval(log_theta, &grad);
        const Eigen::VectorXd fd = test::central_diff(
            [&](const Eigen::VectorXd& z) { return obj.eval(z); }, log_theta, 1e-5);
        for (int j = 0; j < d; ++j) {
            const double scale = std::max({std::abs(fd[j]), std::abs(grad[j]), 1e-6});
            CHECK(std::abs(grad[j] - fd[j]) / scale < 1e-4);
        }
    }
}

TEST_CASE("gradient norm is reported and solution bound status is flagged") {
    Rng rng(68);
    const int n = 20, d = 2;
    const Eigen::MatrixXd x = test::random_matrix(rng, n, d, 0, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = smooth_fn(x(i, 0), x(i, 1));
    GpConfig cfg;
    const GpModel m = gp::fit_gp(x, y, unit_box(d), cfg);
    // The line search resolves objective differences down to ~eps*|nll|, so
    // the projected gradient either reaches the tolerance or stalls slightly
    // above it; either way the diagnostic must be reported.
    CHECK(std::isfinite(m.diag.grad_norm));
    const bool converged = m.diag.grad_norm < 1e-3;
    CHECK((converged || m.diag.at_bound));
}

TEST_CASE("nugget escalation failure reports the conditioning problem") {
    Eigen::MatrixXd x(4, 1);
    x << 0.5, 0.5, 0.5, 0.5;  // exactly duplicated rows
    Eigen::VectorXd y(4);
    y << 0.0, 1.0, -1.0, 2.0;
    GpConfig cfg;
    cfg.nugget_rel = 1e-30;
    cfg.nugget_max_rel = 1e-28;
    cfg.multistarts = 1;
    cfg.max_iter = 5;
    CHECK_THROWS_WITH_AS(gp::fit_gp(x, y, unit_box(1), cfg), doctest::Contains("Cholesky"),
                         std::runtime_error);
}

TEST_CASE("argument validation") {
    Rng rng(69);
    const Eigen::MatrixXd x = test::random_matrix(rng, 5, 2, 0, 1);
    const Eigen::VectorXd y = test::random_vector(rng, 5);
    CHECK_THROWS(gp::fit_gp(x.topRows(1), y.head(1), unit_box(2)));
    CHECK_THROWS(gp::fit_gp(x, y.head(4), unit_box(2)));
    CHECK_THROWS(gp::fit_gp(x, y, unit_box(3)));
    GpConfig bad;
    bad.theta_lo = -1.0;
    CHECK_THROWS(gp::fit_gp(x, y, unit_box(2), bad));
}
