#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsens/design.hpp"
#include "support/test_util.hpp"

using namespace fsens;
using design::Design;
using design::SaConfig;

namespace {

bool is_lhs(const Eigen::MatrixXd& unit) {
    const Eigen::Index n = unit.rows();
    for (Eigen::Index j = 0; j < unit.cols(); ++j) {
        std::vector<bool> seen(static_cast<std::size_t>(n), false);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto cell = static_cast<std::size_t>(std::floor(unit(i, j) * double(n)));
            if (cell >= seen.size() || seen[cell]) return false;
            seen[cell] = true;
        }
    }
    return true;
}

SaConfig light_sa() {
    SaConfig sa;
    sa.max_proposals = 3000;
    sa.stall_per_nd = 20;
    return sa;
}

}  // namespace

TEST_CASE("two-point one-dimensional LHS lands on cell midpoints") {
    const Design d = design::lhs_random(2, 1, 5, design::unit_bounds(1), true);
    std::vector<double> vals{d.unit(0, 0), d.unit(1, 0)};
    std::sort(vals.begin(), vals.end());
    CHECK(vals[0] == doctest::Approx(0.25));
    CHECK(vals[1] == doctest::Approx(0.75));
}

TEST_CASE("LHS stratification holds before and after annealing") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const Design plain = design::lhs_random(16, 3, seed, design::unit_bounds(3), false);
        CHECK(is_lhs(plain.unit));
        const Design opt = design::lhs_maximin(16, 3, seed, design::unit_bounds(3), light_sa());
        CHECK(is_lhs(opt.unit));
    }
}

TEST_CASE("annealing never loses to its own start (100 seeded trials)") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SaConfig sa = light_sa();
        const Design start = design::lhs_random(8, 2, seed, design::unit_bounds(2), sa.midpoint_cells);
        const Design out = design::lhs_maximin(8, 2, seed, design::unit_bounds(2), sa);
        CHECK(out.criterion >= start.criterion - 1e-12);
        CHECK(out.criterion ==
              doctest::Approx(design::min_pairwise_distance(out.unit)).epsilon(1e-12));
    }
}

TEST_CASE("designs are reproducible under a fixed seed") {
    const auto b = design::unit_bounds(4);
    const Design a1 = design::lhs_maximin(12, 4, 77, b, light_sa());
    const Design a2 = design::lhs_maximin(12, 4, 77, b, light_sa());
    CHECK((a1.unit - a2.unit).cwiseAbs().maxCoeff() == 0.0);

    const Design u1 = design::uniform_sample(50, 4, 99, b);
    const Design u2 = design::uniform_sample(50, 4, 99, b);
    CHECK((u1.unit - u2.unit).cwiseAbs().maxCoeff() == 0.0);
    const Design u3 = design::uniform_sample(50, 4, 100, b);
    CHECK((u1.unit - u3.unit).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("uniform sample means obey the law-of-large-numbers band") {
    const Eigen::Index n = 10000;
    const Design u = design::uniform_sample(n, 3, 2025, design::unit_bounds(3));
    const double band = 3.0 / std::sqrt(12.0 * double(n));
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(u.unit.col(j).mean() - 0.5) < band);
}

TEST_CASE("scaled view respects the Campbell2D box and inverts exactly") {
    std::vector<Bounds1d> campbell(8, Bounds1d{-1.0, 5.0});
    const Design d = design::uniform_sample(64, 8, 11, campbell);
    CHECK(d.scaled.minCoeff() >= -1.0);
    CHECK(d.scaled.maxCoeff() <= 5.0);
    for (Eigen::Index j = 0; j < 8; ++j) {
        const Eigen::VectorXd back = (d.scaled.col(j).array() + 1.0) / 6.0;
        CHECK((back - d.unit.col(j)).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS(design::lhs_random(1, 2, 0, design::unit_bounds(2), true));
    CHECK_THROWS(design::uniform_sample(10, 2, 0, design::unit_bounds(3)));
    std::vector<Bounds1d> bad{{1.0, 1.0}};
    CHECK_THROWS(design::uniform_sample(10, 1, 0, bad));
}
