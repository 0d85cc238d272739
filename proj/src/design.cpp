#include "fsens/design.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fsens/rng.hpp"

namespace fsens::design {

namespace {

void check_args(Eigen::Index n, Eigen::Index d, const std::vector<Bounds1d>& bounds) {
    if (n < 2) throw std::invalid_argument("design: need n >= 2");
    if (d < 1) throw std::invalid_argument("design: need d >= 1");
    if (static_cast<Eigen::Index>(bounds.size()) != d)
        throw std::invalid_argument("design: bounds size != d");
    for (const auto& b : bounds)
        if (!(b.hi > b.lo)) throw std::invalid_argument("design: empty bounds interval");
}

// Incremental maximin bookkeeping: squared distances, per-row minima and the
// row realizing them.
struct DistanceState {
    Eigen::MatrixXd d2;
    Eigen::VectorXd row_min;
    std::vector<Eigen::Index> row_arg;

    void init(const Eigen::MatrixXd& pts) {
        const Eigen::Index n = pts.rows();
        d2.resize(n, n);
        row_min.resize(n);
        row_arg.assign(static_cast<std::size_t>(n), 0);
        for (Eigen::Index a = 0; a < n; ++a) {
            d2(a, a) = std::numeric_limits<double>::infinity();
            for (Eigen::Index b = a + 1; b < n; ++b) {
                const double v = (pts.row(a) - pts.row(b)).squaredNorm();
                d2(a, b) = v;
                d2(b, a) = v;
            }
        }
        for (Eigen::Index a = 0; a < n; ++a) rescan_row(a);
    }

    void rescan_row(Eigen::Index a) {
        Eigen::Index arg = a == 0 ? 1 : 0;
        double best = d2(a, arg);
        for (Eigen::Index b = 0; b < d2.cols(); ++b) {
            if (b == a) continue;
            if (d2(a, b) < best) {
                best = d2(a, b);
                arg = b;
            }
        }
        row_min[a] = best;
        row_arg[static_cast<std::size_t>(a)] = arg;
    }

    // Update after rows a and b changed coordinates.
    void update_rows(const Eigen::MatrixXd& pts, Eigen::Index a, Eigen::Index b) {
        const Eigen::Index n = pts.rows();
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == a || r == b) continue;
            for (Eigen::Index t : {a, b}) {
                const double v = (pts.row(r) - pts.row(t)).squaredNorm();
                const double old = d2(r, t);
                d2(r, t) = v;
                d2(t, r) = v;
                if (v < row_min[r]) {
                    row_min[r] = v;
                    row_arg[static_cast<std::size_t>(r)] = t;
                } else if (row_arg[static_cast<std::size_t>(r)] == t && v > old) {
                    rescan_row(r);
                }
            }
        }
        const double vab = (pts.row(a) - pts.row(b)).squaredNorm();
        d2(a, b) = vab;
        d2(b, a) = vab;
        rescan_row(a);
        rescan_row(b);
    }

    double criterion() const { return std::sqrt(row_min.minCoeff()); }
};

}  // namespace

std::vector<Bounds1d> unit_bounds(Eigen::Index d) {
    return std::vector<Bounds1d>(static_cast<std::size_t>(d), Bounds1d{0.0, 1.0});
}

Eigen::MatrixXd scale_to_bounds(const Eigen::MatrixXd& unit, const std::vector<Bounds1d>& bounds) {
    Eigen::MatrixXd out(unit.rows(), unit.cols());
    for (Eigen::Index j = 0; j < unit.cols(); ++j) {
        const auto& b = bounds[static_cast<std::size_t>(j)];
        out.col(j) = b.lo + (b.hi - b.lo) * unit.col(j).array();
    }
    return out;
}

double min_pairwise_distance(const Eigen::MatrixXd& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < pts.rows(); ++a)
        for (Eigen::Index b = a + 1; b < pts.rows(); ++b)
            best = std::min(best, (pts.row(a) - pts.row(b)).norm());
    return best;
}

Design lhs_random(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                  const std::vector<Bounds1d>& bounds, bool midpoint_cells) {
    check_args(n, d, bounds);
    Rng rng(seed);
    Design out;
    out.seed = seed;
    out.bounds = bounds;
    out.unit.resize(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto perm = rng.permutation(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double offset = midpoint_cells ? 0.5 : rng.uniform();
            out.unit(i, j) = (double(perm[static_cast<std::size_t>(i)]) + offset) / double(n);
        }
    }
    out.scaled = scale_to_bounds(out.unit, bounds);
    out.criterion = min_pairwise_distance(out.unit);
    return out;
}

Design lhs_maximin(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                   const std::vector<Bounds1d>& bounds, const SaConfig& sa) {
    Design start = lhs_random(n, d, seed, bounds, sa.midpoint_cells);
    Rng rng(seed ^ 0xa5a5a5a5deadbeefULL);

    Eigen::MatrixXd pts = start.unit;
    DistanceState state;
    state.init(pts);
    double current = state.criterion();

    Eigen::MatrixXd best_pts = pts;
    double best = current;

    // T0 from the spread of the initial pairwise distances.
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) {
            const double v = std::sqrt(state.d2(a, b));
            dmin = std::min(dmin, v);
            dmax = std::max(dmax, v);
        }
    double temp = std::max(dmax - dmin, 1e-12);

    const long cool_every = sa.cool_every_per_n * long(n);
    const long stall_limit = sa.stall_per_nd * long(n) * long(d);
    long proposals = 0, since_improvement = 0;

    while (proposals < sa.max_proposals && since_improvement < stall_limit) {
        ++proposals;
        const Eigen::Index j = static_cast<Eigen::Index>(rng.below(std::uint64_t(d)));
        const Eigen::Index a = static_cast<Eigen::Index>(rng.below(std::uint64_t(n)));
        Eigen::Index b = static_cast<Eigen::Index>(rng.below(std::uint64_t(n - 1)));
        if (b >= a) ++b;

        std::swap(pts(a, j), pts(b, j));
        state.update_rows(pts, a, b);
        const double cand = state.criterion();
        const double delta = cand - current;

        bool accept = delta > 0.0;
        if (!accept) accept = rng.uniform() < std::exp(delta / temp);
        if (accept) {
            current = cand;
            if (current > best) {
                best = current;
                best_pts = pts;
                since_improvement = 0;
            } else {
                ++since_improvement;
            }
        } else {
            std::swap(pts(a, j), pts(b, j));
            state.update_rows(pts, a, b);
            ++since_improvement;
        }
        if (proposals % cool_every == 0) temp *= sa.cooling;
    }

    Design out;
    out.seed = seed;
    out.bounds = bounds;
    out.unit = std::move(best_pts);
    out.scaled = scale_to_bounds(out.unit, bounds);
    out.criterion = best;
    return out;
}

Design uniform_sample(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                      const std::vector<Bounds1d>& bounds) {
    check_args(n, d, bounds);
    Rng rng(seed);
    Design out;
    out.seed = seed;
    out.bounds = bounds;
    out.unit.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out.unit(i, j) = rng.uniform();
    out.scaled = scale_to_bounds(out.unit, bounds);
    out.criterion = min_pairwise_distance(out.unit);
    return out;
}

}  // namespace fsens::design
