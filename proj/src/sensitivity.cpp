#include "fsens/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsens/design.hpp"
#include "fsens/rng.hpp"

namespace fsens::sensitivity {

namespace {

// Pairwise (cascade) summation for reproducible deterministic reductions.
double pairwise_sum(const double* v, Eigen::Index n) {
    if (n <= 8) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const Eigen::Index half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double mean_of(const Eigen::VectorXd& v) { return pairwise_sum(v.data(), v.size()) / double(v.size()); }

double percentile(std::vector<double>& v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (double(v.size()) - 1.0) * p;
    const auto i = static_cast<std::size_t>(h);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - double(i)) * (v[i + 1] - v[i]);
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> base_samples(Eigen::Index n0, Eigen::Index d,
                                                         std::uint64_t seed,
                                                         SobolConfig::Sampling sampling,
                                                         const std::vector<Bounds1d>& bounds) {
    if (sampling == SobolConfig::Sampling::Lhs) {
        design::Design a = design::lhs_random(n0, d, seed, bounds, false);
        design::Design b = design::lhs_random(n0, d, seed + 1, bounds, false);
        return {a.scaled, b.scaled};
    }
    design::Design a = design::uniform_sample(n0, d, seed, bounds);
    design::Design b = design::uniform_sample(n0, d, seed + 1, bounds);
    return {a.scaled, b.scaled};
}

PickFreezeValues evaluate_pick_freeze(const BatchFn& model, const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b) {
    const Eigen::Index n0 = a.rows(), d = a.cols();
    PickFreezeValues vals;
    vals.f_a = model(a);
    vals.f_b = model(b);
    if (vals.f_a.size() != n0 || vals.f_b.size() != n0)
        throw std::runtime_error("saltelli_sobol: model returned wrong batch size");
    vals.f_ab.resize(n0, d);
    Eigen::MatrixXd ab = a;
    for (Eigen::Index i = 0; i < d; ++i) {
        ab.col(i) = b.col(i);
        vals.f_ab.col(i) = model(ab);
        ab.col(i) = a.col(i);
    }
    return vals;
}

void estimate_on_rows(const PickFreezeValues& vals, const std::vector<Eigen::Index>& rows,
                      Eigen::VectorXd& first, Eigen::VectorXd& total, bool throw_on_degenerate) {
    const Eigen::Index n0 = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index d = vals.f_ab.cols();
    Eigen::VectorXd fa(n0), fb(n0);
    for (Eigen::Index r = 0; r < n0; ++r) {
        fa[r] = vals.f_a[rows[std::size_t(r)]];
        fb[r] = vals.f_b[rows[std::size_t(r)]];
    }
    const double mean_all = 0.5 * (mean_of(fa) + mean_of(fb));
    Eigen::VectorXd sq(2 * n0);
    sq.head(n0) = (fa.array() - mean_all).square();
    sq.tail(n0) = (fb.array() - mean_all).square();
    const double var = pairwise_sum(sq.data(), sq.size()) / double(2 * n0);
    if (var <= 0.0) {
        if (throw_on_degenerate)
            throw std::runtime_error("saltelli_sobol: degenerate output (zero variance)");
        first = Eigen::VectorXd::Zero(d);
        total = Eigen::VectorXd::Zero(d);
        return;
    }

    first.resize(d);
    total.resize(d);
    Eigen::VectorXd term(n0);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index r = 0; r < n0; ++r) {
            const double fab = vals.f_ab(rows[std::size_t(r)], i);
            term[r] = fb[r] * (fab - fa[r]);
        }
        first[i] = pairwise_sum(term.data(), n0) / double(n0) / var;
        for (Eigen::Index r = 0; r < n0; ++r) {
            const double diff = fa[r] - vals.f_ab(rows[std::size_t(r)], i);
            term[r] = diff * diff;
        }
        total[i] = pairwise_sum(term.data(), n0) / (2.0 * double(n0)) / var;
    }
}

SobolEstimate estimate_from_values(const PickFreezeValues& vals, std::uint64_t bootstrap_seed,
                                   const SobolConfig& cfg) {
    const Eigen::Index n0 = vals.f_a.size();
    const Eigen::Index d = vals.f_ab.cols();
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n0));
    for (Eigen::Index r = 0; r < n0; ++r) all[std::size_t(r)] = r;

    SobolEstimate est;
    est.n0 = n0;
    estimate_on_rows(vals, all, est.first_order, est.total, true);

    if (cfg.bootstrap > 0) {
        Rng rng(bootstrap_seed);
        std::vector<std::vector<double>> first_reps(static_cast<std::size_t>(d));
        std::vector<std::vector<double>> total_reps(static_cast<std::size_t>(d));
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n0));
        Eigen::VectorXd f, t;
        for (int rep = 0; rep < cfg.bootstrap; ++rep) {
            for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(std::uint64_t(n0)));
            estimate_on_rows(vals, rows, f, t, false);
            for (Eigen::Index i = 0; i < d; ++i) {
                first_reps[std::size_t(i)].push_back(f[i]);
                total_reps[std::size_t(i)].push_back(t[i]);
            }
        }
        const double alpha = 1.0 - cfg.ci_level;
        est.first_ci.resize(d, 2);
        est.total_ci.resize(d, 2);
        for (Eigen::Index i = 0; i < d; ++i) {
            est.first_ci(i, 0) = percentile(first_reps[std::size_t(i)], alpha / 2.0);
            est.first_ci(i, 1) = percentile(first_reps[std::size_t(i)], 1.0 - alpha / 2.0);
            est.total_ci(i, 0) = percentile(total_reps[std::size_t(i)], alpha / 2.0);
            est.total_ci(i, 1) = percentile(total_reps[std::size_t(i)], 1.0 - alpha / 2.0);
        }
    }
    return est;
}

SobolEstimate saltelli_sobol(const BatchFn& model, const std::vector<Bounds1d>& bounds,
                             Eigen::Index n0, std::uint64_t seed, const SobolConfig& cfg) {
    if (n0 < 100) throw std::invalid_argument("saltelli_sobol: n0 must be >= 100");
    const Eigen::Index d = static_cast<Eigen::Index>(bounds.size());
    auto [a, b] = base_samples(n0, d, seed, cfg.sampling, bounds);
    const PickFreezeValues vals = evaluate_pick_freeze(model, a, b);
    return estimate_from_values(vals, seed ^ 0xb007574a95eed001ULL, cfg);
}

GsiEstimate gsi_from_components(const Eigen::MatrixXd& per_comp_first,
                                const Eigen::MatrixXd& per_comp_total,
                                const Eigen::VectorXd& eigenvalues, double discarded_inertia) {
    const Eigen::Index n_pc = per_comp_first.rows();
    if (per_comp_total.rows() != n_pc || per_comp_total.cols() != per_comp_first.cols())
        throw std::invalid_argument("gsi_from_components: table shape mismatch");
    if (eigenvalues.size() != n_pc)
        throw std::invalid_argument("gsi_from_components: eigenvalue count != component count");
    if (eigenvalues.minCoeff() < 0.0)
        throw std::invalid_argument("gsi_from_components: negative eigenvalue");
    const double denom = eigenvalues.sum() + discarded_inertia;
    if (!(denom > 0.0)) throw std::invalid_argument("gsi_from_components: all eigenvalues zero");

    GsiEstimate out;
    out.per_comp_first = per_comp_first;
    out.per_comp_total = per_comp_total;
    out.weights = eigenvalues / denom;
    out.first_order = per_comp_first.transpose() * out.weights;
    out.total = per_comp_total.transpose() * out.weights;
    return out;
}

double gsi_gram(const Eigen::MatrixXd& cov_conditional, const Eigen::MatrixXd& cov_total,
                const Eigen::MatrixXd& gram) {
    const Eigen::Index k = gram.rows();
    if (gram.cols() != k || cov_conditional.rows() != k || cov_conditional.cols() != k ||
        cov_total.rows() != k || cov_total.cols() != k)
        throw std::invalid_argument("gsi_gram: all matrices must be K x K");
    // Trace(A G) = sum_{k,l} A_{kl} G_{kl} for symmetric A, G.
    const double num = (cov_conditional.array() * gram.array()).sum();
    const double den = (cov_total.array() * gram.array()).sum();
    if (den == 0.0) throw std::invalid_argument("gsi_gram: zero denominator trace");
    return num / den;
}

PointwiseSobol pointwise_sobol(const MapFn& model, const std::vector<Bounds1d>& bounds,
                               Eigen::Index rows, Eigen::Index cols, Eigen::Index n0,
                               std::uint64_t seed, SobolConfig::Sampling sampling) {
    const Eigen::Index d = static_cast<Eigen::Index>(bounds.size());
    auto [a, b] = base_samples(n0, d, seed, sampling, bounds);

    using Mat = Eigen::MatrixXd;
    Mat sum_ab = Mat::Zero(rows, cols), sum_sq = Mat::Zero(rows, cols);
    std::vector<Mat> acc_first(static_cast<std::size_t>(d), Mat::Zero(rows, cols));
    std::vector<Mat> acc_total(static_cast<std::size_t>(d), Mat::Zero(rows, cols));

    Eigen::RowVectorXd xi(d);
    for (Eigen::Index r = 0; r < n0; ++r) {
        const Mat fa = model(a.row(r));
        const Mat fb = model(b.row(r));
        if (fa.rows() != rows || fa.cols() != cols)
            throw std::runtime_error("pointwise_sobol: model returned wrong map shape");
        sum_ab += fa + fb;
        sum_sq += fa.cwiseProduct(fa) + fb.cwiseProduct(fb);
        for (Eigen::Index i = 0; i < d; ++i) {
            xi = a.row(r);
            xi[i] = b(r, i);
            const Mat fab = model(xi);
            acc_first[std::size_t(i)] += fb.cwiseProduct(fab - fa);
            acc_total[std::size_t(i)] += (fa - fab).cwiseProduct(fa - fab);
        }
    }

    const double inv2n = 1.0 / double(2 * n0);
    Mat mean = sum_ab * inv2n;
    Mat var = sum_sq * inv2n - mean.cwiseProduct(mean);

    PointwiseSobol out;
    out.n0 = n0;
    out.defined.resize(rows, cols);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < d; ++i) {
        out.first_order.push_back(Mat::Constant(rows, cols, nan));
        out.total.push_back(Mat::Constant(rows, cols, nan));
    }
    for (Eigen::Index rr = 0; rr < rows; ++rr)
        for (Eigen::Index cc = 0; cc < cols; ++cc) {
            const bool ok = var(rr, cc) > 0.0;
            out.defined(rr, cc) = ok ? 1 : 0;
            if (!ok) continue;
            for (Eigen::Index i = 0; i < d; ++i) {
                out.first_order[std::size_t(i)](rr, cc) =
                    acc_first[std::size_t(i)](rr, cc) / double(n0) / var(rr, cc);
                out.total[std::size_t(i)](rr, cc) =
                    acc_total[std::size_t(i)](rr, cc) * inv2n / var(rr, cc);
            }
        }
    return out;
}

}  // namespace fsens::sensitivity
