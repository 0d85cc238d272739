#include "fsens/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fsens::select {

namespace {

std::vector<Eigen::Index> rank_by_weight(const Eigen::VectorXd& weight,
                                         const Eigen::VectorXd& tiebreak) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(weight.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index(0));
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (weight[a] != weight[b]) return weight[a] > weight[b];
        if (tiebreak.size() && tiebreak[a] != tiebreak[b]) return tiebreak[a] > tiebreak[b];
        return a < b;
    });
    return idx;
}

Eigen::VectorXd discarded_column_means(const Eigen::MatrixXd& coeffs,
                                       const std::vector<Eigen::Index>& ranked,
                                       Eigen::Index k_tilde) {
    const Eigen::Index K = coeffs.cols();
    Eigen::VectorXd fill(K - k_tilde);
    for (Eigen::Index j = k_tilde; j < K; ++j)
        fill[j - k_tilde] = coeffs.col(ranked[static_cast<std::size_t>(j)]).mean();
    return fill;
}

}  // namespace

SelectionResult energy_select(const Eigen::MatrixXd& coeffs, const EnergyOptions& opt) {
    const Eigen::Index n = coeffs.rows(), K = coeffs.cols();
    if (n < 1 || K < 1) throw std::invalid_argument("energy_select: empty coefficient matrix");
    const bool have_p = opt.p > 0.0;
    const bool have_k = opt.k_target >= 1;
    if (have_p == have_k)
        throw std::invalid_argument("energy_select: give exactly one of p or k_target");
    if (have_p && opt.p > 1.0) throw std::invalid_argument("energy_select: p must be in (0,1]");
    if (have_k && opt.k_target > K)
        throw std::invalid_argument("energy_select: k_target exceeds coefficient count");

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(K);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double total = coeffs.row(i).squaredNorm();
        if (total <= 0.0)
            throw std::invalid_argument(
                "energy_select: sample " + std::to_string(i) +
                " has zero energy (all-zero map); center or segregate such maps before selection");
        lambda += (coeffs.row(i).array().square() / total).matrix().transpose();
    }
    lambda /= double(n);

    SelectionResult res;
    res.mode = Mode::Energy;
    res.lambda = lambda;
    res.ranked_indices = rank_by_weight(lambda, Eigen::VectorXd());

    if (have_k) {
        res.k_tilde = opt.k_target;
    } else {
        double cum = 0.0;
        Eigen::Index kt = 0;
        while (kt < K) {
            const double next = cum + lambda[res.ranked_indices[static_cast<std::size_t>(kt)]];
            if (next > opt.p) break;
            cum = next;
            ++kt;
        }
        if (kt == 0)
            throw std::invalid_argument("energy_select: threshold p=" + std::to_string(opt.p) +
                                        " is below the largest single-coefficient energy; raise p "
                                        "or use k_target");
        res.k_tilde = kt;
    }
    res.fill_means = discarded_column_means(coeffs, res.ranked_indices, res.k_tilde);
    return res;
}

Eigen::VectorXd lasso_path_single(const Eigen::SparseMatrix<double>& design,
                                  const Eigen::VectorXd& target, double penalty,
                                  const LassoConfig& cfg) {
    const Eigen::Index m = design.rows(), K = design.cols();
    if (target.size() != m) throw std::invalid_argument("lasso: target length != design rows");
    if (penalty < 0.0) throw std::invalid_argument("lasso: negative penalty");

    Eigen::VectorXd col_sq(K);
    for (Eigen::Index k = 0; k < K; ++k) col_sq[k] = design.col(k).squaredNorm();
    const double threshold = penalty * double(m) / 2.0;

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd residual = target;
    double max_change = 0.0;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        max_change = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
            if (col_sq[k] == 0.0) continue;
            double rho = alpha[k] * col_sq[k];
            for (Eigen::SparseMatrix<double>::InnerIterator it(design, k); it; ++it)
                rho += it.value() * residual[it.row()];
            double next = 0.0;
            if (rho > threshold)
                next = (rho - threshold) / col_sq[k];
            else if (rho < -threshold)
                next = (rho + threshold) / col_sq[k];
            const double delta = next - alpha[k];
            if (delta != 0.0) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(design, k); it; ++it)
                    residual[it.row()] -= delta * it.value();
                alpha[k] = next;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < cfg.tol) return alpha;
    }
    throw std::runtime_error("lasso: no convergence after " + std::to_string(cfg.max_sweeps) +
                             " sweeps (last max coefficient change " + std::to_string(max_change) +
                             ")");
}

LassoSelection lasso_select(const Eigen::SparseMatrix<double>& design,
                            const Eigen::MatrixXd& targets, double penalty,
                            Eigen::Index k_target, const LassoConfig& cfg) {
    const Eigen::Index n = targets.rows(), K = design.cols();
    if (targets.cols() != design.rows())
        throw std::invalid_argument("lasso_select: target width != design rows");
    if (k_target < 1 || k_target > K)
        throw std::invalid_argument("lasso_select: k_target out of range");

    Eigen::MatrixXd coef(n, K);
    for (Eigen::Index i = 0; i < n; ++i)
        coef.row(i) = lasso_path_single(design, targets.row(i).transpose(), penalty, cfg).transpose();

    Eigen::VectorXd freq = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd mean_abs = Eigen::VectorXd::Zero(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(coef(i, k)) > cfg.zero_tol) freq[k] += 1.0;
            mean_abs[k] += std::abs(coef(i, k));
        }
    }
    freq /= double(n);
    mean_abs /= double(n);
    if (freq.maxCoeff() == 0.0)
        throw std::runtime_error("lasso_select: empty selection (penalty shrinks every coefficient "
                                 "to zero); decrease the penalty");

    LassoSelection out;
    out.coefficients = std::move(coef);
    out.selection.mode = Mode::Lasso;
    out.selection.lambda = freq;
    out.selection.ranked_indices = rank_by_weight(freq, mean_abs);
    out.selection.k_tilde = k_target;
    out.selection.fill_means =
        discarded_column_means(out.coefficients, out.selection.ranked_indices, k_target);
    return out;
}

}  // namespace fsens::select
