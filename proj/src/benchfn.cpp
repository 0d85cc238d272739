#include "fsens/benchfn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsens/rng.hpp"

namespace fsens::benchfn {

SpatialMap campbell2d(const Eigen::VectorXd& x, const GridSpec& grid) {
    if (x.size() != Campbell2dSpec::dim)
        throw std::invalid_argument("campbell2d: expected 8 inputs, got " + std::to_string(x.size()));
    if (x[0] == 0.0 || x[4] == 0.0)
        throw std::invalid_argument("campbell2d: x1 and x5 must be nonzero (they divide the "
                                    "Gaussian bump widths)");

    Eigen::MatrixXd v(grid.rows, grid.cols);
    const double w1 = 60.0 * x[0] * x[0];
    const double w2 = 40.0 * x[4] * x[4];
    for (Eigen::Index r = 0; r < grid.rows; ++r) {
        const double z2 = grid.z2_at(r);
        for (Eigen::Index c = 0; c < grid.cols; ++c) {
            const double z1 = grid.z1_at(c);
            const double a = 0.8 * z1 + 0.2 * z2 - 10.0 * x[1];
            const double b = 0.4 * z1 + 0.6 * z2 - 20.0 * x[5];
            v(r, c) = x[0] * std::exp(-a * a / w1) +
                      (x[1] + x[3]) * std::exp((0.5 * z1 + 0.5 * z2) * x[0] / 500.0) +
                      x[4] * (x[2] - 2.0) * std::exp(-b * b / w2) +
                      (x[5] + x[7]) * std::exp((0.3 * z1 + 0.7 * z2) * x[6] / 250.0);
        }
    }
    return SpatialMap(std::move(v), grid.domain);
}

Ensemble campbell2d_ensemble(const Eigen::MatrixXd& design, const GridSpec& grid) {
    if (design.cols() != Campbell2dSpec::dim)
        throw std::invalid_argument("campbell2d_ensemble: design must have 8 columns");
    std::vector<SpatialMap> maps;
    maps.reserve(static_cast<std::size_t>(design.rows()));
    for (Eigen::Index i = 0; i < design.rows(); ++i)
        maps.push_back(campbell2d(design.row(i).transpose(), grid));
    return Ensemble(design, std::move(maps), Campbell2dSpec::bounds());
}

namespace {

void check_pairs(const std::vector<SpatialMap>& truth, const std::vector<SpatialMap>& pred) {
    if (truth.empty() || truth.size() != pred.size())
        throw std::invalid_argument("metrics: truth/pred length mismatch");
    const GridSpec g = truth.front().grid();
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (!(truth[i].grid() == g) || !(pred[i].grid() == g))
            throw std::invalid_argument("metrics: map " + std::to_string(i) +
                                        " does not share the common grid");
}

}  // namespace

SpatialMap rmse_map(const std::vector<SpatialMap>& truth, const std::vector<SpatialMap>& pred) {
    check_pairs(truth, pred);
    const GridSpec g = truth.front().grid();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.rows, g.cols);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Eigen::MatrixXd diff = truth[i].values() - pred[i].values();
        acc += diff.cwiseProduct(diff);
    }
    acc /= double(truth.size());
    return SpatialMap(acc.cwiseSqrt(), g.domain);
}

double q2(const std::vector<SpatialMap>& truth, const std::vector<SpatialMap>& pred) {
    check_pairs(truth, pred);
    const GridSpec g = truth.front().grid();
    const double n = double(truth.size());
    Eigen::MatrixXd mse = Eigen::MatrixXd::Zero(g.rows, g.cols);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(g.rows, g.cols);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(g.rows, g.cols);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Eigen::MatrixXd diff = truth[i].values() - pred[i].values();
        mse += diff.cwiseProduct(diff);
        sum += truth[i].values();
        sum_sq += truth[i].values().cwiseProduct(truth[i].values());
    }
    mse /= n;
    const Eigen::MatrixXd mean = sum / n;
    const Eigen::MatrixXd var = sum_sq / n - mean.cwiseProduct(mean);
    const double var_total = var.mean();
    if (!(var_total > 0.0))
        throw std::invalid_argument("q2: zero total spatial variance of the truth sample");
    return 1.0 - mse.mean() / var_total;
}

double quantile7(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile7: empty sample");
    std::sort(values.begin(), values.end());
    const double h = (double(values.size()) - 1.0) * p;
    const auto i = static_cast<std::size_t>(h);
    if (i + 1 >= values.size()) return values.back();
    return values[i] + (h - double(i)) * (values[i + 1] - values[i]);
}

std::vector<std::vector<Eigen::Index>> fold_partition(Eigen::Index n, int k, std::uint64_t seed) {
    if (k < 2 || k > n) throw std::invalid_argument("fold_partition: need 2 <= k <= n");
    Rng rng(seed);
    const auto perm = rng.permutation(static_cast<std::size_t>(n));
    std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < perm.size(); ++i)
        folds[i % static_cast<std::size_t>(k)].push_back(static_cast<Eigen::Index>(perm[i]));
    return folds;
}

CvReport kfold_tune(const Ensemble& ensemble, const std::vector<pipeline::PipelineConfig>& grid,
                    int k, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("kfold_tune: empty config grid");
    const Eigen::Index n = ensemble.size();
    const auto folds = fold_partition(n, k, seed);
    const GridSpec gs = ensemble.grid();

    CvReport report;
    for (const auto& cfg : grid) {
        CvConfigResult res;
        res.config = cfg;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(gs.rows, gs.cols);
        int ok_folds = 0;
        for (const auto& holdout : folds) {
            CvFoldResult fold;
            try {
                std::vector<char> in_holdout(static_cast<std::size_t>(n), 0);
                for (auto i : holdout) in_holdout[std::size_t(i)] = 1;
                Eigen::MatrixXd train_x(n - static_cast<Eigen::Index>(holdout.size()), ensemble.dim());
                std::vector<SpatialMap> train_maps;
                Eigen::Index row = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (in_holdout[std::size_t(i)]) continue;
                    train_x.row(row++) = ensemble.inputs().row(i);
                    train_maps.push_back(ensemble.maps()[std::size_t(i)]);
                }
                Ensemble sub(train_x, std::move(train_maps), ensemble.bounds());
                const auto model = pipeline::train(sub, cfg);

                std::vector<SpatialMap> truth, pred;
                for (auto i : holdout) {
                    truth.push_back(ensemble.maps()[std::size_t(i)]);
                    pred.push_back(model.predict_map(ensemble.inputs().row(i).transpose()));
                }
                const SpatialMap fold_rmse = rmse_map(truth, pred);
                fold.mean_rmse = fold_rmse.values().mean();
                acc += fold_rmse.values();
                ++ok_folds;
            } catch (const std::exception&) {
                fold.failed = true;
                res.failed = true;
            }
            res.folds.push_back(fold);
        }
        if (ok_folds == static_cast<int>(folds.size())) {
            acc /= double(ok_folds);
            res.rmse_cv = SpatialMap(acc, gs.domain);
            std::vector<double> px(acc.data(), acc.data() + acc.size());
            res.score = quantile7(std::move(px), 0.9);
            res.mean_rmse = acc.mean();
        } else {
            res.failed = true;
            res.score = std::numeric_limits<double>::infinity();
        }
        report.results.push_back(std::move(res));
    }

    auto key = [](const CvConfigResult& r) {
        return std::tuple<double, Eigen::Index, Eigen::Index>(
            r.score, r.config.selection.k_target, r.config.n_pc);
    };
    report.best_index = 0;
    for (std::size_t i = 1; i < report.results.size(); ++i)
        if (key(report.results[i]) < key(report.results[report.best_index])) report.best_index = i;
    if (report.results[report.best_index].failed)
        throw std::runtime_error("kfold_tune: every configuration failed");
    return report;
}

}  // namespace fsens::benchfn
