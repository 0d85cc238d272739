#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "fsens/grid.hpp"
#include "fsens/pipeline.hpp"

namespace fsens::benchfn {

// Campbell2D analytic benchmark: 8 inputs on [-1,5]^8, map output on
// [-90,90]^2 (default 64x64 grid).
struct Campbell2dSpec {
    static constexpr int dim = 8;
    static std::vector<Bounds1d> bounds() { return std::vector<Bounds1d>(dim, Bounds1d{-1.0, 5.0}); }
    static Rect domain() { return Rect{-90.0, 90.0, -90.0, 90.0}; }
    static GridSpec default_grid() { return GridSpec{64, 64, domain()}; }
};

SpatialMap campbell2d(const Eigen::VectorXd& x, const GridSpec& grid = Campbell2dSpec::default_grid());

// Evaluates the function over every design row.
Ensemble campbell2d_ensemble(const Eigen::MatrixXd& design,
                             const GridSpec& grid = Campbell2dSpec::default_grid());

// Pixelwise root mean square error over a sample of (truth, prediction) pairs.
SpatialMap rmse_map(const std::vector<SpatialMap>& truth, const std::vector<SpatialMap>& pred);

// Spatially averaged predictivity: 1 - mean_z MSE(z) / mean_z Var_X(truth(z)),
// with population (1/n) variance so that predicting the sample mean gives 0.
double q2(const std::vector<SpatialMap>& truth, const std::vector<SpatialMap>& pred);

// Empirical type-7 quantile.
double quantile7(std::vector<double> values, double p);

struct CvFoldResult {
    double mean_rmse = 0.0;  // spatial mean of this fold's RMSE map
    bool failed = false;
};

struct CvConfigResult {
    pipeline::PipelineConfig config;
    std::vector<CvFoldResult> folds;
    SpatialMap rmse_cv;     // fold-averaged RMSE map
    double score = 0.0;     // 90% spatial quantile of rmse_cv
    double mean_rmse = 0.0; // spatial mean of rmse_cv
    bool failed = false;
};

struct CvReport {
    std::vector<CvConfigResult> results;
    std::size_t best_index = 0;
    const pipeline::PipelineConfig& best_config() const { return results[best_index].config; }
};

// k-fold cross-validation over a config grid; scores each config by the 90%
// spatial quantile of the fold-averaged RMSE map and returns the minimizer
// (ties to smaller K~, then smaller n_pc, then listing order).
CvReport kfold_tune(const Ensemble& ensemble,
                    const std::vector<pipeline::PipelineConfig>& config_grid, int k = 10,
                    std::uint64_t seed = 0);

// Deterministic fold assignment: shuffled indices split as evenly as possible.
std::vector<std::vector<Eigen::Index>> fold_partition(Eigen::Index n, int k, std::uint64_t seed);

}  // namespace fsens::benchfn
