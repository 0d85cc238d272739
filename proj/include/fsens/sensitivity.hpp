#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fsens/grid.hpp"

namespace fsens::sensitivity {

struct SobolConfig {
    enum class Sampling { Lhs, Iid };
    Sampling sampling = Sampling::Lhs;
    int bootstrap = 200;  // 0 disables confidence intervals
    double ci_level = 0.95;
};

// Raw Monte-Carlo estimates; values may exit [0,1] slightly. clamped() gives
// the display view.
struct SobolEstimate {
    Eigen::VectorXd first_order;
    Eigen::VectorXd total;
    Eigen::MatrixXd first_ci;  // d x 2 (lo, hi); empty without bootstrap
    Eigen::MatrixXd total_ci;
    Eigen::Index n0 = 0;
    std::string variant = "saltelli2010-first/jansen-total";

    static Eigen::VectorXd clamped(const Eigen::VectorXd& v) {
        return v.array().min(1.0).max(0.0);
    }
};

using BatchFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// Two-sample pick-freeze estimator with exactly n0*(d+2) model evaluations:
// first-order via the correlation form mean(f(B)*(f(AB_i)-f(A)))/V, total via
// the Jansen form mean((f(A)-f(AB_i))^2)/(2V).
SobolEstimate saltelli_sobol(const BatchFn& model, const std::vector<Bounds1d>& bounds,
                             Eigen::Index n0, std::uint64_t seed, const SobolConfig& cfg = {});

// Block evaluations reused by the aggregated and bootstrap paths.
struct PickFreezeValues {
    Eigen::VectorXd f_a;
    Eigen::VectorXd f_b;
    Eigen::MatrixXd f_ab;  // n0 x d, column i = f(A with column i from B)
};

PickFreezeValues evaluate_pick_freeze(const BatchFn& model, const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b);
SobolEstimate estimate_from_values(const PickFreezeValues& vals, std::uint64_t bootstrap_seed,
                                   const SobolConfig& cfg);

// Point estimates on a row subset (used for bootstrap replicates that must be
// consistent across components sharing one design).
void estimate_on_rows(const PickFreezeValues& vals, const std::vector<Eigen::Index>& rows,
                      Eigen::VectorXd& first, Eigen::VectorXd& total,
                      bool throw_on_degenerate);

struct GsiEstimate {
    Eigen::VectorXd first_order;      // d
    Eigen::VectorXd total;            // d
    Eigen::MatrixXd per_comp_first;   // n_pc x d
    Eigen::MatrixXd per_comp_total;   // n_pc x d
    Eigen::VectorXd weights;          // n_pc eigenvalue weights used
    Eigen::MatrixXd first_ci;         // d x 2; empty without bootstrap
    Eigen::MatrixXd total_ci;
    Eigen::Index n0 = 0;
};

// Eigenvalue-weighted aggregation of per-component Sobol indices
// (generalized sensitivity indices on the PCA basis).
GsiEstimate gsi_from_components(const Eigen::MatrixXd& per_comp_first,
                                const Eigen::MatrixXd& per_comp_total,
                                const Eigen::VectorXd& eigenvalues,
                                double discarded_inertia = 0.0);

// Gram-matrix form: Trace(cov_conditional G) / Trace(cov_total G), evaluated
// as elementwise sums.
double gsi_gram(const Eigen::MatrixXd& cov_conditional, const Eigen::MatrixXd& cov_total,
                const Eigen::MatrixXd& gram);

using MapFn = std::function<Eigen::MatrixXd(const Eigen::RowVectorXd&)>;

// Per-pixel Sobol indices of a map-valued model. One shared set of pick-freeze
// evaluations serves every pixel; pixels whose output variance is zero are
// marked undefined (NaN) rather than erroring.
struct PointwiseSobol {
    std::vector<Eigen::MatrixXd> first_order;  // d maps
    std::vector<Eigen::MatrixXd> total;        // d maps
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> defined;
    Eigen::Index n0 = 0;
};

PointwiseSobol pointwise_sobol(const MapFn& model, const std::vector<Bounds1d>& bounds,
                               Eigen::Index rows, Eigen::Index cols, Eigen::Index n0,
                               std::uint64_t seed,
                               SobolConfig::Sampling sampling = SobolConfig::Sampling::Lhs);

// The two base samples used by all estimators (unit-cube points scaled to
// bounds); exposed so callers can share designs across components.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> base_samples(Eigen::Index n0, Eigen::Index d,
                                                         std::uint64_t seed,
                                                         SobolConfig::Sampling sampling,
                                                         const std::vector<Bounds1d>& bounds);

}  // namespace fsens::sensitivity
