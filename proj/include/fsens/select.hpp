#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <vector>

namespace fsens::select {

enum class Mode { Energy, Lasso };

// Outcome of reducing K coefficients to the K_tilde most important ones.
// ranked_indices holds all K original indices sorted by decreasing weight
// (ties broken by ascending index); the first k_tilde are kept. fill_means
// are the empirical means of the discarded coefficients, aligned with
// ranked_indices[k_tilde..K).
struct SelectionResult {
    std::vector<Eigen::Index> ranked_indices;
    Eigen::Index k_tilde = 0;
    Eigen::VectorXd lambda;      // K weights in [0,1]
    Eigen::VectorXd fill_means;  // K - k_tilde values
    Mode mode = Mode::Energy;

    std::vector<Eigen::Index> kept_indices() const {
        return {ranked_indices.begin(), ranked_indices.begin() + k_tilde};
    }
    std::vector<Eigen::Index> discarded_indices() const {
        return {ranked_indices.begin() + k_tilde, ranked_indices.end()};
    }
};

// Mean-proportion-of-energy criterion on orthonormal-basis coefficients:
// lambda_k = mean_i alpha_ik^2 / sum_k' alpha_ik'^2. Exactly one of p
// (total mean energy threshold in (0,1]) or k_target must be given; with p,
// K_tilde is the largest count with cumulative lambda <= p.
struct EnergyOptions {
    double p = -1.0;
    Eigen::Index k_target = -1;
};

SelectionResult energy_select(const Eigen::MatrixXd& coeff_matrix, const EnergyOptions& opt);

struct LassoConfig {
    double tol = 1e-6;        // max coefficient change per sweep
    int max_sweeps = 10000;
    double zero_tol = 0.0;    // coefficients are exactly zero after soft-thresholding
};

// Cyclic coordinate-descent Lasso for one target: minimizes
// (1/m)*||y - B a||^2 + penalty*||a||_1 with m = rows of B.
Eigen::VectorXd lasso_path_single(const Eigen::SparseMatrix<double>& design,
                                  const Eigen::VectorXd& target, double penalty,
                                  const LassoConfig& cfg = {});

struct LassoSelection {
    SelectionResult selection;
    Eigen::MatrixXd coefficients;  // n x K per-sample Lasso solutions
};

// Per-sample Lasso fits with a shared penalty; global ranking by selection
// frequency P(alpha_k != 0), ties by mean |alpha_k| then ascending index.
// Targets must already be centered over z per sample.
LassoSelection lasso_select(const Eigen::SparseMatrix<double>& design,
                            const Eigen::MatrixXd& targets, double penalty,
                            Eigen::Index k_target, const LassoConfig& cfg = {});

}  // namespace fsens::select
