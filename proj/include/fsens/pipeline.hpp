#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fsens/bspline.hpp"
#include "fsens/fpca.hpp"
#include "fsens/gp.hpp"
#include "fsens/grid.hpp"
#include "fsens/select.hpp"
#include "fsens/sensitivity.hpp"
#include "fsens/wavelet.hpp"

namespace fsens::pipeline {

enum class BasisKind { WaveletD4, WaveletHaar, Bspline1 };
enum class SelectionKind { Energy, Lasso };

// Computation path for the PCA metric on the B-spline route. Orthonormalized
// works on c = R^T alpha with the identity metric; GramRaw runs metric-PCA on
// the raw coefficients. With the energy criterion GramRaw requires K~ = K,
// since energy ranking lives in the orthonormalized coordinates.
enum class PcaMetric { Orthonormalized, GramRaw };

struct SelectionConfig {
    SelectionKind kind = SelectionKind::Energy;
    double energy_p = -1.0;       // exclusive with k_target
    Eigen::Index k_target = -1;
    double lasso_penalty = 0.01;  // squared loss is normalized by pixel count
};

struct PipelineConfig {
    BasisKind basis = BasisKind::WaveletD4;
    int wavelet_levels = 1;
    int knots1 = 35;
    int knots2 = 35;
    SelectionConfig selection;
    Eigen::Index n_pc = 5;
    PcaMetric pca_metric = PcaMetric::Orthonormalized;
    gp::GpConfig gp;
    std::uint64_t seed = 0;
};

// Which coefficient space the selection/PCA stages operate in.
enum class CoeffSpace { Wavelet, BsplineOrtho, BsplineRaw };

struct TrainReport {
    Eigen::Index pixels = 0;
    Eigen::Index basis_size = 0;   // K
    Eigen::Index k_tilde = 0;
    Eigen::Index n_pc = 0;
    double retention_pct = 0.0;    // 100 * K~ / K
    double retained_energy = 0.0;  // sum of kept lambda weights
    double explained_inertia = 0.0;
    std::vector<double> gp_nll;
    std::vector<double> gp_grad_norm;
    std::vector<bool> gp_at_bound;
    double train_seconds = 0.0;
    std::string dimension_chain;   // e.g. "4096 px -> K=4096 -> K~=1200 -> n_pc=5"
    std::string to_text() const;
};

class SurrogateModel {
public:
    PipelineConfig config;
    GridSpec grid;
    std::vector<Bounds1d> bounds;
    CoeffSpace space = CoeffSpace::Wavelet;
    select::SelectionResult selection;
    fpca::FpcaModel pca;
    std::vector<gp::GpModel> gps;
    Eigen::MatrixXd variance_patterns;      // n_pc x pixels, map of each component direction
    Eigen::VectorXd truncation_residual_inf;  // per training sample
    std::string config_hash;
    TrainReport report;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(bounds.size()); }

    // GP score predictions for a batch of raw inputs (m x d) -> m x n_pc.
    Eigen::MatrixXd predict_scores(const Eigen::MatrixXd& x) const;

    SpatialMap predict_map(const Eigen::VectorXd& x) const;
    std::pair<SpatialMap, SpatialMap> predict_map_with_variance(const Eigen::VectorXd& x) const;

    // Full K-coefficient vector: PCA reconstruction on the kept indices,
    // empirical means on the discarded ones.
    Eigen::VectorXd full_coefficients(const Eigen::VectorXd& scores) const;
    Eigen::MatrixXd coefficients_to_map(const Eigen::VectorXd& full_coeff) const;

    void ensure_basis() const;  // builds cached B-spline machinery on demand

private:
    mutable std::shared_ptr<const bspline::BsplineBasis> basis_;
    mutable std::shared_ptr<const bspline::GramMatrix> gram_;
};

SurrogateModel train(const Ensemble& ensemble, const PipelineConfig& config);

struct SensitivityOptions {
    bool include_discarded_inertia = false;
    int bootstrap = 200;
    sensitivity::SobolConfig::Sampling sampling = sensitivity::SobolConfig::Sampling::Lhs;
};

sensitivity::GsiEstimate run_sensitivity(const SurrogateModel& model, Eigen::Index n0,
                                         std::uint64_t seed, const SensitivityOptions& opt = {});

// Bundle directory: manifest.json plus binary payloads; load verifies payload
// hashes and the format major version.
void save_model(const SurrogateModel& model, const std::filesystem::path& dir);
SurrogateModel load_model(const std::filesystem::path& dir);

// JSON (de)serialization of the run configuration (pipeline + grid + bounds).
struct RunSpec {
    PipelineConfig pipeline;
    GridSpec grid{64, 64, Rect{-90.0, 90.0, -90.0, 90.0}};
    std::vector<Bounds1d> bounds;
};

RunSpec parse_run_spec(const std::string& json_text);
std::string run_spec_to_json(const RunSpec& spec);
std::string config_hash_of(const PipelineConfig& config);

}  // namespace fsens::pipeline
