#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "fsens/grid.hpp"

namespace fsens::gp {

// Tensor-product Matern 5/2 kernel sigma2_f * prod_j m(|dx_j|/theta_j) with
// m(r) = (1 + sqrt5 r + 5 r^2/3) exp(-sqrt5 r).
double kernel_matern52(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                       const Eigen::VectorXd& theta, double sigma2_f);

struct GpConfig {
    int multistarts = 5;
    double theta_lo = 1e-2;   // lengthscale bounds in normalized coordinates
    double theta_hi = 1e2;
    double nugget_rel = 1e-8;     // jitter relative to standardized target variance
    double nugget_max_rel = 1e-4; // escalation ceiling on Cholesky failure
    int max_iter = 200;
    double grad_tol = 1e-5;
    std::uint64_t seed = 0;
};

struct FitDiagnostics {
    double nll = 0.0;              // concentrated negative log-likelihood at the optimum
    double grad_norm = 0.0;        // projected-gradient infinity norm at the optimum
    bool at_bound = false;         // a lengthscale sits on its box bound
    std::vector<double> seed_nll;  // objective at each multistart seed point
};

// Concentrated negative log-likelihood over log-lengthscales; the constant
// trend beta and the signal variance are profiled out analytically. Exposed
// so gradient checks can evaluate it directly.
class GpObjective {
public:
    GpObjective(Eigen::MatrixXd x_norm, Eigen::VectorXd y_std, double nugget);

    Eigen::Index dim() const { return static_cast<Eigen::Index>(absdiff_.size()); }
    Eigen::Index samples() const { return y_.size(); }

    // Returns +inf if the correlation matrix is numerically indefinite.
    double eval(const Eigen::VectorXd& log_theta, Eigen::VectorXd* grad = nullptr) const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    double nugget_;
    std::vector<Eigen::MatrixXd> absdiff_;
};

// Ordinary-kriging GP: constant trend, profiled signal variance, inputs
// normalized to [0,1]^d via the given bounds, targets standardized.
struct GpModel {
    Eigen::MatrixXd x_norm;
    Eigen::VectorXd y_std;
    std::vector<Bounds1d> input_bounds;
    double y_mean = 0.0;
    double y_scale = 1.0;
    Eigen::VectorXd theta;
    double sigma2_f = 0.0;  // standardized units
    double beta = 0.0;      // standardized units
    double nugget = 0.0;    // relative jitter actually used
    Eigen::MatrixXd chol_l;
    Eigen::VectorXd alpha_w;  // (R + nugget I)^-1 (y - beta 1)
    bool constant_model = false;
    FitDiagnostics diag;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(input_bounds.size()); }
    Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;
};

GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<Bounds1d>& bounds, const GpConfig& cfg = {});

void predict(const GpModel& model, const Eigen::MatrixXd& x_query, Eigen::VectorXd& mean,
             Eigen::VectorXd& variance);
Eigen::VectorXd predict_mean(const GpModel& model, const Eigen::MatrixXd& x_query);

}  // namespace fsens::gp
