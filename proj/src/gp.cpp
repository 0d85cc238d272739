#include "fsens/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fsens/rng.hpp"

namespace fsens::gp {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;

inline double matern52_1d(double r) {
    const double s = kSqrt5 * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

// d log m / d log theta at r = |dx|/theta (nonnegative).
inline double matern52_dlog(double r) {
    const double s = kSqrt5 * r;
    const double num = s * s * (1.0 + s) / 3.0;
    return num / (1.0 + s + s * s / 3.0);
}

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double kernel_matern52(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                       const Eigen::VectorXd& theta, double sigma2_f) {
    if (x.size() != x2.size() || x.size() != theta.size())
        throw std::invalid_argument("kernel_matern52: dimension mismatch");
    double k = sigma2_f;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (!(theta[j] > 0.0))
            throw std::invalid_argument("kernel_matern52: nonpositive lengthscale");
        k *= matern52_1d(std::abs(x[j] - x2[j]) / theta[j]);
    }
    return k;
}

GpObjective::GpObjective(Eigen::MatrixXd x_norm, Eigen::VectorXd y_std, double nugget)
    : x_(std::move(x_norm)), y_(std::move(y_std)), nugget_(nugget) {
    const Eigen::Index n = x_.rows(), d = x_.cols();
    absdiff_.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::MatrixXd dj(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) dj(a, b) = std::abs(x_(a, j) - x_(b, j));
        absdiff_.push_back(std::move(dj));
    }
}

double GpObjective::eval(const Eigen::VectorXd& log_theta, Eigen::VectorXd* grad) const {
    const Eigen::Index n = y_.size(), d = dim();
    if (log_theta.size() != d) throw std::invalid_argument("GpObjective: wrong parameter size");

    Eigen::VectorXd theta = log_theta.array().exp();
    Eigen::MatrixXd corr = Eigen::MatrixXd::Ones(n, n);
    for (Eigen::Index j = 0; j < d; ++j)
        corr.array() *= absdiff_[static_cast<std::size_t>(j)].unaryExpr([&](double dx) {
            return matern52_1d(dx / theta[j]);
        }).array();

    Eigen::MatrixXd k = corr;
    k.diagonal().array() += nugget_;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return kInf;

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd ki_one = llt.solve(ones);
    const Eigen::VectorXd ki_y = llt.solve(y_);
    const double denom = ones.dot(ki_one);
    if (!(denom > 0.0)) return kInf;
    const double beta = ones.dot(ki_y) / denom;
    const Eigen::VectorXd resid = y_.array() - beta;
    const Eigen::VectorXd alpha = ki_y - beta * ki_one;
    double s2 = resid.dot(alpha) / double(n);
    if (!(s2 > 0.0)) s2 = 1e-300;

    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double nll = 0.5 * (double(n) * std::log(s2) + logdet);
    if (!std::isfinite(nll)) return kInf;

    if (grad) {
        grad->resize(d);
        const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        for (Eigen::Index j = 0; j < d; ++j) {
            Eigen::MatrixXd dr = corr.array() *
                                 absdiff_[static_cast<std::size_t>(j)].unaryExpr([&](double dx) {
                                     return matern52_dlog(dx / theta[j]);
                                 }).array();
            const double quad = alpha.dot(dr * alpha);
            const double tr = (kinv.array() * dr.array()).sum();
            (*grad)[j] = -0.5 * quad / s2 + 0.5 * tr;
        }
    }
    return nll;
}

namespace {

std::vector<Eigen::MatrixXd> absdiff_matrices(const Eigen::MatrixXd& x_norm) {
    const Eigen::Index n = x_norm.rows(), d = x_norm.cols();
    std::vector<Eigen::MatrixXd> ad;
    ad.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::MatrixXd dj(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) dj(a, b) = std::abs(x_norm(a, j) - x_norm(b, j));
        ad.push_back(std::move(dj));
    }
    return ad;
}

struct Profiled {
    double beta;
    double sigma2;
    Eigen::MatrixXd chol_l;
    Eigen::VectorXd alpha;
    bool ok = false;
};

Profiled profile_at(const std::vector<Eigen::MatrixXd>& absdiff, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& theta, double nugget) {
    Profiled out;
    const Eigen::Index n = y.size();
    Eigen::MatrixXd k = Eigen::MatrixXd::Ones(n, n);
    for (std::size_t j = 0; j < absdiff.size(); ++j)
        k.array() *= absdiff[j].unaryExpr([&](double dx) {
            return matern52_1d(dx / theta[static_cast<Eigen::Index>(j)]);
        }).array();
    k.diagonal().array() += nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return out;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd ki_one = llt.solve(ones);
    const Eigen::VectorXd ki_y = llt.solve(y);
    out.beta = ones.dot(ki_y) / ones.dot(ki_one);
    out.alpha = ki_y - out.beta * ki_one;
    out.sigma2 = (y.array() - out.beta).matrix().dot(out.alpha) / double(n);
    if (out.sigma2 < 0.0) out.sigma2 = 0.0;
    out.chol_l = llt.matrixL();
    out.ok = true;
    return out;
}

// Projected BFGS with Armijo backtracking on a box.
struct OptResult {
    Eigen::VectorXd z;
    double f = kInf;
    double proj_grad_norm = kInf;
};

Eigen::VectorXd clamp_box(Eigen::VectorXd z, double lo, double hi) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = std::min(hi, std::max(lo, z[i]));
    return z;
}

OptResult minimize_box(const GpObjective& obj, const Eigen::VectorXd& z0, double lo, double hi,
                       int max_iter, double grad_tol) {
    const Eigen::Index d = z0.size();
    OptResult res;
    res.z = clamp_box(z0, lo, hi);
    Eigen::VectorXd g(d);
    res.f = obj.eval(res.z, &g);
    if (!std::isfinite(res.f)) return res;

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d);
    bool h_scaled = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::VectorXd pg = g;
        for (Eigen::Index i = 0; i < d; ++i) {
            if ((res.z[i] <= lo && g[i] > 0.0) || (res.z[i] >= hi && g[i] < 0.0)) pg[i] = 0.0;
        }
        res.proj_grad_norm = pg.lpNorm<Eigen::Infinity>();
        if (res.proj_grad_norm < grad_tol) break;

        Eigen::VectorXd p = -(h * g);
        if (p.dot(g) >= -1e-12 * p.norm() * g.norm()) {
            h.setIdentity();
            h_scaled = false;
            p = -g;
        }

        // Backtracking with quadratic interpolation on the Armijo condition;
        // a stale quasi-Newton direction gets one steepest-descent retry.
        Eigen::VectorXd z_new;
        double f_new = kInf;
        double slope = 0.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                h.setIdentity();
                h_scaled = false;
                p = -g;
            }
            slope = p.dot(g);
            double t = 1.0;
            while (t >= 1e-14) {
                z_new = clamp_box(res.z + t * p, lo, hi);
                f_new = obj.eval(z_new);
                if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * t * slope) {
                    accepted = true;
                    break;
                }
                double t_next = 0.5 * t;
                if (std::isfinite(f_new)) {
                    const double denom = f_new - res.f - slope * t;
                    if (denom > 0.0) {
                        const double t_quad = -0.5 * slope * t * t / denom;
                        t_next = std::min(0.5 * t, std::max(0.1 * t, t_quad));
                    }
                }
                t = t_next;
            }
        }
        if (!accepted) break;

        Eigen::VectorXd g_new(d);
        f_new = obj.eval(z_new, &g_new);
        const Eigen::VectorXd s = z_new - res.z;
        const Eigen::VectorXd yk = g_new - g;
        const double sy = s.dot(yk);
        if (sy > 1e-10 * s.norm() * yk.norm()) {
            if (!h_scaled) {
                h *= sy / yk.squaredNorm();
                h_scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd i_mat = Eigen::MatrixXd::Identity(d, d);
            h = (i_mat - rho * s * yk.transpose()) * h * (i_mat - rho * yk * s.transpose()) +
                rho * s * s.transpose();
        }
        res.z = z_new;
        res.f = f_new;
        g = g_new;
    }
    // Report the projected gradient at the final iterate.
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < d; ++i)
        if ((res.z[i] <= lo && g[i] > 0.0) || (res.z[i] >= hi && g[i] < 0.0)) pg[i] = 0.0;
    res.proj_grad_norm = pg.lpNorm<Eigen::Infinity>();
    return res;
}

std::vector<Eigen::VectorXd> multistart_seeds(int count, Eigen::Index d, double lo, double hi,
                                              std::uint64_t seed) {
    // Isotropic log-spaced ladder covering short to long correlation lengths,
    // then seeded LHS points in log-space if more starts are requested.
    static const double ladder[5] = {0.5, 0.1, 0.3, 1.5, 4.0};
    std::vector<Eigen::VectorXd> seeds;
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int s = 0; s < count && s < 5; ++s) {
        double v = std::log(ladder[s]);
        v = std::min(lhi, std::max(llo, v));
        seeds.push_back(Eigen::VectorXd::Constant(d, v));
    }
    if (count > 5) {
        Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        const int extra = count - 5;
        std::vector<std::vector<std::size_t>> perms;
        for (Eigen::Index j = 0; j < d; ++j) perms.push_back(rng.permutation(std::size_t(extra)));
        for (int s = 0; s < extra; ++s) {
            Eigen::VectorXd z(d);
            for (Eigen::Index j = 0; j < d; ++j) {
                const double u = (double(perms[std::size_t(j)][std::size_t(s)]) + 0.5) / extra;
                z[j] = llo + u * (lhi - llo);
            }
            seeds.push_back(z);
        }
    }
    return seeds;
}

}  // namespace

Eigen::MatrixXd GpModel::normalize(const Eigen::MatrixXd& x) const {
    if (x.cols() != dim()) throw std::invalid_argument("GpModel: query dimension mismatch");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double lo = input_bounds[static_cast<std::size_t>(j)].lo;
        const double span_raw = input_bounds[static_cast<std::size_t>(j)].hi - lo;
        const double span = span_raw > 0.0 ? span_raw : 1.0;
        out.col(j) = (x.col(j).array() - lo) / span;
    }
    return out;
}

GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               const std::vector<Bounds1d>& bounds, const GpConfig& cfg) {
    const Eigen::Index n = x.rows(), d = x.cols();
    if (n < 2) throw std::invalid_argument("fit_gp: need at least 2 samples");
    if (y.size() != n) throw std::invalid_argument("fit_gp: X rows != y length");
    if (static_cast<Eigen::Index>(bounds.size()) != d)
        throw std::invalid_argument("fit_gp: bounds size != input dimension");
    if (!(cfg.theta_lo > 0.0) || !(cfg.theta_hi > cfg.theta_lo))
        throw std::invalid_argument("fit_gp: bad lengthscale bounds");

    GpModel model;
    model.input_bounds = bounds;
    model.x_norm = model.normalize(x);
    model.y_mean = y.mean();
    const double var = (y.array() - model.y_mean).square().sum() / double(n > 1 ? n - 1 : 1);
    model.y_scale = std::sqrt(var);

    if (model.y_scale < 1e-12 * std::max(1.0, std::abs(model.y_mean))) {
        // Degenerate constant target: the GP collapses to its trend.
        model.constant_model = true;
        model.y_scale = 1.0;
        model.y_std = Eigen::VectorXd::Zero(n);
        model.theta = Eigen::VectorXd::Ones(d);
        model.beta = 0.0;
        model.sigma2_f = 0.0;
        model.nugget = cfg.nugget_rel;
        model.alpha_w = Eigen::VectorXd::Zero(n);
        model.chol_l = Eigen::MatrixXd::Identity(n, n);
        return model;
    }

    model.y_std = (y.array() - model.y_mean) / model.y_scale;

    const double llo = std::log(cfg.theta_lo), lhi = std::log(cfg.theta_hi);
    const auto seeds = multistart_seeds(std::max(1, cfg.multistarts), d, cfg.theta_lo,
                                        cfg.theta_hi, cfg.seed);
    const auto absdiff = absdiff_matrices(model.x_norm);

    double nugget = cfg.nugget_rel;
    while (true) {
        GpObjective obj(model.x_norm, model.y_std, nugget);
        OptResult best;
        FitDiagnostics diag;
        for (const auto& z0 : seeds) {
            diag.seed_nll.push_back(obj.eval(clamp_box(z0, llo, lhi)));
            OptResult r = minimize_box(obj, z0, llo, lhi, cfg.max_iter, cfg.grad_tol);
            if (r.f < best.f) best = r;
        }
        if (std::isfinite(best.f)) {
            Eigen::VectorXd theta = best.z.array().exp();
            Profiled prof = profile_at(absdiff, model.y_std, theta, nugget);
            if (prof.ok) {
                model.theta = theta;
                model.beta = prof.beta;
                model.sigma2_f = prof.sigma2;
                model.nugget = nugget;
                model.chol_l = prof.chol_l;
                model.alpha_w = prof.alpha;
                diag.nll = best.f;
                diag.grad_norm = best.proj_grad_norm;
                diag.at_bound = false;
                for (Eigen::Index j = 0; j < d; ++j)
                    if (best.z[j] <= llo + 1e-10 || best.z[j] >= lhi - 1e-10) diag.at_bound = true;
                model.diag = std::move(diag);
                return model;
            }
        }
        nugget *= 10.0;
        if (nugget > cfg.nugget_max_rel)
            throw std::runtime_error(
                "fit_gp: Cholesky failed up to relative nugget " + std::to_string(cfg.nugget_max_rel) +
                " (n=" + std::to_string(n) + "); the correlation matrix is numerically singular");
    }
}

void predict(const GpModel& model, const Eigen::MatrixXd& x_query, Eigen::VectorXd& mean,
             Eigen::VectorXd& variance) {
    const Eigen::Index m = x_query.rows(), n = model.y_std.size();
    const Eigen::MatrixXd xq = model.normalize(x_query);
    mean.resize(m);
    variance.resize(m);
    if (model.constant_model) {
        mean.setConstant(model.y_mean);
        variance.setZero();
        return;
    }
    Eigen::VectorXd corr(n);
    for (Eigen::Index q = 0; q < m; ++q) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 1.0;
            for (Eigen::Index j = 0; j < xq.cols(); ++j)
                c *= matern52_1d(std::abs(xq(q, j) - model.x_norm(i, j)) / model.theta[j]);
            corr[i] = c;
        }
        const double mu = model.beta + corr.dot(model.alpha_w);
        const Eigen::VectorXd v =
            model.chol_l.triangularView<Eigen::Lower>().solve(corr);
        double var = model.sigma2_f * (1.0 - v.squaredNorm());
        if (var < 0.0) var = 0.0;
        mean[q] = model.y_mean + model.y_scale * mu;
        variance[q] = model.y_scale * model.y_scale * var;
    }
}

Eigen::VectorXd predict_mean(const GpModel& model, const Eigen::MatrixXd& x_query) {
    const Eigen::Index m = x_query.rows(), n = model.y_std.size();
    if (model.constant_model) return Eigen::VectorXd::Constant(m, model.y_mean);
    const Eigen::MatrixXd xq = model.normalize(x_query);
    Eigen::VectorXd out(m);
    for (Eigen::Index q = 0; q < m; ++q) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 1.0;
            for (Eigen::Index j = 0; j < xq.cols(); ++j)
                c *= matern52_1d(std::abs(xq(q, j) - model.x_norm(i, j)) / model.theta[j]);
            acc += c * model.alpha_w[i];
        }
        out[q] = model.y_mean + model.y_scale * (model.beta + acc);
    }
    return out;
}

}  // namespace fsens::gp
