#include "fsens/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fsens/rng.hpp"

namespace fsens::pipeline {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- hashing

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open payload " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
    return hex64(h);
}

// ---------------------------------------------------------------- json

std::string basis_name(BasisKind b) {
    switch (b) {
        case BasisKind::WaveletD4: return "wavelet-d4";
        case BasisKind::WaveletHaar: return "wavelet-haar";
        case BasisKind::Bspline1: return "bspline-1";
    }
    return "?";
}

BasisKind basis_from(const std::string& s) {
    if (s == "wavelet-d4") return BasisKind::WaveletD4;
    if (s == "wavelet-haar") return BasisKind::WaveletHaar;
    if (s == "bspline-1") return BasisKind::Bspline1;
    throw std::invalid_argument("unknown basis '" + s + "'");
}

json config_to_json(const PipelineConfig& c) {
    json j;
    j["basis"] = basis_name(c.basis);
    j["wavelet_levels"] = c.wavelet_levels;
    j["knots"] = {c.knots1, c.knots2};
    json sel;
    sel["mode"] = c.selection.kind == SelectionKind::Energy ? "energy" : "lasso";
    if (c.selection.energy_p > 0.0) sel["p"] = c.selection.energy_p;
    if (c.selection.k_target >= 1) sel["k_target"] = static_cast<std::int64_t>(c.selection.k_target);
    if (c.selection.kind == SelectionKind::Lasso) sel["lambda"] = c.selection.lasso_penalty;
    j["selection"] = sel;
    j["n_pc"] = static_cast<std::int64_t>(c.n_pc);
    j["pca_metric"] = c.pca_metric == PcaMetric::Orthonormalized ? "orthonormalized" : "gram-raw";
    json g;
    g["multistarts"] = c.gp.multistarts;
    g["theta_lo"] = c.gp.theta_lo;
    g["theta_hi"] = c.gp.theta_hi;
    g["nugget_rel"] = c.gp.nugget_rel;
    g["nugget_max_rel"] = c.gp.nugget_max_rel;
    g["max_iter"] = c.gp.max_iter;
    g["grad_tol"] = c.gp.grad_tol;
    j["gp"] = g;
    j["seed"] = c.seed;
    return j;
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    c.basis = basis_from(j.at("basis").get<std::string>());
    c.wavelet_levels = j.value("wavelet_levels", 1);
    if (j.contains("knots")) {
        c.knots1 = j["knots"].at(0).get<int>();
        c.knots2 = j["knots"].at(1).get<int>();
    }
    const json& sel = j.at("selection");
    const std::string mode = sel.at("mode").get<std::string>();
    if (mode == "energy")
        c.selection.kind = SelectionKind::Energy;
    else if (mode == "lasso")
        c.selection.kind = SelectionKind::Lasso;
    else
        throw std::invalid_argument("unknown selection mode '" + mode + "'");
    c.selection.energy_p = sel.value("p", -1.0);
    c.selection.k_target = sel.value("k_target", std::int64_t(-1));
    c.selection.lasso_penalty = sel.value("lambda", 0.01);
    c.n_pc = j.at("n_pc").get<std::int64_t>();
    const std::string pm = j.value("pca_metric", "orthonormalized");
    if (pm == "orthonormalized")
        c.pca_metric = PcaMetric::Orthonormalized;
    else if (pm == "gram-raw")
        c.pca_metric = PcaMetric::GramRaw;
    else
        throw std::invalid_argument("unknown pca_metric '" + pm + "'");
    if (j.contains("gp")) {
        const json& g = j["gp"];
        c.gp.multistarts = g.value("multistarts", 5);
        c.gp.theta_lo = g.value("theta_lo", 1e-2);
        c.gp.theta_hi = g.value("theta_hi", 1e2);
        c.gp.nugget_rel = g.value("nugget_rel", 1e-8);
        c.gp.nugget_max_rel = g.value("nugget_max_rel", 1e-4);
        c.gp.max_iter = g.value("max_iter", 200);
        c.gp.grad_tol = g.value("grad_tol", 1e-5);
    }
    c.seed = j.value("seed", std::uint64_t(0));
    return c;
}

json grid_to_json(const GridSpec& g) {
    return json{{"rows", g.rows},
                {"cols", g.cols},
                {"domain", {g.domain.z1_min, g.domain.z1_max, g.domain.z2_min, g.domain.z2_max}}};
}

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    g.rows = j.at("rows").get<std::int64_t>();
    g.cols = j.at("cols").get<std::int64_t>();
    const auto& d = j.at("domain");
    g.domain = Rect{d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>(),
                    d.at(3).get<double>()};
    return g;
}

json bounds_to_json(const std::vector<Bounds1d>& b) {
    json arr = json::array();
    for (const auto& x : b) arr.push_back({x.lo, x.hi});
    return arr;
}

std::vector<Bounds1d> bounds_from_json(const json& j) {
    std::vector<Bounds1d> out;
    for (const auto& x : j) out.push_back({x.at(0).get<double>(), x.at(1).get<double>()});
    return out;
}

// ---------------------------------------------------------------- helpers

[[noreturn]] void step_fail(int step, const char* name, const std::string& what) {
    throw std::runtime_error("train step " + std::to_string(step) + " (" + name + "): " + what);
}

std::uint64_t gp_seed_for(std::uint64_t base, Eigen::Index component) {
    return base ^ (0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(component + 1));
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
    return out;
}

// Re-expresses a raw-coordinate metric-PCA result in the orthonormalized
// coordinates c = R^T alpha. Valid when the kept set is a permutation of the
// full basis; mean and eigenvectors transform exactly (v = R^T w), and
// G-orthonormality of w makes the transformed eigenvectors orthonormal.
fpca::FpcaModel to_ortho_space(const fpca::FpcaModel& fit,
                               const std::vector<Eigen::Index>& ranked,
                               const bspline::GramMatrix& gram) {
    const Eigen::Index K = static_cast<Eigen::Index>(ranked.size());
    auto transform_vec = [&](const Eigen::VectorXd& sel) {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(K);
        for (Eigen::Index j = 0; j < K; ++j) full[ranked[std::size_t(j)]] = sel[j];
        const Eigen::VectorXd c = bspline::orthonormalize(full, gram);
        Eigen::VectorXd out(K);
        for (Eigen::Index j = 0; j < K; ++j) out[j] = c[ranked[std::size_t(j)]];
        return out;
    };
    fpca::FpcaModel out = fit;
    out.identity_metric = true;
    out.chol_R = Eigen::MatrixXd();
    out.mean_coeff = transform_vec(fit.mean_coeff);
    for (Eigen::Index l = 0; l < fit.n_pc; ++l)
        out.eigvec_orig.col(l) = transform_vec(fit.eigvec_orig.col(l));
    out.eigvec_ortho = out.eigvec_orig;
    return out;
}

}  // namespace

std::string TrainReport::to_text() const {
    std::ostringstream os;
    os << "dimension chain: " << dimension_chain << "\n";
    os << "coefficient retention: " << k_tilde << " of " << basis_size << " ("
       << retention_pct << "%)\n";
    os << "retained mean energy: " << retained_energy << "\n";
    os << "explained inertia (" << n_pc << " PCs): " << explained_inertia << "\n";
    for (std::size_t l = 0; l < gp_nll.size(); ++l) {
        os << "gp[" << l << "]: nll=" << gp_nll[l] << " grad=" << gp_grad_norm[l]
           << (gp_at_bound[l] ? " (at bound)" : "") << "\n";
    }
    os << "train time: " << train_seconds << " s\n";
    return os.str();
}

void SurrogateModel::ensure_basis() const {
    if (space == CoeffSpace::Wavelet || basis_) return;
    basis_ = std::make_shared<bspline::BsplineBasis>(
        bspline::BsplineBasis::uniform(config.knots1, config.knots2, grid.domain));
    gram_ = std::make_shared<bspline::GramMatrix>(*basis_);
}

Eigen::VectorXd SurrogateModel::full_coefficients(const Eigen::VectorXd& scores) const {
    const Eigen::Index K = selection.lambda.size();
    Eigen::VectorXd sel = fpca::reconstruct(pca, scores);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(K);
    const auto& ranked = selection.ranked_indices;
    for (Eigen::Index j = 0; j < selection.k_tilde; ++j) full[ranked[std::size_t(j)]] = sel[j];
    for (Eigen::Index j = selection.k_tilde; j < K; ++j)
        full[ranked[std::size_t(j)]] = selection.fill_means[j - selection.k_tilde];
    return full;
}

Eigen::MatrixXd SurrogateModel::coefficients_to_map(const Eigen::VectorXd& full_coeff) const {
    switch (space) {
        case CoeffSpace::Wavelet: {
            wavelet::WaveletSpec wspec{config.basis == BasisKind::WaveletHaar
                                           ? wavelet::Family::Haar
                                           : wavelet::Family::D4,
                                       config.wavelet_levels};
            return wavelet::dwt2_inverse_values(
                wavelet::vector_to_coeffs(full_coeff, grid.rows, grid.cols, wspec));
        }
        case CoeffSpace::BsplineOrtho: {
            ensure_basis();
            const Eigen::VectorXd alpha = bspline::deorthonormalize(full_coeff, *gram_);
            return bspline::evaluate(alpha, *basis_, grid);
        }
        case CoeffSpace::BsplineRaw: {
            ensure_basis();
            return bspline::evaluate(full_coeff, *basis_, grid);
        }
    }
    throw std::logic_error("coefficients_to_map: bad coefficient space");
}

Eigen::MatrixXd SurrogateModel::predict_scores(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd t(x.rows(), pca.n_pc);
    for (Eigen::Index l = 0; l < pca.n_pc; ++l)
        t.col(l) = gp::predict_mean(gps[std::size_t(l)], x);
    return t;
}

SpatialMap SurrogateModel::predict_map(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw std::invalid_argument("predict_map: input dimension mismatch");
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const auto& b = bounds[std::size_t(j)];
        if (x[j] < b.lo || x[j] > b.hi) {
            std::cerr << "fsens: warning: prediction input component " << j
                      << " outside training bounds\n";
            break;
        }
    }
    const Eigen::MatrixXd scores = predict_scores(x.transpose());
    const Eigen::VectorXd full = full_coefficients(scores.row(0).transpose());
    return SpatialMap(coefficients_to_map(full), grid.domain);
}

std::pair<SpatialMap, SpatialMap> SurrogateModel::predict_map_with_variance(
    const Eigen::VectorXd& x) const {
    SpatialMap mean = predict_map(x);
    Eigen::VectorXd var_map = Eigen::VectorXd::Zero(grid.pixels());
    Eigen::VectorXd m(1), v(1);
    for (Eigen::Index l = 0; l < pca.n_pc; ++l) {
        gp::predict(gps[std::size_t(l)], x.transpose(), m, v);
        var_map += v[0] * variance_patterns.row(l).array().square().matrix().transpose();
    }
    return {std::move(mean), grid::unflatten(var_map, grid)};
}

SurrogateModel train(const Ensemble& ensemble, const PipelineConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();
    const Eigen::Index n = ensemble.size();
    const GridSpec grid = ensemble.grid();

    SurrogateModel model;
    model.config = config;
    model.grid = grid;
    model.bounds = ensemble.bounds();
    model.config_hash = config_hash_of(config);

    if (config.n_pc < 1) step_fail(0, "config", "n_pc must be >= 1");
    const bool is_bspline = config.basis == BasisKind::Bspline1;
    if (!is_bspline && config.selection.kind == SelectionKind::Lasso)
        step_fail(0, "config", "lasso selection is defined for the B-spline basis");

    // Steps 1-2: basis setup and decomposition of all maps.
    Eigen::MatrixXd coeffs;        // n x K in the model's coefficient space
    Eigen::MatrixXd energy_coeffs; // orthonormal coordinates used for energy ranking
    Eigen::MatrixXd raw_coeffs;    // raw B-spline projections (energy route)
    std::shared_ptr<bspline::BsplineBasis> basis;
    std::shared_ptr<bspline::GramMatrix> gram;
    select::LassoSelection lasso_out;
    try {
        if (!is_bspline) {
            model.space = CoeffSpace::Wavelet;
            wavelet::WaveletSpec wspec{config.basis == BasisKind::WaveletHaar
                                           ? wavelet::Family::Haar
                                           : wavelet::Family::D4,
                                       config.wavelet_levels};
            coeffs.resize(n, grid.pixels());
            for (Eigen::Index i = 0; i < n; ++i)
                coeffs.row(i) =
                    wavelet::coeffs_to_vector(wavelet::dwt2_forward(ensemble.maps()[std::size_t(i)], wspec))
                        .transpose();
            energy_coeffs = coeffs;
        } else {
            basis = std::make_shared<bspline::BsplineBasis>(
                bspline::BsplineBasis::uniform(config.knots1, config.knots2, grid.domain));
            gram = std::make_shared<bspline::GramMatrix>(*basis);
            if (config.selection.kind == SelectionKind::Lasso) {
                model.space = CoeffSpace::BsplineRaw;
                const auto design = bspline::eval_basis_sparse(*basis, grid);
                Eigen::MatrixXd targets(n, grid.pixels());
                Eigen::VectorXd spatial_mean(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const Eigen::VectorXd flat = grid::flatten(ensemble.maps()[std::size_t(i)]);
                    spatial_mean[i] = flat.mean();
                    targets.row(i) = (flat.array() - spatial_mean[i]).transpose();
                }
                lasso_out = select::lasso_select(design, targets, config.selection.lasso_penalty,
                                                 config.selection.k_target);
                // Constants are exactly representable (partition of unity), so the
                // per-sample spatial mean comes back as a uniform coefficient shift.
                coeffs = lasso_out.coefficients;
                coeffs.colwise() += spatial_mean;
            } else {
                raw_coeffs.resize(n, basis->size());
                for (Eigen::Index i = 0; i < n; ++i)
                    raw_coeffs.row(i) =
                        bspline::project(ensemble.maps()[std::size_t(i)], *basis).transpose();
                energy_coeffs.resize(n, basis->size());
                for (Eigen::Index i = 0; i < n; ++i)
                    energy_coeffs.row(i) =
                        bspline::orthonormalize(raw_coeffs.row(i).transpose(), *gram).transpose();
                if (config.pca_metric == PcaMetric::GramRaw) {
                    if (config.selection.k_target != basis->size())
                        step_fail(0, "config",
                                  "pca_metric=gram-raw with energy selection requires k_target == K "
                                  "(energy ranking lives in the orthonormalized coordinates)");
                    model.space = CoeffSpace::BsplineRaw;
                    coeffs = raw_coeffs;
                } else {
                    model.space = CoeffSpace::BsplineOrtho;
                    coeffs = energy_coeffs;
                }
            }
        }
    } catch (const std::runtime_error& e) {
        step_fail(2, "decomposition", e.what());
    } catch (const std::invalid_argument& e) {
        step_fail(2, "decomposition", e.what());
    }
    const Eigen::Index K = coeffs.cols();

    // Step 3: coefficient selection.
    try {
        if (config.selection.kind == SelectionKind::Energy) {
            select::EnergyOptions opt;
            opt.p = config.selection.energy_p;
            opt.k_target = config.selection.k_target;
            model.selection = select::energy_select(energy_coeffs, opt);
            if (model.space == CoeffSpace::BsplineRaw) {
                // Fill means must live in the raw coefficient space.
                const auto discarded = model.selection.discarded_indices();
                for (std::size_t j = 0; j < discarded.size(); ++j)
                    model.selection.fill_means[static_cast<Eigen::Index>(j)] =
                        coeffs.col(discarded[j]).mean();
            }
        } else {
            model.selection = lasso_out.selection;
            const auto discarded = model.selection.discarded_indices();
            for (std::size_t j = 0; j < discarded.size(); ++j)
                model.selection.fill_means[static_cast<Eigen::Index>(j)] =
                    coeffs.col(discarded[j]).mean();
        }
    } catch (const std::exception& e) {
        step_fail(3, "selection", e.what());
    }
    const Eigen::Index k_tilde = model.selection.k_tilde;
    const auto kept = model.selection.kept_indices();

    // Step 4: (metric) PCA on the selected coefficients. When the energy
    // route keeps the full B-spline basis, both pca_metric settings run the
    // metric PCA on the raw coefficients through one computation path; the
    // routes then differ only in the coefficient space used for
    // reconstruction. GP hyperparameter fits amplify even last-bit score
    // perturbations, so sharing the score path is what keeps the Property-1
    // route equivalence exact at prediction level.
    try {
        const bool full_basis_energy = is_bspline &&
                                       config.selection.kind == SelectionKind::Energy &&
                                       k_tilde == K;
        if (full_basis_energy) {
            fpca::FpcaModel fit = fpca::fit_fpca(select_columns(raw_coeffs, kept),
                                                 gram->restricted(kept), config.n_pc);
            if (model.space == CoeffSpace::BsplineOrtho)
                model.pca = to_ortho_space(fit, model.selection.ranked_indices, *gram);
            else
                model.pca = std::move(fit);
        } else if (model.space == CoeffSpace::BsplineRaw) {
            model.pca = fpca::fit_fpca(select_columns(coeffs, kept), gram->restricted(kept),
                                       config.n_pc);
        } else {
            model.pca = fpca::fit_fpca(select_columns(coeffs, kept), Eigen::MatrixXd(),
                                       config.n_pc);
        }
    } catch (const std::exception& e) {
        step_fail(4, "pca", e.what());
    }
    if (!(model.pca.eigenvalues.sum() > 0.0))
        step_fail(4, "pca", "degenerate ensemble: coefficient matrix has zero variance");

    // Step 5: one GP per retained principal component.
    try {
        for (Eigen::Index l = 0; l < config.n_pc; ++l) {
            gp::GpConfig gcfg = config.gp;
            gcfg.seed = gp_seed_for(config.seed, l);
            model.gps.push_back(
                gp::fit_gp(ensemble.inputs(), model.pca.scores.col(l), ensemble.bounds(), gcfg));
        }
    } catch (const std::exception& e) {
        step_fail(5, "gp-fit", e.what());
    }

    // Map-space response of each component direction (for variance maps).
    model.variance_patterns.resize(config.n_pc, grid.pixels());
    for (Eigen::Index l = 0; l < config.n_pc; ++l) {
        Eigen::VectorXd embedded = Eigen::VectorXd::Zero(K);
        const Eigen::MatrixXd& vecs =
            model.space == CoeffSpace::BsplineRaw ? model.pca.eigvec_orig : model.pca.eigvec_ortho;
        for (Eigen::Index j = 0; j < k_tilde; ++j) embedded[kept[std::size_t(j)]] = vecs(j, l);
        const Eigen::MatrixXd pattern = model.coefficients_to_map(embedded);
        for (Eigen::Index r = 0; r < grid.rows; ++r)
            model.variance_patterns.block(l, r * grid.cols, 1, grid.cols) = pattern.row(r);
    }

    // Stored truncation residuals (basis + selection + PCA truncation).
    model.truncation_residual_inf.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd full = model.full_coefficients(model.pca.scores.row(i).transpose());
        const Eigen::MatrixXd recon = model.coefficients_to_map(full);
        model.truncation_residual_inf[i] =
            (recon - ensemble.maps()[std::size_t(i)].values()).cwiseAbs().maxCoeff();
    }

    TrainReport& rep = model.report;
    rep.pixels = grid.pixels();
    rep.basis_size = K;
    rep.k_tilde = k_tilde;
    rep.n_pc = config.n_pc;
    rep.retention_pct = 100.0 * double(k_tilde) / double(K);
    rep.retained_energy = 0.0;
    for (const auto idx : kept) rep.retained_energy += model.selection.lambda[idx];
    rep.explained_inertia = model.pca.explained_inertia();
    for (const auto& g : model.gps) {
        rep.gp_nll.push_back(g.diag.nll);
        rep.gp_grad_norm.push_back(g.diag.grad_norm);
        rep.gp_at_bound.push_back(g.diag.at_bound);
    }
    std::ostringstream chain;
    chain << grid.pixels() << " px -> K=" << K << " -> K~=" << k_tilde << " -> n_pc=" << config.n_pc;
    rep.dimension_chain = chain.str();
    rep.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return model;
}

sensitivity::GsiEstimate run_sensitivity(const SurrogateModel& model, Eigen::Index n0,
                                         std::uint64_t seed, const SensitivityOptions& opt) {
    const Eigen::Index d = model.dim();
    const Eigen::Index n_pc = model.pca.n_pc;
    auto [a, b] = sensitivity::base_samples(n0, d, seed, opt.sampling, model.bounds);

    std::vector<sensitivity::PickFreezeValues> vals;
    Eigen::MatrixXd first_tab(n_pc, d), total_tab(n_pc, d);
    for (Eigen::Index l = 0; l < n_pc; ++l) {
        const auto& gpm = model.gps[std::size_t(l)];
        sensitivity::BatchFn fn = [&gpm](const Eigen::MatrixXd& pts) {
            return gp::predict_mean(gpm, pts);
        };
        vals.push_back(sensitivity::evaluate_pick_freeze(fn, a, b));
        Eigen::VectorXd f, t;
        std::vector<Eigen::Index> all(static_cast<std::size_t>(n0));
        for (Eigen::Index r = 0; r < n0; ++r) all[std::size_t(r)] = r;
        sensitivity::estimate_on_rows(vals.back(), all, f, t, true);
        first_tab.row(l) = f.transpose();
        total_tab.row(l) = t.transpose();
    }

    const Eigen::VectorXd retained = model.pca.eigenvalues.head(n_pc);
    const double discarded =
        opt.include_discarded_inertia ? model.pca.eigenvalues.tail(model.pca.eigenvalues.size() - n_pc).sum()
                                      : 0.0;
    sensitivity::GsiEstimate gsi =
        sensitivity::gsi_from_components(first_tab, total_tab, retained, discarded);
    gsi.n0 = n0;

    if (opt.bootstrap > 0) {
        Rng rng(seed ^ 0x6a09e667f3bcc908ULL);
        const double denom = retained.sum() + discarded;
        std::vector<std::vector<double>> f_reps(static_cast<std::size_t>(d));
        std::vector<std::vector<double>> t_reps(static_cast<std::size_t>(d));
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n0));
        Eigen::VectorXd f, t;
        for (int rep = 0; rep < opt.bootstrap; ++rep) {
            for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(std::uint64_t(n0)));
            Eigen::VectorXd gf = Eigen::VectorXd::Zero(d), gt = Eigen::VectorXd::Zero(d);
            for (Eigen::Index l = 0; l < n_pc; ++l) {
                sensitivity::estimate_on_rows(vals[std::size_t(l)], rows, f, t, false);
                gf += retained[l] / denom * f;
                gt += retained[l] / denom * t;
            }
            for (Eigen::Index i = 0; i < d; ++i) {
                f_reps[std::size_t(i)].push_back(gf[i]);
                t_reps[std::size_t(i)].push_back(gt[i]);
            }
        }
        auto pct = [](std::vector<double>& v, double p) {
            std::sort(v.begin(), v.end());
            const double h = (double(v.size()) - 1.0) * p;
            const auto i = static_cast<std::size_t>(h);
            if (i + 1 >= v.size()) return v.back();
            return v[i] + (h - double(i)) * (v[i + 1] - v[i]);
        };
        gsi.first_ci.resize(d, 2);
        gsi.total_ci.resize(d, 2);
        for (Eigen::Index i = 0; i < d; ++i) {
            gsi.first_ci(i, 0) = pct(f_reps[std::size_t(i)], 0.025);
            gsi.first_ci(i, 1) = pct(f_reps[std::size_t(i)], 0.975);
            gsi.total_ci(i, 0) = pct(t_reps[std::size_t(i)], 0.025);
            gsi.total_ci(i, 1) = pct(t_reps[std::size_t(i)], 0.975);
        }
    }
    return gsi;
}

// ---------------------------------------------------------------- bundles

namespace {

constexpr int kFormatMajor = 1;
constexpr int kFormatMinor = 0;

struct PayloadWriter {
    std::filesystem::path dir;
    json table = json::object();

    void add(const std::string& name, const Eigen::MatrixXd& m) {
        if (m.size() == 0) return;
        const std::string file = name + ".bin";
        grid::write_grid_file(dir / file, m);
        table[name] = {{"file", file},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"fnv1a64", fnv1a_file(dir / file)}};
    }
};

struct PayloadReader {
    std::filesystem::path dir;
    const json* table;

    bool has(const std::string& name) const { return table->contains(name); }

    Eigen::MatrixXd get(const std::string& name) const {
        if (!table->contains(name))
            throw std::runtime_error("model bundle: missing payload '" + name + "'");
        const json& e = (*table)[name];
        const auto path = dir / e.at("file").get<std::string>();
        const std::string expect = e.at("fnv1a64").get<std::string>();
        const std::string actual = fnv1a_file(path);
        if (actual != expect)
            throw std::runtime_error("model bundle: payload '" + name + "' (" + path.string() +
                                     ") hash mismatch: expected " + expect + ", got " + actual);
        return grid::read_grid_file(path);
    }
};

std::string space_name(CoeffSpace s) {
    switch (s) {
        case CoeffSpace::Wavelet: return "wavelet";
        case CoeffSpace::BsplineOrtho: return "bspline-ortho";
        case CoeffSpace::BsplineRaw: return "bspline-raw";
    }
    return "?";
}

CoeffSpace space_from(const std::string& s) {
    if (s == "wavelet") return CoeffSpace::Wavelet;
    if (s == "bspline-ortho") return CoeffSpace::BsplineOrtho;
    if (s == "bspline-raw") return CoeffSpace::BsplineRaw;
    throw std::runtime_error("model bundle: unknown coefficient space '" + s + "'");
}

}  // namespace

void save_model(const SurrogateModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    PayloadWriter w{dir};

    const Eigen::Index K = model.selection.lambda.size();
    Eigen::MatrixXd ranked(K, 1);
    for (Eigen::Index i = 0; i < K; ++i)
        ranked(i, 0) = double(model.selection.ranked_indices[std::size_t(i)]);
    w.add("sel_ranked", ranked);
    w.add("sel_lambda", model.selection.lambda);
    w.add("sel_fill", model.selection.fill_means);
    w.add("pca_mean", model.pca.mean_coeff);
    w.add("pca_eigenvalues", model.pca.eigenvalues);
    w.add("pca_eigvec_ortho", model.pca.eigvec_ortho);
    w.add("pca_eigvec_orig", model.pca.eigvec_orig);
    w.add("pca_scores", model.pca.scores);
    if (!model.pca.identity_metric) w.add("pca_chol", model.pca.chol_R);
    w.add("var_patterns", model.variance_patterns);
    w.add("trunc_residual", model.truncation_residual_inf);

    json gps = json::array();
    for (std::size_t l = 0; l < model.gps.size(); ++l) {
        const auto& g = model.gps[l];
        if (l == 0) w.add("gp_x_norm", g.x_norm);
        const std::string p = "gp" + std::to_string(l) + "_";
        w.add(p + "y", g.y_std);
        w.add(p + "theta", g.theta);
        w.add(p + "alpha", g.alpha_w);
        w.add(p + "chol", g.chol_l);
        gps.push_back({{"y_mean", g.y_mean},
                       {"y_scale", g.y_scale},
                       {"sigma2_f", g.sigma2_f},
                       {"beta", g.beta},
                       {"nugget", g.nugget},
                       {"constant", g.constant_model}});
    }

    json manifest;
    manifest["format"] = {{"name", "fsens-surrogate"}, {"major", kFormatMajor}, {"minor", kFormatMinor}};
    manifest["config"] = config_to_json(model.config);
    manifest["config_hash"] = model.config_hash;
    manifest["grid"] = grid_to_json(model.grid);
    manifest["bounds"] = bounds_to_json(model.bounds);
    manifest["space"] = space_name(model.space);
    manifest["selection"] = {{"k_tilde", model.selection.k_tilde},
                             {"mode", model.selection.mode == select::Mode::Energy ? "energy" : "lasso"}};
    manifest["pca"] = {{"n_pc", model.pca.n_pc}, {"identity_metric", model.pca.identity_metric}};
    manifest["gps"] = gps;
    manifest["payloads"] = w.table;

    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

SurrogateModel load_model(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
    json manifest = json::parse(in);

    const int major = manifest.at("format").at("major").get<int>();
    if (major != kFormatMajor)
        throw std::runtime_error("model bundle format major version " + std::to_string(major) +
                                 " is not supported by this build (expected " +
                                 std::to_string(kFormatMajor) + ")");

    SurrogateModel model;
    model.config = config_from_json(manifest.at("config"));
    model.config_hash = manifest.at("config_hash").get<std::string>();
    model.grid = grid_from_json(manifest.at("grid"));
    model.bounds = bounds_from_json(manifest.at("bounds"));
    model.space = space_from(manifest.at("space").get<std::string>());

    const json& payloads = manifest.at("payloads");
    PayloadReader r{dir, &payloads};

    const Eigen::MatrixXd ranked = r.get("sel_ranked");
    model.selection.ranked_indices.resize(static_cast<std::size_t>(ranked.rows()));
    for (Eigen::Index i = 0; i < ranked.rows(); ++i)
        model.selection.ranked_indices[std::size_t(i)] = static_cast<Eigen::Index>(ranked(i, 0));
    model.selection.k_tilde = manifest.at("selection").at("k_tilde").get<std::int64_t>();
    model.selection.mode = manifest.at("selection").at("mode").get<std::string>() == "energy"
                               ? select::Mode::Energy
                               : select::Mode::Lasso;
    model.selection.lambda = r.get("sel_lambda");
    model.selection.fill_means =
        r.has("sel_fill") ? Eigen::VectorXd(r.get("sel_fill")) : Eigen::VectorXd();

    model.pca.n_pc = manifest.at("pca").at("n_pc").get<std::int64_t>();
    model.pca.identity_metric = manifest.at("pca").at("identity_metric").get<bool>();
    model.pca.mean_coeff = r.get("pca_mean");
    model.pca.eigenvalues = r.get("pca_eigenvalues");
    model.pca.eigvec_ortho = r.get("pca_eigvec_ortho");
    model.pca.eigvec_orig = r.get("pca_eigvec_orig");
    model.pca.scores = r.get("pca_scores");
    if (!model.pca.identity_metric) model.pca.chol_R = r.get("pca_chol");

    model.variance_patterns = r.get("var_patterns");
    model.truncation_residual_inf = r.get("trunc_residual");

    const json& gps = manifest.at("gps");
    const Eigen::MatrixXd x_norm = r.get("gp_x_norm");
    for (std::size_t l = 0; l < gps.size(); ++l) {
        gp::GpModel g;
        g.x_norm = x_norm;
        g.input_bounds = model.bounds;
        const std::string p = "gp" + std::to_string(l) + "_";
        g.y_std = r.get(p + "y");
        g.theta = r.get(p + "theta");
        g.alpha_w = r.get(p + "alpha");
        g.chol_l = r.get(p + "chol");
        const json& e = gps[l];
        g.y_mean = e.at("y_mean").get<double>();
        g.y_scale = e.at("y_scale").get<double>();
        g.sigma2_f = e.at("sigma2_f").get<double>();
        g.beta = e.at("beta").get<double>();
        g.nugget = e.at("nugget").get<double>();
        g.constant_model = e.at("constant").get<bool>();
        model.gps.push_back(std::move(g));
    }
    return model;
}

RunSpec parse_run_spec(const std::string& json_text) {
    json j = json::parse(json_text);
    RunSpec spec;
    spec.pipeline = config_from_json(j.at("pipeline"));
    if (j.contains("grid")) spec.grid = grid_from_json(j.at("grid"));
    if (j.contains("bounds")) spec.bounds = bounds_from_json(j.at("bounds"));
    return spec;
}

std::string run_spec_to_json(const RunSpec& spec) {
    json j;
    j["pipeline"] = config_to_json(spec.pipeline);
    j["grid"] = grid_to_json(spec.grid);
    j["bounds"] = bounds_to_json(spec.bounds);
    return j.dump(2);
}

std::string config_hash_of(const PipelineConfig& config) {
    const std::string text = config_to_json(config).dump();
    return hex64(fnv1a(text.data(), text.size()));
}

}  // namespace fsens::pipeline
