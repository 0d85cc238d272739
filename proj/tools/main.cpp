// fsens: surrogate modelling of simulators with 2-D map output and
// variance-based sensitivity analysis on the surrogate.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fsens/benchfn.hpp"
#include "fsens/design.hpp"
#include "fsens/grid.hpp"
#include "fsens/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fsens;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

pipeline::RunSpec load_run_spec(const std::string& config_path) {
    return pipeline::parse_run_spec(read_file(config_path));
}

std::vector<Bounds1d> parse_bounds_flag(const std::string& text, Eigen::Index d) {
    // "lo:hi" applied to all dims, or "lo1:hi1,lo2:hi2,..."
    std::vector<Bounds1d> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw CLI::ValidationError("--bounds expects lo:hi pairs");
        out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    }
    if (out.size() == 1 && d > 1) out.assign(static_cast<std::size_t>(d), out.front());
    if (static_cast<Eigen::Index>(out.size()) != d)
        throw CLI::ValidationError("--bounds count does not match dimension");
    return out;
}

void write_gsi_csv(const fs::path& path, const sensitivity::GsiEstimate& gsi) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "index,input,first_order,first_lo,first_hi,total,total_lo,total_hi\n";
    const bool ci = gsi.first_ci.size() > 0;
    for (Eigen::Index i = 0; i < gsi.first_order.size(); ++i) {
        out << i + 1 << ",x" << i + 1 << ',' << gsi.first_order[i] << ','
            << (ci ? std::to_string(gsi.first_ci(i, 0)) : "") << ','
            << (ci ? std::to_string(gsi.first_ci(i, 1)) : "") << ',' << gsi.total[i] << ','
            << (ci ? std::to_string(gsi.total_ci(i, 0)) : "") << ','
            << (ci ? std::to_string(gsi.total_ci(i, 1)) : "") << '\n';
    }
}

void emit_pgm(const fs::path& path, const Eigen::MatrixXd& m, const std::string& label) {
    const auto range = grid::write_pgm(path, m);
    std::cout << label << " heatmap " << path.string() << " (min=" << range[0]
              << ", max=" << range[1] << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional-basis surrogate modelling and sensitivity analysis for 2-D map outputs"};
    app.require_subcommand(1);

    // ---- gen-design ----------------------------------------------------
    auto* gen_design = app.add_subcommand("gen-design", "Generate a design of experiments (CSV)");
    int gd_n = 200, gd_dim = 8;
    std::uint64_t gd_seed = 0;
    std::string gd_out = "design.csv", gd_method = "maximin", gd_bounds = "-1:5";
    gen_design->add_option("--n", gd_n, "number of points");
    gen_design->add_option("--dim", gd_dim, "input dimension");
    gen_design->add_option("--seed", gd_seed, "RNG seed");
    gen_design->add_option("--out", gd_out, "output CSV path");
    gen_design->add_option("--method", gd_method, "maximin | lhs | uniform");
    gen_design->add_option("--bounds", gd_bounds, "lo:hi (all dims) or per-dim list");

    // ---- gen-bench -----------------------------------------------------
    auto* gen_bench = app.add_subcommand("gen-bench", "Evaluate Campbell2D over a design");
    std::string gb_design = "design.csv", gb_out_dir = "maps";
    int gb_rows = 64, gb_cols = 64;
    bool gb_csv = false;
    gen_bench->add_option("--design", gb_design, "design CSV (8 columns)");
    gen_bench->add_option("--out-dir", gb_out_dir, "output map directory");
    gen_bench->add_option("--rows", gb_rows, "grid rows");
    gen_bench->add_option("--cols", gb_cols, "grid cols");
    gen_bench->add_flag("--csv", gb_csv, "write CSV maps instead of binary .grid");

    // ---- train ---------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train a surrogate model");
    std::string tr_config, tr_design, tr_maps, tr_model_out = "model";
    std::int64_t tr_k_target = -1, tr_n_pc = -1;
    std::int64_t tr_seed = -1;
    double tr_p = -1.0;
    train_cmd->add_option("--config", tr_config, "run configuration JSON")->required();
    train_cmd->add_option("--design", tr_design, "design CSV")->required();
    train_cmd->add_option("--maps-dir", tr_maps, "map directory")->required();
    train_cmd->add_option("--model-out", tr_model_out, "output bundle directory");
    train_cmd->add_option("--k-target", tr_k_target, "override selection k_target");
    train_cmd->add_option("--p", tr_p, "override selection energy threshold p");
    train_cmd->add_option("--n-pc", tr_n_pc, "override retained component count");
    train_cmd->add_option("--seed", tr_seed, "override pipeline seed");

    // ---- cv-tune -------------------------------------------------------
    auto* cv_cmd = app.add_subcommand("cv-tune", "k-fold cross-validation over a config grid");
    std::string cv_config, cv_design, cv_maps, cv_out = "cv_report.csv";
    int cv_k = 10;
    std::uint64_t cv_seed = 0;
    std::string cv_ktargets = "", cv_npcs = "";
    cv_cmd->add_option("--config", cv_config, "base run configuration JSON")->required();
    cv_cmd->add_option("--design", cv_design, "design CSV")->required();
    cv_cmd->add_option("--maps-dir", cv_maps, "map directory")->required();
    cv_cmd->add_option("--k", cv_k, "fold count");
    cv_cmd->add_option("--seed", cv_seed, "fold shuffle seed");
    cv_cmd->add_option("--k-targets", cv_ktargets, "comma list of K~ values to sweep");
    cv_cmd->add_option("--n-pcs", cv_npcs, "comma list of n_pc values to sweep");
    cv_cmd->add_option("--out", cv_out, "CV report CSV path (JSON summary alongside)");

    // ---- predict ---------------------------------------------------------
    auto* pred_cmd = app.add_subcommand("predict", "Predict maps at new inputs");
    std::string pr_model, pr_points, pr_out_dir = "predictions";
    bool pr_variance = false, pr_csv = false;
    pred_cmd->add_option("--model", pr_model, "model bundle directory")->required();
    pred_cmd->add_option("--points", pr_points, "CSV of query points")->required();
    pred_cmd->add_option("--out-dir", pr_out_dir, "output directory");
    pred_cmd->add_flag("--variance", pr_variance, "also write per-pixel GP variance maps");
    pred_cmd->add_flag("--csv", pr_csv, "write CSV maps instead of binary .grid");

    // ---- eval ------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "RMSE map + Q2 against a test ensemble");
    std::string ev_model, ev_design, ev_maps, ev_prefix = "eval";
    eval_cmd->add_option("--model", ev_model, "model bundle directory")->required();
    eval_cmd->add_option("--design", ev_design, "test design CSV")->required();
    eval_cmd->add_option("--maps-dir", ev_maps, "test map directory")->required();
    eval_cmd->add_option("--out-prefix", ev_prefix, "output file prefix");

    // ---- sa --------------------------------------------------------------
    auto* sa_cmd = app.add_subcommand("sa", "Generalized sensitivity indices on the surrogate");
    std::string sa_model, sa_prefix = "sa";
    Eigen::Index sa_n0 = 10000;
    std::uint64_t sa_seed = 0;
    int sa_bootstrap = 200;
    bool sa_pointwise = false, sa_discarded = false;
    Eigen::Index sa_pointwise_n0 = 2000;
    sa_cmd->add_option("--model", sa_model, "model bundle directory")->required();
    sa_cmd->add_option("--n0", sa_n0, "base sample size");
    sa_cmd->add_option("--seed", sa_seed, "RNG seed");
    sa_cmd->add_option("--bootstrap", sa_bootstrap, "bootstrap replicates (0 disables CIs)");
    sa_cmd->add_flag("--pointwise", sa_pointwise, "also emit per-pixel index maps");
    sa_cmd->add_option("--pointwise-n0", sa_pointwise_n0, "base sample size for pointwise maps");
    sa_cmd->add_flag("--full-inertia", sa_discarded,
                     "include discarded-component inertia in the GSI denominator");
    sa_cmd->add_option("--out-prefix", sa_prefix, "output file prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_design) {
            const auto bounds = parse_bounds_flag(gd_bounds, gd_dim);
            design::Design des;
            if (gd_method == "maximin")
                des = design::lhs_maximin(gd_n, gd_dim, gd_seed, bounds);
            else if (gd_method == "lhs")
                des = design::lhs_random(gd_n, gd_dim, gd_seed, bounds, false);
            else if (gd_method == "uniform")
                des = design::uniform_sample(gd_n, gd_dim, gd_seed, bounds);
            else
                throw std::runtime_error("unknown design method '" + gd_method + "'");
            grid::write_csv_matrix(gd_out, des.scaled);
            std::cout << "wrote " << gd_out << " (n=" << gd_n << ", d=" << gd_dim
                      << ", maximin criterion=" << des.criterion << ")\n";
        } else if (*gen_bench) {
            const Eigen::MatrixXd design_m = grid::read_csv_matrix(gb_design);
            GridSpec grid_spec{gb_rows, gb_cols, benchfn::Campbell2dSpec::domain()};
            const Ensemble ens = benchfn::campbell2d_ensemble(design_m, grid_spec);
            grid::save_ensemble(ens, fs::path(gb_out_dir) / "design.csv", gb_out_dir,
                                gb_csv ? grid::MapFormat::Csv : grid::MapFormat::Binary);
            std::cout << "wrote " << ens.size() << " Campbell2D maps (" << gb_rows << "x" << gb_cols
                      << ") to " << gb_out_dir << "\n";
        } else if (*train_cmd) {
            auto spec = load_run_spec(tr_config);
            if (tr_k_target >= 1) {
                spec.pipeline.selection.k_target = tr_k_target;
                spec.pipeline.selection.energy_p = -1.0;
            }
            if (tr_p > 0.0) {
                spec.pipeline.selection.energy_p = tr_p;
                spec.pipeline.selection.k_target = -1;
            }
            if (tr_n_pc >= 1) spec.pipeline.n_pc = tr_n_pc;
            if (tr_seed >= 0) spec.pipeline.seed = static_cast<std::uint64_t>(tr_seed);
            const Ensemble ens = grid::load_ensemble(
                tr_design, tr_maps, spec.grid,
                spec.bounds.empty() ? std::nullopt : std::make_optional(spec.bounds));
            const auto model = pipeline::train(ens, spec.pipeline);
            pipeline::save_model(model, tr_model_out);
            std::cout << model.report.to_text();
            std::cout << "model bundle written to " << tr_model_out << "\n";
        } else if (*cv_cmd) {
            const auto spec = load_run_spec(cv_config);
            const Ensemble ens = grid::load_ensemble(
                cv_design, cv_maps, spec.grid,
                spec.bounds.empty() ? std::nullopt : std::make_optional(spec.bounds));
            std::vector<Eigen::Index> kts;
            std::vector<Eigen::Index> npcs;
            {
                std::stringstream ss(cv_ktargets);
                std::string item;
                while (std::getline(ss, item, ',')) if (!item.empty()) kts.push_back(std::stoll(item));
                std::stringstream ss2(cv_npcs);
                while (std::getline(ss2, item, ',')) if (!item.empty()) npcs.push_back(std::stoll(item));
            }
            if (kts.empty()) kts.push_back(spec.pipeline.selection.k_target);
            if (npcs.empty()) npcs.push_back(spec.pipeline.n_pc);
            std::vector<pipeline::PipelineConfig> grid_cfgs;
            for (auto kt : kts)
                for (auto np : npcs) {
                    auto c = spec.pipeline;
                    c.selection.k_target = kt;
                    c.selection.energy_p = -1.0;
                    c.n_pc = np;
                    grid_cfgs.push_back(c);
                }
            const auto report = benchfn::kfold_tune(ens, grid_cfgs, cv_k, cv_seed);

            std::ofstream csv(cv_out, std::ios::binary);
            csv << "k_target,n_pc";
            for (int f = 0; f < cv_k; ++f) csv << ",fold" << f + 1 << "_rmse";
            csv << ",mean_rmse,q90\n";
            for (const auto& r : report.results) {
                csv << r.config.selection.k_target << ',' << r.config.n_pc;
                for (const auto& f : r.folds) csv << ',' << (f.failed ? "failed" : std::to_string(f.mean_rmse));
                csv << ',' << r.mean_rmse << ',' << r.score << '\n';
            }
            const auto& best = report.best_config();
            json summary;
            summary["best"] = {{"k_target", best.selection.k_target}, {"n_pc", best.n_pc}};
            summary["score"] = report.results[report.best_index].score;
            std::ofstream js(fs::path(cv_out).replace_extension(".json"), std::ios::binary);
            js << summary.dump(2) << '\n';
            std::cout << "cv-tune best: K~=" << best.selection.k_target << " n_pc=" << best.n_pc
                      << " (q90 score " << report.results[report.best_index].score << ")\n";
        } else if (*pred_cmd) {
            const auto model = pipeline::load_model(pr_model);
            const Eigen::MatrixXd pts = grid::read_csv_matrix(pr_points);
            fs::create_directories(pr_out_dir);
            for (Eigen::Index i = 0; i < pts.rows(); ++i) {
                const auto fmt = pr_csv ? grid::MapFormat::Csv : grid::MapFormat::Binary;
                const auto name = grid::map_filename(static_cast<std::size_t>(i), fmt);
                if (pr_variance) {
                    const auto [mean, var] = model.predict_map_with_variance(pts.row(i).transpose());
                    if (pr_csv) {
                        grid::write_csv_matrix(fs::path(pr_out_dir) / name, mean.values());
                        grid::write_csv_matrix(fs::path(pr_out_dir) / ("var_" + name.string()),
                                               var.values());
                    } else {
                        grid::write_grid_file(fs::path(pr_out_dir) / name, mean.values());
                        grid::write_grid_file(fs::path(pr_out_dir) / ("var_" + name.string()),
                                              var.values());
                    }
                } else {
                    const SpatialMap mean = model.predict_map(pts.row(i).transpose());
                    if (pr_csv)
                        grid::write_csv_matrix(fs::path(pr_out_dir) / name, mean.values());
                    else
                        grid::write_grid_file(fs::path(pr_out_dir) / name, mean.values());
                }
            }
            std::cout << "wrote " << pts.rows() << " predicted maps to " << pr_out_dir << "\n";
        } else if (*eval_cmd) {
            const auto model = pipeline::load_model(ev_model);
            const Ensemble test =
                grid::load_ensemble(ev_design, ev_maps, model.grid, model.bounds);
            std::vector<SpatialMap> truth, pred;
            for (Eigen::Index i = 0; i < test.size(); ++i) {
                truth.push_back(test.maps()[std::size_t(i)]);
                pred.push_back(model.predict_map(test.inputs().row(i).transpose()));
            }
            const SpatialMap rmse = benchfn::rmse_map(truth, pred);
            const double q2v = benchfn::q2(truth, pred);
            grid::write_grid_file(ev_prefix + "_rmse.grid", rmse.values());
            emit_pgm(ev_prefix + "_rmse.pgm", rmse.values(), "rmse");
            json metrics;
            metrics["q2"] = q2v;
            metrics["rmse_mean"] = rmse.values().mean();
            metrics["rmse_max"] = rmse.values().maxCoeff();
            std::ofstream js(ev_prefix + "_metrics.json", std::ios::binary);
            js << metrics.dump(2) << '\n';
            std::cout << "Q2 = " << q2v << " (rmse mean " << rmse.values().mean() << ", max "
                      << rmse.values().maxCoeff() << ")\n";
        } else if (*sa_cmd) {
            const auto model = pipeline::load_model(sa_model);
            pipeline::SensitivityOptions opt;
            opt.bootstrap = sa_bootstrap;
            opt.include_discarded_inertia = sa_discarded;
            const auto gsi = pipeline::run_sensitivity(model, sa_n0, sa_seed, opt);
            write_gsi_csv(sa_prefix + "_gsi.csv", gsi);
            json j;
            j["n0"] = gsi.n0;
            j["first_order"] = std::vector<double>(gsi.first_order.data(),
                                                   gsi.first_order.data() + gsi.first_order.size());
            j["total"] = std::vector<double>(gsi.total.data(), gsi.total.data() + gsi.total.size());
            std::ofstream js(sa_prefix + "_gsi.json", std::ios::binary);
            js << j.dump(2) << '\n';
            std::cout << "GSI (first order): " << gsi.first_order.transpose() << "\n";
            std::cout << "GSI (total):       " << gsi.total.transpose() << "\n";
            if (sa_pointwise) {
                sensitivity::MapFn map_fn = [&model](const Eigen::RowVectorXd& x) {
                    return model.predict_map(x.transpose()).values();
                };
                const auto pw = sensitivity::pointwise_sobol(map_fn, model.bounds, model.grid.rows,
                                                             model.grid.cols, sa_pointwise_n0,
                                                             sa_seed + 17);
                for (Eigen::Index i = 0; i < model.dim(); ++i) {
                    emit_pgm(sa_prefix + "_si_x" + std::to_string(i + 1) + ".pgm",
                             pw.first_order[std::size_t(i)], "SI x" + std::to_string(i + 1));
                    emit_pgm(sa_prefix + "_ti_x" + std::to_string(i + 1) + ".pgm",
                             pw.total[std::size_t(i)], "TI x" + std::to_string(i + 1));
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "fsens: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
