// Command-line front end: training, evaluation, probing, sampling and
// design optimization over point-cloud physics models.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pinnflow/batch.hpp"
#include "pinnflow/evaluation.hpp"
#include "pinnflow/rng.hpp"
#include "pinnflow/runconfig.hpp"
#include "pinnflow/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace pinnflow;

namespace {

struct CommonArgs {
    std::string config;
    std::string out_override;
    std::string model_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool quiet = false;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_model) {
    cmd->add_option("--config", args.config, "run configuration file")->required();
    cmd->add_option("--out", args.out_override, "output directory (overrides config out_dir)");
    cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
        args.seed_given = true;
    });
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
    cmd->add_option("--threads", args.threads, "worker threads (default 1 for reproducible runs)")
        ->check(CLI::PositiveNumber);
    if (needs_model)
        cmd->add_option("--model", args.model_path, "model checkpoint")->required();
}

RunConfig load_config(CommonArgs& args) {
    RunConfig cfg = parse_run_config(args.config);
    if (args.seed_given) cfg.seed = args.seed;
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (!args.quiet)
        for (const std::string& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
#ifdef _OPENMP
    omp_set_num_threads(args.threads);
#endif
    fs::create_directories(cfg.out_dir);
    return cfg;
}

PointCloud require_cloud(const RunConfig& cfg) {
    if (cfg.cloud.empty()) throw ValidationError("cloud: required for this command");
    return load_cloud(cfg.cloud);
}

int run_train(CommonArgs& args) {
    RunConfig cfg = load_config(args);
    PointCloud domain = require_cloud(cfg);
    PointCloud data;
    const bool has_data = !cfg.data_cloud.empty();
    if (has_data) data = load_cloud(cfg.data_cloud);

    Model model = build_model(cfg);
    BatchEvaluator evaluator(model, domain, has_data ? &data : nullptr, cfg.boundaries);
    TrainConfig tc = build_train_config(cfg, has_data);
    tc.checkpoint_dir = cfg.out_dir;

    TrainHistory history = train(evaluator, model, tc);
    save_history_csv(cfg.out_dir + "/history.csv", history);
    save_model_checkpoint(cfg.out_dir + "/model.ckpt", model);

    if (!args.quiet && !history.records.empty()) {
        const TrainRecord& last = history.records.back();
        std::cout << "trained " << last.step << " steps, total loss " << fmt_g17(last.total)
                  << '\n';
        for (const auto& [k, v] : last.losses)
            std::cout << "  " << k << " = " << fmt_g17(v) << " (lambda "
                      << fmt_g17(last.lambdas.count(k) ? last.lambdas.at(k) : 1.0) << ")\n";
        std::cout << "model: " << cfg.out_dir << "/model.ckpt\n";
    }
    return 0;
}

int run_eval(CommonArgs& args) {
    RunConfig cfg = load_config(args);
    PointCloud cloud = require_cloud(cfg);
    Model model = load_model_checkpoint(args.model_path);
    MetricReport report = compute_metrics(model, cloud, cfg.eval.thresholds);
    save_metrics_csv(cfg.out_dir + "/metrics.csv", report);
    save_metrics_summary(cfg.out_dir + "/summary.txt", report);
    if (!args.quiet) {
        for (const FieldMetrics& fm : report.fields)
            std::cout << fm.field << " mse " << fmt_g17(fm.mse) << '\n';
        if (report.has_velocity)
            std::cout << "velocity mse " << fmt_g17(report.velocity_mse) << '\n';
    }
    return 0;
}

int run_probe(CommonArgs& args) {
    RunConfig cfg = load_config(args);
    Model model = load_model_checkpoint(args.model_path);
    if (cfg.probe.start.empty() || cfg.probe.end.empty())
        throw ValidationError("probe.start / probe.end: required for probe");
    std::size_t sub = cfg.probe.region.empty() ? 0 : model.subdomain_index(cfg.probe.region);
    ProbeResult probe = line_probe(model, sub, cfg.probe.start, cfg.probe.end, cfg.probe.n);
    save_probe_csv(cfg.out_dir + "/probe.csv", probe);
    if (!args.quiet)
        std::cout << "probe: " << probe.size() << " samples -> " << cfg.out_dir << "/probe.csv\n";
    return 0;
}

int run_sample(CommonArgs& args) {
    RunConfig cfg = load_config(args);
    if (cfg.sample.mode == "doe") {
        DesignSpace space = load_design_space(cfg.sample.design_space);
        auto rows = maximin_lhs(space, cfg.sample.n, cfg.seed, cfg.sample.iters);
        save_doe(cfg.out_dir + "/doe.csv", space, rows);
        if (!args.quiet)
            std::cout << "doe: " << rows.size() << " designs -> " << cfg.out_dir << "/doe.csv\n";
        return 0;
    }
    PointCloud cloud = sample_domain(cfg.sample.shape, cfg.sample.n_interior,
                                     cfg.sample.n_boundary, cfg.sample.n_interface,
                                     cfg.sample.wall_refine, cfg.seed);
    save_cloud(cfg.out_dir + "/cloud.csv", cloud);
    if (!args.quiet)
        std::cout << "sampled " << cloud.size() << " points -> " << cfg.out_dir << "/cloud.csv\n";
    return 0;
}

int run_sparse_select(CommonArgs& args) {
    RunConfig cfg = load_config(args);
    PointCloud cloud = require_cloud(cfg);
    PointCloud data = select_sparse_data(cloud, cfg.sparse_fraction, cfg.seed);
    save_cloud(cfg.out_dir + "/data.csv", data);
    if (!args.quiet)
        std::cout << "selected " << data.size() << " of " << cloud.size() << " points -> "
                  << cfg.out_dir << "/data.csv\n";
    return 0;
}

int run_check_grad(CommonArgs& args) {
    RunConfig cfg = load_config(args);
    Model model = build_model(cfg);
    Rng rng(mix_seed(cfg.seed, 0x47524144ull));
    const double h = 1e-4;
    double worst_d1 = 0.0, worst_d2 = 0.0;
    std::FILE* rep = std::fopen((cfg.out_dir + "/gradcheck.txt").c_str(), "w");
    if (!rep) throw IoError("cannot write " + cfg.out_dir + "/gradcheck.txt");
    for (const Subdomain& sd : model.subdomains) {
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> x(sd.config.input_dim);
            for (double& v : x) v = rng.uniform(-1.0, 1.0);
            FiniteDiffReport r =
                finite_diff_check(sd.params, sd.config, sd.norm, x, model.spatial_dim, h);
            worst_d1 = std::max(worst_d1, r.max_rel_d1);
            worst_d2 = std::max(worst_d2, r.max_rel_d2);
            std::fprintf(rep, "%s trial %d: d1 %.3e d2 %.3e\n",
                         sd.region.empty() ? "main" : sd.region.c_str(), trial, r.max_rel_d1,
                         r.max_rel_d2);
        }
    }
    std::fprintf(rep, "worst: d1 %.3e d2 %.3e\n", worst_d1, worst_d2);
    std::fclose(rep);
    if (!args.quiet)
        std::cout << "derivative check: worst d1 " << fmt_g17(worst_d1) << ", worst d2 "
                  << fmt_g17(worst_d2) << '\n';
    if (worst_d1 > 1e-5 || worst_d2 > 1e-3) {
        std::cerr << "derivative mismatch beyond tolerance\n";
        return 1;
    }
    return 0;
}

int run_optimize(CommonArgs& args) {
    RunConfig cfg = load_config(args);
    if (cfg.pso.design_space.empty())
        throw ValidationError("pso.design_space: required for optimize");
    if (cfg.pso.objective.empty()) throw ValidationError("pso.objective: required for optimize");
    DesignSpace space = load_design_space(cfg.pso.design_space);

    auto axis_index = [&](const std::string& name) {
        for (std::size_t k = 0; k < space.axes.size(); ++k)
            if (space.axes[k].name == name) return k;
        throw ValidationError("pso: unknown design axis '" + name + "'");
    };

    // metric constraints evaluate the surrogate on a fixed cloud with the
    // design point appended to every input
    Model model;
    PointCloud eval_cloud;
    bool model_loaded = false;
    auto need_surrogate = [&] {
        if (model_loaded) return;
        if (cfg.pso.model.empty() || cfg.pso.eval_cloud.empty())
            throw ValidationError("pso.model / pso.eval_cloud: required for metric constraints");
        model = load_model_checkpoint(cfg.pso.model);
        eval_cloud = load_cloud(cfg.pso.eval_cloud);
        model_loaded = true;
    };

    std::vector<std::string> parts = split(cfg.pso.objective, ':');
    const std::size_t obj_axis = axis_index(parts[1]);
    const double sense = parts[2] == "max" ? -1.0 : 1.0;
    auto objective = [obj_axis, sense](std::span<const double> u) { return sense * u[obj_axis]; };

    std::vector<ConstraintSpec> constraints;
    for (const auto& [name, text] : cfg.pso.constraints) {
        auto le = text.find("<=");
        if (le == std::string::npos)
            throw ValidationError("pso.constraint." + name + ": expected '<expr> <= <bound>'");
        std::string expr = trim(text.substr(0, le));
        std::string bound_text = trim(text.substr(le + 2));
        ConstraintSpec spec;
        spec.name = name;
        char* end = nullptr;
        spec.bound = std::strtod(bound_text.c_str(), &end);
        if (end != bound_text.c_str() + bound_text.size() || !std::isfinite(spec.bound))
            throw ValidationError("pso.constraint." + name + ": bad bound '" + bound_text + "'");
        std::vector<std::string> ep = split(expr, ':');
        if (ep.size() == 2 && ep[0] == "axis") {
            const std::size_t k = axis_index(ep[1]);
            spec.metric = [k](std::span<const double> u) { return u[k]; };
        } else if (ep.size() == 3 && ep[0] == "metric" && ep[1] == "delta_p") {
            need_surrogate();
            const std::string tag = ep[2];
            spec.metric = [&model, &eval_cloud, tag](std::span<const double> u) {
                return mean_boundary_pressure(model, eval_cloud, tag, u);
            };
        } else if ((ep.size() == 2 || ep.size() == 3) && ep[0] == "metric" && ep[1] == "t_max") {
            need_surrogate();
            const std::string region = ep.size() == 3 ? ep[2] : "";
            spec.metric = [&model, &eval_cloud, region](std::span<const double> u) {
                return max_region_temperature(model, eval_cloud, region, u);
            };
        } else {
            throw ValidationError("pso.constraint." + name + ": unknown expression '" + expr + "'");
        }
        constraints.push_back(std::move(spec));
    }

    PsoConfig pc = cfg.pso.config;
    pc.seed = cfg.seed;
    PsoResult result = optimize(objective, constraints, space, pc);
    save_snapshots_csv(cfg.out_dir + "/swarm.csv", space, result.snapshots);

    std::FILE* best = std::fopen((cfg.out_dir + "/best.csv").c_str(), "w");
    if (!best) throw IoError("cannot write " + cfg.out_dir + "/best.csv");
    for (std::size_t k = 0; k < space.axes.size(); ++k)
        std::fprintf(best, "%s%s", k ? "," : "", space.axes[k].name.c_str());
    std::fprintf(best, ",objective,feasible\n");
    for (std::size_t k = 0; k < result.best_x.size(); ++k)
        std::fprintf(best, "%s%s", k ? "," : "", fmt_g17(result.best_x[k]).c_str());
    std::fprintf(best, ",%s,%d\n", fmt_g17(result.best_f).c_str(), result.feasible ? 1 : 0);
    std::fclose(best);

    if (!args.quiet) {
        std::cout << (result.feasible ? "best feasible design:" : "no feasible design; best penalized:");
        for (std::size_t k = 0; k < result.best_x.size(); ++k)
            std::cout << ' ' << space.axes[k].name << '=' << fmt_g17(result.best_x[k]);
        std::cout << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point-cloud physics training toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model per the config");
    CLI::App* eval_cmd = app.add_subcommand("eval", "error metrics against a reference cloud");
    CLI::App* probe_cmd = app.add_subcommand("probe", "sample a model along a line segment");
    CLI::App* sample_cmd = app.add_subcommand("sample", "generate a point cloud or DoE plan");
    CLI::App* sparse_cmd = app.add_subcommand("sparse-select", "pick a sparse data subset");
    CLI::App* grad_cmd = app.add_subcommand("check-grad", "finite-difference derivative check");
    CLI::App* opt_cmd = app.add_subcommand("optimize", "constrained swarm search over a design space");
    add_common(train_cmd, args, false);
    add_common(eval_cmd, args, true);
    add_common(probe_cmd, args, true);
    add_common(sample_cmd, args, false);
    add_common(sparse_cmd, args, false);
    add_common(grad_cmd, args, false);
    add_common(opt_cmd, args, false);

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed()) return run_train(args);
        if (eval_cmd->parsed()) return run_eval(args);
        if (probe_cmd->parsed()) return run_probe(args);
        if (sample_cmd->parsed()) return run_sample(args);
        if (sparse_cmd->parsed()) return run_sparse_select(args);
        if (grad_cmd->parsed()) return run_check_grad(args);
        if (opt_cmd->parsed()) return run_optimize(args);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericFault& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
