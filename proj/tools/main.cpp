// Command-line driver: data generation, training, certification, and
// rollout comparison, wired for reproducible experiment directories.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "lipsysid/config.hpp"
#include "lipsysid/dataset.hpp"
#include "lipsysid/dynamics.hpp"
#include "lipsysid/networks.hpp"
#include "lipsysid/svg.hpp"
#include "lipsysid/training.hpp"
#include "lipsysid/verification.hpp"

namespace fs = std::filesystem;
using namespace lipsysid;

namespace {

SystemSpec system_by_name(const std::string& name) {
    if (name == "linear") return SystemSpec::linear();
    if (name == "vdp") return SystemSpec::van_der_pol();
    if (name == "arm") return SystemSpec::two_link_arm();
    throw std::runtime_error("unknown system: " + name + " (expected linear|vdp|arm)");
}

// Paper-style defaults per system: trajectory count, duration, noise.
SamplingSpec sampling_preset(const SystemSpec& sys, double scale, unsigned long long seed) {
    SamplingSpec s;
    s.rate_hz = 100.0;
    s.seed = seed;
    switch (sys.kind) {
        case SystemKind::Linear:
            s.trajectory_count = std::max(1, static_cast<int>(std::lround(100 * scale)));
            s.duration_s = 12.0;
            s.noise_variance = 1e-4;
            break;
        case SystemKind::VanDerPol:
            s.trajectory_count = std::max(1, static_cast<int>(std::lround(400 * scale)));
            s.duration_s = 5.0;
            s.noise_variance = 5e-5;
            break;
        case SystemKind::TwoLinkArm:
            s.trajectory_count = std::max(1, static_cast<int>(std::lround(400 * scale)));
            s.duration_s = 3.0;
            s.noise_variance = 5e-5;
            break;
    }
    return s;
}

double default_gamma(const SystemSpec& sys) {
    switch (sys.kind) {
        case SystemKind::Linear:
            return 2.01;
        case SystemKind::VanDerPol:
            return 4.02;
        case SystemKind::TwoLinkArm:
            return 2.55;
    }
    return 1.0;
}

void write_run_config(const std::map<std::string, std::string>& kv, const fs::path& out) {
    write_key_value_file(kv, (out / "run_config.txt").string());
}

void mark_failed(const fs::path& out, const std::string& why) {
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream os(out / "FAILED");
    os << why << '\n';
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct LoadedModel {
    std::string kind;  // lipnet | mlp
    LipschitzNet lipnet;
    MlpBaseline mlp;
    double gamma = 0.0;

    ModelFn fn() const {
        if (kind == "lipnet") {
            auto eval = std::make_shared<NetEvaluator>(lipnet);
            return [eval](const Vector& x) { return (*eval)(x); };
        }
        const MlpBaseline* net = &mlp;
        return [net](const Vector& x) { return mlp_forward(*net, x); };
    }
};

LoadedModel load_model(const std::string& path) {
    LoadedModel m;
    m.kind = model_kind(path);
    if (m.kind == "lipnet") {
        m.lipnet = load_lipschitz_net(path);
        m.gamma = lipschitz_bound(m.lipnet);
    } else {
        m.mlp = load_mlp(path);
        m.gamma = mlp_lipschitz_upper(m.mlp);
    }
    return m;
}

std::vector<int> net_dims(const Dataset& d, int width, int hidden_layers) {
    std::vector<int> dims{d.input_dim()};
    for (int i = 0; i < hidden_layers; ++i) dims.push_back(width);
    dims.push_back(d.output_dim());
    return dims;
}

int cmd_simulate(const std::string& system, double scale, unsigned long long seed, double noise,
                 const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    SystemSpec sys = system_by_name(system);
    SamplingSpec sampling = sampling_preset(sys, scale, seed);
    if (noise >= 0.0) sampling.noise_variance = noise;

    const auto trajectories = simulate_system(sys, sampling);
    Dataset d = build_dataset(trajectories, sys);
    d.meta.noise_variance = sampling.noise_variance;
    d.meta.rate_hz = sampling.rate_hz;
    d.meta.seed = seed;
    save_dataset(d, (out / "dataset.csv").string(), (out / "dataset.meta").string());

    write_run_config({{"command", "simulate"},
                      {"system", system},
                      {"scale", fmt(scale)},
                      {"seed", std::to_string(seed)},
                      {"noise_variance", fmt(sampling.noise_variance)},
                      {"trajectories", std::to_string(sampling.trajectory_count)},
                      {"duration_s", fmt(sampling.duration_s)},
                      {"rate_hz", fmt(sampling.rate_hz)},
                      {"rows", std::to_string(d.samples.size())}},
                     out);
    std::cout << "wrote " << d.samples.size() << " samples to " << (out / "dataset.csv").string()
              << '\n';
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& model_family, double gamma,
              const TrainConfig& cfg, int width, int hidden_layers, const std::string& system,
              const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    const fs::path meta = fs::path(dataset_path).replace_extension(".meta");
    Dataset d = load_dataset(dataset_path, meta.string());

    std::map<std::string, std::string> kv{{"command", "train"},
                                          {"dataset", dataset_path},
                                          {"model", model_family},
                                          {"seed", std::to_string(cfg.seed)},
                                          {"split_seed", std::to_string(cfg.split_seed)},
                                          {"epochs", std::to_string(cfg.epochs)},
                                          {"batch_size", std::to_string(cfg.batch_size)},
                                          {"lr0", fmt(cfg.lr0)},
                                          {"step_size", std::to_string(cfg.step_size)},
                                          {"lr_decay", fmt(cfg.lr_decay)},
                                          {"clip_norm", fmt(cfg.clip_norm)},
                                          {"train_subsample", fmt(cfg.train_subsample)},
                                          {"width", std::to_string(width)},
                                          {"hidden_layers", std::to_string(hidden_layers)}};

    TrainReport report;
    const std::string model_file = (out / ("model_" + model_family + ".txt")).string();
    if (model_family == "lipnet") {
        AffineNormalizer norm = fit_normalizer(d.inputs());
        if (gamma <= 0.0) gamma = system.empty() ? 1.0 : default_gamma(system_by_name(system));
        // gamma is the certified overall bound; fold ||A_F||_2 into gamma'.
        const double gamma_prime = gamma / norm.scale_norm();
        LipschitzNet net =
            make_lipschitz_net(net_dims(d, width, hidden_layers), gamma_prime, norm, cfg.seed);
        report = train(net, d, cfg);
        save_lipschitz_net(net, model_file);
        kv["gamma"] = fmt(lipschitz_bound(net));
    } else if (model_family == "fcn" || model_family == "lrn") {
        const Activation act = model_family == "fcn" ? Activation::ReLU : Activation::LeakyReLU;
        MlpBaseline net = make_mlp(net_dims(d, width, hidden_layers), cfg.seed, act);
        report = model_family == "fcn" ? train_fcn(net, d, cfg) : train_lrn(net, d, cfg);
        save_mlp(net, model_file);
        kv["lipschitz_upper"] = fmt(mlp_lipschitz_upper(net));
        if (model_family == "fcn") kv["weight_decay"] = fmt(cfg.weight_decay);
        else kv["beta"] = fmt(cfg.beta);
    } else {
        throw std::runtime_error("unknown model family: " + model_family +
                                 " (expected lipnet|fcn|lrn)");
    }

    save_train_report_csv(report, (out / ("train_" + model_family + ".csv")).string());
    kv["best_test_mse"] = fmt(report.best_test_mse);
    kv["best_epoch"] = std::to_string(report.best_epoch);
    write_run_config(kv, out);
    std::cout << model_family << ": best test MSE " << report.best_test_mse << " at epoch "
              << report.best_epoch << ", model in " << model_file << '\n';
    return 0;
}

int cmd_verify(const std::string& model_path, const std::string& dataset_path,
               const std::string& delta_list, double k_sys, double c, int q,
               const std::string& system, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    const fs::path meta = fs::path(dataset_path).replace_extension(".meta");
    Dataset d = load_dataset(dataset_path, meta.string());
    const SystemSpec sys = system_by_name(system.empty() ? d.meta.system : system);
    LoadedModel model = load_model(model_path);

    if (k_sys <= 0.0) k_sys = empirical_lipschitz(d);
    const std::vector<double> deltas = parse_list(delta_list);

    std::map<std::string, std::string> kv{{"command", "verify"},
                                          {"model", model_path},
                                          {"dataset", dataset_path},
                                          {"K", fmt(k_sys)},
                                          {"c", fmt(c)},
                                          {"q", std::to_string(q)},
                                          {"gamma", fmt(model.gamma)}};
    std::ofstream table(out / "bounds.csv");
    table << "delta,bound\n";
    for (double delta : deltas) {
        const LatticeGrid grid = build_lattices(sys.state_space, delta);
        const VerifyReport report = estimation_error_bound(model.fn(), model.gamma, d, k_sys,
                                                           sys.state_space, delta, q, c);
        char tag[32];
        std::snprintf(tag, sizeof(tag), "%g", delta);
        save_verify_report(report, grid, (out / ("lattice_errors_" + std::string(tag) + ".csv")).string(),
                           (out / ("verify_summary_" + std::string(tag) + ".txt")).string());
        table << fmt(delta) << ',' << fmt(report.bound) << '\n';
        kv["bound_delta_" + std::string(tag)] = fmt(report.bound);
        std::cout << "delta " << delta << ": bound " << report.bound << " over "
                  << report.lattice_count << " lattices (" << report.wall_time_s << " s)\n";
    }
    write_run_config(kv, out);
    return 0;
}

int cmd_rollout(const std::string& model_path, const std::string& system, int count, double t_end,
                double bound_a, unsigned long long seed, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    const SystemSpec sys = system_by_name(system);
    LoadedModel model = load_model(model_path);

    const TrajectoryBundle bundle =
        rollout_compare(sys, model.fn(), model.gamma, bound_a, count, t_end, seed);
    save_rollout_csv(bundle, (out / "rollout_curves.csv").string());

    SvgPlot plot;
    plot.title = "Rollout deviation (" + system + ")";
    plot.x_label = "t [s]";
    plot.y_label = "l2 error";
    plot.series.push_back({"mean", "#1f77b4", bundle.t, bundle.mean});
    std::vector<double> upper(bundle.t.size());
    for (size_t i = 0; i < upper.size(); ++i) upper[i] = bundle.mean[i] + bundle.stddev[i];
    plot.series.push_back({"mean+std", "#aec7e8", bundle.t, upper});
    if (bound_a > 0.0)
        plot.series.push_back({"envelope", "#d62728", bundle.t, bundle.envelope});
    write_svg_plot(plot, (out / "rollout_curves.svg").string());

    int exited = 0, diverged = 0;
    for (const RolloutResult& r : bundle.rollouts) {
        if (r.exited_space) ++exited;
        if (r.diverged) ++diverged;
    }
    write_run_config({{"command", "rollout"},
                      {"model", model_path},
                      {"system", system},
                      {"count", std::to_string(count)},
                      {"t_end", fmt(t_end)},
                      {"bound_a", fmt(bound_a)},
                      {"gamma", fmt(model.gamma)},
                      {"seed", std::to_string(seed)},
                      {"exited_space", std::to_string(exited)},
                      {"diverged", std::to_string(diverged)}},
                     out);
    std::cout << count << " rollouts, " << exited << " left the state space, " << diverged
              << " diverged; curves in " << (out / "rollout_curves.csv").string() << '\n';
    return 0;
}

int cmd_sweep_gamma(const std::string& dataset_path, const std::string& gamma_list,
                    TrainConfig cfg, int width, int hidden_layers, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    const fs::path meta = fs::path(dataset_path).replace_extension(".meta");
    Dataset d = load_dataset(dataset_path, meta.string());
    const AffineNormalizer norm = fit_normalizer(d.inputs());

    const std::vector<double> gammas = parse_list(gamma_list);
    std::ofstream table(out / "gamma_sweep.csv");
    table << "gamma,train_mse,test_mse\n";
    std::vector<double> train_curve, test_curve;
    for (double gamma : gammas) {
        LipschitzNet net = make_lipschitz_net(net_dims(d, width, hidden_layers),
                                              gamma / norm.scale_norm(), norm, cfg.seed);
        const TrainReport report = train(net, d, cfg);
        const EpochRecord& best = report.curve[report.best_epoch];
        table << fmt(gamma) << ',' << fmt(best.train_mse) << ',' << fmt(best.test_mse) << '\n';
        train_curve.push_back(best.train_mse);
        test_curve.push_back(best.test_mse);
        std::cout << "gamma " << gamma << ": train MSE " << best.train_mse << ", test MSE "
                  << best.test_mse << '\n';
    }

    SvgPlot plot;
    plot.title = "MSE vs Lipschitz bound";
    plot.x_label = "gamma";
    plot.y_label = "MSE";
    plot.log_y = true;
    plot.series.push_back({"train", "#1f77b4", gammas, train_curve});
    plot.series.push_back({"test", "#ff7f0e", gammas, test_curve});
    write_svg_plot(plot, (out / "gamma_sweep.svg").string());

    write_run_config({{"command", "sweep-gamma"},
                      {"dataset", dataset_path},
                      {"gammas", gamma_list},
                      {"seed", std::to_string(cfg.seed)},
                      {"epochs", std::to_string(cfg.epochs)}},
                     out);
    return 0;
}

int cmd_report(const std::string& dir) {
    // Collects run_config.txt files under dir into one summary table.
    std::ofstream os(fs::path(dir) / "report.txt");
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.path().filename() != "run_config.txt") continue;
        os << "== " << entry.path().parent_path().string() << " ==\n";
        std::ifstream is(entry.path());
        os << is.rdbuf() << '\n';
    }
    std::cout << "wrote " << (fs::path(dir) / "report.txt").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lipschitz-bounded neural system identification toolkit"};
    app.require_subcommand(1);

    std::string system, dataset, model_path, model_family = "lipnet", out_dir = "out";
    std::string config_file, delta_list = "0.05,0.025", gamma_list;
    double scale = 1.0, noise = -1.0, gamma = -1.0, k_sys = -1.0, c = 0.0, t_end = 5.0,
           bound_a = 0.0;
    int q = 5, count = 100, width = 64, hidden_layers = 7;
    unsigned long long seed = 0;
    TrainConfig cfg;

    auto add_train_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "key = value config file");
        sub->add_option("--epochs", cfg.epochs);
        sub->add_option("--batch-size", cfg.batch_size);
        sub->add_option("--lr0", cfg.lr0);
        sub->add_option("--step-size", cfg.step_size);
        sub->add_option("--lr-decay", cfg.lr_decay);
        sub->add_option("--clip-norm", cfg.clip_norm);
        sub->add_option("--subsample", cfg.train_subsample, "train-set fraction (0.25/0.5/1.0)");
        sub->add_option("--split-seed", cfg.split_seed);
        sub->add_option("--weight-decay", cfg.weight_decay);
        sub->add_option("--beta", cfg.beta);
        sub->add_option("--width", width);
        sub->add_option("--hidden-layers", hidden_layers);
    };

    auto* sim = app.add_subcommand("simulate", "generate a dataset from a benchmark system");
    sim->add_option("--system", system, "linear|vdp|arm")->required();
    sim->add_option("--scale", scale, "fraction of the full-scale trajectory count");
    sim->add_option("--seed", seed);
    sim->add_option("--noise", noise, "measurement noise variance override");
    sim->add_option("--out", out_dir);

    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    tr->add_option("--dataset", dataset)->required();
    tr->add_option("--model", model_family, "lipnet|fcn|lrn");
    tr->add_option("--gamma", gamma, "certified Lipschitz bound (lipnet)");
    tr->add_option("--system", system, "for the per-system default gamma");
    tr->add_option("--seed", seed);
    tr->add_option("--out", out_dir);
    add_train_flags(tr);

    auto* ver = app.add_subcommand("verify", "certify the estimation error bound");
    ver->add_option("--model", model_path)->required();
    ver->add_option("--dataset", dataset)->required();
    ver->add_option("--delta", delta_list, "comma-separated lattice radii");
    ver->add_option("--K", k_sys, "system Lipschitz bound (default: empirical)");
    ver->add_option("--c", c, "label accuracy constant");
    ver->add_option("--q", q, "fallback nearest-neighbor count");
    ver->add_option("--system", system);
    ver->add_option("--out", out_dir);

    auto* ro = app.add_subcommand("rollout", "compare simulated trajectories to the true system");
    ro->add_option("--model", model_path)->required();
    ro->add_option("--system", system)->required();
    ro->add_option("--count", count);
    ro->add_option("--t-end", t_end);
    ro->add_option("--bound", bound_a, "certified error bound a for the envelope");
    ro->add_option("--seed", seed);
    ro->add_option("--out", out_dir);

    auto* sw = app.add_subcommand("sweep-gamma", "train one model per gamma and plot MSEs");
    sw->add_option("--dataset", dataset)->required();
    sw->add_option("--gammas", gamma_list, "comma-separated gamma values")->required();
    sw->add_option("--seed", seed);
    sw->add_option("--out", out_dir);
    add_train_flags(sw);

    auto* rep = app.add_subcommand("report", "collect run configs under a directory");
    rep->add_option("--out", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) {
            // File values override defaults; explicit flags override the file.
            TrainConfig from_file = load_train_config(config_file);
            CLI::App* used = app.get_subcommands().front();
            auto keep = [&](const std::string& flag) { return used->count(flag) > 0; };
            if (!keep("--epochs")) cfg.epochs = from_file.epochs;
            if (!keep("--batch-size")) cfg.batch_size = from_file.batch_size;
            if (!keep("--lr0")) cfg.lr0 = from_file.lr0;
            if (!keep("--step-size")) cfg.step_size = from_file.step_size;
            if (!keep("--lr-decay")) cfg.lr_decay = from_file.lr_decay;
            if (!keep("--clip-norm")) cfg.clip_norm = from_file.clip_norm;
            if (!keep("--subsample")) cfg.train_subsample = from_file.train_subsample;
            if (!keep("--split-seed")) cfg.split_seed = from_file.split_seed;
            if (!keep("--weight-decay")) cfg.weight_decay = from_file.weight_decay;
            if (!keep("--beta")) cfg.beta = from_file.beta;
        }
        cfg.seed = seed;

        if (sim->parsed()) return cmd_simulate(system, scale, seed, noise, out_dir);
        if (tr->parsed())
            return cmd_train(dataset, model_family, gamma, cfg, width, hidden_layers, system,
                             out_dir);
        if (ver->parsed()) return cmd_verify(model_path, dataset, delta_list, k_sys, c, q, system, out_dir);
        if (ro->parsed()) return cmd_rollout(model_path, system, count, t_end, bound_a, seed, out_dir);
        if (sw->parsed())
            return cmd_sweep_gamma(dataset, gamma_list, cfg, width, hidden_layers, out_dir);
        if (rep->parsed()) return cmd_report(out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        mark_failed(out_dir, e.what());
        return 1;
    }
    return 0;
}
