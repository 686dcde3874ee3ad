// Command-line entry point: reproducible MNIST training, attack, geometry,
// statistics, and kurtosis-sweep experiments driven by JSON configs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "satnet/attacks.hpp"
#include "satnet/dataio.hpp"
#include "satnet/geometry.hpp"
#include "satnet/kurtlinear.hpp"
#include "satnet/network.hpp"
#include "satnet/saturation.hpp"
#include "satnet/training.hpp"

extern "C" void openblas_set_num_threads(int);

namespace fs = std::filesystem;
using nlohmann::json;
using namespace satnet;

namespace {

PhiKind phi_kind_from_name(const std::string& s, const std::string& where) {
    if (s == "relu") return PhiKind::Relu;
    if (s == "sigmoid-deriv") return PhiKind::SigmoidDeriv;
    if (s == "identity") return PhiKind::Identity;
    throw std::invalid_argument("config: " + where + ": unknown phi kind '" + s + "'");
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key))
        throw std::invalid_argument("config: missing field " + path + "." + key);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: bad value at " + path + "." + key + ": " +
                                    e.what());
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

TrainConfig parse_train_config(const json& j) {
    TrainConfig cfg;
    cfg.architecture = get_field<std::string>(j, "architecture", "$");
    cfg.regime = regime_from_name(get_field<std::string>(j, "regime", "$"));
    cfg.alpha_mix = get_or(j, "alpha_mix", 0.5);
    cfg.epsilon = get_or(j, "epsilon", 0.25);
    cfg.epochs = get_or<std::size_t>(j, "epochs", 10);
    cfg.batch_size = get_or<std::size_t>(j, "batch_size", 100);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.eval_subset = get_or<std::size_t>(j, "eval_subset", 10000);
    cfg.log_adversarial = get_or(j, "log_adversarial", false);
    if (cfg.alpha_mix < 0.0 || cfg.alpha_mix > 1.0)
        throw std::invalid_argument("config: $.alpha_mix must be in [0,1]");
    if (cfg.epsilon < 0.0)
        throw std::invalid_argument("config: $.epsilon must be >= 0");
    if (j.contains("adam")) {
        const json& a = j.at("adam");
        cfg.adam.alpha = get_or(a, "alpha", cfg.adam.alpha);
        cfg.adam.beta1 = get_or(a, "beta1", cfg.adam.beta1);
        cfg.adam.beta2 = get_or(a, "beta2", cfg.adam.beta2);
        cfg.adam.eps = get_or(a, "eps", cfg.adam.eps);
    }
    if (cfg.regime == Regime::Saturating) {
        if (!j.contains("penalty"))
            throw std::invalid_argument("config: saturating regime needs $.penalty");
        const json& p = j.at("penalty");
        PenaltySpec spec;
        spec.lambda_min = get_field<double>(p, "lambda_min", "$.penalty");
        spec.lambda_max = get_field<double>(p, "lambda_max", "$.penalty");
        spec.lambda_step = get_field<double>(p, "lambda_step", "$.penalty");
        std::size_t delay = get_or<std::size_t>(p, "lambda_delay", 0);
        std::string cadence = get_or<std::string>(p, "cadence", "per_epoch");
        if (cadence != "per_epoch" && cadence != "per_batch")
            throw std::invalid_argument("config: $.penalty.cadence must be per_epoch "
                                        "or per_batch, got '" + cadence + "'");
        // a weight-layer count is needed to size the kind list
        Rng probe(0);
        std::size_t layers = make_network(cfg.architecture, probe).weight_layer_count();
        if (p.contains("kinds")) {
            for (const auto& k : p.at("kinds"))
                spec.kinds.push_back(phi_kind_from_name(k, "$.penalty.kinds"));
        } else {
            std::string kind = get_field<std::string>(p, "kind", "$.penalty");
            if (kind == "cnn")
                spec = PenaltySpec::cnn(layers, spec.lambda_min, spec.lambda_max,
                                        spec.lambda_step);
            else
                spec.kinds.assign(layers, phi_kind_from_name(kind, "$.penalty.kind"));
        }
        spec.lambda_delay = delay;
        spec.per_epoch = cadence == "per_epoch";
        cfg.penalty = spec;
    }
    return cfg;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return json::parse(in);
}

Dataset load_split(const std::string& data_dir, bool train) {
    std::string img = data_dir + (train ? "/train-images-idx3-ubyte" : "/t10k-images-idx3-ubyte");
    std::string lab = data_dir + (train ? "/train-labels-idx1-ubyte" : "/t10k-labels-idx1-ubyte");
    return load_idx(img, lab, train ? "train" : "test");
}

std::size_t layer_count(const Network& net) { return net.weight_layer_count(); }

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
    json j = load_config(config_path);
    TrainConfig cfg = parse_train_config(j);
    if (seed_override) cfg.seed = *seed_override;
    Dataset train_data = load_split(data_dir, true);
    Dataset test_data = load_split(data_dir, false);
    fs::create_directories(out_dir);

    TrainResult result = train(cfg, train_data, &test_data, [](const EpochLog& e) {
        std::printf("epoch %zu loss %.6f clean %.4f adv %.4f lambda %g\n", e.epoch,
                    e.loss, e.clean_acc, e.adv_acc, e.lambda);
        std::fflush(stdout);
    });
    CsvWriter log(out_dir + "/train_log.csv",
                  {"epoch", "loss", "clean_acc", "adv_acc", "lambda"});
    for (const EpochLog& e : result.log)
        log.row({(double)e.epoch, e.loss, e.clean_acc, e.adv_acc, e.lambda});
    CheckpointMeta meta;
    meta.regime = regime_name(cfg.regime);
    meta.final_lambda = result.final_lambda;
    meta.seed = cfg.seed;
    meta.epochs = (std::uint32_t)cfg.epochs;
    save_checkpoint(out_dir + "/checkpoint.ckpt", result.net, meta);
    std::printf("checkpoint written to %s/checkpoint.ckpt\n", out_dir.c_str());
    return 0;
}

int cmd_evaluate(const std::string& ckpt, const std::string& data_dir,
                 const std::string& out_dir, double epsilon) {
    auto [net, meta] = load_checkpoint(ckpt);
    Dataset test_data = load_split(data_dir, false);
    EvalReport r = evaluate(net, test_data, epsilon);
    fs::create_directories(out_dir);
    CsvWriter csv(out_dir + "/eval.csv",
                  {"clean_accuracy", "adversarial_accuracy", "epsilon"});
    csv.row({r.clean_accuracy, r.adversarial_accuracy, r.epsilon});
    json out;
    out["clean_accuracy"] = r.clean_accuracy;
    out["adversarial_accuracy"] = r.adversarial_accuracy;
    out["epsilon"] = r.epsilon;
    out["confusion"] = r.confusion;
    write_json(out_dir + "/eval.json", out);
    std::printf("clean %.4f adversarial(eps=%g) %.4f\n", r.clean_accuracy, epsilon,
                r.adversarial_accuracy);
    return 0;
}

int cmd_attack(const std::string& ckpt, const std::string& data_dir,
               const std::string& out_dir, const std::string& method,
               const std::string& mode, std::size_t iterations) {
    auto [net, meta] = load_checkpoint(ckpt);
    Dataset test_data = load_split(data_dir, false);
    TargetedAttackSpec spec;
    if (method == "lbfgs") spec.method = AttackMethod::Lbfgs;
    else if (method == "first-order") spec.method = AttackMethod::FirstOrderAdam;
    else throw std::invalid_argument("unknown attack method: " + method);
    spec.max_iterations = iterations;
    ConfidenceMode cmode;
    if (mode == "least-confident") cmode = ConfidenceMode::Least;
    else if (mode == "most-confident") cmode = ConfidenceMode::Most;
    else throw std::invalid_argument("unknown confidence mode: " + mode);

    AttackGrid grid = attack_grid(net, test_data, spec, cmode);
    fs::create_directories(out_dir);
    {
        std::vector<std::string> header{"source"};
        for (int t = 0; t < 10; ++t) header.push_back("target" + std::to_string(t));
        CsvWriter csv(out_dir + "/success_matrix.csv", header);
        for (int s = 0; s < 10; ++s) {
            std::vector<std::string> row{std::to_string(s)};
            for (int t = 0; t < 10; ++t) {
                const auto& c = grid.cells[(std::size_t)s][(std::size_t)t];
                row.push_back(!c ? "-" : (c->success ? "1" : "0"));
            }
            csv.row(row);
        }
    }
    {
        std::vector<std::string> header{"source", "target", "success", "iterations",
                                        "linf", "mean_abs"};
        for (int p = 0; p < 784; ++p) header.push_back("px" + std::to_string(p));
        CsvWriter csv(out_dir + "/adversarial_images.csv", header);
        for (int s = 0; s < 10; ++s)
            for (int t = 0; t < 10; ++t) {
                const auto& c = grid.cells[(std::size_t)s][(std::size_t)t];
                if (!c) continue;
                std::vector<std::string> row{
                    std::to_string(s), std::to_string(t), std::to_string(c->success),
                    std::to_string(c->iterations), repr(c->linf_perturbation),
                    repr(c->mean_abs_perturbation)};
                for (double px : c->final_input) row.push_back(repr(px));
                csv.row(row);
            }
    }
    {
        CsvWriter csv(out_dir + "/trajectories.csv",
                      {"source", "target", "sample", "mean_distance"});
        for (int s = 0; s < 10; ++s)
            for (int t = 0; t < 10; ++t) {
                const auto& c = grid.cells[(std::size_t)s][(std::size_t)t];
                if (!c) continue;
                for (std::size_t k = 0; k < c->mean_distance_trajectory.size(); ++k)
                    csv.row({std::to_string(s), std::to_string(t), std::to_string(k),
                             repr(c->mean_distance_trajectory[k])});
            }
    }
    std::printf("attack grid: %zu/%zu successes (%s, %s)\n", grid.successes(),
                grid.attempted(), method.c_str(), mode.c_str());
    return 0;
}

int cmd_geometry(const std::string& ckpt, const std::string& data_dir,
                 const std::string& out_dir, const std::string& pairs_arg,
                 std::size_t steps) {
    auto [net, meta] = load_checkpoint(ckpt);
    Dataset test_data = load_split(data_dir, false);
    auto sources = pick_grid_sources(net, test_data, ConfidenceMode::Most);
    fs::create_directories(out_dir);
    std::stringstream ss(pairs_arg);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
        auto dash = pair.find('-');
        if (dash == std::string::npos)
            throw std::invalid_argument("bad pair (want S-T): " + pair);
        int s = std::stoi(pair.substr(0, dash));
        int t = std::stoi(pair.substr(dash + 1));
        if (!sources[(std::size_t)s] || !sources[(std::size_t)t])
            throw std::runtime_error("no correctly classified source for pair " + pair);
        const Vector& xs = test_data.images[*sources[(std::size_t)s]];
        const Vector& xt = test_data.images[*sources[(std::size_t)t]];
        auto samples = path_scan(net, xs, xt, steps);
        std::vector<std::string> header{"lambda"};
        for (int c = 0; c < 10; ++c) header.push_back("p" + std::to_string(c));
        header.push_back("dl");
        for (int c = 1; c <= 10; ++c) header.push_back("sv" + std::to_string(c));
        CsvWriter csv(out_dir + "/pathscan_" + std::to_string(s) + "_" +
                          std::to_string(t) + ".csv",
                      header);
        for (const GeometrySample& g : samples) {
            std::vector<double> row{g.lambda};
            row.insert(row.end(), g.probabilities.begin(), g.probabilities.end());
            row.push_back(g.dl);
            row.insert(row.end(), g.singular_values.begin(), g.singular_values.end());
            csv.row(row);
        }
        std::printf("pathscan %d->%d: %zu samples\n", s, t, samples.size());
    }
    return 0;
}

int cmd_rdm(const std::string& ckpt, const std::string& data_dir,
            const std::string& out_dir, std::uint64_t seed) {
    auto [net, meta] = load_checkpoint(ckpt);
    Dataset test_data = load_split(data_dir, false);
    fs::create_directories(out_dir);
    for (std::size_t l = 0; l < layer_count(net); ++l) {
        Rng rng(seed);
        Rdm r = rdm(net, test_data, l, rng);
        std::vector<std::string> header;
        for (std::size_t c = 0; c < r.distances.cols; ++c)
            header.push_back("d" + std::to_string(c));
        CsvWriter csv(out_dir + "/rdm_layer" + std::to_string(l) + ".csv", header);
        for (std::size_t a = 0; a < r.distances.rows; ++a) {
            std::vector<double> row(r.distances.data.begin() + a * r.distances.cols,
                                    r.distances.data.begin() + (a + 1) * r.distances.cols);
            csv.row(row);
        }
        std::printf("rdm layer %zu: mean off-block %.6f\n", l, r.mean_off_diagonal_block());
    }
    return 0;
}

int cmd_stats(const std::string& ckpt, const std::string& data_dir,
              const std::string& out_dir) {
    auto [net, meta] = load_checkpoint(ckpt);
    Dataset test_data = load_split(data_dir, false);
    fs::create_directories(out_dir);
    json summary;
    summary["architecture"] = net.descriptor;
    summary["regime"] = meta.regime;
    auto stats = network_weight_stats(net);
    for (const WeightStats& st : stats) {
        CsvWriter csv(out_dir + "/weights_layer" + std::to_string(st.layer) + "_hist.csv",
                      {"bin_lo", "bin_hi", "count"});
        for (std::size_t b = 0; b < st.counts.size(); ++b)
            csv.row({repr(st.bin_edges[b]), repr(st.bin_edges[b + 1]),
                     std::to_string(st.counts[b])});
        json layer;
        layer["layer"] = st.layer;
        layer["mean"] = st.mean;
        layer["variance"] = st.variance;
        layer["excess_kurtosis"] = st.kurtosis;
        ActivationHistogram ah = activation_histograms(net, test_data, st.layer);
        layer["mean_abs_preactivation"] = ah.mean_abs;
        CsvWriter acsv(out_dir + "/activations_layer" + std::to_string(st.layer) +
                           "_hist.csv",
                       {"bin_lo", "bin_hi", "count"});
        for (std::size_t b = 0; b < ah.counts.size(); ++b)
            acsv.row({repr(ah.bin_edges[b]), repr(ah.bin_edges[b + 1]),
                      std::to_string(ah.counts[b])});
        summary["layers"].push_back(layer);
        std::printf("layer %zu: var %.6g gamma2 %.4f mean|h| %.4f\n", st.layer,
                    st.variance, st.kurtosis, ah.mean_abs);
    }
    write_json(out_dir + "/stats_summary.json", summary);
    return 0;
}

int cmd_kurtsweep(const std::string& out_dir, const std::string& grid_arg,
                  std::size_t n, std::size_t reps, std::uint64_t seed) {
    std::vector<double> grid;
    if (grid_arg.find(',') != std::string::npos) {
        // explicit list: "0.5,1,2,5,..."
        std::stringstream ss(grid_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
    } else {
        auto c1 = grid_arg.find(':');
        auto c2 = grid_arg.find(':', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::invalid_argument("bad grid (want min:max:count or a comma list): " + grid_arg);
        double lo = std::stod(grid_arg.substr(0, c1));
        double hi = std::stod(grid_arg.substr(c1 + 1, c2 - c1 - 1));
        std::size_t count = std::stoul(grid_arg.substr(c2 + 1));
        for (std::size_t i = 0; i < count; ++i)
            grid.push_back(count == 1 ? lo : lo + (hi - lo) * (double)i / (double)(count - 1));
    }
    Rng rng(seed);
    auto results = scaled_ratio_sweep(grid, n, reps, rng);
    fs::create_directories(out_dir);
    CsvWriter csv(out_dir + "/kurtosis_sweep.csv",
                  {"gamma2", "mean_scaled_ratio", "stderr", "mean_dot_product"});
    for (const RatioResult& r : results) {
        csv.row({r.gamma2, r.mean_scaled_ratio, r.stderr_scaled_ratio,
                 r.mean_dot_product});
        std::printf("gamma2 %.4g scaled ratio %.4f +- %.4f\n", r.gamma2,
                    r.mean_scaled_ratio, r.stderr_scaled_ratio);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"saturating-network adversarial robustness laboratory"};
    app.require_subcommand(1);

    std::string data_dir = "data/mnist";
    std::string out_dir = "out";
    std::string config_path, ckpt;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t seed = 1;
    int threads = 1;
    app.add_option("--threads", threads, "BLAS thread count (default 1, reproducible)");

    auto add_common = [&](CLI::App* sub, bool needs_ckpt) {
        sub->add_option("--data-dir", data_dir, "directory with raw MNIST IDX files");
        sub->add_option("--out", out_dir, "output directory");
        if (needs_ckpt)
            sub->add_option("--checkpoint", ckpt, "network checkpoint")->required();
    };

    auto* train_cmd = app.add_subcommand("train", "train a network from a JSON config");
    add_common(train_cmd, false);
    train_cmd->add_option("--config", config_path, "experiment config")->required();
    train_cmd->add_option("--seed", seed_override, "override the config seed");

    auto* eval_cmd = app.add_subcommand("evaluate", "clean + FGSM accuracy");
    add_common(eval_cmd, true);
    double epsilon = 0.25;
    eval_cmd->add_option("--epsilon", epsilon, "FGSM budget (default 0.25)");

    auto* attack_cmd = app.add_subcommand("attack", "10x10 targeted attack grid");
    add_common(attack_cmd, true);
    std::string method = "lbfgs", mode = "least-confident";
    std::size_t iterations = 1000;
    attack_cmd->add_option("--method", method, "lbfgs | first-order");
    attack_cmd->add_option("--mode", mode, "least-confident | most-confident");
    attack_cmd->add_option("--iterations", iterations, "iteration budget");

    auto* geom_cmd = app.add_subcommand("geometry", "interpolation path scans");
    add_common(geom_cmd, true);
    std::string pairs = "1-7,3-7,6-9,0-6";
    std::size_t steps = 200;
    geom_cmd->add_option("--pairs", pairs, "comma-separated S-T class pairs");
    geom_cmd->add_option("--steps", steps, "lambda grid resolution");

    auto* rdm_cmd = app.add_subcommand("rdm", "representational dissimilarity matrices");
    add_common(rdm_cmd, true);
    rdm_cmd->add_option("--seed", seed, "exemplar sampling seed");

    auto* stats_cmd = app.add_subcommand("stats", "weight/activation statistics");
    add_common(stats_cmd, true);

    auto* kurt_cmd = app.add_subcommand("kurtsweep", "Pearson VII scaled-ratio sweep");
    kurt_cmd->add_option("--out", out_dir, "output directory");
    std::string grid = "0.5:5:10";
    std::size_t n = 20000, reps = 100;
    kurt_cmd->add_option("--grid", grid, "gamma2 grid min:max:count");
    kurt_cmd->add_option("--n", n, "vector dimension");
    kurt_cmd->add_option("--reps", reps, "Monte Carlo repetitions per point");
    kurt_cmd->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);
    openblas_set_num_threads(threads);

    try {
        if (*train_cmd) return cmd_train(config_path, data_dir, out_dir, seed_override);
        if (*eval_cmd) return cmd_evaluate(ckpt, data_dir, out_dir, epsilon);
        if (*attack_cmd)
            return cmd_attack(ckpt, data_dir, out_dir, method, mode, iterations);
        if (*geom_cmd) return cmd_geometry(ckpt, data_dir, out_dir, pairs, steps);
        if (*rdm_cmd) return cmd_rdm(ckpt, data_dir, out_dir, seed);
        if (*stats_cmd) return cmd_stats(ckpt, data_dir, out_dir);
        if (*kurt_cmd) return cmd_kurtsweep(out_dir, grid, n, reps, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
