// Acceptance suite: one test per criterion, each printing a single
// [CRITERION n] PASS/FAIL line. Full-scale models are trained on demand and
// cached under acceptance_cache/ (same layout the CLI produces), so reruns
// are cheap. Attack grids are cached as small JSON summaries.

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "satnet/attacks.hpp"
#include "satnet/geometry.hpp"
#include "satnet/kurtlinear.hpp"
#include "satnet/training.hpp"

#include "../test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace satnet;

namespace {

bool have_mnist() { return satnet::test::have_mnist(); }

const Dataset& mnist_train() {
    static Dataset d = satnet::test::mnist_train();
    return d;
}

const Dataset& mnist_test() {
    static Dataset d = satnet::test::mnist_test();
    return d;
}

void report(int n, bool ok, const std::string& what) {
    std::printf("[CRITERION %2d] %s — %s\n", n, ok ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
    EXPECT_TRUE(ok) << "criterion " << n << ": " << what;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

fs::path cache_dir() {
    if (const char* env = std::getenv("SATNET_CACHE")) return env;
    for (const char* c : {"acceptance_cache", "../acceptance_cache",
                          "../../acceptance_cache"})
        if (fs::exists(c)) return c;
    fs::create_directories("acceptance_cache");
    return "acceptance_cache";
}

// ---- full-scale model registry --------------------------------------------

TrainConfig model_config(const std::string& name) {
    TrainConfig cfg;
    cfg.batch_size = 100;
    cfg.seed = 1;
    cfg.eval_subset = 2000;
    cfg.log_adversarial = true;
    // Hidden width 300 (the reference swept 200-2000); the saturating recipes
    // need a lambda warmup and a long post-cap phase at a raised Adam step,
    // otherwise the penalty either kills training or never bites.
    if (name == "sigmoid-vanilla") {
        cfg.architecture = "mlp-sigmoid:784-300-300-10";
        cfg.epochs = 15;
    } else if (name == "sigmoid-saturating") {
        cfg.architecture = "mlp-sigmoid:784-300-300-10";
        cfg.regime = Regime::Saturating;
        cfg.epochs = 70;
        cfg.adam.alpha = 0.01;
        cfg.penalty = PenaltySpec::uniform(PhiKind::SigmoidDeriv, 3, 0.0, 1.74, 0.001);
        cfg.penalty.lambda_delay = 3000;  // let the task settle before saturation pressure
        cfg.penalty.per_epoch = false;
    } else if (name == "sigmoid-adversarial") {
        cfg.architecture = "mlp-sigmoid:784-300-300-10";
        cfg.regime = Regime::Adversarial;
        cfg.alpha_mix = 0.5;
        cfg.epsilon = 0.25;
        cfg.epochs = 15;
    } else if (name == "relu-saturating") {
        cfg.architecture = "mlp-relu:784-300-300-10";
        cfg.regime = Regime::Saturating;
        cfg.epochs = 40;
        cfg.adam.alpha = 0.01;
        cfg.penalty = PenaltySpec::uniform(PhiKind::Relu, 3, 0.0, 0.005, 5e-6);
        cfg.penalty.lambda_delay = 3000;
        cfg.penalty.per_epoch = false;
    } else if (name == "cnn-vanilla") {
        cfg.architecture = "cnn-table2";
        cfg.epochs = 3;
    } else if (name == "cnn-saturating") {
        cfg.architecture = "cnn-table2";
        cfg.regime = Regime::Saturating;
        cfg.epochs = 5;
        cfg.penalty = PenaltySpec::cnn(4, 0.0, 2e-4, 2e-6);
        cfg.penalty.lambda_delay = 1200;
        cfg.penalty.per_epoch = false;
    } else {
        throw std::invalid_argument("unknown model name: " + name);
    }
    return cfg;
}

const Network& model(const std::string& name) {
    static std::map<std::string, Network> cache;
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;

    TrainConfig cfg = model_config(name);
    fs::path ckpt = cache_dir() / name / "checkpoint.ckpt";
    if (fs::exists(ckpt)) {
        auto [net, meta] = load_checkpoint(ckpt.string());
        if (net.descriptor != cfg.architecture || meta.regime != regime_name(cfg.regime) ||
            meta.seed != cfg.seed || meta.epochs != cfg.epochs)
            throw std::runtime_error("cached checkpoint " + ckpt.string() +
                                     " does not match the acceptance config");
        return cache.emplace(name, std::move(net)).first->second;
    }
    std::printf("  [training %s from scratch: %zu epochs]\n", name.c_str(), cfg.epochs);
    std::fflush(stdout);
    TrainResult r = train(cfg, mnist_train(), nullptr);
    fs::create_directories(ckpt.parent_path());
    CheckpointMeta meta;
    meta.regime = regime_name(cfg.regime);
    meta.final_lambda = r.final_lambda;
    meta.seed = cfg.seed;
    meta.epochs = (std::uint32_t)cfg.epochs;
    save_checkpoint(ckpt.string(), r.net, meta);
    return cache.emplace(name, std::move(r.net)).first->second;
}

const EvalReport& full_eval(const std::string& name) {
    static std::map<std::string, EvalReport> cache;
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    EvalReport r = evaluate(model(name), mnist_test(), 0.25);
    return cache.emplace(name, std::move(r)).first->second;
}

// L-BFGS grid results, cached as JSON so a rerun does not repeat hours of
// attacks against nets that refuse to be fooled.
std::pair<std::size_t, std::size_t> grid_result(const std::string& name,
                                                ConfidenceMode mode) {
    std::string tag = mode == ConfidenceMode::Least ? "least" : "most";
    fs::path path = cache_dir() / ("attacks_" + name + "_" + tag + ".json");
    if (fs::exists(path)) {
        std::ifstream in(path);
        json j = json::parse(in);
        return {j.at("successes").get<std::size_t>(),
                j.at("attempted").get<std::size_t>()};
    }
    std::printf("  [running L-BFGS grid: %s, %s-confident]\n", name.c_str(), tag.c_str());
    std::fflush(stdout);
    TargetedAttackSpec spec;
    spec.method = AttackMethod::Lbfgs;
    spec.max_iterations = 1000;
    AttackGrid grid = attack_grid(model(name), mnist_test(), spec, mode);
    json j;
    j["successes"] = grid.successes();
    j["attempted"] = grid.attempted();
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    return {grid.successes(), grid.attempted()};
}

Dataset head(const Dataset& d, std::size_t n) {
    Dataset out;
    out.split = d.split;
    out.images.assign(d.images.begin(), d.images.begin() + (std::ptrdiff_t)n);
    out.labels.assign(d.labels.begin(), d.labels.begin() + (std::ptrdiff_t)n);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool mnist_required() {
    if (have_mnist()) return false;
    GTEST_LOG_(WARNING) << "MNIST not found; full-scale criterion skipped";
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quantitative full-scale criteria
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion01VanillaSigmoidMlp) {
    if (mnist_required()) GTEST_SKIP();
    const EvalReport& r = full_eval("sigmoid-vanilla");
    bool ok = r.clean_accuracy >= 0.965 && r.adversarial_accuracy <= 0.10;
    report(1, ok,
           "vanilla sigmoid MLP: clean " + fmt(r.clean_accuracy) +
               " (need >= 0.965), FGSM " + fmt(r.adversarial_accuracy) +
               " (need <= 0.10)");
}

TEST(Acceptance, Criterion02SaturatingSigmoidMlp) {
    if (mnist_required()) GTEST_SKIP();
    const EvalReport& r = full_eval("sigmoid-saturating");
    bool ok = r.clean_accuracy >= 0.95 && r.adversarial_accuracy >= 0.80;
    report(2, ok,
           "saturating sigmoid MLP: clean " + fmt(r.clean_accuracy) +
               " (need >= 0.95), FGSM " + fmt(r.adversarial_accuracy) +
               " (need >= 0.80)");
}

TEST(Acceptance, Criterion03AdversariallyTrainedSigmoidMlp) {
    if (mnist_required()) GTEST_SKIP();
    const EvalReport& adv = full_eval("sigmoid-adversarial");
    const EvalReport& sat = full_eval("sigmoid-saturating");
    bool ok = adv.adversarial_accuracy >= 0.70 &&
              adv.adversarial_accuracy < sat.adversarial_accuracy;
    report(3, ok,
           "adversarially trained MLP: FGSM " + fmt(adv.adversarial_accuracy) +
               " (need >= 0.70 and < saturating's " + fmt(sat.adversarial_accuracy) +
               ")");
}

TEST(Acceptance, Criterion04SaturatingReluMlp) {
    if (mnist_required()) GTEST_SKIP();
    const EvalReport& r = full_eval("relu-saturating");
    bool ok = r.clean_accuracy >= 0.93 && r.adversarial_accuracy >= 0.80;
    report(4, ok,
           "saturating ReLU MLP: clean " + fmt(r.clean_accuracy) +
               " (need >= 0.93), FGSM " + fmt(r.adversarial_accuracy) +
               " (need >= 0.80)");
}

TEST(Acceptance, Criterion05CnnReducedScale) {
    if (mnist_required()) GTEST_SKIP();
    const EvalReport& vanilla = full_eval("cnn-vanilla");
    const EvalReport& sat = full_eval("cnn-saturating");
    double gap = sat.adversarial_accuracy - vanilla.adversarial_accuracy;
    bool ok = vanilla.clean_accuracy >= 0.985 && gap >= 0.40;
    report(5, ok,
           "CNN (<=5 epochs): vanilla clean " + fmt(vanilla.clean_accuracy) +
               " (need >= 0.985), saturating FGSM " + fmt(sat.adversarial_accuracy) +
               " vs vanilla FGSM " + fmt(vanilla.adversarial_accuracy) +
               " (gap need >= 0.40)");
}

TEST(Acceptance, Criterion06LbfgsAttackGrids) {
    if (mnist_required()) GTEST_SKIP();
    auto [vs, va] = grid_result("sigmoid-vanilla", ConfidenceMode::Least);
    auto [ss, sa] = grid_result("sigmoid-saturating", ConfidenceMode::Least);
    auto [ms, ma] = grid_result("sigmoid-saturating", ConfidenceMode::Most);
    bool ok = (vs == 90 && va == 90) && (ss < 45 && sa == 90) && (ms <= 15 && ma == 90);
    report(6, ok,
           "L-BFGS grids: vanilla least " + std::to_string(vs) + "/" +
               std::to_string(va) + " (need 90/90), saturating least " +
               std::to_string(ss) + "/" + std::to_string(sa) +
               " (need < 45), saturating most " + std::to_string(ms) + "/" +
               std::to_string(ma) + " (need <= 15)");
}

TEST(Acceptance, Criterion07KurtosisSweep) {
    if (mnist_required()) GTEST_SKIP();
    const std::size_t n = 20000, reps = 100;
    std::vector<double> grid{0.5, 1, 2, 5, 10, 25, 50, 100, 250};
    Rng rng(2024);
    auto sweep = scaled_ratio_sweep(grid, n, reps, rng);
    double baseline = sweep.front().mean_scaled_ratio;
    double at_max = sweep.back().mean_scaled_ratio;
    bool part1 = at_max >= 1.3 * baseline;

    // empirical sampling from the trained first-layer weight distributions
    WeightStats sat_stats = network_weight_stats(model("sigmoid-saturating"))[0];
    WeightStats van_stats = network_weight_stats(model("sigmoid-vanilla"))[0];
    Rng rng_sat(2025), rng_van(2025);
    RatioResult sat = scaled_ratio_empirical(sat_stats, n, reps, rng_sat);
    RatioResult van = scaled_ratio_empirical(van_stats, n, reps, rng_van);
    bool part2 = sat.mean_scaled_ratio > van.mean_scaled_ratio;

    report(7, part1 && part2,
           "kurtosis sweep: max-gamma2 ratio " + fmt(at_max) + " vs baseline " +
               fmt(baseline) + " (need >= 1.3x = " + fmt(1.3 * baseline) +
               "); empirical saturating " + fmt(sat.mean_scaled_ratio) +
               " vs vanilla " + fmt(van.mean_scaled_ratio) + " (need >)");
}

// ---------------------------------------------------------------------------
// Property-based desk-scale criteria
// ---------------------------------------------------------------------------

namespace {

template <typename F>
double central_diff(F&& f, double& coord, double step = 1e-5) {
    double keep = coord;
    coord = keep + step;
    double up = f();
    coord = keep - step;
    double down = f();
    coord = keep;
    return (up - down) / (2.0 * step);
}

}  // namespace

TEST(Acceptance, Criterion08GradientSuite) {
    bool ok = true;
    double worst = 0.0;
    for (int rep = 0; rep < 20 && ok; ++rep) {
        Rng rng(3000 + (std::uint64_t)rep);
        std::size_t hidden = 4 + (std::size_t)rng.uniform_int(6);
        std::size_t d = 5 + (std::size_t)rng.uniform_int(5);
        Network net = make_network("mlp-sigmoid:" + std::to_string(d) + "-" +
                                       std::to_string(hidden) + "-10",
                                   rng);
        Vector x(d);
        for (double& v : x) v = rng.uniform();
        int label = (int)rng.uniform_int(10);
        PenaltySpec pen = PenaltySpec::uniform(PhiKind::SigmoidDeriv, 2, 0, 1, 0.1);

        auto check = [&](double got, double fd) {
            double rel = std::fabs(got - fd) / std::max(1.0, std::fabs(fd));
            worst = std::max(worst, rel);
            if (rel > 1e-6) ok = false;
        };
        // cross-entropy backward
        {
            auto loss = [&]() {
                ForwardTrace t = forward(net, x);
                return cross_entropy(t, {label});
            };
            ForwardTrace t = forward(net, x);
            Gradients g = backward(net, t, label);
            for (std::size_t l = 0; l < g.weight.size(); ++l)
                for (std::size_t i = 0; i < g.weight[l].data.size(); i += 5)
                    check(g.weight[l].data[i],
                          central_diff(loss, net.layers[l].weights.data[i]));
            for (std::size_t i = 0; i < d; ++i) check(g.input(0, i), central_diff(loss, x[i]));
        }
        // saturation penalty gradient
        {
            auto pen_loss = [&]() {
                ForwardTrace t = forward(net, x);
                return penalty(net, t, pen, 0.7);
            };
            ForwardTrace t = forward(net, x);
            Gradients g = penalty_grad(net, t, pen, 0.7);
            for (std::size_t l = 0; l < g.weight.size(); ++l)
                for (std::size_t i = 0; i < g.weight[l].data.size(); i += 5)
                    check(g.weight[l].data[i],
                          central_diff(pen_loss, net.layers[l].weights.data[i]));
        }
        // input-output Jacobian rows
        {
            Matrix j = input_jacobian(net, x);
            for (std::size_t out = 0; out < 10; out += 3)
                for (std::size_t i = 0; i < d; i += 2) {
                    auto logit = [&]() { return forward(net, x).logits(0, out); };
                    check(j(out, i), central_diff(logit, x[i]));
                }
        }
    }
    report(8, ok,
           "gradient suite (backward, penalty_grad, input_jacobian vs central "
           "differences, 20 reps): worst relative error " +
               fmt(worst * 1e6) + "e-6 (need <= 1e-6)");
}

TEST(Acceptance, Criterion09FgsmVertexOracle) {
    bool ok = true;
    for (int rep = 0; rep < 20 && ok; ++rep) {
        Rng rng(4000 + (std::uint64_t)rep);
        int d = 6 + (int)rng.uniform_int(7);  // 6..12
        Network net = make_network("mlp-sigmoid:" + std::to_string(d) + "-5-10", rng);
        Vector x((std::size_t)d);
        for (double& v : x) v = 0.3 + 0.4 * rng.uniform();
        int y = (int)rng.uniform_int(10);
        const double eps = 0.05;  // interior: clipping never binds
        auto [l0, g] = loss_and_input_grad(net, x, y);
        (void)l0;
        double best = -1e300;
        Vector best_x;
        for (int mask = 0; mask < (1 << d); ++mask) {
            double lin = 0.0;
            Vector cand = x;
            for (int i = 0; i < d; ++i) {
                double s = (mask >> i) & 1 ? 1.0 : -1.0;
                lin += s * g[(std::size_t)i];
                cand[(std::size_t)i] += eps * s;
            }
            if (lin > best) {
                best = lin;
                best_x = cand;
            }
        }
        Vector adv = fgsm(net, x, y, eps);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (std::fabs(adv[i] - best_x[i]) > 1e-12) ok = false;
    }
    report(9, ok,
           "FGSM attains the exhaustive l-inf vertex maximum of the linearized "
           "cost on 20 toy classifiers (dim 6..12)");
}

TEST(Acceptance, Criterion10FisherSuite) {
    bool ok = true;
    Rng rng(5000);
    for (int rep = 0; rep < 100 && ok; ++rep) {
        std::size_t k = 2 + (std::size_t)rng.uniform_int(9);
        Vector p(k);
        double sum = 0.0;
        for (double& v : p) sum += (v = -std::log(rng.uniform()));
        for (double& v : p) v /= sum;
        Matrix g = fisher_metric(p);
        for (std::size_t i = 0; i < k && ok; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                row += g(i, j);
                if (std::fabs(g(i, j) - g(j, i)) > 1e-14) ok = false;
            }
            if (std::fabs(row) > 1e-12) ok = false;
        }
        Vector ev = sym_eigvals(g);
        for (double e : ev)
            if (e < -1e-12) ok = false;
    }
    double worst = 0.0;
    for (int rep = 0; rep < 10 && ok; ++rep) {
        Rng nrng(5100 + (std::uint64_t)rep);
        Network net = make_network("mlp-sigmoid:6-8-10", nrng);
        Vector x(6), dx(6);
        for (double& v : x) v = nrng.uniform();
        for (double& v : dx) v = 1e-4 * nrng.gaussian();
        double dl = length_element(net, x, dx);
        Vector x2 = x;
        for (std::size_t i = 0; i < 6; ++i) x2[i] += dx[i];
        ForwardTrace ta = forward(net, x), tb = forward(net, x2);
        double kl = 0.0;
        for (std::size_t c = 0; c < 10; ++c)
            kl += ta.probs(0, c) * std::log(ta.probs(0, c) / tb.probs(0, c));
        double rel = std::fabs(dl - std::sqrt(2.0 * std::max(0.0, kl))) /
                     std::max(dl, 1e-300);
        worst = std::max(worst, rel);
        if (rel > 0.01) ok = false;
    }
    report(10, ok,
           "Fisher metric symmetric/PSD/zero-row-sum on 100 simplex points; dl vs "
           "sqrt(2 KL) worst relative error " +
               fmt(worst) + " (need <= 0.01)");
}

TEST(Acceptance, Criterion11PearsonSuite) {
    bool ok = true;
    std::string detail;
    for (double g2 : {0.5, 1.0, 2.0, 5.0}) {
        // Simpson panels sized so the truncation + rule error clears 1e-6
        const double lim = 400.0;
        const std::size_t panels = 4000000;
        double h = 2.0 * lim / (double)panels;
        double mass = pearson7_density(-lim, g2) + pearson7_density(lim, g2);
        for (std::size_t i = 1; i < panels; ++i)
            mass += pearson7_density(-lim + (double)i * h, g2) * ((i % 2) ? 4.0 : 2.0);
        mass *= h / 3.0;
        if (std::fabs(mass - 1.0) > 1e-6) ok = false;
        detail += " m(" + fmt(g2) + ")=" + fmt(mass);
    }
    Rng rng(6000);
    Pearson7Spec spec{1.0, 1000000};
    Vector s = pearson7_sample(spec, rng);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= (double)s.size();
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= (double)s.size();
    double kurt = excess_kurtosis(s);
    if (std::fabs(var - 1.0) > 0.02) ok = false;
    if (std::fabs(kurt - 1.0) > 0.10) ok = false;
    report(11, ok,
           "Pearson VII: density quadrature" + detail + " (need 1 +- 1e-6); sampler "
           "var " + fmt(var) + " (need 1 +- 0.02), kurtosis " + fmt(kurt) +
               " (need 1 +- 0.10) at n=1e6");
}

TEST(Acceptance, Criterion12Determinism) {
    if (mnist_required()) GTEST_SKIP();
    Dataset small = head(mnist_train(), 2000);
    TrainConfig cfg;
    cfg.architecture = "mlp-sigmoid:784-64-10";
    cfg.epochs = 1;
    cfg.batch_size = 100;
    cfg.seed = 5;
    fs::path tmp = fs::temp_directory_path() / "satnet_acceptance_determinism";
    fs::create_directories(tmp);
    std::array<std::string, 2> ckpt_bytes, csv_bytes;
    for (int run = 0; run < 2; ++run) {
        TrainResult r = train(cfg, small, &small);
        fs::path ck = tmp / ("run" + std::to_string(run) + ".ckpt");
        CheckpointMeta meta;
        meta.seed = cfg.seed;
        meta.epochs = 1;
        save_checkpoint(ck.string(), r.net, meta);
        ckpt_bytes[(std::size_t)run] = slurp(ck);
        fs::path csv = tmp / ("run" + std::to_string(run) + ".csv");
        {
            CsvWriter w(csv.string(), {"epoch", "loss", "clean_acc"});
            for (const EpochLog& e : r.log) w.row({(double)e.epoch, e.loss, e.clean_acc});
        }
        csv_bytes[(std::size_t)run] = slurp(csv);
    }
    bool ok = !ckpt_bytes[0].empty() && ckpt_bytes[0] == ckpt_bytes[1] &&
              !csv_bytes[0].empty() && csv_bytes[0] == csv_bytes[1];
    report(12, ok, "identical (seed, config) gives byte-identical checkpoint ("
                   + std::to_string(ckpt_bytes[0].size()) + " bytes) and CSV");
}

TEST(Acceptance, Criterion13RepresentationOrderings) {
    if (mnist_required()) GTEST_SKIP();
    const Network& sat = model("sigmoid-saturating");
    const Network& van = model("sigmoid-vanilla");
    const Dataset& test = mnist_test();
    bool ok = true;
    std::string detail;

    double prev_sat = -1.0;
    for (std::size_t layer = 0; layer < 3; ++layer) {
        Rng rs(7000), rv(7000);  // same exemplar draw for both nets
        double ms = rdm(sat, test, layer, rs).mean_off_diagonal_block();
        double mv = rdm(van, test, layer, rv).mean_off_diagonal_block();
        if (!(ms > mv)) ok = false;
        if (!(ms > prev_sat)) ok = false;  // increases with depth
        prev_sat = ms;
        detail += " rdm" + std::to_string(layer) + " " + fmt(ms) + ">" + fmt(mv);
    }
    auto sat_w = network_weight_stats(sat);
    auto van_w = network_weight_stats(van);
    for (std::size_t layer = 0; layer < 3; ++layer)
        if (!(sat_w[layer].kurtosis > van_w[layer].kurtosis)) ok = false;
    for (std::size_t layer = 0; layer < 3; ++layer) {
        double hs = activation_histograms(sat, test, layer).mean_abs;
        double hv = activation_histograms(van, test, layer).mean_abs;
        if (!(hs > hv)) ok = false;
    }
    report(13, ok, "representation orderings (saturating vs vanilla):" + detail +
                       "; weight kurtosis and mean |h| greater at every layer");
}

TEST(Acceptance, Criterion14PathScanStructure) {
    if (mnist_required()) GTEST_SKIP();
    const Dataset& test = mnist_test();
    const int pairs[4][2] = {{1, 7}, {3, 7}, {6, 9}, {0, 6}};
    bool ok = true;
    std::string detail;
    for (const char* name : {"sigmoid-saturating", "sigmoid-vanilla"}) {
        const Network& net = model(name);
        auto sources = pick_grid_sources(net, test, ConfidenceMode::Most);
        for (const auto& pr : pairs) {
            ASSERT_TRUE(sources[(std::size_t)pr[0]] && sources[(std::size_t)pr[1]]);
            const Vector& xs = test.images[*sources[(std::size_t)pr[0]]];
            const Vector& xt = test.images[*sources[(std::size_t)pr[1]]];
            auto samples = path_scan(net, xs, xt, 200);
            // transition = largest jump of the output distribution
            std::size_t t_star = 0, dl_star = 0;
            double best_dp = -1.0, best_dl = -1.0;
            for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
                double dp = 0.0;
                for (std::size_t c = 0; c < 10; ++c)
                    dp += std::fabs(samples[i + 1].probabilities[c] -
                                    samples[i].probabilities[c]);
                if (dp > best_dp) {
                    best_dp = dp;
                    t_star = i;
                }
            }
            for (std::size_t i = 0; i < samples.size(); ++i)
                if (samples[i].dl > best_dl) {
                    best_dl = samples[i].dl;
                    dl_star = i;
                }
            if ((std::size_t)std::abs((long)dl_star - (long)t_star) > 1) ok = false;
            std::size_t nsv = large_singular_count(samples[dl_star].singular_values);
            bool saturating = std::string(name) == "sigmoid-saturating";
            if (saturating && nsv != 1) ok = false;
            if (!saturating && nsv <= 1) ok = false;
            detail += std::string(" ") + (saturating ? "sat" : "van") +
                      std::to_string(pr[0]) + ">" + std::to_string(pr[1]) + ":sv=" +
                      std::to_string(nsv);
        }
    }
    report(14, ok, "path scans (200 steps):" + detail +
                       "; dl argmax within one step of max |dp|_1");
}
