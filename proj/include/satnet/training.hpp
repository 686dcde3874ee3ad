#ifndef SATNET_TRAINING_HPP
#define SATNET_TRAINING_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "satnet/dataio.hpp"
#include "satnet/network.hpp"
#include "satnet/saturation.hpp"

namespace satnet {

struct AdamParams {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam moment accumulators for one parameter block.
struct AdamMoments {
    std::vector<double> m, v;
    explicit AdamMoments(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_update(std::vector<double>& params, const std::vector<double>& grad,
                        AdamMoments& mom, const AdamParams& hp, std::size_t step) {
    if (params.size() != grad.size() || params.size() != mom.m.size())
        throw std::invalid_argument("adam_update: shape mismatch");
    const double bc1 = 1.0 - std::pow(hp.beta1, (double)step);
    const double bc2 = 1.0 - std::pow(hp.beta2, (double)step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        mom.m[i] = hp.beta1 * mom.m[i] + (1.0 - hp.beta1) * grad[i];
        mom.v[i] = hp.beta2 * mom.v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
        double mhat = mom.m[i] / bc1;
        double vhat = mom.v[i] / bc2;
        params[i] -= hp.alpha * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

/// Adam state covering every weight layer of a network.
struct AdamState {
    std::vector<AdamMoments> weight, bias;
    std::size_t step = 0;
    AdamParams hp;

    AdamState() = default;
    AdamState(const Network& net, const AdamParams& p) : hp(p) {
        for (const Layer& l : net.layers)
            if (l.has_weights()) {
                weight.emplace_back(l.weights.data.size());
                bias.emplace_back(l.bias.size());
            }
    }
};

inline void adam_step(AdamState& state, Network& net, const Gradients& grads) {
    ++state.step;
    std::size_t wl = 0;
    for (Layer& l : net.layers) {
        if (!l.has_weights()) continue;
        adam_update(l.weights.data, grads.weight[wl].data, state.weight[wl], state.hp,
                    state.step);
        adam_update(l.bias, grads.bias[wl], state.bias[wl], state.hp, state.step);
        ++wl;
    }
}

enum class Regime { Vanilla, Adversarial, Saturating };

inline std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Vanilla: return "vanilla";
        case Regime::Adversarial: return "adversarial";
        case Regime::Saturating: return "saturating";
    }
    return "vanilla";
}

inline Regime regime_from_name(const std::string& s) {
    if (s == "vanilla") return Regime::Vanilla;
    if (s == "adversarial") return Regime::Adversarial;
    if (s == "saturating") return Regime::Saturating;
    throw std::invalid_argument("unknown training regime: " + s);
}

struct TrainConfig {
    std::string architecture = "mlp-sigmoid:784-1000-1000-10";
    Regime regime = Regime::Vanilla;
    double alpha_mix = 0.5;  // adversarial regime: weight on the clean loss
    double epsilon = 0.25;   // adversarial regime: FGSM budget
    PenaltySpec penalty;     // saturating regime
    std::size_t epochs = 10;
    std::size_t batch_size = 100;
    std::uint64_t seed = 1;
    AdamParams adam;
    std::size_t eval_subset = 10000;  // test examples scored per epoch log
    bool log_adversarial = false;     // also score FGSM accuracy per epoch
};

struct EpochLog {
    std::size_t epoch;
    double loss;       // mean training loss (task + penalty) over the epoch
    double clean_acc;  // on the eval subset; NaN when no eval data given
    double adv_acc;
    double lambda;
};

struct EvalReport {
    double clean_accuracy = 0.0;
    double adversarial_accuracy = 0.0;
    double epsilon = 0.0;
    std::vector<std::vector<std::size_t>> confusion =
        std::vector<std::vector<std::size_t>>(10, std::vector<std::size_t>(10, 0));
};

namespace detail {

/// Batched FGSM step used by the adversarial regime and evaluation:
/// clip(x + eps*sign(g)) per element, sign(0) = 0.
inline Matrix fgsm_perturb_batch(const Matrix& x, const Matrix& grad, double eps) {
    Matrix adv = x;
    for (std::size_t i = 0; i < adv.data.size(); ++i) {
        double g = grad.data[i];
        double s = (g > 0.0) - (g < 0.0);
        adv.data[i] = std::clamp(adv.data[i] + eps * s, 0.0, 1.0);
    }
    return adv;
}

inline Matrix gather_batch(const Dataset& data, const std::vector<std::size_t>& order,
                           std::size_t begin, std::size_t end, std::vector<int>& labels) {
    const std::size_t n = end - begin;
    Matrix x(n, data.images[0].size());
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector& img = data.images[order[begin + i]];
        std::copy(img.begin(), img.end(), x.data.begin() + i * x.cols);
        labels[i] = data.labels[order[begin + i]];
    }
    return x;
}

inline void accumulate_gradients(Gradients& into, const Gradients& from, double scale) {
    for (std::size_t l = 0; l < into.weight.size(); ++l) {
        for (std::size_t i = 0; i < into.weight[l].data.size(); ++i)
            into.weight[l].data[i] += scale * from.weight[l].data[i];
        for (std::size_t i = 0; i < into.bias[l].size(); ++i)
            into.bias[l][i] += scale * from.bias[l][i];
    }
}

}  // namespace detail

/// Clean and FGSM accuracy of a network on a dataset. Adversarial inputs are
/// regenerated from this network and clipped to [0,1].
inline EvalReport evaluate(const Network& net, const Dataset& data, double eps,
                           std::size_t limit = 0, std::size_t batch = 250) {
    EvalReport report;
    report.epsilon = eps;
    const std::size_t n = limit ? std::min(limit, data.size()) : data.size();
    if (n == 0) return report;
    std::size_t clean_hits = 0, adv_hits = 0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> labels;
    for (std::size_t b = 0; b < n; b += batch) {
        std::size_t e = std::min(n, b + batch);
        Matrix x = detail::gather_batch(data, order, b, e, labels);
        ForwardTrace t = forward_batch(net, x);
        for (std::size_t r = 0; r < x.rows; ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < 10; ++c)
                if (t.probs(r, c) > t.probs(r, best)) best = c;
            report.confusion[(std::size_t)labels[r]][best]++;
            clean_hits += ((int)best == labels[r]);
        }
        if (eps == 0.0) {
            adv_hits = clean_hits;
            continue;
        }
        Gradients g = backward(net, t, labels);
        Matrix xadv = detail::fgsm_perturb_batch(x, g.input, eps);
        ForwardTrace ta = forward_batch(net, xadv);
        for (std::size_t r = 0; r < x.rows; ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < 10; ++c)
                if (ta.probs(r, c) > ta.probs(r, best)) best = c;
            adv_hits += ((int)best == labels[r]);
        }
    }
    report.clean_accuracy = (double)clean_hits / (double)n;
    report.adversarial_accuracy = (double)adv_hits / (double)n;
    return report;
}

struct TrainResult {
    Network net;
    std::vector<EpochLog> log;
    double final_lambda = 0.0;
};

/// Train a network under one of the three regimes. Deterministic given
/// (seed, config, data); diverging loss aborts with a diagnostic. `on_epoch`
/// fires after each epoch's log entry is recorded.
inline TrainResult train(const TrainConfig& config, const Dataset& train_data,
                         const Dataset* eval_data = nullptr,
                         const std::function<void(const EpochLog&)>& on_epoch = nullptr) {
    if (train_data.size() == 0) throw std::invalid_argument("train: empty dataset");
    Rng rng(config.seed);
    TrainResult result;
    result.net = make_network(config.architecture, rng);
    Network& net = result.net;
    if (config.regime == Regime::Saturating) check_spec(net, config.penalty);

    AdamState adam(net, config.adam);
    AnnealState anneal = anneal_start(config.penalty);

    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> labels;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with our own rng so the permutation is bit-reproducible
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[(std::size_t)rng.uniform_int(i)]);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < train_data.size(); b += config.batch_size) {
            std::size_t e = std::min(train_data.size(), b + config.batch_size);
            Matrix x = detail::gather_batch(train_data, order, b, e, labels);
            ForwardTrace trace = forward_batch(net, x);
            double loss = cross_entropy(trace, labels);
            Gradients grads;
            if (config.regime == Regime::Saturating) {
                double lambda = anneal.lambda;
                loss += penalty(net, trace, config.penalty, lambda);
                grads = backward(net, trace, labels, true,
                                 penalty_injection(config.penalty, lambda));
                if (!config.penalty.per_epoch) anneal = anneal_step(anneal, config.penalty);
            } else if (config.regime == Regime::Adversarial) {
                grads = backward(net, trace, labels);
                Matrix xadv = detail::fgsm_perturb_batch(x, grads.input, config.epsilon);
                ForwardTrace tadv = forward_batch(net, xadv);
                Gradients gadv = backward(net, tadv, labels);
                double adv_loss = cross_entropy(tadv, labels);
                loss = config.alpha_mix * loss + (1.0 - config.alpha_mix) * adv_loss;
                detail::accumulate_gradients(grads, grads, config.alpha_mix - 1.0);
                detail::accumulate_gradients(grads, gadv, 1.0 - config.alpha_mix);
            } else {
                grads = backward(net, trace, labels);
            }
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged: loss " +
                                         std::to_string(loss) + " at epoch " +
                                         std::to_string(epoch) + " batch " +
                                         std::to_string(batches));
            adam_step(adam, net, grads);
            loss_sum += loss;
            ++batches;
        }
        if (config.regime == Regime::Saturating && config.penalty.per_epoch)
            anneal = anneal_step(anneal, config.penalty);

        EpochLog log{epoch, loss_sum / (double)batches,
                     std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN(), anneal.lambda};
        if (eval_data) {
            EvalReport r = evaluate(net, *eval_data,
                                    config.log_adversarial ? config.epsilon : 0.0,
                                    config.eval_subset);
            log.clean_acc = r.clean_accuracy;
            if (config.log_adversarial) log.adv_acc = r.adversarial_accuracy;
        }
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    result.final_lambda = anneal.lambda;
    return result;
}

}  // namespace satnet

#endif  // SATNET_TRAINING_HPP
