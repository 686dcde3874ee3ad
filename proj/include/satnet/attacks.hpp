#ifndef SATNET_ATTACKS_HPP
#define SATNET_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "satnet/network.hpp"
#include "satnet/training.hpp"

namespace satnet {

/// One-step l-infinity attack: clip(x + eps*sign(dC/dx)), sign(0) = 0.
inline Vector fgsm(const Network& net, const Vector& x0, int y, double eps) {
    auto [loss, grad] = loss_and_input_grad(net, x0, y);
    (void)loss;
    Vector adv = x0;
    for (std::size_t i = 0; i < adv.size(); ++i) {
        double s = (grad[i] > 0.0) - (grad[i] < 0.0);
        adv[i] = std::clamp(adv[i] + eps * s, 0.0, 1.0);
    }
    return adv;
}

enum class AttackMethod { FirstOrderAdam, Lbfgs };

struct TargetedAttackSpec {
    AttackMethod method = AttackMethod::Lbfgs;
    std::size_t max_iterations = 1000;
    AdamParams adam;              // first-order method step sizes
    std::size_t lbfgs_memory = 10;
    double armijo_c1 = 1e-4;
    double backtrack_factor = 0.5;
    std::size_t max_line_search = 40;
    bool clip = true;             // project each iterate onto [0,1]^n
    std::size_t trajectory_stride = 100;
};

struct AttackOutcome {
    Vector final_input;
    bool success = false;
    std::size_t iterations = 0;
    double linf_perturbation = 0.0;
    double mean_abs_perturbation = 0.0;
    int source_class = -1;
    int target_class = -1;
    std::size_t line_search_failures = 0;
    std::vector<double> mean_distance_trajectory;  // sampled every trajectory_stride
};

namespace detail {

inline void perturbation_norms(const Vector& x0, const Vector& x, AttackOutcome& out) {
    double linf = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = std::fabs(x[i] - x0[i]);
        linf = std::max(linf, d);
        l1 += d;
    }
    out.linf_perturbation = linf;
    out.mean_abs_perturbation = l1 / (double)x.size();
}

inline void clip_unit(Vector& x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace detail

/// Iterative first-order targeted attack: Adam on the input, minimizing the
/// cross-entropy toward the target class. Failure to reach the target within
/// the budget is a recorded outcome, not an error.
inline AttackOutcome targeted_first_order(const Network& net, const Vector& x_source,
                                          int y_target, const TargetedAttackSpec& spec) {
    AttackOutcome out;
    out.target_class = y_target;
    out.source_class = predict(net, x_source);
    Vector x = x_source;
    AdamMoments mom(x.size());
    for (std::size_t it = 0; it < spec.max_iterations; ++it) {
        if (predict(net, x) == y_target) {
            out.success = true;
            break;
        }
        auto [loss, grad] = loss_and_input_grad(net, x, y_target);
        (void)loss;
        adam_update(x, grad, mom, spec.adam, it + 1);
        if (spec.clip) detail::clip_unit(x);
        out.iterations = it + 1;
        if (spec.trajectory_stride && (it % spec.trajectory_stride == 0)) {
            double l1 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) l1 += std::fabs(x[i] - x_source[i]);
            out.mean_distance_trajectory.push_back(l1 / (double)x.size());
        }
    }
    if (!out.success && predict(net, x) == y_target) out.success = true;
    out.final_input = std::move(x);
    detail::perturbation_norms(x_source, out.final_input, out);
    return out;
}

/// Objective for the generic L-BFGS driver: returns f(x) and fills grad.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsReport {
    Vector x;
    std::size_t iterations = 0;
    std::size_t line_search_failures = 0;
    bool stopped_early = false;  // stop predicate fired
    std::vector<double> accepted_losses;
};

/// Limited-memory quasi-Newton minimization: two-loop recursion with a
/// backtracking Armijo line search; a failed line search falls back to a
/// safeguarded gradient step and the run continues. `stop` is checked before
/// every iteration.
inline LbfgsReport lbfgs_minimize(const Objective& objective, Vector x0,
                                  const TargetedAttackSpec& spec,
                                  const std::function<bool(const Vector&)>& stop = nullptr,
                                  const std::function<void(std::size_t, const Vector&)>&
                                      on_iterate = nullptr) {
    LbfgsReport out;
    const std::size_t n = x0.size();
    Vector x = std::move(x0);
    Vector g(n);
    double f = objective(x, g);

    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (std::size_t it = 0; it < spec.max_iterations; ++it) {
        if (stop && stop(x)) {
            out.stopped_early = true;
            break;
        }
        if (norm2(g) == 0.0) break;  // stationary point, nothing will move
        // two-loop recursion for d = -H g
        Vector q = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * dot(s_hist[i], q);
            for (std::size_t k = 0; k < n; ++k) q[k] -= alpha[i] * y_hist[i][k];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) {
            double sy = dot(s_hist.back(), y_hist.back());
            double yy = dot(y_hist.back(), y_hist.back());
            if (yy > 0.0) gamma = sy / yy;
        }
        for (double& v : q) v *= gamma;
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * dot(y_hist[i], q);
            for (std::size_t k = 0; k < n; ++k) q[k] += (alpha[i] - beta) * s_hist[i][k];
        }
        Vector d(n);
        for (std::size_t k = 0; k < n; ++k) d[k] = -q[k];
        double gd = dot(g, d);
        if (!(gd < 0.0)) {  // not a descent direction; reset to steepest descent
            for (std::size_t k = 0; k < n; ++k) d[k] = -g[k];
            gd = -dot(g, g);
            s_hist.clear(); y_hist.clear(); rho_hist.clear();
        }
        // backtracking Armijo line search
        double step = 1.0;
        Vector x_new;
        double f_new = 0.0;
        Vector g_new(n);
        bool accepted = false;
        for (std::size_t ls = 0; ls < spec.max_line_search; ++ls) {
            x_new = x;
            for (std::size_t k = 0; k < n; ++k) x_new[k] += step * d[k];
            if (spec.clip) detail::clip_unit(x_new);
            double ft = objective(x_new, g_new);
            if (ft <= f + spec.armijo_c1 * step * gd) {
                f_new = ft;
                accepted = true;
                break;
            }
            step *= spec.backtrack_factor;
        }
        if (!accepted) {
            ++out.line_search_failures;
            double gn = norm2(g);
            double safeguard = gn > 0.0 ? 1e-2 / gn : 0.0;
            x_new = x;
            for (std::size_t k = 0; k < n; ++k) x_new[k] -= safeguard * g[k];
            if (spec.clip) detail::clip_unit(x_new);
            f_new = objective(x_new, g_new);
            if (gn == 0.0) {  // zero gradient: fixed point, nothing will move
                out.iterations = it + 1;
                break;
            }
        }
        Vector s(n), yv(n);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = x_new[k] - x[k];
            yv[k] = g_new[k] - g[k];
        }
        double sy = dot(s, yv);
        if (sy > 1e-12) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > spec.lbfgs_memory) {
                s_hist.pop_front(); y_hist.pop_front(); rho_hist.pop_front();
            }
        }
        x = std::move(x_new);
        f = f_new;
        g = std::move(g_new);
        out.iterations = it + 1;
        out.accepted_losses.push_back(f);
        if (on_iterate) on_iterate(it, x);
    }
    out.x = std::move(x);
    return out;
}

/// Targeted L-BFGS attack on the cross-entropy toward the target class.
inline AttackOutcome targeted_lbfgs(const Network& net, const Vector& x_source,
                                    int y_target, const TargetedAttackSpec& spec) {
    AttackOutcome out;
    out.target_class = y_target;
    out.source_class = predict(net, x_source);
    Objective objective = [&](const Vector& x, Vector& grad) {
        auto [loss, g] = loss_and_input_grad(net, x, y_target);
        grad = std::move(g);
        return loss;
    };
    auto stop = [&](const Vector& x) { return predict(net, x) == y_target; };
    auto on_iterate = [&](std::size_t it, const Vector& x) {
        if (spec.trajectory_stride && (it % spec.trajectory_stride == 0)) {
            double l1 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                l1 += std::fabs(x[i] - x_source[i]);
            out.mean_distance_trajectory.push_back(l1 / (double)x.size());
        }
    };
    LbfgsReport rep = lbfgs_minimize(objective, x_source, spec, stop, on_iterate);
    out.iterations = rep.iterations;
    out.line_search_failures = rep.line_search_failures;
    out.success = rep.stopped_early || predict(net, rep.x) == y_target;
    out.final_input = std::move(rep.x);
    detail::perturbation_norms(x_source, out.final_input, out);
    return out;
}

inline AttackOutcome targeted_attack(const Network& net, const Vector& x_source,
                                     int y_target, const TargetedAttackSpec& spec) {
    return spec.method == AttackMethod::Lbfgs
               ? targeted_lbfgs(net, x_source, y_target, spec)
               : targeted_first_order(net, x_source, y_target, spec);
}

enum class ConfidenceMode { Least, Most };

/// Per source class, the correctly classified test image with the lowest or
/// highest softmax confidence on its true class. nullopt marks a class with
/// no correctly classified example.
inline std::vector<std::optional<std::size_t>> pick_grid_sources(
    const Network& net, const Dataset& data, ConfidenceMode mode) {
    std::vector<std::optional<std::size_t>> pick(10);
    std::vector<double> best_conf(10, mode == ConfidenceMode::Least ? 2.0 : -1.0);
    const std::size_t batch = 250;
    for (std::size_t b = 0; b < data.size(); b += batch) {
        std::size_t e = std::min(data.size(), b + batch);
        Matrix x((e - b), data.images[0].size());
        for (std::size_t i = b; i < e; ++i)
            std::copy(data.images[i].begin(), data.images[i].end(),
                      x.data.begin() + (i - b) * x.cols);
        ForwardTrace t = forward_batch(net, x);
        for (std::size_t i = b; i < e; ++i) {
            std::size_t r = i - b;
            int y = data.labels[i];
            std::size_t best = 0;
            for (std::size_t c = 1; c < 10; ++c)
                if (t.probs(r, c) > t.probs(r, best)) best = c;
            if ((int)best != y) continue;
            double conf = t.probs(r, (std::size_t)y);
            bool better = mode == ConfidenceMode::Least ? conf < best_conf[(std::size_t)y]
                                                        : conf > best_conf[(std::size_t)y];
            if (better) {
                best_conf[(std::size_t)y] = conf;
                pick[(std::size_t)y] = i;
            }
        }
    }
    return pick;
}

struct AttackGrid {
    std::vector<std::vector<std::optional<AttackOutcome>>> cells;  // [source][target]
    std::vector<std::optional<std::size_t>> source_index;          // test-set indices
    ConfidenceMode mode = ConfidenceMode::Least;

    std::size_t successes() const {
        std::size_t n = 0;
        for (const auto& row : cells)
            for (const auto& c : row) n += (c && c->success);
        return n;
    }
    std::size_t attempted() const {
        std::size_t n = 0;
        for (const auto& row : cells)
            for (const auto& c : row) n += (bool)c;
        return n;
    }
};

/// 10x10 source-by-target attack table; the diagonal is skipped, and a source
/// class without a correctly classified test image is a recorded hole.
inline AttackGrid attack_grid(const Network& net, const Dataset& data,
                              const TargetedAttackSpec& spec, ConfidenceMode mode) {
    AttackGrid grid;
    grid.mode = mode;
    grid.source_index = pick_grid_sources(net, data, mode);
    grid.cells.assign(10, std::vector<std::optional<AttackOutcome>>(10));
    for (int s = 0; s < 10; ++s) {
        if (!grid.source_index[(std::size_t)s]) continue;
        const Vector& xs = data.images[*grid.source_index[(std::size_t)s]];
        for (int t = 0; t < 10; ++t) {
            if (t == s) continue;
            grid.cells[(std::size_t)s][(std::size_t)t] = targeted_attack(net, xs, t, spec);
        }
    }
    return grid;
}

}  // namespace satnet

#endif  // SATNET_ATTACKS_HPP
