#ifndef SATNET_SATURATION_HPP
#define SATNET_SATURATION_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "satnet/network.hpp"

namespace satnet {

/// Complementary-function kind: distance of a pre-activation to the nearest
/// zero-derivative region of the nonlinearity.
enum class PhiKind { Relu, SigmoidDeriv, Identity };

inline double phi_c(PhiKind kind, double z) {
    switch (kind) {
        case PhiKind::Relu: return z > 0.0 ? z : 0.0;
        case PhiKind::SigmoidDeriv: {
            double s = sigmoid(z);
            return s * (1.0 - s);
        }
        case PhiKind::Identity: return z;
    }
    return z;
}

/// d phi_c / dz. ReLU subgradient at the kink is 0.
inline double phi_c_deriv(PhiKind kind, double z) {
    switch (kind) {
        case PhiKind::Relu: return z > 0.0 ? 1.0 : 0.0;
        case PhiKind::SigmoidDeriv: {
            double s = sigmoid(z);
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case PhiKind::Identity: return 1.0;
    }
    return 1.0;
}

/// Saturating penalty over every weight layer including the readout, plus the
/// lambda annealing schedule.
struct PenaltySpec {
    std::vector<PhiKind> kinds;  // one per weight layer
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double lambda_step = 0.0;
    // steps spent at lambda_min before the ramp starts; annealing pressure
    // applied before the task is learned saturates every unit and kills
    // training, so deep schedules warm up on the task loss first
    std::size_t lambda_delay = 0;
    bool per_epoch = true;  // anneal cadence: per epoch (default) vs per minibatch

    static PenaltySpec uniform(PhiKind kind, std::size_t layers, double lmin,
                               double lmax, double lstep) {
        PenaltySpec s;
        s.kinds.assign(layers, kind);
        s.lambda_min = lmin;
        s.lambda_max = lmax;
        s.lambda_step = lstep;
        return s;
    }

    /// Table-2 CNN schedule: relu everywhere, the stronger f(z)=z readout.
    static PenaltySpec cnn(std::size_t layers, double lmin, double lmax, double lstep) {
        PenaltySpec s = uniform(PhiKind::Relu, layers, lmin, lmax, lstep);
        s.kinds.back() = PhiKind::Identity;
        return s;
    }
};

struct AnnealState {
    double lambda = 0.0;
    std::size_t steps = 0;
};

inline AnnealState anneal_start(const PenaltySpec& spec) {
    return {spec.lambda_min, 0};
}

inline AnnealState anneal_step(AnnealState state, const PenaltySpec& spec) {
    ++state.steps;
    std::size_t ramp = state.steps > spec.lambda_delay ? state.steps - spec.lambda_delay : 0;
    state.lambda = std::min(spec.lambda_max,
                            spec.lambda_min + (double)ramp * spec.lambda_step);
    return state;
}

inline void check_spec(const Network& net, const PenaltySpec& spec) {
    if (spec.kinds.size() != net.weight_layer_count())
        throw std::invalid_argument(
            "penalty spec covers " + std::to_string(spec.kinds.size()) +
            " layers but network has " + std::to_string(net.weight_layer_count()));
}

/// lambda * sum over weight layers l and units i of phi_c(h^l_i), summed over
/// the batch in `trace` and divided by the batch size.
inline double penalty(const Network& net, const ForwardTrace& trace,
                      const PenaltySpec& spec, double lambda) {
    check_spec(net, spec);
    if (lambda == 0.0) return 0.0;
    double total = 0.0;
    std::size_t wl = 0;
    std::size_t batch = 0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        if (!net.layers[li].has_weights()) continue;
        const Matrix& h = trace.layers[li].pre;
        batch = h.rows;
        PhiKind kind = spec.kinds[wl++];
        for (double z : h.data) total += phi_c(kind, z);
    }
    return lambda * total / (double)std::max<std::size_t>(batch, 1);
}

/// Injection of the penalty's dC/dh^l into a reverse sweep (already scaled by
/// 1/batch so it composes with a mean-cross-entropy delta).
inline HInjection penalty_injection(const PenaltySpec& spec, double lambda) {
    if (lambda == 0.0) return nullptr;
    return [spec, lambda](std::size_t wl, const Matrix& pre, Matrix& delta) {
        PhiKind kind = spec.kinds[wl];
        const double scale = lambda / (double)pre.rows;
        for (std::size_t i = 0; i < pre.data.size(); ++i)
            delta.data[i] += scale * phi_c_deriv(kind, pre.data[i]);
    };
}

/// Gradients of the penalty alone w.r.t. every weight and bias.
inline Gradients penalty_grad(const Network& net, const ForwardTrace& trace,
                              const PenaltySpec& spec, double lambda) {
    check_spec(net, spec);
    Gradients g = net.zero_gradients();
    if (lambda == 0.0) {
        g.input = Matrix(trace.probs.rows, net.input_size());
        return g;
    }
    Matrix zero_delta(trace.probs.rows, trace.probs.cols);
    backward_from_logits(net, trace, std::move(zero_delta), &g, true,
                         penalty_injection(spec, lambda));
    return g;
}

}  // namespace satnet

#endif  // SATNET_SATURATION_HPP
