#ifndef SATNET_NETWORK_HPP
#define SATNET_NETWORK_HPP

#include <cstddef>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "satnet/numerics.hpp"

namespace satnet {

enum class Activation { Sigmoid, Relu, None };

enum class LayerKind { Dense, Conv, MaxPool };

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::Sigmoid: return sigmoid(z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::None: return z;
    }
    return z;
}

/// Derivative expressed through the pre-activation. ReLU'(0) = 0.
inline double activate_deriv(Activation a, double z) {
    switch (a) {
        case Activation::Sigmoid: {
            double s = sigmoid(z);
            return s * (1.0 - s);
        }
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::None: return 1.0;
    }
    return 1.0;
}

/// One network layer. Dense and Conv layers carry weights; MaxPool does not.
/// Conv weights are stored as (out_ch, in_ch*k*k); feature maps use a
/// (position, channel) layout flattened row-major per example.
struct Layer {
    LayerKind kind = LayerKind::Dense;
    Activation act = Activation::None;
    Matrix weights;  // dense: (out, in); conv: (out_ch, in_ch*k*k)
    Vector bias;

    // spatial geometry (conv / maxpool only)
    std::size_t in_ch = 0, out_ch = 0;
    std::size_t in_h = 0, in_w = 0;
    std::size_t kernel = 0;  // conv kernel size (square, same-padding, stride 1)
    std::size_t window = 0;  // pool window (square, stride = window)

    bool has_weights() const { return kind != LayerKind::MaxPool; }
    std::size_t input_size() const {
        switch (kind) {
            case LayerKind::Dense: return weights.cols;
            case LayerKind::Conv: return in_ch * in_h * in_w;
            case LayerKind::MaxPool: return in_ch * in_h * in_w;
        }
        return 0;
    }
    std::size_t output_size() const {
        switch (kind) {
            case LayerKind::Dense: return weights.rows;
            case LayerKind::Conv: return out_ch * in_h * in_w;
            case LayerKind::MaxPool: return in_ch * (in_h / window) * (in_w / window);
        }
        return 0;
    }
};

/// Per-layer record of a forward pass over a batch (rows = examples).
struct LayerTrace {
    Matrix input;        // (batch, layer input size)
    Matrix pre;          // weight layers: pre-activations h^l
    Matrix out;          // layer output x^l
    std::vector<std::size_t> argmax;  // maxpool: winning input position per output cell
};

struct ForwardTrace {
    std::vector<LayerTrace> layers;
    Matrix logits;  // h^D, (batch, 10)
    Matrix probs;   // softmax(h^D)
};

struct Gradients {
    std::vector<Matrix> weight;  // indexed by weight-layer order
    std::vector<Vector> bias;
    Matrix input;  // dC/dx^0 per example (batch, input size)
};

/// Extra dC/dh injected at a weight layer before propagating; used to carry
/// saturation-penalty gradients through the same reverse sweep.
using HInjection =
    std::function<void(std::size_t weight_layer, const Matrix& pre, Matrix& delta)>;

struct Network {
    std::vector<Layer> layers;
    std::string descriptor;

    std::size_t input_size() const { return layers.front().input_size(); }
    std::size_t output_size() const { return layers.back().output_size(); }

    std::size_t weight_layer_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.has_weights();
        return n;
    }

    Gradients zero_gradients() const {
        Gradients g;
        for (const auto& l : layers)
            if (l.has_weights()) {
                g.weight.emplace_back(l.weights.rows, l.weights.cols);
                g.bias.emplace_back(l.bias.size(), 0.0);
            }
        return g;
    }
};

namespace detail {

/// im2col for one example: rows = output positions, cols = in_ch*k*k.
/// Same padding, stride 1; out-of-bounds taps contribute zero.
inline void im2col(const double* x, std::size_t ch, std::size_t h, std::size_t w,
                   std::size_t k, Matrix& cols, std::size_t row0) {
    const long pad = (long)(k / 2);
    for (std::size_t oy = 0; oy < h; ++oy) {
        for (std::size_t ox = 0; ox < w; ++ox) {
            double* dst = &cols.data[(row0 + oy * w + ox) * cols.cols];
            std::size_t c = 0;
            for (std::size_t ic = 0; ic < ch; ++ic)
                for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx, ++c) {
                        long iy = (long)oy + (long)ky - pad;
                        long ix = (long)ox + (long)kx - pad;
                        dst[c] = (iy >= 0 && iy < (long)h && ix >= 0 && ix < (long)w)
                                     ? x[((std::size_t)iy * w + (std::size_t)ix) * ch + ic]
                                     : 0.0;
                    }
        }
    }
}

inline void col2im_add(const Matrix& dcols, std::size_t ch, std::size_t h,
                       std::size_t w, std::size_t k, double* dx, std::size_t row0) {
    const long pad = (long)(k / 2);
    for (std::size_t oy = 0; oy < h; ++oy) {
        for (std::size_t ox = 0; ox < w; ++ox) {
            const double* src = &dcols.data[(row0 + oy * w + ox) * dcols.cols];
            std::size_t c = 0;
            for (std::size_t ic = 0; ic < ch; ++ic)
                for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx, ++c) {
                        long iy = (long)oy + (long)ky - pad;
                        long ix = (long)ox + (long)kx - pad;
                        if (iy >= 0 && iy < (long)h && ix >= 0 && ix < (long)w)
                            dx[((std::size_t)iy * w + (std::size_t)ix) * ch + ic] += src[c];
                    }
        }
    }
}

}  // namespace detail

/// Forward pass over a batch (rows = examples). Caches everything backward needs.
inline ForwardTrace forward_batch(const Network& net, const Matrix& x0) {
    if (x0.cols != net.input_size())
        throw std::invalid_argument("forward: input size " + std::to_string(x0.cols) +
                                    " does not match network input " +
                                    std::to_string(net.input_size()));
    const std::size_t batch = x0.rows;
    ForwardTrace trace;
    trace.layers.resize(net.layers.size());
    Matrix cur = x0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& layer = net.layers[li];
        LayerTrace& lt = trace.layers[li];
        lt.input = cur;
        if (layer.kind == LayerKind::Dense) {
            Matrix h(batch, layer.weights.rows);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)batch,
                        (int)layer.weights.rows, (int)layer.weights.cols, 1.0,
                        cur.data.data(), (int)cur.cols, layer.weights.data.data(),
                        (int)layer.weights.cols, 0.0, h.data.data(), (int)h.cols);
            for (std::size_t r = 0; r < batch; ++r)
                for (std::size_t c = 0; c < h.cols; ++c) h(r, c) += layer.bias[c];
            lt.pre = h;
            lt.out = Matrix(batch, h.cols);
            for (std::size_t i = 0; i < h.data.size(); ++i)
                lt.out.data[i] = activate(layer.act, h.data[i]);
            cur = lt.out;
        } else if (layer.kind == LayerKind::Conv) {
            const std::size_t positions = layer.in_h * layer.in_w;
            Matrix cols(batch * positions, layer.in_ch * layer.kernel * layer.kernel);
            for (std::size_t e = 0; e < batch; ++e)
                detail::im2col(&cur.data[e * cur.cols], layer.in_ch, layer.in_h,
                               layer.in_w, layer.kernel, cols, e * positions);
            Matrix h(batch * positions, layer.out_ch);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)h.rows,
                        (int)layer.out_ch, (int)cols.cols, 1.0, cols.data.data(),
                        (int)cols.cols, layer.weights.data.data(), (int)cols.cols, 0.0,
                        h.data.data(), (int)h.cols);
            for (std::size_t r = 0; r < h.rows; ++r)
                for (std::size_t c = 0; c < h.cols; ++c) h(r, c) += layer.bias[c];
            // reshape to (batch, positions*out_ch) with (position, channel) order
            lt.pre = Matrix(batch, positions * layer.out_ch);
            lt.pre.data = std::move(h.data);
            lt.out = Matrix(batch, lt.pre.cols);
            for (std::size_t i = 0; i < lt.pre.data.size(); ++i)
                lt.out.data[i] = activate(layer.act, lt.pre.data[i]);
            cur = lt.out;
        } else {  // MaxPool
            const std::size_t oh = layer.in_h / layer.window;
            const std::size_t ow = layer.in_w / layer.window;
            const std::size_t ch = layer.in_ch;
            lt.out = Matrix(batch, oh * ow * ch);
            lt.argmax.assign(batch * oh * ow * ch, 0);
            for (std::size_t e = 0; e < batch; ++e) {
                const double* in = &cur.data[e * cur.cols];
                double* out = &lt.out.data[e * lt.out.cols];
                for (std::size_t oy = 0; oy < oh; ++oy)
                    for (std::size_t ox = 0; ox < ow; ++ox)
                        for (std::size_t c = 0; c < ch; ++c) {
                            double best = -std::numeric_limits<double>::infinity();
                            std::size_t best_pos = 0;
                            for (std::size_t wy = 0; wy < layer.window; ++wy)
                                for (std::size_t wx = 0; wx < layer.window; ++wx) {
                                    std::size_t iy = oy * layer.window + wy;
                                    std::size_t ix = ox * layer.window + wx;
                                    std::size_t pos = iy * layer.in_w + ix;
                                    double v = in[pos * ch + c];
                                    if (v > best) { best = v; best_pos = pos; }
                                }
                            std::size_t oidx = (oy * ow + ox) * ch + c;
                            out[oidx] = best;
                            lt.argmax[e * lt.out.cols + oidx] = best_pos;
                        }
            }
            cur = lt.out;
        }
    }
    trace.logits = cur;
    trace.probs = Matrix(cur.rows, cur.cols);
    for (std::size_t r = 0; r < cur.rows; ++r) {
        double mx = cur(r, 0);
        for (std::size_t c = 1; c < cur.cols; ++c) mx = std::max(mx, cur(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < cur.cols; ++c) {
            trace.probs(r, c) = std::exp(cur(r, c) - mx);
            z += trace.probs(r, c);
        }
        for (std::size_t c = 0; c < cur.cols; ++c) trace.probs(r, c) /= z;
    }
    return trace;
}

inline ForwardTrace forward(const Network& net, const Vector& x0) {
    Matrix x(1, x0.size());
    x.data = x0;
    return forward_batch(net, x);
}

/// Reverse sweep from an arbitrary dC/dh^D. Weight/bias gradients are summed
/// over the batch when `grads` is non-null; per-example input gradients are
/// filled when `want_input_grad`.
inline void backward_from_logits(const Network& net, const ForwardTrace& trace,
                                 Matrix delta, Gradients* grads, bool want_input_grad,
                                 const HInjection& inject = nullptr) {
    const std::size_t batch = delta.rows;
    std::size_t wl = net.weight_layer_count();
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& layer = net.layers[li];
        const LayerTrace& lt = trace.layers[li];
        if (layer.kind == LayerKind::MaxPool) {
            Matrix dx(batch, layer.input_size());
            for (std::size_t e = 0; e < batch; ++e)
                for (std::size_t o = 0; o < lt.out.cols; ++o) {
                    std::size_t c = o % layer.in_ch;
                    std::size_t pos = lt.argmax[e * lt.out.cols + o];
                    dx.data[e * dx.cols + pos * layer.in_ch + c] +=
                        delta.data[e * delta.cols + o];
                }
            delta = std::move(dx);
            continue;
        }
        --wl;
        // delta currently holds dC/dx^l; convert to dC/dh^l. The final layer's
        // delta already arrives in h coordinates (p - y), act is None there.
        if (li != net.layers.size() - 1 || layer.act != Activation::None) {
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                delta.data[i] *= activate_deriv(layer.act, lt.pre.data[i]);
        }
        if (inject) inject(wl, lt.pre, delta);
        if (layer.kind == LayerKind::Dense) {
            if (grads) {
                cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                            (int)layer.weights.rows, (int)layer.weights.cols, (int)batch,
                            1.0, delta.data.data(), (int)delta.cols,
                            lt.input.data.data(), (int)lt.input.cols, 1.0,
                            grads->weight[wl].data.data(), (int)layer.weights.cols);
                for (std::size_t r = 0; r < batch; ++r)
                    for (std::size_t c = 0; c < delta.cols; ++c)
                        grads->bias[wl][c] += delta(r, c);
            }
            if (li > 0 || want_input_grad) {
                Matrix dx(batch, layer.weights.cols);
                cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)batch,
                            (int)layer.weights.cols, (int)layer.weights.rows, 1.0,
                            delta.data.data(), (int)delta.cols,
                            layer.weights.data.data(), (int)layer.weights.cols, 0.0,
                            dx.data.data(), (int)dx.cols);
                delta = std::move(dx);
            }
        } else {  // Conv
            const std::size_t positions = layer.in_h * layer.in_w;
            const std::size_t taps = layer.in_ch * layer.kernel * layer.kernel;
            // rebuild the im2col matrix (traded for not caching it: it is the
            // largest buffer in the CNN by far)
            Matrix cols(batch * positions, taps);
            for (std::size_t e = 0; e < batch; ++e)
                detail::im2col(&lt.input.data[e * lt.input.cols], layer.in_ch,
                               layer.in_h, layer.in_w, layer.kernel, cols, e * positions);
            // delta viewed as (batch*positions, out_ch)
            if (grads) {
                cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (int)layer.out_ch,
                            (int)taps, (int)(batch * positions), 1.0, delta.data.data(),
                            (int)layer.out_ch, cols.data.data(), (int)taps, 1.0,
                            grads->weight[wl].data.data(), (int)taps);
                for (std::size_t rp = 0; rp < batch * positions; ++rp)
                    for (std::size_t c = 0; c < layer.out_ch; ++c)
                        grads->bias[wl][c] += delta.data[rp * layer.out_ch + c];
            }
            if (li > 0 || want_input_grad) {
                Matrix dcols(batch * positions, taps);
                cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans,
                            (int)(batch * positions), (int)taps, (int)layer.out_ch, 1.0,
                            delta.data.data(), (int)layer.out_ch,
                            layer.weights.data.data(), (int)taps, 0.0,
                            dcols.data.data(), (int)taps);
                Matrix dx(batch, layer.input_size());
                for (std::size_t e = 0; e < batch; ++e)
                    detail::col2im_add(dcols, layer.in_ch, layer.in_h, layer.in_w,
                                       layer.kernel, &dx.data[e * dx.cols], e * positions);
                delta = std::move(dx);
            }
        }
        if (li == 0 && want_input_grad && grads) grads->input = std::move(delta);
        if (li == 0) break;
    }
}

/// Cross-entropy gradient of the softmax head: dC/dh^D = p - onehot(y),
/// averaged over the batch when `mean_over_batch`.
inline Matrix output_delta(const ForwardTrace& trace, const std::vector<int>& labels,
                           bool mean_over_batch) {
    Matrix d = trace.probs;
    const double scale = mean_over_batch ? 1.0 / (double)d.rows : 1.0;
    for (std::size_t r = 0; r < d.rows; ++r) {
        d(r, (std::size_t)labels[r]) -= 1.0;
        if (mean_over_batch)
            for (std::size_t c = 0; c < d.cols; ++c) d(r, c) *= scale;
    }
    return d;
}

/// Gradients of mean cross-entropy over the batch w.r.t. all weights, biases,
/// and the input.
inline Gradients backward(const Network& net, const ForwardTrace& trace,
                          const std::vector<int>& labels, bool mean_over_batch = true,
                          const HInjection& inject = nullptr) {
    Gradients g = net.zero_gradients();
    backward_from_logits(net, trace, output_delta(trace, labels, mean_over_batch), &g,
                         true, inject);
    return g;
}

inline Gradients backward(const Network& net, const ForwardTrace& trace, int label) {
    return backward(net, trace, std::vector<int>{label}, false);
}

inline double cross_entropy(const ForwardTrace& trace, const std::vector<int>& labels) {
    double loss = 0.0;
    for (std::size_t r = 0; r < trace.probs.rows; ++r)
        loss -= std::log(std::max(trace.probs(r, (std::size_t)labels[r]), 1e-300));
    return loss / (double)trace.probs.rows;
}

/// J = dh^D/dx^0, shape (classes, input). Ten reverse sweeps, batched as ten
/// copies of the input with dh^D = I.
inline Matrix input_jacobian(const Network& net, const Vector& x0) {
    const std::size_t classes = net.output_size();
    Matrix x(classes, x0.size());
    for (std::size_t r = 0; r < classes; ++r)
        std::copy(x0.begin(), x0.end(), x.data.begin() + r * x0.size());
    ForwardTrace trace = forward_batch(net, x);
    Gradients g = net.zero_gradients();
    backward_from_logits(net, trace, Matrix::identity(classes), &g, true);
    return g.input;  // row i = gradient of h^D_i
}

inline int predict(const Network& net, const Vector& x0) {
    ForwardTrace t = forward(net, x0);
    int best = 0;
    for (std::size_t c = 1; c < t.probs.cols; ++c)
        if (t.probs(0, c) > t.probs(0, (std::size_t)best)) best = (int)c;
    return best;
}

/// Cross-entropy loss and input gradient toward a target label for one input;
/// the attack primitives are built on this.
inline std::pair<double, Vector> loss_and_input_grad(const Network& net,
                                                     const Vector& x0, int label) {
    ForwardTrace t = forward(net, x0);
    Gradients g = backward(net, t, label);
    Vector dx(g.input.data.begin(), g.input.data.end());
    return {cross_entropy(t, {label}), std::move(dx)};
}

// ---------------------------------------------------------------------------
// Architecture descriptors
// ---------------------------------------------------------------------------

inline Network make_mlp(const std::vector<std::size_t>& widths, Activation hidden,
                        Rng& rng) {
    Network net;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        Layer l;
        l.kind = LayerKind::Dense;
        l.act = (i + 2 == widths.size()) ? Activation::None : hidden;
        l.weights = Matrix(widths[i + 1], widths[i]);
        double std = 1.0 / std::sqrt((double)widths[i]);
        for (double& w : l.weights.data) w = std * rng.gaussian();
        l.bias.assign(widths[i + 1], 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

inline Network make_cnn_table2(Rng& rng) {
    Network net;
    auto conv = [&](std::size_t in_ch, std::size_t out_ch, std::size_t hw) {
        Layer l;
        l.kind = LayerKind::Conv;
        l.act = Activation::Relu;
        l.in_ch = in_ch; l.out_ch = out_ch; l.in_h = hw; l.in_w = hw; l.kernel = 5;
        l.weights = Matrix(out_ch, in_ch * 25);
        double std = 1.0 / std::sqrt((double)(in_ch * 25));
        for (double& w : l.weights.data) w = std * rng.gaussian();
        l.bias.assign(out_ch, 0.0);
        return l;
    };
    auto pool = [&](std::size_t ch, std::size_t hw) {
        Layer l;
        l.kind = LayerKind::MaxPool;
        l.in_ch = ch; l.in_h = hw; l.in_w = hw; l.window = 2;
        return l;
    };
    net.layers.push_back(conv(1, 32, 28));
    net.layers.push_back(pool(32, 28));
    net.layers.push_back(conv(32, 64, 14));
    net.layers.push_back(pool(64, 14));
    Layer fc1;
    fc1.kind = LayerKind::Dense;
    fc1.act = Activation::Relu;
    fc1.weights = Matrix(1024, 7 * 7 * 64);
    {
        double std = 1.0 / std::sqrt(7.0 * 7.0 * 64.0);
        for (double& w : fc1.weights.data) w = std * rng.gaussian();
    }
    fc1.bias.assign(1024, 0.0);
    net.layers.push_back(std::move(fc1));
    Layer fc2;
    fc2.kind = LayerKind::Dense;
    fc2.act = Activation::None;
    fc2.weights = Matrix(10, 1024);
    {
        double std = 1.0 / std::sqrt(1024.0);
        for (double& w : fc2.weights.data) w = std * rng.gaussian();
    }
    fc2.bias.assign(10, 0.0);
    net.layers.push_back(std::move(fc2));
    net.descriptor = "cnn-table2";
    return net;
}

/// Build a network from a descriptor like "mlp-sigmoid:784-1000-1000-10",
/// "mlp-relu:784-1000-1000-10", or "cnn-table2".
inline Network make_network(const std::string& descriptor, Rng& rng) {
    if (descriptor == "cnn-table2") return make_cnn_table2(rng);
    auto colon = descriptor.find(':');
    std::string kind = descriptor.substr(0, colon);
    Activation act;
    if (kind == "mlp-sigmoid") act = Activation::Sigmoid;
    else if (kind == "mlp-relu") act = Activation::Relu;
    else throw std::invalid_argument("unknown architecture descriptor: " + descriptor);
    if (colon == std::string::npos)
        throw std::invalid_argument("descriptor missing widths: " + descriptor);
    std::vector<std::size_t> widths;
    std::stringstream ss(descriptor.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, '-')) widths.push_back(std::stoul(tok));
    if (widths.size() < 2)
        throw std::invalid_argument("descriptor needs at least two widths: " + descriptor);
    Network net = make_mlp(widths, act, rng);
    net.descriptor = descriptor;
    return net;
}

}  // namespace satnet

#endif  // SATNET_NETWORK_HPP
