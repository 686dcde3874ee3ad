#ifndef SATNET_GEOMETRY_HPP
#define SATNET_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "satnet/dataio.hpp"
#include "satnet/network.hpp"

namespace satnet {

/// Population-moment excess kurtosis m4/m2^2 - 3.
inline double excess_kurtosis(const Vector& samples) {
    if (samples.size() < 4)
        throw std::invalid_argument("excess_kurtosis: need at least 4 samples");
    const double n = (double)samples.size();
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : samples) {
        double d = x - mean;
        double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if (m2 == 0.0)
        throw std::invalid_argument("excess_kurtosis: zero variance sample");
    return m4 / (m2 * m2) - 3.0;
}

/// Histogram, moments, and empirical CDF of one layer's weights.
struct WeightStats {
    std::size_t layer = 0;
    std::vector<double> bin_edges;   // bins+1 edges
    std::vector<std::size_t> counts;
    double mean = 0.0;
    double variance = 0.0;
    double kurtosis = 0.0;  // excess
    // empirical CDF table for inverse-transform sampling
    std::vector<double> cdf_values;  // sorted sample grid
    std::vector<double> cdf_probs;   // cumulative probability at each grid value
};

inline WeightStats weight_stats(const Vector& weights, std::size_t bins = 100) {
    WeightStats st;
    const double n = (double)weights.size();
    for (double w : weights) st.mean += w;
    st.mean /= n;
    for (double w : weights) st.variance += (w - st.mean) * (w - st.mean);
    st.variance /= n;
    st.kurtosis = excess_kurtosis(weights);

    double lo = *std::min_element(weights.begin(), weights.end());
    double hi = *std::max_element(weights.begin(), weights.end());
    if (hi == lo) hi = lo + 1.0;
    st.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        st.bin_edges[i] = lo + (hi - lo) * (double)i / (double)bins;
    st.counts.assign(bins, 0);
    for (double w : weights) {
        auto b = (std::size_t)((w - lo) / (hi - lo) * (double)bins);
        if (b >= bins) b = bins - 1;
        st.counts[b]++;
    }
    Vector sorted = weights;
    std::sort(sorted.begin(), sorted.end());
    st.cdf_values = std::move(sorted);
    st.cdf_probs.resize(st.cdf_values.size());
    for (std::size_t i = 0; i < st.cdf_probs.size(); ++i)
        st.cdf_probs[i] = ((double)i + 0.5) / n;
    return st;
}

inline std::vector<WeightStats> network_weight_stats(const Network& net,
                                                     std::size_t bins = 100) {
    std::vector<WeightStats> all;
    std::size_t wl = 0;
    for (const Layer& l : net.layers) {
        if (!l.has_weights()) continue;
        WeightStats st = weight_stats(l.weights.data, bins);
        st.layer = wl++;
        all.push_back(std::move(st));
    }
    return all;
}

// ---------------------------------------------------------------------------
// Representational dissimilarity matrices
// ---------------------------------------------------------------------------

struct Rdm {
    Matrix distances;           // (10*per_class) x (10*per_class), class-block order
    std::size_t layer = 0;      // weight-layer index the activations came from
    std::size_t per_class = 100;
    std::uint64_t seed = 0;
    std::vector<std::size_t> exemplars;  // dataset indices, block-ordered

    /// Mean distance over pairs whose classes differ.
    double mean_off_diagonal_block() const {
        double sum = 0.0;
        std::size_t cnt = 0;
        const std::size_t n = distances.rows;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                if (a / per_class != b / per_class) {
                    sum += distances(a, b);
                    ++cnt;
                }
        return cnt ? sum / (double)cnt : 0.0;
    }
};

/// Mean-squared-difference RDM of layer-l activations phi(h^l) over per_class
/// random test exemplars from each class, block-ordered by class.
inline Rdm rdm(const Network& net, const Dataset& data, std::size_t weight_layer,
               Rng& rng, std::size_t per_class = 100) {
    Rdm result;
    result.layer = weight_layer;
    result.per_class = per_class;
    result.seed = rng.seed();
    // draw per_class random exemplars of each class without replacement
    std::vector<std::vector<std::size_t>> by_class(10);
    for (std::size_t i = 0; i < data.size(); ++i)
        by_class[(std::size_t)data.labels[i]].push_back(i);
    for (int c = 0; c < 10; ++c) {
        auto& pool = by_class[(std::size_t)c];
        if (pool.size() < per_class)
            throw std::invalid_argument("rdm: class " + std::to_string(c) + " has only " +
                                        std::to_string(pool.size()) + " test exemplars");
        for (std::size_t i = 0; i < per_class; ++i) {
            std::size_t j = i + (std::size_t)rng.uniform_int(pool.size() - i);
            std::swap(pool[i], pool[j]);
            result.exemplars.push_back(pool[i]);
        }
    }
    const std::size_t n = result.exemplars.size();
    // activations at the requested weight layer, batched
    Matrix acts;
    {
        std::size_t li = 0, wl = 0;
        for (; li < net.layers.size(); ++li) {
            if (!net.layers[li].has_weights()) continue;
            if (wl == weight_layer) break;
            ++wl;
        }
        if (li == net.layers.size())
            throw std::invalid_argument("rdm: no weight layer " + std::to_string(weight_layer));
        const std::size_t batch = 200;
        for (std::size_t b = 0; b < n; b += batch) {
            std::size_t e = std::min(n, b + batch);
            Matrix x(e - b, data.images[0].size());
            for (std::size_t i = b; i < e; ++i)
                std::copy(data.images[result.exemplars[i]].begin(),
                          data.images[result.exemplars[i]].end(),
                          x.data.begin() + (i - b) * x.cols);
            ForwardTrace t = forward_batch(net, x);
            const Matrix& a = t.layers[li].out;
            if (acts.rows == 0) acts = Matrix(n, a.cols);
            std::copy(a.data.begin(), a.data.end(), acts.data.begin() + b * acts.cols);
        }
    }
    // pairwise mean squared differences via the Gram-matrix identity
    const std::size_t width = acts.cols;
    Vector sq(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < width; ++k) sq[i] += acts(i, k) * acts(i, k);
    Matrix gram = matmul(acts, acts.transposed());
    result.distances = Matrix(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            result.distances(a, b) =
                std::max(0.0, (sq[a] + sq[b] - 2.0 * gram(a, b)) / (double)width);
    for (std::size_t a = 0; a < n; ++a) result.distances(a, a) = 0.0;
    return result;
}

// ---------------------------------------------------------------------------
// Information geometry
// ---------------------------------------------------------------------------

/// Fisher information metric in softmax coordinates: G^F = diag(p) - p p^T.
inline Matrix fisher_metric(const Vector& p) {
    double sum = 0.0;
    for (double v : p) {
        if (v < -1e-12)
            throw std::invalid_argument("fisher_metric: negative probability");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("fisher_metric: probabilities sum to " +
                                    std::to_string(sum));
    const std::size_t n = p.size();
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            g(i, j) = (i == j ? p[i] : 0.0) - p[i] * p[j];
    return g;
}

/// G^in = J^T G^F J (materialized; quadratic forms should prefer
/// pullback_quadratic_form).
inline Matrix pullback_metric(const Matrix& j, const Matrix& gf) {
    if (gf.rows != gf.cols || gf.cols != j.rows)
        throw std::invalid_argument("pullback_metric: shape mismatch " + shape_str(j) +
                                    " vs " + shape_str(gf));
    return matmul(j.transposed(), matmul(gf, j));
}

/// dx^T (J^T G^F J) dx computed as (J dx)^T G^F (J dx).
inline double pullback_quadratic_form(const Matrix& j, const Matrix& gf,
                                      const Vector& dx) {
    Vector jdx = matvec(j, dx);
    Vector gjdx = matvec(gf, jdx);
    return dot(jdx, gjdx);
}

/// Length element dl: output-space distance under the Fisher metric induced
/// by the input step dx at x0.
inline double length_element(const Network& net, const Vector& x0, const Vector& dx) {
    ForwardTrace t = forward(net, x0);
    Vector p(t.probs.data.begin(), t.probs.data.end());
    Matrix j = input_jacobian(net, x0);
    double q = pullback_quadratic_form(j, fisher_metric(p), dx);
    return std::sqrt(std::max(0.0, q));
}

struct GeometrySample {
    double lambda = 0.0;
    Vector probabilities;
    double dl = 0.0;            // per unit lambda (tangent = x_T - x_S)
    Vector singular_values;
};

/// Scan the linear interpolation path x(lambda) = (1-lambda) x_S + lambda x_T.
/// Each sample carries the output probabilities, length element, and Jacobian
/// singular values at that lambda.
inline std::vector<GeometrySample> path_scan(const Network& net, const Vector& x_source,
                                             const Vector& x_target, std::size_t steps) {
    if (steps < 1) throw std::invalid_argument("path_scan: need at least 1 step");
    const std::size_t n = x_source.size();
    Vector tangent(n);
    for (std::size_t i = 0; i < n; ++i) tangent[i] = x_target[i] - x_source[i];
    std::vector<GeometrySample> samples;
    samples.reserve(steps + 1);
    for (std::size_t s = 0; s <= steps; ++s) {
        double lambda = (double)s / (double)steps;
        Vector x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = (1.0 - lambda) * x_source[i] + lambda * x_target[i];
        GeometrySample g;
        g.lambda = lambda;
        ForwardTrace t = forward(net, x);
        g.probabilities.assign(t.probs.data.begin(), t.probs.data.end());
        Matrix j = input_jacobian(net, x);
        g.dl = std::sqrt(std::max(
            0.0, pullback_quadratic_form(j, fisher_metric(g.probabilities), tangent)));
        g.singular_values = singular_values(j);
        samples.push_back(std::move(g));
    }
    return samples;
}

/// Count of singular values above cutoff_fraction * sigma_max.
inline std::size_t large_singular_count(const Vector& sv, double cutoff_fraction = 0.1) {
    if (sv.empty() || sv[0] <= 0.0) return 0;
    std::size_t n = 0;
    for (double s : sv) n += (s > cutoff_fraction * sv[0]);
    return n;
}

// ---------------------------------------------------------------------------
// Activation statistics
// ---------------------------------------------------------------------------

struct ActivationHistogram {
    std::size_t layer = 0;
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    double mean_abs = 0.0;
    std::size_t total = 0;
};

/// Histogram of pre-nonlinearity activations h^l over a dataset.
inline ActivationHistogram activation_histograms(const Network& net, const Dataset& data,
                                                 std::size_t weight_layer,
                                                 std::size_t bins = 100) {
    std::size_t li = 0, wl = 0;
    for (; li < net.layers.size(); ++li) {
        if (!net.layers[li].has_weights()) continue;
        if (wl == weight_layer) break;
        ++wl;
    }
    if (li == net.layers.size())
        throw std::invalid_argument("activation_histograms: no weight layer " +
                                    std::to_string(weight_layer));
    // two passes: range, then counts
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    double abs_sum = 0.0;
    std::size_t total = 0;
    const std::size_t batch = 250;
    std::vector<Vector> cache;  // batch h values, kept to avoid a second forward
    for (std::size_t b = 0; b < data.size(); b += batch) {
        std::size_t e = std::min(data.size(), b + batch);
        Matrix x(e - b, data.images[0].size());
        for (std::size_t i = b; i < e; ++i)
            std::copy(data.images[i].begin(), data.images[i].end(),
                      x.data.begin() + (i - b) * x.cols);
        ForwardTrace t = forward_batch(net, x);
        const Matrix& h = t.layers[li].pre;
        for (double v : h.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            abs_sum += std::fabs(v);
        }
        total += h.data.size();
        cache.push_back(h.data);
    }
    ActivationHistogram hist;
    hist.layer = weight_layer;
    hist.total = total;
    hist.mean_abs = abs_sum / (double)total;
    if (hi == lo) hi = lo + 1.0;
    hist.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        hist.bin_edges[i] = lo + (hi - lo) * (double)i / (double)bins;
    hist.counts.assign(bins, 0);
    for (const Vector& hv : cache)
        for (double v : hv) {
            auto bdx = (std::size_t)((v - lo) / (hi - lo) * (double)bins);
            if (bdx >= bins) bdx = bins - 1;
            hist.counts[bdx]++;
        }
    return hist;
}

}  // namespace satnet

#endif  // SATNET_GEOMETRY_HPP
