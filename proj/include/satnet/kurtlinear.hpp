#ifndef SATNET_KURTLINEAR_HPP
#define SATNET_KURTLINEAR_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "satnet/geometry.hpp"
#include "satnet/numerics.hpp"

namespace satnet {

/// Unit-variance Pearson Type VII family parameterized directly by its excess
/// kurtosis. Equivalent to a Student-t with nu = 4 + 6/gamma2 degrees of
/// freedom rescaled by sqrt((2 + 6/gamma2)/nu); the reduction is verified by
/// quadrature against the closed-form density in the test suite.
struct Pearson7Spec {
    double gamma2 = 1.0;  // excess kurtosis, > 0
    std::size_t n = 1;

    double nu() const { return 4.0 + 6.0 / gamma2; }
    double scale() const { return std::sqrt((2.0 + 6.0 / gamma2) / nu()); }
};

/// Closed-form density f(x; gamma2) with the Beta-function normalizer.
inline double pearson7_density(double x, double gamma2) {
    if (gamma2 <= 0.0) throw std::invalid_argument("pearson7: gamma2 must be > 0");
    const double a = std::sqrt(2.0 + 6.0 / gamma2);
    const double expo = 2.5 + 3.0 / gamma2;
    // B(2 + 3/gamma2, 1/2) via lgamma
    const double p = 2.0 + 3.0 / gamma2;
    const double logB = std::lgamma(p) + std::lgamma(0.5) - std::lgamma(p + 0.5);
    const double c = 1.0 / (a * std::exp(logB));
    const double u = x / a;
    return c * std::pow(1.0 + u * u, -expo);
}

namespace detail {

/// Marsaglia-Tsang gamma sampler, shape >= 1.
inline double sample_gamma(Rng& rng, double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v;
    }
}

/// Student-t with nu > 0 degrees of freedom: z / sqrt(chi2_nu / nu).
inline double sample_student_t(Rng& rng, double nu) {
    double z = rng.gaussian();
    double chi2 = 2.0 * sample_gamma(rng, nu / 2.0);
    return z / std::sqrt(chi2 / nu);
}

}  // namespace detail

inline Vector pearson7_sample(const Pearson7Spec& spec, Rng& rng) {
    if (spec.gamma2 <= 0.0)
        throw std::invalid_argument("pearson7_sample: gamma2 must be > 0");
    if (spec.n < 1) throw std::invalid_argument("pearson7_sample: n must be >= 1");
    Vector v(spec.n);
    const double nu = spec.nu();
    const double s = spec.scale();
    for (std::size_t i = 0; i < spec.n; ++i)
        v[i] = s * detail::sample_student_t(rng, nu);
    return v;
}

/// Minimum l-infinity budget that flips the two-prototype linear classifier:
/// ||w1||_2^2 / ||w2 - w1||_1.
inline double eps_min(const Vector& w1, const Vector& w2) {
    if (w1.size() != w2.size())
        throw std::invalid_argument("eps_min: vector length mismatch");
    double denom = 0.0;
    for (std::size_t i = 0; i < w1.size(); ++i) denom += std::fabs(w2[i] - w1[i]);
    if (denom == 0.0) throw std::invalid_argument("eps_min: w2 equals w1");
    return dot(w1, w1) / denom;
}

struct RatioResult {
    double gamma2 = 0.0;  // 0 marks the Gaussian baseline row
    double mean_scaled_ratio = 0.0;
    double stderr_scaled_ratio = 0.0;
    double mean_eps_min = 0.0;
    double mean_intensity = 0.0;
    double mean_dot_product = 0.0;  // realized w1.w2, recorded not enforced
    std::size_t reps = 0;
};

namespace detail {

inline void normalize_l2(Vector& v) {
    double nrm = norm2(v);
    if (nrm > 0.0)
        for (double& x : v) x /= nrm;
}

template <typename Sampler>
inline RatioResult ratio_point(double gamma2, std::size_t n, std::size_t reps,
                               Sampler&& draw) {
    RatioResult r;
    r.gamma2 = gamma2;
    r.reps = reps;
    std::vector<double> ratios;
    ratios.reserve(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        Vector w1 = draw(n);
        Vector w2 = draw(n);
        normalize_l2(w1);
        normalize_l2(w2);
        double e = eps_min(w1, w2);
        double intensity = norm1(w1) / (double)n;  // mean per-component |w1|
        double scaled = e / intensity;
        ratios.push_back(scaled);
        r.mean_eps_min += e;
        r.mean_intensity += intensity;
        r.mean_dot_product += dot(w1, w2);
    }
    for (double v : ratios) r.mean_scaled_ratio += v;
    r.mean_scaled_ratio /= (double)reps;
    r.mean_eps_min /= (double)reps;
    r.mean_intensity /= (double)reps;
    r.mean_dot_product /= (double)reps;
    double var = 0.0;
    for (double v : ratios) var += (v - r.mean_scaled_ratio) * (v - r.mean_scaled_ratio);
    if (reps > 1) r.stderr_scaled_ratio = std::sqrt(var / (double)(reps - 1) / (double)reps);
    return r;
}

}  // namespace detail

/// One Monte Carlo point of the Fig.-6 sweep at a given excess kurtosis.
/// gamma2 = 0 uses standard Gaussian weights (the baseline).
inline RatioResult scaled_ratio_point(double gamma2, std::size_t n, std::size_t reps,
                                      Rng& rng) {
    if (gamma2 == 0.0)
        return detail::ratio_point(gamma2, n, reps,
                                   [&](std::size_t m) { return sample_gaussian(rng, m); });
    Pearson7Spec spec{gamma2, n};
    return detail::ratio_point(gamma2, n, reps, [&](std::size_t m) {
        Pearson7Spec s = spec;
        s.n = m;
        return pearson7_sample(s, rng);
    });
}

/// Full sweep over a gamma2 grid plus the Gaussian baseline row (gamma2 = 0,
/// first entry). Each point runs on a derived RNG stream so points are
/// reproducible independently of grid order.
inline std::vector<RatioResult> scaled_ratio_sweep(const std::vector<double>& gamma2_grid,
                                                   std::size_t n, std::size_t reps,
                                                   const Rng& rng) {
    std::vector<RatioResult> out;
    {
        Rng r0 = rng.derive(0);
        out.push_back(scaled_ratio_point(0.0, n, reps, r0));
    }
    for (std::size_t i = 0; i < gamma2_grid.size(); ++i) {
        Rng ri = rng.derive(i + 1);
        out.push_back(scaled_ratio_point(gamma2_grid[i], n, reps, ri));
    }
    return out;
}

/// Inverse-transform sampling from an empirical weight CDF, with linear
/// interpolation between grid points.
inline Vector empirical_weight_sample(const WeightStats& stats, std::size_t n, Rng& rng) {
    if (stats.cdf_values.empty())
        throw std::invalid_argument("empirical_weight_sample: empty CDF");
    const auto& xs = stats.cdf_values;
    const auto& ps = stats.cdf_probs;
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        if (u <= ps.front()) { out[i] = xs.front(); continue; }
        if (u >= ps.back()) { out[i] = xs.back(); continue; }
        auto it = std::lower_bound(ps.begin(), ps.end(), u);
        std::size_t hi = (std::size_t)(it - ps.begin());
        std::size_t lo = hi - 1;
        double t = (u - ps[lo]) / (ps[hi] - ps[lo]);
        out[i] = xs[lo] + t * (xs[hi] - xs[lo]);
    }
    return out;
}

/// Scaled-ratio Monte Carlo point with weights drawn from an empirical CDF.
inline RatioResult scaled_ratio_empirical(const WeightStats& stats, std::size_t n,
                                          std::size_t reps, Rng& rng) {
    RatioResult r = detail::ratio_point(stats.kurtosis, n, reps, [&](std::size_t m) {
        return empirical_weight_sample(stats, m, rng);
    });
    return r;
}

}  // namespace satnet

#endif  // SATNET_KURTLINEAR_HPP
