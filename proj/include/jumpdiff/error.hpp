#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "jumpdiff/model.hpp"
#include "jumpdiff/noise.hpp"
#include "jumpdiff/scheme.hpp"

namespace jumpdiff {

// Fixed batch count for batch-means standard errors. Sample i always lands in
// batch i mod kBatchCount, so the estimate and its SE are independent of how
// the paths were scheduled across threads.
inline constexpr std::size_t kBatchCount = 32;

// Estimates below this multiple of their SE sit at the Monte Carlo noise
// floor and are excluded from rate fits.
inline constexpr double kNoiseFloorFactor = 3.0;

struct LpEstimate {
    double value = 0.0;  // (mean |d|^p)^{1/p}
    double se = 0.0;     // delta-method standard error of value
    double p = 2.0;
    std::size_t samples = 0;
    bool flagged = false;  // value < kNoiseFloorFactor * se
};

struct MeanEstimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t samples = 0;
};

// Batch-means estimates over the given samples (>= kBatchCount of them).
LpEstimate lp_estimate(const std::vector<double>& diffs, double p);
MeanEstimate mean_estimate(const std::vector<double>& samples);

/** Shared Monte Carlo configuration for the coupled-path estimators. */
struct McSetup {
    LevyMeasureSpec levy;
    double horizon = 1.0;
    int fine_level = 14;
    std::size_t paths = 10000;
    std::uint64_t master_seed = 1;
    unsigned threads = 1;
};

// Runs the kernel once per path with its own regenerated noise, writing
// `width` samples per path into a paths x width row-major array. Results are
// bit-identical for any thread count.
void monte_carlo_paths(const McSetup& setup, std::size_t width,
                       const std::function<void(std::size_t, const NoisePath&, double*)>& kernel,
                       std::vector<double>& samples);

enum class ReferenceKind {
    fine_em,  // fine-grid EM on the same noise (the standard proxy)
    exact,    // closed-form solution; linear and ou-additive families only
};

// L^p distance at the horizon between the n-cell scheme and the reference,
// both driven by the same noise.
LpEstimate strong_error_pointwise(const CoefficientSet& coeffs, const McSetup& setup,
                                  std::size_t n, double x0, double p,
                                  ReferenceKind reference = ReferenceKind::fine_em);

// Same estimator on an arbitrary grid (breakpoints must sit on the fine grid).
LpEstimate strong_error_pointwise_grid(const CoefficientSet& coeffs, const McSetup& setup,
                                       const GridFunction& grid, double x0, double p,
                                       ReferenceKind reference = ReferenceKind::fine_em);

// L^p norm of (X^x - Y^y) - (X^xt - Y^yt) at the horizon, where X is the fine
// reference and Y the n-cell scheme, all four on the same noise.
LpEstimate mixed_xy_difference(const CoefficientSet& coeffs, const McSetup& setup,
                               std::size_t n, double x, double y, double x_tilde,
                               double y_tilde, double p);

// L^p norm of (X^{i,x}_{s,t} - X^{i,xt}_{st,tt}) - (X^{d,x}_{s,t} - X^{d,xt}_{st,tt});
// i is the identity map, d the n-cell grid. All four time points must lie on
// the fine grid.
LpEstimate temporal_spatial_difference(const CoefficientSet& coeffs, const McSetup& setup,
                                       std::size_t n, double s, double t, double s_tilde,
                                       double t_tilde, double x, double x_tilde, double p);

struct CorollaryTerm {
    std::size_t k = 0;      // breakpoint index in the n-cell grid
    double time = 0.0;
    LpEstimate pointwise;   // lp(X^x_{t_k} - Y^x_k), unnormalized
    LpEstimate difference;  // lp((X^x - Y^x) - (X^y - Y^y) at t_k), unnormalized
    double combined = 0.0;  // pointwise/(1+|x|) + difference/(|x-y|(1+|x|+|y|))
};

struct CorollaryResult {
    double value = 0.0;  // max over k of the combined terms
    std::vector<CorollaryTerm> terms;
};

// The headline two-part functional: normalized pointwise error plus normalized
// two-start error difference, maximized over the evaluation times
// k = round(f * n) for f in time_fractions. Requires x != y.
CorollaryResult corollary_functional(const CoefficientSet& coeffs, const McSetup& setup,
                                     std::size_t n, double x, double y, double p,
                                     const std::vector<double>& time_fractions);

struct RatePoint {
    double n = 0.0;
    LpEstimate estimate;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;      // in log(error) = intercept + slope * log(n)
    double residual_max = 0.0;
    std::size_t used = 0;
    std::vector<double> excluded_n;  // dropped as flagged or nonpositive
};

// Least squares on (log n, log error). Needs at least 3 usable points.
RateFit fit_rate(const std::vector<std::pair<double, double>>& n_and_error);
RateFit fit_rate_points(const std::vector<RatePoint>& points);

// Mean of V(X^{d,x0}_t) under the n-cell scheme, for moment-bound audits.
MeanEstimate scheme_lyapunov_mean(const CoefficientSet& coeffs, const LyapunovFunction& lyap,
                                  const McSetup& setup, std::size_t n, double x0, double t);

} // namespace jumpdiff
