#include "jumpdiff/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "jumpdiff/parallel.hpp"

namespace jumpdiff {

namespace {

struct BatchStats {
    double mean = 0.0;
    double se = 0.0;  // batch-means standard error of the mean
};

// Grand mean plus batch-means SE with fixed slot assignment i mod batch count.
// Fewer samples than kBatchCount shrink the batch count (SE is 0 below two
// batches); the mean is always the plain full-sample mean.
BatchStats batch_mean(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("batch means need at least one sample");
    const std::size_t b_count = std::min<std::size_t>(kBatchCount, samples.size());
    std::array<double, kBatchCount> sums{};
    std::array<std::size_t, kBatchCount> counts{};
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sums[i % b_count] += samples[i];
        ++counts[i % b_count];
    }
    double total = 0.0;
    for (double s : sums) total += s;
    BatchStats out;
    out.mean = total / static_cast<double>(samples.size());
    if (b_count < 2) return out;
    double ss = 0.0;
    for (std::size_t b = 0; b < b_count; ++b) {
        const double dev = sums[b] / static_cast<double>(counts[b]) - out.mean;
        ss += dev * dev;
    }
    const double var_of_mean =
        ss / static_cast<double>(b_count - 1) / static_cast<double>(b_count);
    out.se = std::sqrt(var_of_mean);
    return out;
}

void require_divisor(std::size_t n, int fine_level) {
    const std::size_t fine = std::size_t{1} << fine_level;
    if (n == 0 || n > fine || fine % n != 0) {
        std::ostringstream msg;
        msg << "scheme step count n = " << n << " must divide the fine grid (2^" << fine_level
            << " = " << fine << " cells)";
        throw std::invalid_argument(msg.str());
    }
}

double exact_reference_value(const CoefficientSet& coeffs, const NoisePath& noise, double x0,
                             double t) {
    if (coeffs.family == ModelFamily::linear) {
        if (coeffs.params[1] != 0.0 || coeffs.params[3] != 0.0 || coeffs.params[5] != 0.0)
            throw std::invalid_argument(
                "exact reference needs linear coefficients through the origin");
        return exact_linear(coeffs.params[0], coeffs.params[2], coeffs.params[4], noise, x0, t);
    }
    if (coeffs.family == ModelFamily::ou_additive)
        return exact_ou(coeffs.params[0], coeffs.params[1], noise, x0, t);
    throw std::invalid_argument("no exact solution available for this coefficient family");
}

} // namespace

LpEstimate lp_estimate(const std::vector<double>& diffs, double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw std::invalid_argument("lp_estimate: require finite p >= 1");
    std::vector<double> powered(diffs.size());
    if (p == 2.0) {
        for (std::size_t i = 0; i < diffs.size(); ++i) powered[i] = diffs[i] * diffs[i];
    } else {
        for (std::size_t i = 0; i < diffs.size(); ++i)
            powered[i] = std::pow(std::abs(diffs[i]), p);
    }
    const BatchStats stats = batch_mean(powered);
    LpEstimate out;
    out.p = p;
    out.samples = diffs.size();
    out.value = stats.mean <= 0.0 ? 0.0 : std::pow(stats.mean, 1.0 / p);
    // delta method through x -> x^{1/p}
    out.se = stats.mean <= 0.0
                 ? 0.0
                 : (1.0 / p) * std::pow(stats.mean, 1.0 / p - 1.0) * stats.se;
    out.flagged = out.value < kNoiseFloorFactor * out.se;
    return out;
}

MeanEstimate mean_estimate(const std::vector<double>& samples) {
    const BatchStats stats = batch_mean(samples);
    return {stats.mean, stats.se, samples.size()};
}

void monte_carlo_paths(const McSetup& setup, std::size_t width,
                       const std::function<void(std::size_t, const NoisePath&, double*)>& kernel,
                       std::vector<double>& samples) {
    if (width == 0) throw std::invalid_argument("monte_carlo_paths: width must be > 0");
    if (setup.paths < kBatchCount)
        throw std::invalid_argument("monte_carlo_paths: need at least 32 paths");
    validate(setup.levy);
    samples.assign(setup.paths * width, 0.0);
    parallel_for(setup.paths, setup.threads, [&](std::size_t i) {
        const NoisePath noise = generate_noise_path(setup.levy, setup.horizon, setup.fine_level,
                                                    setup.master_seed, i);
        kernel(i, noise, &samples[i * width]);
    });
}

LpEstimate strong_error_pointwise(const CoefficientSet& coeffs, const McSetup& setup,
                                  std::size_t n, double x0, double p, ReferenceKind reference) {
    require_divisor(n, setup.fine_level);
    return strong_error_pointwise_grid(coeffs, setup, GridFunction::uniform(setup.horizon, n),
                                       x0, p, reference);
}

LpEstimate strong_error_pointwise_grid(const CoefficientSet& coeffs, const McSetup& setup,
                                       const GridFunction& grid, double x0, double p,
                                       ReferenceKind reference) {
    std::vector<double> samples;
    monte_carlo_paths(setup, 1,
                      [&](std::size_t, const NoisePath& noise, double* out) {
                          const double scheme =
                              em_discrete(coeffs, grid, noise, x0).terminal();
                          const double ref =
                              reference == ReferenceKind::fine_em
                                  ? reference_solution(coeffs, noise, x0).terminal()
                                  : exact_reference_value(coeffs, noise, x0, setup.horizon);
                          out[0] = ref - scheme;
                      },
                      samples);
    return lp_estimate(samples, p);
}

LpEstimate mixed_xy_difference(const CoefficientSet& coeffs, const McSetup& setup,
                               std::size_t n, double x, double y, double x_tilde,
                               double y_tilde, double p) {
    require_divisor(n, setup.fine_level);
    const GridFunction grid = GridFunction::uniform(setup.horizon, n);
    std::vector<double> samples;
    monte_carlo_paths(setup, 1,
                      [&](std::size_t, const NoisePath& noise, double* out) {
                          const double ref_x = reference_solution(coeffs, noise, x).terminal();
                          const double ref_xt =
                              reference_solution(coeffs, noise, x_tilde).terminal();
                          const double em_y = em_discrete(coeffs, grid, noise, y).terminal();
                          const double em_yt =
                              em_discrete(coeffs, grid, noise, y_tilde).terminal();
                          out[0] = (ref_x - em_y) - (ref_xt - em_yt);
                      },
                      samples);
    return lp_estimate(samples, p);
}

LpEstimate temporal_spatial_difference(const CoefficientSet& coeffs, const McSetup& setup,
                                       std::size_t n, double s, double t, double s_tilde,
                                       double t_tilde, double x, double x_tilde, double p) {
    require_divisor(n, setup.fine_level);
    const GridFunction fine = GridFunction::identity(setup.horizon);
    const GridFunction grid = GridFunction::uniform(setup.horizon, n);
    std::vector<double> samples;
    monte_carlo_paths(setup, 1,
                      [&](std::size_t, const NoisePath& noise, double* out) {
                          const double i1 = em_continuous(coeffs, fine, noise, x, s, t);
                          const double i2 =
                              em_continuous(coeffs, fine, noise, x_tilde, s_tilde, t_tilde);
                          const double d1 = em_continuous(coeffs, grid, noise, x, s, t);
                          const double d2 =
                              em_continuous(coeffs, grid, noise, x_tilde, s_tilde, t_tilde);
                          out[0] = (i1 - i2) - (d1 - d2);
                      },
                      samples);
    return lp_estimate(samples, p);
}

CorollaryResult corollary_functional(const CoefficientSet& coeffs, const McSetup& setup,
                                     std::size_t n, double x, double y, double p,
                                     const std::vector<double>& time_fractions) {
    if (x == y)
        throw std::invalid_argument("corollary_functional: require x != y");
    if (time_fractions.empty())
        throw std::invalid_argument("corollary_functional: need at least one time fraction");
    require_divisor(n, setup.fine_level);

    std::set<std::size_t> k_set;
    for (double f : time_fractions) {
        if (!(f > 0.0) || f > 1.0)
            throw std::invalid_argument("corollary_functional: fractions must lie in (0, 1]");
        const auto k = static_cast<std::size_t>(
            std::max<long long>(1, std::llround(f * static_cast<double>(n))));
        k_set.insert(std::min(k, n));
    }
    const std::vector<std::size_t> ks(k_set.begin(), k_set.end());
    const std::size_t fine = std::size_t{1} << setup.fine_level;
    const std::size_t stride = fine / n;

    const GridFunction grid = GridFunction::uniform(setup.horizon, n);
    const std::size_t width = 2 * ks.size();
    std::vector<double> samples;
    monte_carlo_paths(setup, width,
                      [&](std::size_t, const NoisePath& noise, double* out) {
                          const SchemePath ref_x = reference_solution(coeffs, noise, x);
                          const SchemePath ref_y = reference_solution(coeffs, noise, y);
                          const SchemePath em_x = em_discrete(coeffs, grid, noise, x);
                          const SchemePath em_y = em_discrete(coeffs, grid, noise, y);
                          for (std::size_t j = 0; j < ks.size(); ++j) {
                              const std::size_t k = ks[j];
                              const double dx = ref_x.values[k * stride] - em_x.values[k];
                              const double dy = ref_y.values[k * stride] - em_y.values[k];
                              out[2 * j] = dx;
                              out[2 * j + 1] = dx - dy;
                          }
                      },
                      samples);

    const double denom1 = 1.0 + std::abs(x);
    const double denom2 = std::abs(x - y) * (1.0 + std::abs(x) + std::abs(y));
    CorollaryResult result;
    std::vector<double> column(setup.paths);
    for (std::size_t j = 0; j < ks.size(); ++j) {
        CorollaryTerm term;
        term.k = ks[j];
        term.time = static_cast<double>(ks[j]) * setup.horizon / static_cast<double>(n);
        for (std::size_t i = 0; i < setup.paths; ++i) column[i] = samples[i * width + 2 * j];
        term.pointwise = lp_estimate(column, p);
        for (std::size_t i = 0; i < setup.paths; ++i)
            column[i] = samples[i * width + 2 * j + 1];
        term.difference = lp_estimate(column, p);
        term.combined = term.pointwise.value / denom1 + term.difference.value / denom2;
        result.value = std::max(result.value, term.combined);
        result.terms.push_back(term);
    }
    return result;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& n_and_error) {
    std::vector<double> lx, ly;
    RateFit fit;
    for (const auto& [n, err] : n_and_error) {
        if (!(n > 0.0))
            throw std::invalid_argument("fit_rate: step counts must be > 0");
        if (!(err > 0.0) || !std::isfinite(err)) {
            fit.excluded_n.push_back(n);
            continue;
        }
        lx.push_back(std::log(n));
        ly.push_back(std::log(err));
    }
    if (lx.size() < 3)
        throw std::invalid_argument(
            "fit_rate: need at least 3 usable (positive, unflagged) points");
    const auto m = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: all step counts identical");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.used = lx.size();
    for (std::size_t i = 0; i < lx.size(); ++i)
        fit.residual_max =
            std::max(fit.residual_max, std::abs(ly[i] - (fit.intercept + fit.slope * lx[i])));
    return fit;
}

RateFit fit_rate_points(const std::vector<RatePoint>& points) {
    std::vector<std::pair<double, double>> usable;
    std::vector<double> excluded;
    for (const auto& pt : points) {
        if (pt.estimate.flagged || !(pt.estimate.value > 0.0)) {
            excluded.push_back(pt.n);
            continue;
        }
        usable.emplace_back(pt.n, pt.estimate.value);
    }
    RateFit fit = fit_rate(usable);
    fit.excluded_n.insert(fit.excluded_n.end(), excluded.begin(), excluded.end());
    std::sort(fit.excluded_n.begin(), fit.excluded_n.end());
    return fit;
}

MeanEstimate scheme_lyapunov_mean(const CoefficientSet& coeffs, const LyapunovFunction& lyap,
                                  const McSetup& setup, std::size_t n, double x0, double t) {
    require_divisor(n, setup.fine_level);
    const long long k =
        std::llround(t * static_cast<double>(n) / setup.horizon);
    const double t_snap = static_cast<double>(k) * setup.horizon / static_cast<double>(n);
    if (k < 0 || k > static_cast<long long>(n) ||
        std::abs(t_snap - t) > 1e-9 * std::max(1.0, setup.horizon))
        throw std::invalid_argument(
            "scheme_lyapunov_mean: t must be a breakpoint of the n-cell grid");
    const GridFunction grid = GridFunction::uniform(setup.horizon, n);
    std::vector<double> samples;
    monte_carlo_paths(setup, 1,
                      [&](std::size_t, const NoisePath& noise, double* out) {
                          const SchemePath path = em_discrete(coeffs, grid, noise, x0);
                          out[0] = lyap.value(path.values[static_cast<std::size_t>(k)]);
                      },
                      samples);
    return mean_estimate(samples);
}

} // namespace jumpdiff
