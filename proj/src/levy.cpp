#include "jumpdiff/levy.hpp"

#include <algorithm>
#include <cmath>

namespace jumpdiff {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

bool is_even_integer(double p) {
    if (p != std::floor(p)) return false;
    const long long n = static_cast<long long>(p);
    return n % 2 == 0;
}

// (j-1)!! for even j >= 0, i.e. the j-th central moment of a standard normal.
double odd_double_factorial(long long j) {
    double acc = 1.0;
    for (long long i = j - 1; i >= 1; i -= 2) acc *= static_cast<double>(i);
    return acc;
}

double binomial(long long n, long long k) {
    double acc = 1.0;
    for (long long i = 1; i <= k; ++i)
        acc = acc * static_cast<double>(n - k + i) / static_cast<double>(i);
    return acc;
}

// E|J|^p for one normalized draw of the law.
double absolute_moment(const JumpLaw& law, double p) {
    if (const auto* pm = std::get_if<PointMassLaw>(&law)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < pm->sizes.size(); ++i)
            acc += pm->weights[i] * std::pow(std::abs(pm->sizes[i]), p);
        return acc;
    }
    if (const auto* g = std::get_if<GaussianLaw>(&law)) {
        if (g->mean == 0.0) {
            // E|sd Z|^p = sd^p 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
            return std::pow(g->stddev, p) * std::pow(2.0, 0.5 * p) *
                   std::tgamma(0.5 * (p + 1.0)) / kSqrtPi;
        }
        if (p == 1.0) {
            // folded normal mean
            const double m = g->mean;
            const double s = g->stddev;
            return s * std::sqrt(2.0 / 3.14159265358979323846) *
                       std::exp(-m * m / (2.0 * s * s)) +
                   m * std::erf(m / (s * std::sqrt(2.0)));
        }
        if (is_even_integer(p)) {
            // |J|^p = J^p; expand (m + s Z)^p with normal central moments
            const long long n = static_cast<long long>(p);
            double acc = 0.0;
            for (long long j = 0; j <= n; j += 2)
                acc += binomial(n, j) * std::pow(g->mean, static_cast<double>(n - j)) *
                       std::pow(g->stddev, static_cast<double>(j)) * odd_double_factorial(j);
            return acc;
        }
        throw UnsupportedMomentError(
            "moment: Gaussian law with nonzero mean has a closed form only for p = 1 "
            "or even integer p; estimate this moment by Monte Carlo instead");
    }
    if (const auto* e = std::get_if<TwoSidedExponentialLaw>(&law)) {
        const double gp = std::tgamma(p + 1.0);
        return e->prob_pos * gp / std::pow(e->rate_pos, p) +
               (1.0 - e->prob_pos) * gp / std::pow(e->rate_neg, p);
    }
    const auto& u = std::get<UniformLaw>(law);
    // integral of |z|^p / (hi - lo); antiderivative sgn(z) |z|^{p+1} / (p+1)
    auto anti = [p](double z) {
        const double s = z < 0.0 ? -1.0 : 1.0;
        return s * std::pow(std::abs(z), p + 1.0) / (p + 1.0);
    };
    return (anti(u.hi) - anti(u.lo)) / (u.hi - u.lo);
}

double mean_of(const JumpLaw& law) {
    if (const auto* pm = std::get_if<PointMassLaw>(&law)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < pm->sizes.size(); ++i)
            acc += pm->weights[i] * pm->sizes[i];
        return acc;
    }
    if (const auto* g = std::get_if<GaussianLaw>(&law)) return g->mean;
    if (const auto* e = std::get_if<TwoSidedExponentialLaw>(&law))
        return e->prob_pos / e->rate_pos - (1.0 - e->prob_pos) / e->rate_neg;
    const auto& u = std::get<UniformLaw>(law);
    return 0.5 * (u.lo + u.hi);
}

} // namespace

void validate(const LevyMeasureSpec& spec) {
    if (!std::isfinite(spec.intensity) || spec.intensity < 0.0)
        throw std::invalid_argument("levy: intensity must be finite and >= 0");
    if (const auto* pm = std::get_if<PointMassLaw>(&spec.law)) {
        if (pm->sizes.empty() || pm->sizes.size() != pm->weights.size())
            throw std::invalid_argument("levy: point-mass law needs matching nonempty sizes/weights");
        double total = 0.0;
        for (std::size_t i = 0; i < pm->sizes.size(); ++i) {
            if (!std::isfinite(pm->sizes[i]) || pm->sizes[i] == 0.0)
                throw std::invalid_argument("levy: point-mass sizes must be finite and nonzero");
            if (!std::isfinite(pm->weights[i]) || pm->weights[i] <= 0.0)
                throw std::invalid_argument("levy: point-mass weights must be finite and > 0");
            total += pm->weights[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("levy: point-mass weights must sum to 1");
    } else if (const auto* g = std::get_if<GaussianLaw>(&spec.law)) {
        if (!std::isfinite(g->mean) || !std::isfinite(g->stddev) || g->stddev <= 0.0)
            throw std::invalid_argument("levy: Gaussian law needs finite mean and stddev > 0");
    } else if (const auto* e = std::get_if<TwoSidedExponentialLaw>(&spec.law)) {
        if (!(e->rate_pos > 0.0) || !(e->rate_neg > 0.0) ||
            !std::isfinite(e->rate_pos) || !std::isfinite(e->rate_neg))
            throw std::invalid_argument("levy: two-sided exponential rates must be finite and > 0");
        if (!(e->prob_pos >= 0.0 && e->prob_pos <= 1.0))
            throw std::invalid_argument("levy: prob_pos must lie in [0, 1]");
    } else {
        const auto& u = std::get<UniformLaw>(spec.law);
        if (!std::isfinite(u.lo) || !std::isfinite(u.hi) || !(u.lo < u.hi))
            throw std::invalid_argument("levy: uniform law needs lo < hi, both finite");
    }
}

std::string law_name(const JumpLaw& law) {
    if (std::holds_alternative<PointMassLaw>(law)) return "point-masses";
    if (std::holds_alternative<GaussianLaw>(law)) return "gaussian";
    if (std::holds_alternative<TwoSidedExponentialLaw>(law)) return "two-sided-exponential";
    return "uniform";
}

double moment(const LevyMeasureSpec& spec, double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw std::invalid_argument("moment: require finite p >= 1");
    validate(spec);
    if (spec.intensity == 0.0) return 0.0;
    return spec.intensity * absolute_moment(spec.law, p);
}

double compensator_drift(const LevyMeasureSpec& spec) {
    validate(spec);
    if (spec.intensity == 0.0) return 0.0;
    return spec.intensity * mean_of(spec.law);
}

double sample_jump_size(const JumpLaw& law, CounterRng& rng) {
    if (const auto* pm = std::get_if<PointMassLaw>(&law)) {
        const double u = rng.uniform01();
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < pm->sizes.size(); ++i) {
            cum += pm->weights[i];
            if (u <= cum) return pm->sizes[i];
        }
        return pm->sizes.back();
    }
    if (const auto* g = std::get_if<GaussianLaw>(&law)) {
        double s;
        do {
            s = g->mean + g->stddev * rng.normal();
        } while (s == 0.0);
        return s;
    }
    if (const auto* e = std::get_if<TwoSidedExponentialLaw>(&law)) {
        double s;
        do {
            if (rng.uniform01() <= e->prob_pos)
                s = rng.exponential(e->rate_pos);
            else
                s = -rng.exponential(e->rate_neg);
        } while (s == 0.0);
        return s;
    }
    const auto& u = std::get<UniformLaw>(law);
    double s;
    do {
        s = rng.uniform(u.lo, u.hi);
    } while (s == 0.0);
    return s;
}

std::vector<JumpEvent> sample_jumps(const LevyMeasureSpec& spec, double horizon, CounterRng& rng) {
    validate(spec);
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("sample_jumps: horizon must be finite and >= 0");
    std::vector<JumpEvent> events;
    if (spec.intensity == 0.0 || horizon == 0.0) return events;

    const std::uint64_t count = rng.poisson(spec.intensity * horizon);
    std::vector<double> times(count);
    for (auto& t : times) t = rng.uniform(0.0, horizon);
    std::sort(times.begin(), times.end());

    events.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
        events.push_back({times[i], sample_jump_size(spec.law, rng)});
    return events;
}

} // namespace jumpdiff
