#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "jumpdiff/rng.hpp"

namespace jumpdiff {

// Jump size laws. Each law is a normalized probability distribution; the Levy
// measure of the driving noise is intensity * law, so it always has finite
// total mass (finite activity) and the process is compound Poisson.

struct PointMassLaw {
    std::vector<double> sizes;    // all nonzero
    std::vector<double> weights;  // positive, sum to 1
};

struct GaussianLaw {
    double mean = 0.0;
    double stddev = 1.0;
};

// Mixture: with probability prob_pos a +Exp(rate_pos) jump, otherwise
// a -Exp(rate_neg) jump.
struct TwoSidedExponentialLaw {
    double rate_pos = 1.0;
    double rate_neg = 1.0;
    double prob_pos = 0.5;
};

struct UniformLaw {
    double lo = -1.0;
    double hi = 1.0;
};

using JumpLaw = std::variant<PointMassLaw, GaussianLaw, TwoSidedExponentialLaw, UniformLaw>;

struct LevyMeasureSpec {
    double intensity = 0.0;  // total mass; 0 switches jumps off entirely
    JumpLaw law = GaussianLaw{};
};

struct JumpEvent {
    double time;
    double size;
};

// Thrown by moment() when the requested absolute moment has no closed form
// for the given law; callers should fall back to Monte Carlo estimation.
struct UnsupportedMomentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument on malformed parameters (zero jump sizes,
// weights not summing to 1, nonpositive rates, lo >= hi, ...).
void validate(const LevyMeasureSpec& spec);

std::string law_name(const JumpLaw& law);

// m_p = intensity * E|J|^p, the p-th absolute moment of the Levy measure.
// p >= 1 required. Throws UnsupportedMomentError where no closed form exists
// (Gaussian with nonzero mean and p neither 1 nor an even integer).
double moment(const LevyMeasureSpec& spec, double p);

// intensity * E[J]; the compensator of the jump sum grows at this rate, so the
// compensated process Z_t = sum of jumps - drift * t is centered.
double compensator_drift(const LevyMeasureSpec& spec);

// One draw from the normalized jump law. Never returns exactly 0 (measure-zero
// hits are redrawn so downstream invariants can rely on nonzero sizes).
double sample_jump_size(const JumpLaw& law, CounterRng& rng);

// Compound Poisson skeleton on (0, horizon]: Poisson(intensity * horizon)
// count, then order-statistics times (sorted uniforms), then iid sizes.
std::vector<JumpEvent> sample_jumps(const LevyMeasureSpec& spec, double horizon, CounterRng& rng);

} // namespace jumpdiff
