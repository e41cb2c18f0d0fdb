#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "jumpdiff/levy.hpp"

namespace jumpdiff {

enum class ModelFamily { linear, ou_additive, trig, custom };

/**
 * Coefficients of the one-dimensional equation
 *
 *   dX_t = mu(X_t) dt + sigma(X_t) dW_t + gamma(X_t-) dZ_t
 *
 * together with the structural constants the condition checks certify against:
 * c bounds Lipschitz-type growth, b the second-difference curvature, L linear
 * growth. The family tag and params let exact solvers recover the parametric
 * form where one exists.
 */
struct CoefficientSet {
    ModelFamily family = ModelFamily::custom;
    std::function<double(double)> mu;
    std::function<double(double)> sigma;
    std::function<double(double)> gamma;
    double c = 1.01;
    double b = 1.01;
    double L = 1.01;
    std::array<double, 6> params{};  // layout depends on family, see factories
    std::string name = "custom";
};

// mu = a x, sigma = s x, gamma = g x (through the origin, so the
// Doleans-Dade exact solution applies). params = {a, 0, s, 0, g, 0}.
CoefficientSet make_linear(double drift_slope, double diffusion_slope, double jump_slope);

// Affine variant mu = a x + a0 etc. params = {a, a0, s, s0, g, g0}.
CoefficientSet make_linear_affine(double a, double a0, double s, double s0, double g, double g0);

// mu = -mean_reversion x, sigma = sigma0, gamma = 1 (additive noise; exact
// solution by variation of constants). params = {mean_reversion, sigma0}.
CoefficientSet make_ou_additive(double mean_reversion, double sigma0);

// Bounded smooth model stressing the second-difference condition:
// mu = amp_mu sin x, sigma = amp_sigma cos x, gamma = amp_gamma sin x.
CoefficientSet make_trig(double amp_mu, double amp_sigma, double amp_gamma);

/**
 * Explicit Lyapunov function
 *
 *   V(x) = 2^p [ 1 + base + scale x^2 ]^{p/2},
 *   base  = (|mu(0)| + |sigma(0)| + |gamma(0)| sqrt(m2))^2,
 *   scale = c^2 (1 + sqrt(m2))^2,
 *
 * with m2 the second absolute moment of the Levy measure. V >= 2^p >= 4
 * everywhere. cbar is the growth constant certified by the condition checks;
 * it defaults to 1 until calibrate_cbar() is run.
 */
class LyapunovFunction {
public:
    LyapunovFunction(double p, double c, double mu0, double sigma0, double gamma0, double m2);

    double value(double x) const;
    double first_derivative(double x) const;
    double second_derivative(double x) const;

    double p() const { return p_; }
    double c() const { return c_; }
    double m2() const { return m2_; }
    double base() const { return base_; }
    double scale() const { return scale_; }
    double cbar() const { return cbar_; }

    LyapunovFunction with_cbar(double cbar) const;

private:
    double p_;
    double c_;
    double m2_;
    double base_;
    double scale_;
    double pow2p_;
    double cbar_ = 1.0;
};

// Builds V from the coefficients at zero and m2 of the given measure,
// using the coefficient set's own constant c.
LyapunovFunction make_lyapunov(const CoefficientSet& coeffs, const LevyMeasureSpec& levy, double p);

struct ConditionReport {
    std::string condition;            // "A0" .. "A4"
    bool pass = false;
    double constant = 0.0;            // minimal constant certified on the domain
    double margin = 0.0;              // worst slack found; negative means violated
    std::vector<double> worst_point;  // location of the worst case
    std::string domain;
};

// Integral of V(y + gamma_x z) - V(y) - V'(y) gamma_x z against the Levy
// measure. Point-mass laws are summed exactly; continuous laws use
// Gauss-Legendre (order 64) per smooth piece over a truncated support whose
// analytic tail mass must be below 1e-10 (throws std::runtime_error if the
// coverage guard fails).
double compensated_jump_integral(const LyapunovFunction& lyap, double y, double gamma_x,
                                 const LevyMeasureSpec& levy);

// A0: the integral above is bounded by cbar/2 (V(x) + V(y)). Reports the
// minimal cbar0 over x_grid x y_grid; the one-grid form uses it for both.
ConditionReport check_a0(const LyapunovFunction& lyap, const CoefficientSet& coeffs,
                         const LevyMeasureSpec& levy, const std::vector<double>& x_grid,
                         const std::vector<double>& y_grid);
ConditionReport check_a0(const LyapunovFunction& lyap, const CoefficientSet& coeffs,
                         const LevyMeasureSpec& levy, const std::vector<double>& grid);

// A1: |mu(0)| + |sigma(0)| + c|x| + (|gamma(0)| + c|x|) sqrt(m2) <= V(x)^{1/p}.
ConditionReport check_a1(const LyapunovFunction& lyap, const CoefficientSet& coeffs,
                         const std::vector<double>& grid);

// A2: |V'| <= cbar2 V^{1-1/p}; reports the minimal cbar2 on the grid.
ConditionReport check_a2(const LyapunovFunction& lyap, const std::vector<double>& grid);

// A3: |V''| <= cbar3 V^{1-2/p}.
ConditionReport check_a3(const LyapunovFunction& lyap, const std::vector<double>& grid);

// A4 second-difference condition, checked on sampled quadruples (x, y, xt, yt):
// for each coefficient xi,
//   |(xi(x)-xi(y)) - (xi(xt)-xi(yt))|
//     <= c |(x-y)-(xt-yt)| + b ((|x-y|+|xt-yt|)/2) |x-xt|.
ConditionReport check_a4(const CoefficientSet& coeffs,
                         const std::function<std::array<double, 4>()>& quadruple_sampler,
                         std::size_t n_samples);

// Uniform sampler over [lo, hi]^4 on a counter-based stream.
std::function<std::array<double, 4>()> make_box_sampler(double lo, double hi,
                                                        std::uint64_t seed);

// Runs A0, A2, A3 and stores cbar = max(1, cbar0, cbar2, cbar3) into a copy.
LyapunovFunction calibrate_cbar(const LyapunovFunction& lyap, const CoefficientSet& coeffs,
                                const LevyMeasureSpec& levy, const std::vector<double>& grid);

// lo, lo+step, ..., hi (endpoint included up to 1e-9 slack).
std::vector<double> linspace_grid(double lo, double hi, double step);

struct ModelPreset {
    std::string id;
    std::string description;
    CoefficientSet coeffs;
    LevyMeasureSpec levy;
    double horizon = 1.0;
};

const std::vector<ModelPreset>& builtin_presets();
const ModelPreset& find_preset(const std::string& id);

} // namespace jumpdiff
