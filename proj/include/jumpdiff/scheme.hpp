#pragma once

#include <cstddef>
#include <vector>

#include "jumpdiff/model.hpp"
#include "jumpdiff/noise.hpp"

namespace jumpdiff {

/**
 * A time-discretization map on [0, horizon]: either the identity (mesh 0,
 * no discretization) or the left-endpoint step map of a breakpoint grid,
 * with the first cell closed:
 *
 *   delta(t) = t_0 for t in [t_0, t_1],   delta(t) = t_k for t in (t_k, t_{k+1}].
 *
 * In particular delta(t_1) = t_0, and for step grids the left limit
 * delta(t-) coincides with delta(t) everywhere on (0, horizon].
 */
class GridFunction {
public:
    enum class Kind { identity, uniform, explicit_grid };

    static GridFunction identity(double horizon);
    static GridFunction uniform(double horizon, std::size_t n);
    // Breakpoints must be strictly increasing, start at 0; the horizon is the
    // final entry. At least one cell.
    static GridFunction from_breakpoints(std::vector<double> breakpoints);

    Kind kind() const { return kind_; }
    bool is_identity() const { return kind_ == Kind::identity; }
    double horizon() const { return horizon_; }
    double mesh() const { return mesh_; }                  // |delta|, 0 for identity
    std::size_t steps() const;                             // cells; throws for identity
    const std::vector<double>& breakpoints() const;        // throws for identity

    double delta_eval(double t) const;

private:
    GridFunction() = default;
    Kind kind_ = Kind::identity;
    double horizon_ = 0.0;
    double mesh_ = 0.0;
    std::vector<double> breakpoints_;
};

struct SchemePath {
    std::vector<double> times;
    std::vector<double> values;  // values[k] is the state at times[k]

    double terminal() const { return values.back(); }
    std::size_t cells() const { return values.empty() ? 0 : values.size() - 1; }
    // Exact-time lookup (1e-9 tolerance); throws when t is not a path time.
    double value_at(double t) const;
};

// Euler-Maruyama on the grid's breakpoints with the shared noise:
//   Y_{k+1} = Y_k + mu(Y_k) dt_k + sigma(Y_k) dW_k + gamma(Y_k) dZ_k,
// where the increments are endpoint differences of the stored noise, so jumps
// in (t_k, t_{k+1}] enter through the state at t_k. The identity grid runs on
// the fine grid itself. Grid breakpoints must lie on the noise fine grid.
SchemePath em_discrete(const CoefficientSet& coeffs, const GridFunction& grid,
                       const NoisePath& noise, double x0);

// The continuous-time interpolation of the scheme started at (s, x0) and
// evaluated at t: coefficients stay frozen at the state at max(s, delta(r))
// over [s, t]. At grid breakpoints this agrees with em_discrete bit-for-bit;
// s and t must be fine grid points.
double em_continuous(const CoefficientSet& coeffs, const GridFunction& grid,
                     const NoisePath& noise, double x0, double s, double t);

// Fine-grid EM over the whole horizon; the coupling reference.
SchemePath reference_solution(const CoefficientSet& coeffs, const NoisePath& noise, double x0);

// Exact solution of dX = a X dt + s X dW + g X- dZ (linear through the
// origin) driven by this noise path:
//   X_t = x0 exp((a - g drift - s^2/2) t + s W_t) prod_{tau_i <= t} (1 + g J_i).
double exact_linear(double drift_slope, double diffusion_slope, double jump_slope,
                    const NoisePath& noise, double x0, double t);

// Exact solution of dX = -mr X dt + sigma0 dW + dZ by variation of constants.
// The Wiener integral uses left-point quadrature on the fine grid (its only
// approximation; O(2^-fine_level) bias); the jump sum and the compensator
// integral are evaluated in closed form. mr = 0 reduces to x0 + sigma0 W_t + Z_t.
double exact_ou(double mean_reversion, double sigma0, const NoisePath& noise, double x0,
                double t);

} // namespace jumpdiff
