#include "jumpdiff/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jumpdiff {

GridFunction GridFunction::identity(double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("GridFunction: horizon must be finite and > 0");
    GridFunction g;
    g.kind_ = Kind::identity;
    g.horizon_ = horizon;
    g.mesh_ = 0.0;
    return g;
}

GridFunction GridFunction::uniform(double horizon, std::size_t n) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("GridFunction: horizon must be finite and > 0");
    if (n == 0) throw std::invalid_argument("GridFunction: need at least one cell");
    GridFunction g;
    g.kind_ = Kind::uniform;
    g.horizon_ = horizon;
    g.breakpoints_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        g.breakpoints_[k] = static_cast<double>(k) * horizon / static_cast<double>(n);
    g.breakpoints_.back() = horizon;
    double mesh = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        mesh = std::max(mesh, g.breakpoints_[k + 1] - g.breakpoints_[k]);
    g.mesh_ = mesh;
    return g;
}

GridFunction GridFunction::from_breakpoints(std::vector<double> breakpoints) {
    if (breakpoints.size() < 2)
        throw std::invalid_argument("GridFunction: need at least two breakpoints");
    if (breakpoints.front() != 0.0)
        throw std::invalid_argument("GridFunction: breakpoints must start at 0");
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k)
        if (!(breakpoints[k] < breakpoints[k + 1]))
            throw std::invalid_argument("GridFunction: breakpoints must be strictly increasing");
    if (!std::isfinite(breakpoints.back()) || !(breakpoints.back() > 0.0))
        throw std::invalid_argument("GridFunction: final breakpoint must be finite and > 0");
    GridFunction g;
    g.kind_ = Kind::explicit_grid;
    g.horizon_ = breakpoints.back();
    double mesh = 0.0;
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k)
        mesh = std::max(mesh, breakpoints[k + 1] - breakpoints[k]);
    g.mesh_ = mesh;
    g.breakpoints_ = std::move(breakpoints);
    return g;
}

std::size_t GridFunction::steps() const {
    if (is_identity())
        throw std::logic_error("GridFunction::steps: identity map has no breakpoint grid");
    return breakpoints_.size() - 1;
}

const std::vector<double>& GridFunction::breakpoints() const {
    if (is_identity())
        throw std::logic_error("GridFunction::breakpoints: identity map has no breakpoint grid");
    return breakpoints_;
}

double GridFunction::delta_eval(double t) const {
    if (!(t >= 0.0) || t > horizon_ * (1.0 + 1e-12))
        throw std::invalid_argument("GridFunction::delta_eval: t outside [0, horizon]");
    if (is_identity()) return t;
    if (t <= breakpoints_[1]) return breakpoints_[0];  // first cell is closed
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return *(it - 1);
}

double SchemePath::value_at(double t) const {
    const double tol = 1e-9 * std::max(1.0, times.empty() ? 1.0 : times.back());
    const auto it = std::lower_bound(times.begin(), times.end(), t - tol);
    if (it == times.end() || std::abs(*it - t) > tol) {
        std::ostringstream msg;
        msg << "SchemePath::value_at: t = " << t << " is not a path time";
        throw std::invalid_argument(msg.str());
    }
    return values[static_cast<std::size_t>(it - times.begin())];
}

namespace {

void require_same_horizon(const GridFunction& grid, const NoisePath& noise) {
    const double tol = 1e-12 * std::max(1.0, noise.horizon);
    if (std::abs(grid.horizon() - noise.horizon) > tol)
        throw std::invalid_argument("em: grid horizon does not match noise horizon");
}

// Fine-grid indices of the scheme breakpoints, validated against the noise.
std::vector<std::size_t> grid_fine_indices(const GridFunction& grid, const NoisePath& noise) {
    const std::size_t fine = noise.fine_steps();
    std::vector<std::size_t> idx;
    if (grid.is_identity()) {
        idx.resize(fine + 1);
        for (std::size_t j = 0; j <= fine; ++j) idx[j] = j;
        return idx;
    }
    if (grid.kind() == GridFunction::Kind::uniform) {
        const std::size_t n = grid.steps();
        if (n > fine || fine % n != 0) {
            std::ostringstream msg;
            msg << "em: uniform grid with n = " << n << " cells does not divide the fine grid "
                << "(2^" << noise.fine_level << " = " << fine
                << " cells); n must be a power-of-two divisor";
            throw std::invalid_argument(msg.str());
        }
        const std::size_t stride = fine / n;
        idx.resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) idx[k] = k * stride;
        return idx;
    }
    const auto& bp = grid.breakpoints();
    idx.reserve(bp.size());
    for (double t : bp) idx.push_back(noise.index_of(t));
    for (std::size_t k = 0; k + 1 < idx.size(); ++k)
        if (!(idx[k] < idx[k + 1]))
            throw std::invalid_argument("em: grid breakpoints collide on the fine grid");
    return idx;
}

// One EM step over (t0, t1]; shared by the discrete and continuous variants so
// their floating-point operations agree exactly where the segments coincide.
inline double em_step(const CoefficientSet& coeffs, double y, double t0, double t1, double w0,
                      double w1, double z0, double z1) {
    return y + coeffs.mu(y) * (t1 - t0) + coeffs.sigma(y) * (w1 - w0) +
           coeffs.gamma(y) * (z1 - z0);
}

} // namespace

SchemePath em_discrete(const CoefficientSet& coeffs, const GridFunction& grid,
                       const NoisePath& noise, double x0) {
    require_same_horizon(grid, noise);
    const auto idx = grid_fine_indices(grid, noise);
    SchemePath out;
    out.times.resize(idx.size());
    out.values.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out.times[k] = noise.time_at(idx[k]);
    out.values[0] = x0;
    double z0 = noise.z_at(out.times[0]);
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        const double z1 = noise.z_at(out.times[k + 1]);
        out.values[k + 1] =
            em_step(coeffs, out.values[k], out.times[k], out.times[k + 1],
                    noise.w_prefix[idx[k]], noise.w_prefix[idx[k + 1]], z0, z1);
        z0 = z1;
    }
    return out;
}

double em_continuous(const CoefficientSet& coeffs, const GridFunction& grid,
                     const NoisePath& noise, double x0, double s, double t) {
    require_same_horizon(grid, noise);
    if (!(s <= t))
        throw std::invalid_argument("em_continuous: require s <= t");
    const std::size_t s_idx = noise.index_of(s);
    const std::size_t t_idx = noise.index_of(t);
    if (s_idx == t_idx) return x0;

    // Segment boundaries: s, the grid breakpoints strictly inside (s, t), t.
    std::vector<std::size_t> seg;
    seg.push_back(s_idx);
    if (grid.is_identity()) {
        for (std::size_t j = s_idx + 1; j < t_idx; ++j) seg.push_back(j);
    } else {
        const auto idx = grid_fine_indices(grid, noise);
        for (std::size_t b : idx)
            if (b > s_idx && b < t_idx) seg.push_back(b);
    }
    seg.push_back(t_idx);

    double y = x0;
    double t0 = noise.time_at(seg[0]);
    double z0 = noise.z_at(t0);
    for (std::size_t k = 0; k + 1 < seg.size(); ++k) {
        const double t1 = noise.time_at(seg[k + 1]);
        const double z1 = noise.z_at(t1);
        y = em_step(coeffs, y, t0, t1, noise.w_prefix[seg[k]], noise.w_prefix[seg[k + 1]], z0,
                    z1);
        t0 = t1;
        z0 = z1;
    }
    return y;
}

SchemePath reference_solution(const CoefficientSet& coeffs, const NoisePath& noise, double x0) {
    return em_discrete(coeffs, GridFunction::identity(noise.horizon), noise, x0);
}

double exact_linear(double drift_slope, double diffusion_slope, double jump_slope,
                    const NoisePath& noise, double x0, double t) {
    const double w = noise.w_at(t);  // also validates that t is a fine grid point
    double prod = 1.0;
    for (std::size_t i = 0; i < noise.jump_times.size() && noise.jump_times[i] <= t; ++i)
        prod *= 1.0 + jump_slope * noise.jump_sizes[i];
    const double expo = (drift_slope - jump_slope * noise.drift_rate -
                         0.5 * diffusion_slope * diffusion_slope) *
                            t +
                        diffusion_slope * w;
    return x0 * std::exp(expo) * prod;
}

double exact_ou(double mean_reversion, double sigma0, const NoisePath& noise, double x0,
                double t) {
    if (!(mean_reversion >= 0.0))
        throw std::invalid_argument("exact_ou: mean reversion must be >= 0");
    const std::size_t t_idx = noise.index_of(t);
    if (mean_reversion == 0.0)
        return x0 + sigma0 * noise.w_at_index(t_idx) + noise.z_at(t);

    const double decay = std::exp(-mean_reversion * t);
    // left-point quadrature of the Wiener integral; weight advances by a
    // constant factor per fine cell
    const double step_factor = std::exp(mean_reversion * noise.fine_dt());
    double weight = decay;
    double wiener = 0.0;
    for (std::size_t j = 0; j < t_idx; ++j) {
        wiener += weight * (noise.w_prefix[j + 1] - noise.w_prefix[j]);
        weight *= step_factor;
    }
    double jump_sum = 0.0;
    for (std::size_t i = 0; i < noise.jump_times.size() && noise.jump_times[i] <= t; ++i)
        jump_sum += std::exp(-mean_reversion * (t - noise.jump_times[i])) * noise.jump_sizes[i];
    const double compensator = noise.drift_rate * (1.0 - decay) / mean_reversion;
    return decay * x0 + sigma0 * wiener + jump_sum - compensator;
}

} // namespace jumpdiff
