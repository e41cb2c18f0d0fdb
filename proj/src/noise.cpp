#include "jumpdiff/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jumpdiff {

double NoisePath::fine_dt() const {
    // horizon * 2^-L; the scaling is exact in binary floating point
    return std::ldexp(horizon, -fine_level);
}

double NoisePath::time_at(std::size_t index) const {
    if (index > fine_steps())
        throw std::out_of_range("NoisePath::time_at: index beyond fine grid");
    return static_cast<double>(index) * fine_dt();
}

std::size_t NoisePath::index_of(double t) const {
    const double dt = fine_dt();
    const long long j = std::llround(t / dt);
    const double tol = 1e-9 * std::max(1.0, horizon);
    if (j < 0 || static_cast<std::size_t>(j) > fine_steps() ||
        std::abs(t - static_cast<double>(j) * dt) > tol) {
        std::ostringstream msg;
        msg << "NoisePath: t = " << t << " is not a fine grid point (level " << fine_level
            << ", dt = " << dt << ")";
        throw std::invalid_argument(msg.str());
    }
    return static_cast<std::size_t>(j);
}

double NoisePath::w_at_index(std::size_t index) const {
    if (index >= w_prefix.size())
        throw std::out_of_range("NoisePath::w_at_index: index beyond fine grid");
    return w_prefix[index];
}

double NoisePath::w_at(double t) const { return w_prefix[index_of(t)]; }

double NoisePath::z_at(double t) const {
    if (!(t >= 0.0) || t > horizon * (1.0 + 1e-12))
        throw std::invalid_argument("NoisePath::z_at: t outside [0, horizon]");
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    const std::size_t count = static_cast<std::size_t>(it - jump_times.begin());
    return jump_size_prefix[count] - drift_rate * t;
}

double NoisePath::z_at_left(double t) const {
    if (!(t >= 0.0) || t > horizon * (1.0 + 1e-12))
        throw std::invalid_argument("NoisePath::z_at_left: t outside [0, horizon]");
    const auto it = std::lower_bound(jump_times.begin(), jump_times.end(), t);
    const std::size_t count = static_cast<std::size_t>(it - jump_times.begin());
    return jump_size_prefix[count] - drift_rate * t;
}

NoisePath generate_noise_path(const LevyMeasureSpec& levy, double horizon, int fine_level,
                              std::uint64_t master_seed, std::uint64_t path_index) {
    validate(levy);
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("generate_noise_path: horizon must be finite and > 0");
    if (fine_level < 0 || fine_level > 30)
        throw std::invalid_argument("generate_noise_path: fine_level must lie in [0, 30]");

    NoisePath path;
    path.horizon = horizon;
    path.fine_level = fine_level;
    path.master_seed = master_seed;
    path.path_index = path_index;
    path.drift_rate = compensator_drift(levy);

    const std::size_t steps = path.fine_steps();
    const double sqrt_dt = std::sqrt(path.fine_dt());
    path.w_prefix.resize(steps + 1);
    path.w_prefix[0] = 0.0;
    CounterRng brownian(master_seed, Substream::brownian, path_index);
    for (std::size_t j = 0; j < steps; ++j)
        path.w_prefix[j + 1] = path.w_prefix[j] + sqrt_dt * brownian.normal();

    CounterRng jumps(master_seed, Substream::jumps, path_index);
    const auto events = sample_jumps(levy, horizon, jumps);
    path.jump_times.reserve(events.size());
    path.jump_sizes.reserve(events.size());
    path.jump_size_prefix.reserve(events.size() + 1);
    path.jump_size_prefix.push_back(0.0);
    for (const auto& ev : events) {
        path.jump_times.push_back(ev.time);
        path.jump_sizes.push_back(ev.size);
        path.jump_size_prefix.push_back(path.jump_size_prefix.back() + ev.size);
    }
    return path;
}

CoarseIncrements coarsen_increments(const NoisePath& path, std::size_t coarse_n) {
    const std::size_t fine = path.fine_steps();
    if (coarse_n == 0 || coarse_n > fine || fine % coarse_n != 0) {
        std::ostringstream msg;
        msg << "coarsen_increments: coarse step count " << coarse_n << " must divide 2^"
            << path.fine_level << " = " << fine
            << " (only power-of-two counts up to the fine resolution are valid)";
        throw std::invalid_argument(msg.str());
    }
    const std::size_t stride = fine / coarse_n;
    CoarseIncrements out;
    out.steps = coarse_n;
    out.times.resize(coarse_n + 1);
    out.w.resize(coarse_n + 1);
    out.z.resize(coarse_n + 1);
    for (std::size_t k = 0; k <= coarse_n; ++k) {
        const std::size_t j = k * stride;
        out.times[k] = path.time_at(j);
        out.w[k] = path.w_prefix[j];
        out.z[k] = path.z_at(out.times[k]);
    }
    return out;
}

CoarseIncrements aggregate_increments(const CoarseIncrements& view, std::size_t coarse_n) {
    if (coarse_n == 0 || coarse_n > view.steps || view.steps % coarse_n != 0) {
        std::ostringstream msg;
        msg << "aggregate_increments: target step count " << coarse_n << " must divide "
            << view.steps;
        throw std::invalid_argument(msg.str());
    }
    const std::size_t factor = view.steps / coarse_n;
    CoarseIncrements out;
    out.steps = coarse_n;
    out.times.resize(coarse_n + 1);
    out.w.resize(coarse_n + 1);
    out.z.resize(coarse_n + 1);
    for (std::size_t k = 0; k <= coarse_n; ++k) {
        out.times[k] = view.times[k * factor];
        out.w[k] = view.w[k * factor];
        out.z[k] = view.z[k * factor];
    }
    return out;
}

} // namespace jumpdiff
