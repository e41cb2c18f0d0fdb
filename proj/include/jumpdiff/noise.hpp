#pragma once

#include <cstdint>
#include <vector>

#include "jumpdiff/levy.hpp"

namespace jumpdiff {

/**
 * One realization of the driving noise (W, Z) on [0, horizon], resolved on a
 * dyadic fine grid with 2^fine_level cells plus the exact jump skeleton.
 *
 * The Brownian path is stored as prefix values W(t_j); jump times are kept at
 * full resolution together with a running sum of sizes. Every coarser object
 * is defined as a restriction of these stored values, so increments over any
 * subgrid are differences of identical doubles. That convention is what makes
 * the refinement-consistency and scheme-coupling identities bit-exact.
 *
 * Z_t = (sum of jump sizes with time <= t) - drift_rate * t is the compensated
 * jump process; drift_rate is the first moment of the Levy measure.
 */
struct NoisePath {
    double horizon = 1.0;
    int fine_level = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
    double drift_rate = 0.0;

    std::vector<double> w_prefix;          // size 2^fine_level + 1, w_prefix[0] = 0
    std::vector<double> jump_times;        // sorted, in (0, horizon]
    std::vector<double> jump_sizes;        // parallel to jump_times, never 0
    std::vector<double> jump_size_prefix;  // size jumps + 1, running sums

    std::size_t fine_steps() const { return std::size_t{1} << fine_level; }
    double fine_dt() const;
    double time_at(std::size_t index) const;

    // Maps t to its fine-grid index; throws std::invalid_argument when t is
    // not a fine grid point (tolerance 1e-9 absolute in grid units).
    std::size_t index_of(double t) const;

    double w_at_index(std::size_t index) const;
    double w_at(double t) const;  // t must lie on the fine grid

    // Cadlag evaluation of Z; any t in [0, horizon] is allowed.
    double z_at(double t) const;
    // Left limit: jumps with time strictly below t.
    double z_at_left(double t) const;

    std::size_t jump_count() const { return jump_times.size(); }
};

// Draws the Brownian increments (substream 0) and the compound Poisson
// skeleton (substream 1) for the given path index. fine_level is capped at 30.
NoisePath generate_noise_path(const LevyMeasureSpec& levy, double horizon, int fine_level,
                              std::uint64_t master_seed, std::uint64_t path_index);

/**
 * The noise restricted to a uniform subgrid with `steps` cells: breakpoint
 * times plus the stored W and Z values there. Increment k is the difference of
 * adjacent entries, so jumps with time in (t_k, t_{k+1}] land in increment k
 * and the compensator is never double counted.
 */
struct CoarseIncrements {
    std::size_t steps = 0;
    std::vector<double> times;  // steps + 1 entries
    std::vector<double> w;
    std::vector<double> z;

    double dt(std::size_t k) const { return times[k + 1] - times[k]; }
    double dw(std::size_t k) const { return w[k + 1] - w[k]; }
    double dz(std::size_t k) const { return z[k + 1] - z[k]; }
};

// Restriction to a uniform grid with coarse_n cells; coarse_n must divide
// 2^fine_level (so only powers of two are accepted).
CoarseIncrements coarsen_increments(const NoisePath& path, std::size_t coarse_n);

// Restriction of an already-coarse view to coarse_n | view.steps cells. Since
// this subsamples stored endpoint values, it equals direct coarsening exactly.
CoarseIncrements aggregate_increments(const CoarseIncrements& view, std::size_t coarse_n);

} // namespace jumpdiff
