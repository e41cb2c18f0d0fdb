#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include <doctest.h>

#include "jumpdiff/error.hpp"
#include "jumpdiff/model.hpp"
#include "jumpdiff/rng.hpp"

using namespace jumpdiff;

namespace {

std::vector<double> standard_normals(std::size_t count, std::uint64_t seed) {
    CounterRng rng(seed, Substream::generic, 0);
    std::vector<double> out(count);
    for (double& v : out) v = rng.normal();
    return out;
}

McSetup small_setup(int fine_level, std::size_t paths, std::uint64_t seed) {
    McSetup setup;
    setup.levy = {1.0, GaussianLaw{0.1, 0.3}};
    setup.horizon = 1.0;
    setup.fine_level = fine_level;
    setup.paths = paths;
    setup.master_seed = seed;
    setup.threads = 1;
    return setup;
}

} // namespace

TEST_CASE("lp estimates on tiny hand-computable samples") {
    const LpEstimate single = lp_estimate({2.0}, 2.0);
    CHECK(single.value == 2.0);
    CHECK(single.se == 0.0);
    CHECK(single.samples == 1);
    CHECK_FALSE(single.flagged);

    const LpEstimate signs = lp_estimate({1.0, -1.0, 1.0, -1.0}, 2.0);
    CHECK(signs.value == 1.0);
    CHECK(signs.se == 0.0);  // all batch means coincide

    CHECK(lp_estimate({3.0, 4.0}, 2.0).value == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK(lp_estimate({1.0, -2.0}, 1.0).value == doctest::Approx(1.5).epsilon(1e-15));

    const LpEstimate zero = lp_estimate(std::vector<double>(64, 0.0), 2.0);
    CHECK(zero.value == 0.0);
    CHECK(zero.se == 0.0);
    CHECK_FALSE(zero.flagged);  // an exact zero is not noise

    CHECK_THROWS_AS((void)lp_estimate({}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS((void)lp_estimate({1.0}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)lp_estimate({1.0}, std::nan("")), std::invalid_argument);
}

TEST_CASE("lp estimate recovers known gaussian moments") {
    const std::vector<double> d = standard_normals(100000, 71);

    const LpEstimate l2 = lp_estimate(d, 2.0);
    CHECK(l2.se > 0.0);
    CHECK(l2.se < 0.02);
    CHECK(std::abs(l2.value - 1.0) < 4.0 * l2.se);
    CHECK_FALSE(l2.flagged);

    const LpEstimate l4 = lp_estimate(d, 4.0);
    CHECK(std::abs(l4.value - std::pow(3.0, 0.25)) < 4.0 * l4.se);

    // Jensen: the L^p norm grows with p
    const LpEstimate l1 = lp_estimate(d, 1.0);
    CHECK(l1.value <= l2.value);
    CHECK(l2.value <= l4.value);
}

TEST_CASE("minkowski inequality on sample vectors") {
    const std::vector<double> a = standard_normals(4096, 5);
    const std::vector<double> b = standard_normals(4096, 6);
    std::vector<double> sum(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sum[i] = a[i] + b[i];
    for (double p : {1.0, 2.0, 3.0}) {
        CHECK(lp_estimate(sum, p).value <=
              lp_estimate(a, p).value + lp_estimate(b, p).value + 1e-12);
    }
}

TEST_CASE("batch-means intervals cover the truth") {
    int covered = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> d = standard_normals(2048, 1000 + rep);
        const LpEstimate est = lp_estimate(d, 2.0);
        if (std::abs(est.value - 1.0) <= 2.0 * est.se) ++covered;
    }
    CHECK(covered >= 90);
}

TEST_CASE("noise floor flagging") {
    // one outlier among zeros: the batch spread dwarfs the estimate
    std::vector<double> d(64, 0.0);
    d[0] = 1.0;
    const LpEstimate est = lp_estimate(d, 2.0);
    CHECK(est.value == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(est.flagged);

    // a clean signal well above its SE is not flagged
    std::vector<double> clean = standard_normals(4096, 9);
    for (double& v : clean) v += 10.0;
    CHECK_FALSE(lp_estimate(clean, 2.0).flagged);
}

TEST_CASE("mean estimate uses the full-sample mean") {
    std::vector<double> alternating(64);
    for (std::size_t i = 0; i < alternating.size(); ++i)
        alternating[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const MeanEstimate est = mean_estimate(alternating);
    CHECK(est.value == 0.0);
    CHECK(est.se == doctest::Approx(std::sqrt(1.0 / 31.0)).epsilon(1e-14));

    // sample count not divisible by the batch count
    std::vector<double> odd(33, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < odd.size(); ++i) {
        odd[i] = static_cast<double>(i);
        total += odd[i];
    }
    CHECK(mean_estimate(odd).value == doctest::Approx(total / 33.0).epsilon(1e-14));
}

TEST_CASE("monte carlo driver is deterministic and prefix-stable") {
    const auto kernel = [](std::size_t i, const NoisePath& noise, double* out) {
        out[0] = noise.w_prefix.back();
        out[1] = static_cast<double>(i);
    };

    McSetup setup = small_setup(6, 64, 99);
    std::vector<double> small;
    monte_carlo_paths(setup, 2, kernel, small);
    REQUIRE(small.size() == 128);
    CHECK(small[1] == 0.0);
    CHECK(small[7] == 3.0);  // row-major: path 3, slot 1

    setup.paths = 128;
    std::vector<double> large;
    monte_carlo_paths(setup, 2, kernel, large);
    for (std::size_t i = 0; i < small.size(); ++i)
        CHECK(small[i] == large[i]);  // adding paths never perturbs earlier ones

    setup.threads = 4;
    std::vector<double> threaded;
    monte_carlo_paths(setup, 2, kernel, threaded);
    CHECK(threaded == large);

    setup.paths = 16;
    CHECK_THROWS_AS(monte_carlo_paths(setup, 2, kernel, threaded), std::invalid_argument);
    setup.paths = 64;
    CHECK_THROWS_AS(monte_carlo_paths(setup, 0, kernel, threaded), std::invalid_argument);
    setup.levy.intensity = -1.0;
    CHECK_THROWS_AS(monte_carlo_paths(setup, 1, kernel, threaded), std::invalid_argument);
}

TEST_CASE("coupled estimators vanish when the schemes coincide") {
    const ModelPreset& preset = find_preset("linear");
    McSetup setup = small_setup(6, 64, 17);
    setup.levy = preset.levy;

    const LpEstimate point =
        strong_error_pointwise(preset.coeffs, setup, 64, 1.0, 2.0);
    CHECK(point.value == 0.0);
    CHECK(point.se == 0.0);
    CHECK_FALSE(point.flagged);

    CHECK(mixed_xy_difference(preset.coeffs, setup, 64, 1.0, 1.0, 2.0, 2.0, 2.0).value == 0.0);
    CHECK(corollary_functional(preset.coeffs, setup, 64, 1.0, 2.0, 2.0, {0.5, 1.0}).value ==
          0.0);

    // equal start pairs cancel exactly even on a coarse grid
    CHECK(mixed_xy_difference(preset.coeffs, setup, 8, 1.0, 1.5, 1.0, 1.5, 2.0).value == 0.0);
    CHECK(temporal_spatial_difference(preset.coeffs, setup, 8, 0.0, 0.5, 0.0, 0.5, 1.0, 1.0,
                                      2.0)
              .value == 0.0);
}

TEST_CASE("pointwise error shrinks under refinement") {
    const ModelPreset& preset = find_preset("linear");
    McSetup setup = small_setup(8, 256, 23);
    setup.levy = preset.levy;
    const LpEstimate coarse = strong_error_pointwise(preset.coeffs, setup, 4, 1.0, 2.0);
    const LpEstimate fine = strong_error_pointwise(preset.coeffs, setup, 64, 1.0, 2.0);
    CHECK(coarse.value > fine.value);
    CHECK(fine.value > 0.0);

    CHECK_THROWS_WITH_AS(
        (void)strong_error_pointwise(preset.coeffs, setup, 24, 1.0, 2.0),
        doctest::Contains("must divide the fine grid"), std::invalid_argument);
}

TEST_CASE("exact references are restricted to solvable families") {
    McSetup setup = small_setup(6, 64, 3);
    const CoefficientSet affine = make_linear_affine(0.5, 0.1, 0.2, 0.0, 0.1, 0.0);
    CHECK_THROWS_WITH_AS((void)strong_error_pointwise(affine, setup, 8, 1.0, 2.0,
                                                      ReferenceKind::exact),
                         doctest::Contains("through the origin"), std::invalid_argument);
    const ModelPreset& trig = find_preset("trig");
    McSetup trig_setup = small_setup(6, 64, 3);
    trig_setup.levy = trig.levy;
    CHECK_THROWS_AS((void)strong_error_pointwise(trig.coeffs, trig_setup, 8, 0.5, 2.0,
                                                 ReferenceKind::exact),
                    std::invalid_argument);

    // the through-origin linear family does have an exact solution
    const CoefficientSet linear = make_linear(0.5, 0.2, 0.1);
    const LpEstimate est =
        strong_error_pointwise(linear, setup, 8, 1.0, 2.0, ReferenceKind::exact);
    CHECK(est.value > 0.0);
}

TEST_CASE("corollary functional bookkeeping") {
    const ModelPreset& preset = find_preset("linear");
    McSetup setup = small_setup(6, 64, 41);
    setup.levy = preset.levy;

    CHECK_THROWS_AS((void)corollary_functional(preset.coeffs, setup, 8, 1.0, 1.0, 2.0, {0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)corollary_functional(preset.coeffs, setup, 8, 1.0, 2.0, 2.0, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        (void)corollary_functional(preset.coeffs, setup, 8, 1.0, 2.0, 2.0, {1.5}),
        std::invalid_argument);

    // tiny fractions clamp to the first breakpoint, never k = 0
    const CorollaryResult early =
        corollary_functional(preset.coeffs, setup, 8, 1.0, 2.0, 2.0, {0.01});
    REQUIRE(early.terms.size() == 1);
    CHECK(early.terms[0].k == 1);
    CHECK(early.terms[0].time == 0.125);

    // fractions that round to the same breakpoint are deduplicated
    const CorollaryResult dup =
        corollary_functional(preset.coeffs, setup, 8, 1.0, 2.0, 2.0, {0.49, 0.5, 1.0});
    REQUIRE(dup.terms.size() == 2);
    CHECK(dup.terms[0].k == 4);
    CHECK(dup.terms[1].k == 8);
    CHECK(dup.terms[1].time == 1.0);

    // the headline value is the max of the combined terms
    double best = 0.0;
    for (const auto& term : dup.terms) best = std::max(best, term.combined);
    CHECK(dup.value == best);
    const double denom1 = 1.0 + 1.0;
    const double denom2 = 1.0 * (1.0 + 1.0 + 2.0);
    CHECK(dup.terms[0].combined ==
          doctest::Approx(dup.terms[0].pointwise.value / denom1 +
                          dup.terms[0].difference.value / denom2)
              .epsilon(1e-15));
}

TEST_CASE("rate fits on synthetic power laws") {
    const RateFit fit = fit_rate({{16.0, 3.0 / 4.0}, {64.0, 3.0 / 8.0}, {256.0, 3.0 / 16.0}});
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(fit.residual_max < 1e-12);
    CHECK(fit.used == 3);
    CHECK(fit.excluded_n.empty());

    const RateFit flat = fit_rate({{16.0, 0.7}, {64.0, 0.7}, {256.0, 0.7}, {1024.0, 0.7}});
    CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-14));

    const RateFit pruned =
        fit_rate({{16.0, 1.0}, {32.0, 0.0}, {64.0, 0.5}, {256.0, 0.25}});
    CHECK(pruned.used == 3);
    REQUIRE(pruned.excluded_n.size() == 1);
    CHECK(pruned.excluded_n[0] == 32.0);

    CHECK_THROWS_AS((void)fit_rate({{16.0, 1.0}, {64.0, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS((void)fit_rate({{16.0, 1.0}, {16.0, 0.5}, {16.0, 0.25}}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)fit_rate({{-4.0, 1.0}, {64.0, 0.5}, {256.0, 0.25}}),
                    std::invalid_argument);
}

TEST_CASE("rate fits drop flagged points") {
    RatePoint a{16.0, {1.0, 0.01, 2.0, 100, false}};
    RatePoint b{32.0, {0.001, 0.01, 2.0, 100, true}};  // at the noise floor
    RatePoint c{64.0, {0.5, 0.01, 2.0, 100, false}};
    RatePoint d{256.0, {0.25, 0.01, 2.0, 100, false}};
    const RateFit fit = fit_rate_points({a, b, c, d});
    CHECK(fit.used == 3);
    REQUIRE(fit.excluded_n.size() == 1);
    CHECK(fit.excluded_n[0] == 32.0);
}

TEST_CASE("scheme lyapunov mean") {
    const ModelPreset& preset = find_preset("linear");
    McSetup setup = small_setup(6, 64, 12);
    setup.levy = preset.levy;
    const double m2 = moment(preset.levy, 2.0);
    const LyapunovFunction lyap(2.0, preset.coeffs.c, std::abs(preset.coeffs.mu(0.0)),
                                std::abs(preset.coeffs.sigma(0.0)),
                                std::abs(preset.coeffs.gamma(0.0)), m2);

    // at t = 0 every path sits at x0, so the mean is V(x0) and the spread is
    // pure summation roundoff
    const MeanEstimate at_start = scheme_lyapunov_mean(preset.coeffs, lyap, setup, 4, 1.5, 0.0);
    CHECK(at_start.value == doctest::Approx(lyap.value(1.5)).epsilon(1e-14));
    CHECK(at_start.se <= 1e-12 * lyap.value(1.5));

    const MeanEstimate later = scheme_lyapunov_mean(preset.coeffs, lyap, setup, 4, 1.5, 0.5);
    CHECK(later.value > 0.0);
    CHECK(later.se > 0.0);
    CHECK(std::isfinite(later.value));

    CHECK_THROWS_WITH_AS(
        (void)scheme_lyapunov_mean(preset.coeffs, lyap, setup, 4, 1.5, 0.3),
        doctest::Contains("breakpoint"), std::invalid_argument);
}
