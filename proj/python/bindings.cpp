#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "jumpdiff/config.hpp"
#include "jumpdiff/error.hpp"
#include "jumpdiff/levy.hpp"
#include "jumpdiff/model.hpp"
#include "jumpdiff/noise.hpp"
#include "jumpdiff/runner.hpp"
#include "jumpdiff/scheme.hpp"

namespace py = pybind11;
using namespace jumpdiff;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Euler-Maruyama simulation and verification kernels for 1-D "
              "jump-diffusions driven by compensated compound Poisson noise";

    py::register_exception<UnsupportedMomentError>(m, "UnsupportedMomentError");
    py::register_exception<ConfigError>(m, "ConfigError");

    // ---- jump measures ----
    py::class_<LevyMeasureSpec>(m, "LevyMeasure")
        .def_readwrite("intensity", &LevyMeasureSpec::intensity)
        .def_property_readonly(
            "law_name", [](const LevyMeasureSpec& s) { return law_name(s.law); })
        .def("__repr__", [](const LevyMeasureSpec& s) {
            return "LevyMeasure(" + law_name(s.law) +
                   ", intensity=" + std::to_string(s.intensity) + ")";
        });

    m.def(
        "gaussian_measure",
        [](double intensity, double mean, double stddev) {
            return LevyMeasureSpec{intensity, GaussianLaw{mean, stddev}};
        },
        py::arg("intensity"), py::arg("mean") = 0.0, py::arg("stddev") = 1.0);
    m.def(
        "point_mass_measure",
        [](double intensity, std::vector<double> sizes, std::vector<double> weights) {
            return LevyMeasureSpec{intensity,
                                   PointMassLaw{std::move(sizes), std::move(weights)}};
        },
        py::arg("intensity"), py::arg("sizes"), py::arg("weights"));
    m.def(
        "two_sided_exponential_measure",
        [](double intensity, double rate_pos, double rate_neg, double prob_pos) {
            return LevyMeasureSpec{intensity,
                                   TwoSidedExponentialLaw{rate_pos, rate_neg, prob_pos}};
        },
        py::arg("intensity"), py::arg("rate_pos"), py::arg("rate_neg"),
        py::arg("prob_pos") = 0.5);
    m.def(
        "uniform_measure",
        [](double intensity, double lo, double hi) {
            return LevyMeasureSpec{intensity, UniformLaw{lo, hi}};
        },
        py::arg("intensity"), py::arg("lo"), py::arg("hi"));

    m.def("validate_measure", [](const LevyMeasureSpec& s) { validate(s); });
    m.def("moment", &moment, py::arg("measure"), py::arg("p"),
          "intensity * E|J|^p for the given measure");
    m.def("compensator_drift", &compensator_drift, py::arg("measure"));

    // ---- coefficients and presets ----
    py::class_<CoefficientSet>(m, "CoefficientSet")
        .def_readonly("name", &CoefficientSet::name)
        .def_readonly("c", &CoefficientSet::c)
        .def_readonly("b", &CoefficientSet::b)
        .def("mu", [](const CoefficientSet& s, double x) { return s.mu(x); })
        .def("sigma", [](const CoefficientSet& s, double x) { return s.sigma(x); })
        .def("gamma", [](const CoefficientSet& s, double x) { return s.gamma(x); })
        .def("__repr__",
             [](const CoefficientSet& s) { return "CoefficientSet(" + s.name + ")"; });

    m.def("make_linear", &make_linear, py::arg("drift_slope"), py::arg("diffusion_slope"),
          py::arg("jump_slope"));
    m.def("make_linear_affine", &make_linear_affine, py::arg("a"), py::arg("a0"),
          py::arg("s"), py::arg("s0"), py::arg("g"), py::arg("g0"));
    m.def("make_ou_additive", &make_ou_additive, py::arg("mean_reversion"),
          py::arg("sigma0"));
    m.def("make_trig", &make_trig, py::arg("amp_mu"), py::arg("amp_sigma"),
          py::arg("amp_gamma"));

    py::class_<ModelPreset>(m, "ModelPreset")
        .def_readonly("id", &ModelPreset::id)
        .def_readonly("description", &ModelPreset::description)
        .def_readonly("coeffs", &ModelPreset::coeffs)
        .def_readonly("levy", &ModelPreset::levy)
        .def_readonly("horizon", &ModelPreset::horizon);
    m.def("presets", [] { return builtin_presets(); });
    m.def("find_preset", &find_preset, py::return_value_policy::reference,
          py::arg("id"));

    // ---- Lyapunov function and condition checks ----
    py::class_<LyapunovFunction>(m, "LyapunovFunction")
        .def(py::init<double, double, double, double, double, double>(), py::arg("p"),
             py::arg("c"), py::arg("mu0"), py::arg("sigma0"), py::arg("gamma0"),
             py::arg("m2"))
        .def("value", &LyapunovFunction::value)
        .def("first_derivative", &LyapunovFunction::first_derivative)
        .def("second_derivative", &LyapunovFunction::second_derivative)
        .def_property_readonly("p", &LyapunovFunction::p)
        .def_property_readonly("base", &LyapunovFunction::base)
        .def_property_readonly("scale", &LyapunovFunction::scale)
        .def_property_readonly("cbar", &LyapunovFunction::cbar);

    m.def("make_lyapunov", &make_lyapunov, py::arg("coeffs"), py::arg("levy"),
          py::arg("p"));
    m.def("calibrate_cbar", &calibrate_cbar, py::arg("lyapunov"), py::arg("coeffs"),
          py::arg("levy"), py::arg("grid"));
    m.def("linspace_grid", &linspace_grid, py::arg("lo"), py::arg("hi"), py::arg("step"));
    m.def("compensated_jump_integral", &compensated_jump_integral, py::arg("lyapunov"),
          py::arg("y"), py::arg("gamma_x"), py::arg("levy"));

    py::class_<ConditionReport>(m, "ConditionReport")
        .def_readonly("condition", &ConditionReport::condition)
        .def_readonly("passed", &ConditionReport::pass)
        .def_readonly("constant", &ConditionReport::constant)
        .def_readonly("margin", &ConditionReport::margin)
        .def_readonly("worst_point", &ConditionReport::worst_point)
        .def_readonly("domain", &ConditionReport::domain)
        .def("__repr__", [](const ConditionReport& r) {
            return "ConditionReport(" + r.condition + ", " +
                   (r.pass ? std::string("pass") : std::string("fail")) + ")";
        });

    m.def(
        "check_a0",
        [](const LyapunovFunction& lyap, const CoefficientSet& coeffs,
           const LevyMeasureSpec& levy, const std::vector<double>& grid) {
            return check_a0(lyap, coeffs, levy, grid);
        },
        py::arg("lyapunov"), py::arg("coeffs"), py::arg("levy"), py::arg("grid"));
    m.def("check_a1", &check_a1, py::arg("lyapunov"), py::arg("coeffs"), py::arg("grid"));
    m.def("check_a2", &check_a2, py::arg("lyapunov"), py::arg("grid"));
    m.def("check_a3", &check_a3, py::arg("lyapunov"), py::arg("grid"));
    m.def(
        "check_a4_box",
        [](const CoefficientSet& coeffs, double lo, double hi, std::uint64_t seed,
           std::size_t samples) {
            return check_a4(coeffs, make_box_sampler(lo, hi, seed), samples);
        },
        py::arg("coeffs"), py::arg("lo"), py::arg("hi"), py::arg("seed") = 1,
        py::arg("samples") = 200000);

    // ---- noise paths ----
    py::class_<NoisePath>(m, "NoisePath")
        .def_readonly("horizon", &NoisePath::horizon)
        .def_readonly("fine_level", &NoisePath::fine_level)
        .def_readonly("drift_rate", &NoisePath::drift_rate)
        .def_readonly("w_prefix", &NoisePath::w_prefix)
        .def_readonly("jump_times", &NoisePath::jump_times)
        .def_readonly("jump_sizes", &NoisePath::jump_sizes)
        .def("fine_steps", &NoisePath::fine_steps)
        .def("fine_dt", &NoisePath::fine_dt)
        .def("time_at", &NoisePath::time_at)
        .def("w_at", &NoisePath::w_at)
        .def("z_at", &NoisePath::z_at)
        .def("z_at_left", &NoisePath::z_at_left)
        .def("jump_count", &NoisePath::jump_count);

    m.def("generate_noise_path", &generate_noise_path, py::arg("levy"), py::arg("horizon"),
          py::arg("fine_level"), py::arg("master_seed"), py::arg("path_index"));

    py::class_<CoarseIncrements>(m, "CoarseIncrements")
        .def_readonly("steps", &CoarseIncrements::steps)
        .def_readonly("times", &CoarseIncrements::times)
        .def_readonly("w", &CoarseIncrements::w)
        .def_readonly("z", &CoarseIncrements::z)
        .def("dt", &CoarseIncrements::dt)
        .def("dw", &CoarseIncrements::dw)
        .def("dz", &CoarseIncrements::dz);

    m.def("coarsen_increments", &coarsen_increments, py::arg("path"), py::arg("n"));
    m.def("aggregate_increments", &aggregate_increments, py::arg("view"), py::arg("n"));

    // ---- scheme ----
    py::class_<GridFunction>(m, "GridFunction")
        .def_static("identity", &GridFunction::identity, py::arg("horizon"))
        .def_static("uniform", &GridFunction::uniform, py::arg("horizon"), py::arg("n"))
        .def_static("from_breakpoints", &GridFunction::from_breakpoints,
                    py::arg("breakpoints"))
        .def_property_readonly("is_identity", &GridFunction::is_identity)
        .def_property_readonly("horizon", &GridFunction::horizon)
        .def_property_readonly("mesh", &GridFunction::mesh)
        .def("steps", &GridFunction::steps)
        .def("breakpoints", &GridFunction::breakpoints)
        .def("delta", &GridFunction::delta_eval, py::arg("t"));

    py::class_<SchemePath>(m, "SchemePath")
        .def_readonly("times", &SchemePath::times)
        .def_readonly("values", &SchemePath::values)
        .def("terminal", &SchemePath::terminal)
        .def("value_at", &SchemePath::value_at, py::arg("t"));

    m.def("em_discrete", &em_discrete, py::arg("coeffs"), py::arg("grid"), py::arg("noise"),
          py::arg("x0"));
    m.def("em_continuous", &em_continuous, py::arg("coeffs"), py::arg("grid"),
          py::arg("noise"), py::arg("x0"), py::arg("s"), py::arg("t"));
    m.def("reference_solution", &reference_solution, py::arg("coeffs"), py::arg("noise"),
          py::arg("x0"));
    m.def("exact_linear", &exact_linear, py::arg("drift_slope"), py::arg("diffusion_slope"),
          py::arg("jump_slope"), py::arg("noise"), py::arg("x0"), py::arg("t"));
    m.def("exact_ou", &exact_ou, py::arg("mean_reversion"), py::arg("sigma0"),
          py::arg("noise"), py::arg("x0"), py::arg("t"));

    // ---- estimators ----
    py::enum_<ReferenceKind>(m, "ReferenceKind")
        .value("fine_em", ReferenceKind::fine_em)
        .value("exact", ReferenceKind::exact);

    py::class_<LpEstimate>(m, "LpEstimate")
        .def_readonly("value", &LpEstimate::value)
        .def_readonly("se", &LpEstimate::se)
        .def_readonly("p", &LpEstimate::p)
        .def_readonly("samples", &LpEstimate::samples)
        .def_readonly("flagged", &LpEstimate::flagged)
        .def("__repr__", [](const LpEstimate& e) {
            return "LpEstimate(value=" + std::to_string(e.value) +
                   ", se=" + std::to_string(e.se) + ")";
        });

    py::class_<MeanEstimate>(m, "MeanEstimate")
        .def_readonly("value", &MeanEstimate::value)
        .def_readonly("se", &MeanEstimate::se)
        .def_readonly("samples", &MeanEstimate::samples);

    py::class_<McSetup>(m, "McSetup")
        .def(py::init([](const LevyMeasureSpec& levy, double horizon, int fine_level,
                         std::size_t paths, std::uint64_t seed, unsigned threads) {
                 McSetup setup;
                 setup.levy = levy;
                 setup.horizon = horizon;
                 setup.fine_level = fine_level;
                 setup.paths = paths;
                 setup.master_seed = seed;
                 setup.threads = threads;
                 return setup;
             }),
             py::arg("levy"), py::arg("horizon") = 1.0, py::arg("fine_level") = 14,
             py::arg("paths") = 10000, py::arg("seed") = 1, py::arg("threads") = 1)
        .def_readwrite("horizon", &McSetup::horizon)
        .def_readwrite("fine_level", &McSetup::fine_level)
        .def_readwrite("paths", &McSetup::paths)
        .def_readwrite("seed", &McSetup::master_seed)
        .def_readwrite("threads", &McSetup::threads);

    m.def("lp_estimate", &lp_estimate, py::arg("diffs"), py::arg("p"));
    m.def("mean_estimate", &mean_estimate, py::arg("samples"));
    m.def("strong_error_pointwise", &strong_error_pointwise, py::arg("coeffs"),
          py::arg("setup"), py::arg("n"), py::arg("x0"), py::arg("p"),
          py::arg("reference") = ReferenceKind::fine_em);
    m.def("mixed_xy_difference", &mixed_xy_difference, py::arg("coeffs"), py::arg("setup"),
          py::arg("n"), py::arg("x"), py::arg("y"), py::arg("x_tilde"), py::arg("y_tilde"),
          py::arg("p"));
    m.def("temporal_spatial_difference", &temporal_spatial_difference, py::arg("coeffs"),
          py::arg("setup"), py::arg("n"), py::arg("s"), py::arg("t"), py::arg("s_tilde"),
          py::arg("t_tilde"), py::arg("x"), py::arg("x_tilde"), py::arg("p"));

    py::class_<CorollaryTerm>(m, "CorollaryTerm")
        .def_readonly("k", &CorollaryTerm::k)
        .def_readonly("time", &CorollaryTerm::time)
        .def_readonly("pointwise", &CorollaryTerm::pointwise)
        .def_readonly("difference", &CorollaryTerm::difference)
        .def_readonly("combined", &CorollaryTerm::combined);
    py::class_<CorollaryResult>(m, "CorollaryResult")
        .def_readonly("value", &CorollaryResult::value)
        .def_readonly("terms", &CorollaryResult::terms);
    m.def("corollary_functional", &corollary_functional, py::arg("coeffs"),
          py::arg("setup"), py::arg("n"), py::arg("x"), py::arg("y"), py::arg("p"),
          py::arg("time_fractions"));

    py::class_<RateFit>(m, "RateFit")
        .def_readonly("slope", &RateFit::slope)
        .def_readonly("intercept", &RateFit::intercept)
        .def_readonly("residual_max", &RateFit::residual_max)
        .def_readonly("used", &RateFit::used)
        .def_readonly("excluded_n", &RateFit::excluded_n);
    m.def("fit_rate", &fit_rate, py::arg("n_and_error"));
    m.def("scheme_lyapunov_mean", &scheme_lyapunov_mean, py::arg("coeffs"),
          py::arg("lyapunov"), py::arg("setup"), py::arg("n"), py::arg("x0"), py::arg("t"));

    // ---- configs and experiment runs ----
    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_readonly("title", &ExperimentConfig::title)
        .def_readonly("horizon", &ExperimentConfig::horizon)
        .def_readonly("fine_level", &ExperimentConfig::fine_level)
        .def_readonly("paths", &ExperimentConfig::paths)
        .def_readonly("seed", &ExperimentConfig::seed)
        .def_readonly("threads", &ExperimentConfig::threads)
        .def_readonly("p", &ExperimentConfig::p)
        .def_readonly("out_dir", &ExperimentConfig::out_dir)
        .def_property_readonly(
            "study_kind",
            [](const ExperimentConfig& c) { return study_kind_name(c.study.kind); })
        .def_property_readonly("study_id",
                               [](const ExperimentConfig& c) { return c.study.id; });

    m.def("parse_config", &parse_config, py::arg("json_text"));
    m.def("load_config", &load_config, py::arg("path"));
    m.def(
        "validate_config",
        [](const std::string& text) { return parse_config_text(text).issues; },
        py::arg("json_text"), "Returns every violation found; empty means valid.");
    m.def("config_digest", &config_digest, py::arg("config"));

    py::class_<StudyOutcome>(m, "StudyOutcome")
        .def_readonly("id", &StudyOutcome::id)
        .def_readonly("kind", &StudyOutcome::kind)
        .def_readonly("passed", &StudyOutcome::pass)
        .def_readonly("files", &StudyOutcome::files)
        .def_readonly("lines", &StudyOutcome::lines);
    py::class_<RunResult>(m, "RunResult")
        .def_readonly("manifest_path", &RunResult::manifest_path)
        .def_readonly("studies", &RunResult::studies)
        .def_readonly("all_pass", &RunResult::all_pass);

    m.def(
        "run_experiment",
        [](const ExperimentConfig& config, const std::string& out_dir,
           std::optional<std::uint64_t> seed, std::optional<unsigned> threads) {
            RunOverrides overrides;
            overrides.seed = seed;
            overrides.threads = threads;
            return run_experiment(config, out_dir, overrides);
        },
        py::arg("config"), py::arg("out_dir"), py::arg("seed") = std::nullopt,
        py::arg("threads") = std::nullopt, py::call_guard<py::gil_scoped_release>());
    m.def("emit_plotdata", &emit_plotdata, py::arg("manifest_path"), py::arg("out_dir"));
}
