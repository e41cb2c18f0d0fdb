#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <doctest.h>

#include "jumpdiff/config.hpp"

using namespace jumpdiff;

namespace {

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
    return std::any_of(issues.begin(), issues.end(), [&](const std::string& s) {
        return s.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_CASE("preset config parses with defaults") {
    const ParseOutcome out = parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study"}
    })");
    REQUIRE(out.issues.empty());
    const ExperimentConfig& c = out.config;
    CHECK(c.horizon == 1.0);
    CHECK(c.fine_level == 14);
    CHECK(c.paths == 10000);
    CHECK(c.seed == 1);
    CHECK(c.threads == 1);
    CHECK(c.p == 2.0);
    CHECK(c.out_dir == "out");
    CHECK(c.levy.intensity == 1.0);
    CHECK(c.study.kind == StudyKind::rate_study);
    CHECK(c.study.id == "rate-study");
    CHECK(c.study.n_list == std::vector<std::size_t>{16, 32, 64, 128, 256, 512, 1024});
    CHECK(c.study.reference == ReferenceKind::fine_em);
    CHECK_FALSE(c.study.x_tilde.has_value());
    CHECK_FALSE(c.canonical_json.empty());
}

TEST_CASE("canonical json ignores key order") {
    const ParseOutcome a = parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study"},
        "paths": 64
    })");
    const ParseOutcome b = parse_config_text(R"({
        "paths": 64,
        "study": {"kind": "rate-study"},
        "model": {"preset": "linear"}
    })");
    REQUIRE(a.issues.empty());
    REQUIRE(b.issues.empty());
    CHECK(a.config.canonical_json == b.config.canonical_json);
}

TEST_CASE("explicit model and levy blocks") {
    const ParseOutcome out = parse_config_text(R"({
        "title": "linear sweep",
        "model": {"family": "linear", "a": 0.5, "s": 0.2, "g": 0.1},
        "levy": {"intensity": 1.0, "law": {"kind": "gaussian", "mean": 0.1, "stddev": 0.3}},
        "horizon": 1.0,
        "fine_level": 10,
        "paths": 500,
        "seed": 7,
        "threads": 2,
        "out_dir": "results",
        "study": {
            "kind": "rate-study",
            "id": "sweep",
            "n": [16, 64, 256],
            "x0": 1.0,
            "x_tilde": 2.0,
            "reference": "exact",
            "assert": {"slope_max": -0.4}
        }
    })");
    REQUIRE(out.issues.empty());
    const ExperimentConfig& c = out.config;
    CHECK(c.title == "linear sweep");
    CHECK(c.coeffs.family == ModelFamily::linear);
    CHECK(c.coeffs.mu(2.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.out_dir == "results");
    CHECK(c.study.id == "sweep");
    CHECK(c.study.reference == ReferenceKind::exact);
    REQUIRE(c.study.x_tilde.has_value());
    CHECK(*c.study.x_tilde == 2.0);
    REQUIRE(c.study.asserts.slope_max.has_value());
    CHECK(*c.study.asserts.slope_max == -0.4);
}

TEST_CASE("every violation is reported in one pass") {
    const ParseOutcome out = parse_config_text(R"({
        "model": {"preset": "linear"},
        "horizon": -1.0,
        "fine_level": 31,
        "paths": 8,
        "threads": 0,
        "p": 1.5,
        "study": {"kind": "rate-study", "n": [24, 64]}
    })");
    CHECK(mentions(out.issues, "'horizon' must be a positive finite number at config"));
    CHECK(mentions(out.issues, "'fine_level' must lie in [1, 30] at config"));
    CHECK(mentions(out.issues, "'paths' must be at least 32"));
    CHECK(mentions(out.issues, "'threads' must lie in [1, 256] at config"));
    CHECK(mentions(out.issues, "'p' must be a finite number >= 2 at config"));
    CHECK(mentions(out.issues,
                   "step count 24 must be a power of two dividing 2^31 fine steps"));
    CHECK(out.issues.size() >= 6);
}

TEST_CASE("unknown keys fail closed with their path") {
    const ParseOutcome out = parse_config_text(R"({
        "model": {"preset": "linear", "bogus": 1},
        "levy": {"intensity": 1.0, "law": {"kind": "gaussian", "stddev": 0.3, "skew": 2}},
        "frobnicate": true,
        "study": {"kind": "rate-study", "surprise": []}
    })");
    CHECK(mentions(out.issues, "unknown key 'bogus' at config.model"));
    CHECK(mentions(out.issues, "unknown key 'skew' at config.levy.law"));
    CHECK(mentions(out.issues, "unknown key 'frobnicate' at config"));
    CHECK(mentions(out.issues, "unknown key 'surprise' at config.study"));
}

TEST_CASE("missing required sections") {
    const ParseOutcome out = parse_config_text("{}");
    CHECK(mentions(out.issues, "'model' is required at config"));
    CHECK(mentions(out.issues, "'levy' is required at config"));
    CHECK(mentions(out.issues, "'study' is required at config"));
}

TEST_CASE("malformed input") {
    CHECK(mentions(parse_config_text("{not json").issues, "not valid JSON"));
    CHECK(mentions(parse_config_text("[1, 2]").issues, "top level must be a JSON object"));
    CHECK(mentions(parse_config_text(R"({"model": {"preset": "nope"},
                                         "study": {"kind": "rate-study"}})")
                       .issues,
                   "at config.model"));
    CHECK(mentions(parse_config_text(R"({"model": {"preset": "linear"},
                                         "study": {"kind": "banana"}})")
                       .issues,
                   "'kind' must be one of rate-study"));
}

TEST_CASE("preset values can be overridden") {
    const ParseOutcome out = parse_config_text(R"({
        "model": {"preset": "ou-additive"},
        "levy": {"intensity": 0.5, "law": {"kind": "uniform", "lo": -1.0, "hi": 2.0}},
        "horizon": 2.0,
        "fine_level": 10,
        "study": {"kind": "rate-study", "n": [16, 64]}
    })");
    REQUIRE(out.issues.empty());
    CHECK(out.config.coeffs.family == ModelFamily::ou_additive);
    CHECK(out.config.horizon == 2.0);
    CHECK(out.config.levy.intensity == 0.5);
    CHECK(std::holds_alternative<UniformLaw>(out.config.levy.law));
}

TEST_CASE("grid sweeps") {
    const ParseOutcome good = parse_config_text(R"({
        "model": {"preset": "linear"},
        "fine_level": 4,
        "paths": 64,
        "study": {"kind": "rate-study", "grids": [
            {"kind": "uniform", "n": 8},
            {"kind": "explicit", "breakpoints": [0.0, 0.25, 1.0]}
        ]}
    })");
    REQUIRE(good.issues.empty());
    REQUIRE(good.config.study.grids.size() == 2);
    CHECK(good.config.study.grids[0].uniform);
    CHECK(good.config.study.grids[0].n == 8);
    CHECK_FALSE(good.config.study.grids[1].uniform);

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study", "n": [16],
                  "grids": [{"kind": "uniform", "n": 8}]}
    })").issues, "give either 'n' or 'grids', not both"));

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study",
                  "grids": [{"kind": "explicit", "breakpoints": [0.0, 0.3, 1.0]}]}
    })").issues, "off the 2^14-cell fine grid at config.study.grids[0]"));

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study",
                  "grids": [{"kind": "explicit", "breakpoints": [0.0, 0.5]}]}
    })").issues, "breakpoints must run from 0 to the horizon"));

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study", "x_tilde": 2.0,
                  "grids": [{"kind": "uniform", "n": 8}]}
    })").issues, "mixed functional supports uniform sweeps only"));
}

TEST_CASE("exact references are gated by family") {
    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "trig"},
        "study": {"kind": "rate-study", "reference": "exact"}
    })").issues, "reference 'exact' needs a through-origin linear model"));

    const ParseOutcome ou = parse_config_text(R"({
        "model": {"preset": "ou-additive"},
        "study": {"kind": "rate-study", "reference": "exact"}
    })");
    CHECK(ou.issues.empty());

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study", "reference": "weird"}
    })").issues, "'reference' must be 'fine' or 'exact'"));
}

TEST_CASE("moment check validation") {
    const ParseOutcome def = parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "moment-check"}
    })");
    REQUIRE(def.issues.empty());
    CHECK(def.config.study.n_list == std::vector<std::size_t>{16, 256});
    CHECK(def.config.study.times == std::vector<double>{0.25, 0.5, 1.0});
    CHECK(def.config.study.x0_list == std::vector<double>{0.0, 1.0, 5.0});

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "moment-check", "times": [0.3]}
    })").issues, "time 0.3 is not a grid point for n = 16"));

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "moment-check", "times": [0.0, 0.5]}
    })").issues, "'times' entries must lie in (0, horizon]"));

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "moment-check", "x0s": []}
    })").issues, "'x0s' must be non-empty"));
}

TEST_CASE("holder study validation") {
    const ParseOutcome good = parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "holder-study", "x_tilde": 2.0}
    })");
    REQUIRE(good.issues.empty());
    CHECK(good.config.study.m == 2.0);
    CHECK(good.config.study.kappa1 == 2.0);
    CHECK(good.config.study.time_fractions ==
          std::vector<double>{0.25, 0.5, 0.75, 1.0});

    CHECK(mentions(parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "holder-study"}
    })").issues, "'x_tilde' is required at config.study"));

    const ParseOutcome bad = parse_config_text(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "holder-study", "x_tilde": 1.0, "m": 0.5,
                  "kappa1": 1.0, "time_fractions": [1.5]}
    })");
    CHECK(mentions(bad.issues, "'x_tilde' must differ from 'x0'"));
    CHECK(mentions(bad.issues, "'m' must be >= 1"));
    CHECK(mentions(bad.issues, "'kappa1' must exceed 1"));
    CHECK(mentions(bad.issues, "'time_fractions' entries must lie in (0, 1]"));
}

TEST_CASE("conjugate exponent") {
    CHECK(kappa2_of(2.0) == 2.0);
    CHECK(kappa2_of(3.0) == doctest::Approx(1.5).epsilon(1e-15));
    for (double k1 : {1.25, 2.0, 4.0, 10.0})
        CHECK(1.0 / k1 + 1.0 / kappa2_of(k1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)kappa2_of(1.0), std::invalid_argument);
}

TEST_CASE("throwing wrappers") {
    CHECK_NOTHROW((void)parse_config(R"({
        "model": {"preset": "linear"},
        "study": {"kind": "rate-study"}
    })"));
    CHECK_THROWS_WITH_AS((void)parse_config("{}"), doctest::Contains("invalid config"),
                         ConfigError);

    const std::string path = "test_config_roundtrip.json";
    {
        std::ofstream out(path);
        out << R"({"model": {"preset": "trig"}, "study": {"kind": "check-conditions"}})";
    }
    const ExperimentConfig loaded = load_config(path);
    CHECK(loaded.study.kind == StudyKind::check_conditions);
    CHECK(loaded.study.a4_samples == 200000);
    std::remove(path.c_str());

    CHECK_THROWS_WITH_AS((void)load_config("no_such_file.json"),
                         doctest::Contains("cannot open"), ConfigError);
}

TEST_CASE("study kind names round-trip") {
    CHECK(study_kind_name(StudyKind::rate_study) == "rate-study");
    CHECK(study_kind_name(StudyKind::check_conditions) == "check-conditions");
    CHECK(study_kind_name(StudyKind::moment_check) == "moment-check");
    CHECK(study_kind_name(StudyKind::holder_study) == "holder-study");
}
