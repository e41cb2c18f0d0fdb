#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jumpdiff/error.hpp"
#include "jumpdiff/model.hpp"

namespace jumpdiff {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class StudyKind { rate_study, check_conditions, moment_check, holder_study };

std::string study_kind_name(StudyKind kind);

struct GridSpec {
    double lo = -10.0;
    double hi = 10.0;
    double step = 0.1;
};

// Optional acceptance thresholds checked by `run --assert`.
struct AssertSpec {
    std::optional<double> slope_min;
    std::optional<double> slope_max;
};

// One entry of a rate-study grid sweep; either a uniform step count or an
// explicit fine-grid-aligned breakpoint list.
struct GridEntry {
    bool uniform = true;
    std::size_t n = 0;
    std::vector<double> breakpoints;
};

struct StudyConfig {
    StudyKind kind = StudyKind::rate_study;
    std::string id;

    // rate-study / holder-study
    std::vector<std::size_t> n_list = {16, 32, 64, 128, 256, 512, 1024};
    std::vector<GridEntry> grids;          // rate-study alternative to 'n'
    double x0 = 1.0;
    std::optional<double> x_tilde;         // rate-study: enables the mixed functional;
                                           // holder-study: required second start
    ReferenceKind reference = ReferenceKind::fine_em;

    // holder-study
    double m = 2.0;
    double kappa1 = 2.0;                   // kappa2 = kappa1 / (kappa1 - 1)
    std::vector<double> time_fractions = {0.25, 0.5, 0.75, 1.0};

    // moment-check
    std::vector<double> times = {0.25, 0.5, 1.0};
    std::vector<double> x0_list = {0.0, 1.0, 5.0};

    // check-conditions (grid also calibrates cbar for moment-check)
    GridSpec grid;
    std::size_t a4_samples = 200000;
    GridSpec a4_box;

    AssertSpec asserts;
};

struct ExperimentConfig {
    std::string title;
    CoefficientSet coeffs;
    LevyMeasureSpec levy;
    double horizon = 1.0;
    int fine_level = 14;
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double p = 2.0;
    std::string out_dir = "out";
    StudyConfig study;
    std::string canonical_json;  // sorted-key dump of the parsed file, for digesting
};

double kappa2_of(double kappa1);

// Parses and validates; returns every violation found (empty = valid). When
// issues is empty the returned config is fully usable. Unknown keys are
// violations (fail closed).
struct ParseOutcome {
    ExperimentConfig config;
    std::vector<std::string> issues;
};

ParseOutcome parse_config_text(const std::string& json_text);

// Convenience wrappers; throw ConfigError with all issues joined.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

} // namespace jumpdiff
