#include "jumpdiff/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace jumpdiff {
namespace {

using nlohmann::json;

// Field extraction that records problems instead of throwing, so `validate`
// can report every violation in one pass.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& issues)
        : obj_(obj), path_(std::move(path)), issues_(issues) {}

    bool has(const char* key) const { return obj_.contains(key); }

    std::optional<double> number(const char* key, bool required = false) {
        const json* v = fetch(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_number()) {
            complain(key, "must be a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    std::optional<std::uint64_t> uinteger(const char* key, bool required = false) {
        const json* v = fetch(key, required);
        if (v == nullptr) return std::nullopt;
        const bool negative = v->is_number_integer() && !v->is_number_unsigned() &&
                              v->get<std::int64_t>() < 0;
        if (!v->is_number_integer() || negative) {
            complain(key, "must be a non-negative integer");
            return std::nullopt;
        }
        return v->get<std::uint64_t>();
    }

    std::optional<std::string> text(const char* key, bool required = false) {
        const json* v = fetch(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_string()) {
            complain(key, "must be a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    const json* object(const char* key, bool required = false) {
        const json* v = fetch(key, required);
        if (v == nullptr) return nullptr;
        if (!v->is_object()) {
            complain(key, "must be an object");
            return nullptr;
        }
        return v;
    }

    const json* array(const char* key, bool required = false) {
        const json* v = fetch(key, required);
        if (v == nullptr) return nullptr;
        if (!v->is_array()) {
            complain(key, "must be an array");
            return nullptr;
        }
        return v;
    }

    std::optional<std::vector<double>> number_list(const char* key, bool required = false) {
        const json* v = array(key, required);
        if (v == nullptr) return std::nullopt;
        std::vector<double> out;
        for (const auto& item : *v) {
            if (!item.is_number()) {
                complain(key, "must contain only numbers");
                return std::nullopt;
            }
            out.push_back(item.get<double>());
        }
        return out;
    }

    std::optional<std::vector<std::size_t>> count_list(const char* key, bool required = false) {
        const json* v = array(key, required);
        if (v == nullptr) return std::nullopt;
        std::vector<std::size_t> out;
        for (const auto& item : *v) {
            if (!item.is_number_integer() || item.get<std::int64_t>() <= 0) {
                complain(key, "must contain only positive integers");
                return std::nullopt;
            }
            out.push_back(item.get<std::size_t>());
        }
        return out;
    }

    // Unknown keys are rejected so typos cannot silently fall back to defaults.
    void finish(std::initializer_list<const char*> allowed) {
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (ok.count(it.key()) == 0U) {
                issues_.push_back("unknown key '" + it.key() + "' at " + path_);
            }
        }
    }

    void issue(const std::string& message) { issues_.push_back(message + " at " + path_); }

    const std::string& path() const { return path_; }

private:
    const json* fetch(const char* key, bool required) {
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            if (required) complain(key, "is required");
            return nullptr;
        }
        return &*it;
    }

    void complain(const char* key, const char* what) {
        issues_.push_back(std::string("'") + key + "' " + what + " at " + path_);
    }

    const json& obj_;
    std::string path_;
    std::vector<std::string>& issues_;
};

GridSpec parse_grid(const json& obj, const std::string& path, GridSpec fallback,
                    bool with_step, std::vector<std::string>& issues) {
    Reader r(obj, path, issues);
    GridSpec grid = fallback;
    if (auto v = r.number("lo")) grid.lo = *v;
    if (auto v = r.number("hi")) grid.hi = *v;
    if (with_step) {
        if (auto v = r.number("step")) grid.step = *v;
        r.finish({"lo", "hi", "step"});
    } else {
        r.finish({"lo", "hi"});
    }
    if (!(grid.lo < grid.hi)) issues.push_back("'lo' must be below 'hi' at " + path);
    if (with_step && !(grid.step > 0.0)) issues.push_back("'step' must be positive at " + path);
    return grid;
}

JumpLaw parse_law(const json& obj, const std::string& path, std::vector<std::string>& issues) {
    Reader r(obj, path, issues);
    auto kind = r.text("kind", true);
    if (!kind) return GaussianLaw{0.0, 1.0};

    if (*kind == "gaussian") {
        GaussianLaw law;
        if (auto v = r.number("mean")) law.mean = *v;
        if (auto v = r.number("stddev", true)) law.stddev = *v;
        r.finish({"kind", "mean", "stddev"});
        return law;
    }
    if (*kind == "point-masses") {
        PointMassLaw law;
        if (auto v = r.number_list("sizes", true)) law.sizes = *v;
        if (auto v = r.number_list("weights", true)) law.weights = *v;
        r.finish({"kind", "sizes", "weights"});
        return law;
    }
    if (*kind == "two-sided-exponential") {
        TwoSidedExponentialLaw law;
        if (auto v = r.number("rate_pos", true)) law.rate_pos = *v;
        if (auto v = r.number("rate_neg", true)) law.rate_neg = *v;
        if (auto v = r.number("prob_pos")) law.prob_pos = *v;
        r.finish({"kind", "rate_pos", "rate_neg", "prob_pos"});
        return law;
    }
    if (*kind == "uniform") {
        UniformLaw law;
        if (auto v = r.number("lo", true)) law.lo = *v;
        if (auto v = r.number("hi", true)) law.hi = *v;
        r.finish({"kind", "lo", "hi"});
        return law;
    }
    issues.push_back("'kind' must be one of gaussian, point-masses, two-sided-exponential, uniform at " + path);
    return GaussianLaw{0.0, 1.0};
}

void parse_model(const json& obj, ExperimentConfig& config, bool& preset_used,
                 std::vector<std::string>& issues) {
    Reader r(obj, "config.model", issues);
    preset_used = false;

    if (r.has("preset")) {
        auto id = r.text("preset");
        r.finish({"preset"});
        if (!id) return;
        try {
            const ModelPreset& preset = find_preset(*id);
            config.coeffs = preset.coeffs;
            config.levy = preset.levy;
            config.horizon = preset.horizon;
            preset_used = true;
        } catch (const std::exception& e) {
            issues.push_back(std::string(e.what()) + " at config.model");
        }
        return;
    }

    auto family = r.text("family", true);
    if (!family) {
        r.finish({"family"});
        return;
    }
    if (*family == "linear") {
        double a = 0.0, a0 = 0.0, s = 0.0, s0 = 0.0, g = 0.0, g0 = 0.0;
        if (auto v = r.number("a")) a = *v;
        if (auto v = r.number("a0")) a0 = *v;
        if (auto v = r.number("s")) s = *v;
        if (auto v = r.number("s0")) s0 = *v;
        if (auto v = r.number("g")) g = *v;
        if (auto v = r.number("g0")) g0 = *v;
        r.finish({"family", "a", "a0", "s", "s0", "g", "g0"});
        config.coeffs = make_linear_affine(a, a0, s, s0, g, g0);
    } else if (*family == "ou-additive") {
        double mr = 1.0, sigma0 = 0.3;
        if (auto v = r.number("mean_reversion")) mr = *v;
        if (auto v = r.number("sigma0")) sigma0 = *v;
        r.finish({"family", "mean_reversion", "sigma0"});
        config.coeffs = make_ou_additive(mr, sigma0);
    } else if (*family == "trig") {
        double amp_mu = 0.5, amp_sigma = 0.4, amp_gamma = 0.3;
        if (auto v = r.number("amp_mu")) amp_mu = *v;
        if (auto v = r.number("amp_sigma")) amp_sigma = *v;
        if (auto v = r.number("amp_gamma")) amp_gamma = *v;
        r.finish({"family", "amp_mu", "amp_sigma", "amp_gamma"});
        config.coeffs = make_trig(amp_mu, amp_sigma, amp_gamma);
    } else {
        issues.push_back("'family' must be one of linear, ou-additive, trig at config.model");
    }
}

void parse_assert(const json& obj, StudyConfig& study, std::vector<std::string>& issues) {
    Reader r(obj, "config.study.assert", issues);
    if (auto v = r.number("slope_min")) study.asserts.slope_min = *v;
    if (auto v = r.number("slope_max")) study.asserts.slope_max = *v;
    r.finish({"slope_min", "slope_max"});
    if (study.asserts.slope_min && study.asserts.slope_max &&
        *study.asserts.slope_min > *study.asserts.slope_max) {
        issues.push_back("'slope_min' exceeds 'slope_max' at config.study.assert");
    }
}

void parse_study(const json& obj, ExperimentConfig& config, std::vector<std::string>& issues) {
    Reader r(obj, "config.study", issues);
    StudyConfig& study = config.study;

    auto kind = r.text("kind", true);
    if (!kind) return;
    if (*kind == "rate-study") {
        study.kind = StudyKind::rate_study;
    } else if (*kind == "check-conditions") {
        study.kind = StudyKind::check_conditions;
    } else if (*kind == "moment-check") {
        study.kind = StudyKind::moment_check;
    } else if (*kind == "holder-study") {
        study.kind = StudyKind::holder_study;
    } else {
        issues.push_back("'kind' must be one of rate-study, check-conditions, moment-check, "
                         "holder-study at config.study");
        return;
    }
    study.id = r.text("id").value_or(*kind);

    switch (study.kind) {
    case StudyKind::rate_study: {
        if (auto v = r.count_list("n")) study.n_list = *v;
        if (const json* grids = r.array("grids")) {
            if (r.has("n")) {
                issues.push_back("give either 'n' or 'grids', not both, at config.study");
            }
            std::size_t index = 0;
            for (const json& entry : *grids) {
                const std::string path = "config.study.grids[" + std::to_string(index++) + "]";
                if (!entry.is_object()) {
                    issues.push_back("grid entries must be objects at " + path);
                    continue;
                }
                Reader er(entry, path, issues);
                auto kind_text = er.text("kind", true);
                GridEntry ge;
                if (kind_text && *kind_text == "uniform") {
                    if (auto n = er.uinteger("n", true)) ge.n = static_cast<std::size_t>(*n);
                    er.finish({"kind", "n"});
                } else if (kind_text && *kind_text == "explicit") {
                    ge.uniform = false;
                    if (auto bp = er.number_list("breakpoints", true)) ge.breakpoints = *bp;
                    er.finish({"kind", "breakpoints"});
                } else {
                    issues.push_back("'kind' must be 'uniform' or 'explicit' at " + path);
                    continue;
                }
                study.grids.push_back(std::move(ge));
            }
        }
        if (auto v = r.number("x0")) study.x0 = *v;
        if (auto v = r.number("x_tilde")) study.x_tilde = *v;
        if (auto v = r.text("reference")) {
            if (*v == "fine") {
                study.reference = ReferenceKind::fine_em;
            } else if (*v == "exact") {
                study.reference = ReferenceKind::exact;
            } else {
                issues.push_back("'reference' must be 'fine' or 'exact' at config.study");
            }
        }
        if (const json* a = r.object("assert")) parse_assert(*a, study, issues);
        r.finish({"kind", "id", "n", "grids", "x0", "x_tilde", "reference", "assert"});
        break;
    }
    case StudyKind::check_conditions: {
        if (const json* g = r.object("grid")) {
            study.grid = parse_grid(*g, "config.study.grid", study.grid, true, issues);
        }
        if (auto v = r.uinteger("a4_samples")) study.a4_samples = static_cast<std::size_t>(*v);
        if (const json* g = r.object("a4_box")) {
            study.a4_box = parse_grid(*g, "config.study.a4_box", study.a4_box, false, issues);
        }
        r.finish({"kind", "id", "grid", "a4_samples", "a4_box"});
        break;
    }
    case StudyKind::moment_check: {
        study.n_list = {16, 256};
        if (auto v = r.count_list("n")) study.n_list = *v;
        if (auto v = r.number_list("times")) study.times = *v;
        if (auto v = r.number_list("x0s")) study.x0_list = *v;
        if (const json* g = r.object("grid")) {
            study.grid = parse_grid(*g, "config.study.grid", study.grid, true, issues);
        }
        r.finish({"kind", "id", "n", "times", "x0s", "grid"});
        break;
    }
    case StudyKind::holder_study: {
        if (auto v = r.count_list("n")) study.n_list = *v;
        if (auto v = r.number("x0")) study.x0 = *v;
        if (auto v = r.number("x_tilde", true)) study.x_tilde = *v;
        if (auto v = r.number("m")) study.m = *v;
        if (auto v = r.number("kappa1")) study.kappa1 = *v;
        if (auto v = r.number_list("time_fractions")) study.time_fractions = *v;
        if (const json* a = r.object("assert")) parse_assert(*a, study, issues);
        r.finish({"kind", "id", "n", "x0", "x_tilde", "m", "kappa1", "time_fractions", "assert"});
        break;
    }
    }
}

bool divides_fine_grid(std::size_t n, int fine_level) {
    if (n == 0) return false;
    const std::size_t fine = std::size_t{1} << fine_level;
    if (fine % n != 0) return false;
    return (n & (n - 1)) == 0;  // power of two, so the stride is exact
}

void cross_validate(ExperimentConfig& config, std::vector<std::string>& issues) {
    if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
        issues.push_back("'horizon' must be a positive finite number at config");
    }
    if (config.fine_level < 1 || config.fine_level > 30) {
        issues.push_back("'fine_level' must lie in [1, 30] at config");
    }
    if (config.paths < 32) {
        issues.push_back("'paths' must be at least 32 (one per batch) at config");
    }
    if (config.threads < 1 || config.threads > 256) {
        issues.push_back("'threads' must lie in [1, 256] at config");
    }
    if (!(config.p >= 2.0) || !std::isfinite(config.p)) {
        issues.push_back("'p' must be a finite number >= 2 at config");
    }

    try {
        validate(config.levy);
    } catch (const std::exception& e) {
        issues.push_back(std::string(e.what()) + " at config.levy");
    }

    StudyConfig& study = config.study;
    const bool sweep_explicit =
        study.kind == StudyKind::rate_study && !study.grids.empty();
    const bool uses_grids = (study.kind == StudyKind::rate_study && !sweep_explicit) ||
                            study.kind == StudyKind::moment_check ||
                            study.kind == StudyKind::holder_study;
    if (uses_grids) {
        if (study.n_list.empty()) {
            issues.push_back("'n' must be a non-empty list at config.study");
        }
        for (std::size_t n : study.n_list) {
            if (!divides_fine_grid(n, config.fine_level)) {
                std::ostringstream os;
                os << "step count " << n << " must be a power of two dividing 2^"
                   << config.fine_level << " fine steps at config.study";
                issues.push_back(os.str());
            }
        }
        auto sorted = study.n_list;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            issues.push_back("'n' contains duplicates at config.study");
        }
    }

    if (sweep_explicit) {
        if (study.x_tilde) {
            issues.push_back("the mixed functional supports uniform sweeps only; drop "
                             "'x_tilde' or use 'n' at config.study");
        }
        std::size_t index = 0;
        for (const GridEntry& entry : study.grids) {
            const std::string path = "config.study.grids[" + std::to_string(index++) + "]";
            if (entry.uniform) {
                if (!divides_fine_grid(entry.n, config.fine_level)) {
                    std::ostringstream os;
                    os << "step count " << entry.n << " must be a power of two dividing 2^"
                       << config.fine_level << " fine steps at " << path;
                    issues.push_back(os.str());
                }
                continue;
            }
            const std::vector<double>& bp = entry.breakpoints;
            if (bp.size() < 2 || bp.front() != 0.0 ||
                std::abs(bp.back() - config.horizon) > 1e-12 * std::max(1.0, config.horizon)) {
                issues.push_back("breakpoints must run from 0 to the horizon at " + path);
                continue;
            }
            bool increasing = true;
            for (std::size_t i = 1; i < bp.size(); ++i) increasing = increasing && bp[i - 1] < bp[i];
            if (!increasing) {
                issues.push_back("breakpoints must be strictly increasing at " + path);
                continue;
            }
            const double fine = std::ldexp(1.0, config.fine_level);
            for (double t : bp) {
                const double j = t * fine / config.horizon;
                if (std::abs(j - std::round(j)) > 1e-9 * std::max(1.0, j)) {
                    std::ostringstream os;
                    os << "breakpoint " << t << " is off the 2^" << config.fine_level
                       << "-cell fine grid at " << path;
                    issues.push_back(os.str());
                    break;
                }
            }
        }
    }

    switch (study.kind) {
    case StudyKind::rate_study:
        if (study.reference == ReferenceKind::exact) {
            const bool supported =
                (config.coeffs.family == ModelFamily::linear &&
                 config.coeffs.params[1] == 0.0 && config.coeffs.params[3] == 0.0 &&
                 config.coeffs.params[5] == 0.0) ||
                config.coeffs.family == ModelFamily::ou_additive;
            if (!supported) {
                issues.push_back("reference 'exact' needs a through-origin linear model or the "
                                 "ou-additive family at config.study");
            }
        }
        if (study.x_tilde && *study.x_tilde == study.x0) {
            issues.push_back("'x_tilde' must differ from 'x0' at config.study");
        }
        break;
    case StudyKind::check_conditions:
        if (study.a4_samples < 100) {
            issues.push_back("'a4_samples' must be at least 100 at config.study");
        }
        break;
    case StudyKind::moment_check: {
        if (study.times.empty()) issues.push_back("'times' must be non-empty at config.study");
        if (study.x0_list.empty()) issues.push_back("'x0s' must be non-empty at config.study");
        for (double t : study.times) {
            if (!(t > 0.0) || t > config.horizon + 1e-12) {
                issues.push_back("'times' entries must lie in (0, horizon] at config.study");
                break;
            }
        }
        // Every requested time has to land on every coarse grid.
        for (std::size_t n : study.n_list) {
            for (double t : study.times) {
                const double k = t * static_cast<double>(n) / config.horizon;
                if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
                    std::ostringstream os;
                    os << "time " << t << " is not a grid point for n = " << n
                       << " at config.study";
                    issues.push_back(os.str());
                }
            }
        }
        break;
    }
    case StudyKind::holder_study:
        if (!study.x_tilde) break;  // already reported as missing
        if (*study.x_tilde == study.x0) {
            issues.push_back("'x_tilde' must differ from 'x0' at config.study");
        }
        if (!(study.m >= 1.0)) issues.push_back("'m' must be >= 1 at config.study");
        if (!(study.kappa1 > 1.0)) issues.push_back("'kappa1' must exceed 1 at config.study");
        if (study.time_fractions.empty()) {
            issues.push_back("'time_fractions' must be non-empty at config.study");
        }
        for (double f : study.time_fractions) {
            if (!(f > 0.0) || f > 1.0) {
                issues.push_back("'time_fractions' entries must lie in (0, 1] at config.study");
                break;
            }
        }
        break;
    }
}

} // namespace

std::string study_kind_name(StudyKind kind) {
    switch (kind) {
    case StudyKind::rate_study: return "rate-study";
    case StudyKind::check_conditions: return "check-conditions";
    case StudyKind::moment_check: return "moment-check";
    case StudyKind::holder_study: return "holder-study";
    }
    return "unknown";
}

double kappa2_of(double kappa1) {
    if (!(kappa1 > 1.0)) throw std::invalid_argument("kappa1 must exceed 1");
    return kappa1 / (kappa1 - 1.0);
}

ParseOutcome parse_config_text(const std::string& json_text) {
    ParseOutcome out;
    json parsed = json::parse(json_text, nullptr, false);
    if (parsed.is_discarded()) {
        out.issues.push_back("input is not valid JSON");
        return out;
    }
    if (!parsed.is_object()) {
        out.issues.push_back("top level must be a JSON object");
        return out;
    }

    ExperimentConfig& config = out.config;
    std::vector<std::string>& issues = out.issues;
    Reader top(parsed, "config", issues);

    if (auto v = top.text("title")) config.title = *v;

    bool preset_used = false;
    if (const json* model = top.object("model", true)) {
        parse_model(*model, config, preset_used, issues);
    }

    if (const json* levy = top.object("levy", preset_used ? false : true)) {
        Reader lr(*levy, "config.levy", issues);
        LevyMeasureSpec spec;
        if (auto v = lr.number("intensity", true)) spec.intensity = *v;
        if (const json* law = lr.object("law", true)) {
            spec.law = parse_law(*law, "config.levy.law", issues);
        }
        lr.finish({"intensity", "law"});
        config.levy = spec;
    }

    if (auto v = top.number("horizon")) config.horizon = *v;
    if (auto v = top.uinteger("fine_level")) config.fine_level = static_cast<int>(*v);
    if (auto v = top.uinteger("paths")) config.paths = static_cast<std::size_t>(*v);
    if (auto v = top.uinteger("seed")) config.seed = *v;
    if (auto v = top.uinteger("threads")) config.threads = static_cast<unsigned>(*v);
    if (auto v = top.number("p")) config.p = *v;
    if (auto v = top.text("out_dir")) config.out_dir = *v;

    if (const json* study = top.object("study", true)) {
        parse_study(*study, config, issues);
    }

    top.finish({"title", "model", "levy", "horizon", "fine_level", "paths", "seed",
                "threads", "p", "out_dir", "study"});

    if (issues.empty()) cross_validate(config, issues);
    config.canonical_json = parsed.dump();
    return out;
}

ExperimentConfig parse_config(const std::string& json_text) {
    ParseOutcome out = parse_config_text(json_text);
    if (!out.issues.empty()) {
        std::string joined = "invalid config:";
        for (const auto& issue : out.issues) joined += "\n  - " + issue;
        throw ConfigError(joined);
    }
    return std::move(out.config);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

} // namespace jumpdiff
