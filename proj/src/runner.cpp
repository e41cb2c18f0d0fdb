#include "jumpdiff/runner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "jumpdiff/error.hpp"
#include "jumpdiff/version.hpp"

namespace jumpdiff {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

constexpr const char* kCsvHeader =
    "study_id,functional,n,p,m,kappa1,x,x_tilde,estimate,se,flagged";

struct CsvRow {
    std::string study_id;
    std::string functional;
    std::size_t n = 0;
    double p = 2.0;
    std::optional<double> m;
    std::optional<double> kappa1;
    std::optional<double> x;
    std::optional<double> x_tilde;
    double estimate = 0.0;
    double se = 0.0;
    bool flagged = false;
};

std::string csv_text(const std::vector<CsvRow>& rows) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
    for (const CsvRow& r : rows) {
        os << r.study_id << ',' << r.functional << ',' << r.n << ',' << fmt17(r.p) << ','
           << opt(r.m) << ',' << opt(r.kappa1) << ',' << opt(r.x) << ',' << opt(r.x_tilde)
           << ',' << fmt17(r.estimate) << ',' << fmt17(r.se) << ',' << (r.flagged ? 1 : 0)
           << '\n';
    }
    return os.str();
}

void write_file(const fs::path& dir, const std::string& name, const std::string& text,
                StudyOutcome& outcome) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
    outcome.files.push_back(name);
}

McSetup setup_from(const ExperimentConfig& cfg) {
    McSetup s;
    s.levy = cfg.levy;
    s.horizon = cfg.horizon;
    s.fine_level = cfg.fine_level;
    s.paths = cfg.paths;
    s.master_seed = cfg.seed;
    s.threads = cfg.threads;
    return s;
}

json estimate_json(const LpEstimate& e) {
    return json{{"value", e.value}, {"se", e.se}, {"flagged", e.flagged}};
}

json fit_json(const std::string& study_id, const std::string& functional, const RateFit& fit,
              const std::optional<double>& guide, const std::vector<RatePoint>& points) {
    json points_json = json::array();
    for (const RatePoint& pt : points) {
        points_json.push_back({{"n", pt.n},
                               {"estimate", pt.estimate.value},
                               {"se", pt.estimate.se},
                               {"flagged", pt.estimate.flagged}});
    }
    json j{{"study", study_id},
           {"functional", functional},
           {"slope", fit.slope},
           {"intercept", fit.intercept},
           {"residual_max", fit.residual_max},
           {"used", fit.used},
           {"excluded_n", fit.excluded_n},
           {"points", points_json}};
    j["guide_slope"] = guide ? json(*guide) : json(nullptr);
    return j;
}

// Fits, records the ratefit artifact, and applies any slope asserts. A fit
// that cannot be made (too few usable points) fails the study only when
// asserts were requested on it.
void fit_and_assert(const ExperimentConfig& cfg, const std::string& functional,
                    const std::vector<RatePoint>& points, const std::optional<double>& guide,
                    bool apply_asserts, const fs::path& dir, StudyOutcome& outcome,
                    json& study_json) {
    const StudyConfig& st = cfg.study;
    const bool has_assert = st.asserts.slope_min || st.asserts.slope_max;
    try {
        RateFit fit = fit_rate_points(points);
        json j = fit_json(st.id, functional, fit, guide, points);
        write_file(dir, st.id + "_ratefit_" + functional + ".json", j.dump(2) + "\n", outcome);
        study_json["ratefits"].push_back(outcome.files.back());

        std::ostringstream line;
        line << functional << ": slope " << fmt_short(fit.slope);
        if (guide) line << " (guide " << fmt_short(*guide) << ")";
        line << ", " << fit.used << "/" << points.size() << " points used";
        outcome.lines.push_back(line.str());

        if (apply_asserts && has_assert) {
            bool ok = true;
            if (st.asserts.slope_min && fit.slope < *st.asserts.slope_min) ok = false;
            if (st.asserts.slope_max && fit.slope > *st.asserts.slope_max) ok = false;
            std::ostringstream a;
            a << functional << " assert slope in ["
              << (st.asserts.slope_min ? fmt_short(*st.asserts.slope_min) : std::string("-inf"))
              << ", "
              << (st.asserts.slope_max ? fmt_short(*st.asserts.slope_max) : std::string("inf"))
              << "]: " << (ok ? "pass" : "FAIL");
            outcome.lines.push_back(a.str());
            if (!ok) outcome.pass = false;
        }
    } catch (const std::exception& e) {
        outcome.lines.push_back(functional + ": rate fit skipped (" + std::string(e.what()) + ")");
        if (apply_asserts && has_assert) outcome.pass = false;
    }
}

void run_rate_study(const ExperimentConfig& cfg, const fs::path& dir, StudyOutcome& outcome,
                    json& study_json) {
    const StudyConfig& st = cfg.study;
    McSetup setup = setup_from(cfg);

    std::vector<CsvRow> rows;
    std::vector<RatePoint> pointwise;
    std::vector<RatePoint> mixed;
    if (!st.grids.empty()) {
        // Explicit sweep: each entry contributes one point at the inverse-mesh
        // scale n_eff = horizon / mesh (equals n for uniform entries).
        for (const GridEntry& entry : st.grids) {
            const GridFunction grid =
                entry.uniform ? GridFunction::uniform(cfg.horizon, entry.n)
                              : GridFunction::from_breakpoints(entry.breakpoints);
            const auto n_eff = static_cast<std::size_t>(
                std::llround(cfg.horizon / grid.mesh()));
            LpEstimate e = strong_error_pointwise_grid(cfg.coeffs, setup, grid, st.x0, cfg.p,
                                                       st.reference);
            pointwise.push_back({static_cast<double>(n_eff), e});
            rows.push_back({st.id, "pointwise", n_eff, cfg.p, std::nullopt, std::nullopt,
                            st.x0, std::nullopt, e.value, e.se, e.flagged});
        }
        std::sort(pointwise.begin(), pointwise.end(),
                  [](const RatePoint& a, const RatePoint& b) { return a.n < b.n; });
    } else {
        std::vector<std::size_t> ns = st.n_list;
        std::sort(ns.begin(), ns.end());
        for (std::size_t n : ns) {
            LpEstimate e =
                strong_error_pointwise(cfg.coeffs, setup, n, st.x0, cfg.p, st.reference);
            pointwise.push_back({static_cast<double>(n), e});
            rows.push_back({st.id, "pointwise", n, cfg.p, std::nullopt, std::nullopt, st.x0,
                            std::nullopt, e.value, e.se, e.flagged});
            if (st.x_tilde) {
                LpEstimate d = mixed_xy_difference(cfg.coeffs, setup, n, st.x0, st.x0,
                                                   *st.x_tilde, *st.x_tilde, cfg.p);
                mixed.push_back({static_cast<double>(n), d});
                rows.push_back({st.id, "mixed", n, cfg.p, std::nullopt, std::nullopt, st.x0,
                                st.x_tilde, d.value, d.se, d.flagged});
            }
        }
    }

    write_file(dir, st.id + "_rate.csv", csv_text(rows), outcome);
    study_json["csv"] = outcome.files.back();
    study_json["ratefits"] = json::array();
    study_json["guides"] = json{{"pointwise", -1.0 / cfg.p}};

    fit_and_assert(cfg, "pointwise", pointwise, -1.0 / cfg.p, true, dir, outcome, study_json);
    if (!mixed.empty()) {
        // No single theoretical slope applies to the mixed functional, so no
        // guide line and no assert on its fit.
        study_json["guides"]["mixed"] = nullptr;
        fit_and_assert(cfg, "mixed", mixed, std::nullopt, false, dir, outcome, study_json);
    }
}

void run_holder_study(const ExperimentConfig& cfg, const fs::path& dir, StudyOutcome& outcome,
                      json& study_json) {
    const StudyConfig& st = cfg.study;
    McSetup setup = setup_from(cfg);

    const double x = st.x0;
    const double y = *st.x_tilde;
    const double kappa2 = kappa2_of(st.kappa1);
    const double guide = -1.0 / (cfg.p * std::max(st.m, kappa2));
    const double den1 = 1.0 + std::abs(x);
    const double den2 = std::abs(x - y) * (1.0 + std::abs(x) + std::abs(y));

    std::vector<std::size_t> ns = st.n_list;
    std::sort(ns.begin(), ns.end());

    std::vector<CsvRow> rows;
    std::vector<RatePoint> points;
    json terms_json = json::array();
    for (std::size_t n : ns) {
        CorollaryResult r = corollary_functional(cfg.coeffs, setup, n, x, y, cfg.p,
                                                 st.time_fractions);
        const CorollaryTerm* worst = nullptr;
        json term_list = json::array();
        for (const CorollaryTerm& term : r.terms) {
            if (worst == nullptr || term.combined > worst->combined) worst = &term;
            term_list.push_back({{"k", term.k},
                                 {"time", term.time},
                                 {"pointwise", estimate_json(term.pointwise)},
                                 {"difference", estimate_json(term.difference)},
                                 {"combined", term.combined}});
        }
        terms_json.push_back({{"n", n}, {"terms", term_list}});

        LpEstimate combined;
        combined.value = r.value;
        combined.p = cfg.p;
        combined.samples = cfg.paths;
        if (worst != nullptr) {
            const double se1 = worst->pointwise.se / den1;
            const double se2 = worst->difference.se / den2;
            combined.se = std::sqrt(se1 * se1 + se2 * se2);
            combined.flagged = worst->pointwise.flagged && worst->difference.flagged;
        }
        points.push_back({static_cast<double>(n), combined});
        rows.push_back({st.id, "corollary", n, cfg.p, st.m, st.kappa1, x, y, combined.value,
                        combined.se, combined.flagged});
    }

    write_file(dir, st.id + "_rate.csv", csv_text(rows), outcome);
    study_json["csv"] = outcome.files.back();
    study_json["ratefits"] = json::array();
    study_json["guides"] = json{{"corollary", guide}};
    write_file(dir, st.id + "_terms.json", terms_json.dump(2) + "\n", outcome);

    fit_and_assert(cfg, "corollary", points, guide, true, dir, outcome, study_json);
}

void run_moment_check(const ExperimentConfig& cfg, const fs::path& dir, StudyOutcome& outcome,
                      json& study_json) {
    const StudyConfig& st = cfg.study;
    McSetup setup = setup_from(cfg);

    std::vector<double> grid = linspace_grid(st.grid.lo, st.grid.hi, st.grid.step);
    LyapunovFunction lyap =
        calibrate_cbar(make_lyapunov(cfg.coeffs, cfg.levy, cfg.p), cfg.coeffs, cfg.levy, grid);
    study_json["cbar"] = lyap.cbar();

    std::vector<CsvRow> rows;
    double worst_ratio = 0.0;
    bool all_ok = true;
    for (double x0 : st.x0_list) {
        for (std::size_t n : st.n_list) {
            for (double t : st.times) {
                MeanEstimate mean = scheme_lyapunov_mean(cfg.coeffs, lyap, setup, n, x0, t);
                const double bound = std::exp(2.5 * lyap.cbar() * t) * lyap.value(x0);
                const bool ok = mean.value <= bound + 3.0 * mean.se;
                all_ok = all_ok && ok;
                worst_ratio = std::max(worst_ratio, mean.value / (bound + 3.0 * mean.se));
                const std::string label = "[t=" + fmt_short(t) + "]";
                rows.push_back({st.id, "lyapunov-mean" + label, n, cfg.p, std::nullopt,
                                std::nullopt, x0, std::nullopt, mean.value, mean.se, !ok});
                rows.push_back({st.id, "lyapunov-bound" + label, n, cfg.p, std::nullopt,
                                std::nullopt, x0, std::nullopt, bound, 0.0, false});
            }
        }
    }

    write_file(dir, st.id + "_moment.csv", csv_text(rows), outcome);
    study_json["csv"] = outcome.files.back();

    std::ostringstream line;
    line << "moment bound " << (all_ok ? "holds" : "VIOLATED") << " on all "
         << st.x0_list.size() * st.n_list.size() * st.times.size()
         << " points (worst mean/bound ratio " << fmt_short(worst_ratio) << ", cbar "
         << fmt_short(lyap.cbar()) << ")";
    outcome.lines.push_back(line.str());
    if (!all_ok) outcome.pass = false;
}

json report_json(const ConditionReport& report) {
    return json{{"condition", report.condition}, {"pass", report.pass},
                {"constant", report.constant},  {"margin", report.margin},
                {"worst_point", report.worst_point}, {"domain", report.domain}};
}

void run_check_conditions(const ExperimentConfig& cfg, const fs::path& dir,
                          StudyOutcome& outcome, json& study_json) {
    const StudyConfig& st = cfg.study;

    std::vector<double> grid = linspace_grid(st.grid.lo, st.grid.hi, st.grid.step);
    LyapunovFunction lyap =
        calibrate_cbar(make_lyapunov(cfg.coeffs, cfg.levy, cfg.p), cfg.coeffs, cfg.levy, grid);

    std::vector<ConditionReport> reports;
    reports.push_back(check_a0(lyap, cfg.coeffs, cfg.levy, grid));
    reports.push_back(check_a1(lyap, cfg.coeffs, grid));
    reports.push_back(check_a2(lyap, grid));
    reports.push_back(check_a3(lyap, grid));
    reports.push_back(check_a4(cfg.coeffs,
                               make_box_sampler(st.a4_box.lo, st.a4_box.hi, cfg.seed),
                               st.a4_samples));

    json report_list = json::array();
    bool all_pass = true;
    for (const ConditionReport& report : reports) {
        report_list.push_back(report_json(report));
        all_pass = all_pass && report.pass;
        std::ostringstream line;
        line << report.condition << (report.pass ? ": pass" : ": FAIL") << " (constant "
             << fmt_short(report.constant) << ", margin " << fmt_short(report.margin) << ")";
        outcome.lines.push_back(line.str());
    }

    json j{{"study", st.id},
           {"model", cfg.coeffs.name},
           {"cbar", lyap.cbar()},
           {"p", cfg.p},
           {"reports", report_list}};
    write_file(dir, st.id + "_conditions.json", j.dump(2) + "\n", outcome);
    study_json["report"] = outcome.files.back();
    study_json["cbar"] = lyap.cbar();
    if (!all_pass) outcome.pass = false;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

std::string config_digest(const ExperimentConfig& config) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.canonical_json)));
    return buf;
}

RunResult run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                         const RunOverrides& overrides) {
    ExperimentConfig cfg = config;
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.threads) cfg.threads = *overrides.threads;

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const auto start = std::chrono::steady_clock::now();

    StudyOutcome outcome;
    outcome.id = cfg.study.id;
    outcome.kind = study_kind_name(cfg.study.kind);

    json study_json;
    study_json["id"] = cfg.study.id;
    study_json["kind"] = outcome.kind;

    switch (cfg.study.kind) {
    case StudyKind::rate_study: run_rate_study(cfg, dir, outcome, study_json); break;
    case StudyKind::holder_study: run_holder_study(cfg, dir, outcome, study_json); break;
    case StudyKind::moment_check: run_moment_check(cfg, dir, outcome, study_json); break;
    case StudyKind::check_conditions: run_check_conditions(cfg, dir, outcome, study_json); break;
    }
    study_json["pass"] = outcome.pass;

    const auto wall =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    json manifest;
    manifest["version"] = kVersion;
    manifest["config_digest"] = config_digest(cfg);
    manifest["title"] = cfg.title;
    manifest["model"] = cfg.coeffs.name;
    manifest["levy"] = json{{"law", law_name(cfg.levy.law)}, {"intensity", cfg.levy.intensity}};
    manifest["horizon"] = cfg.horizon;
    manifest["fine_level"] = cfg.fine_level;
    manifest["paths"] = cfg.paths;
    manifest["seed"] = cfg.seed;
    manifest["threads"] = cfg.threads;
    manifest["p"] = cfg.p;
    manifest["wall_ms"] = wall.count();
    manifest["studies"] = json::array({study_json});
    manifest["files"] = outcome.files;

    const fs::path manifest_path = dir / "manifest.json";
    {
        std::ofstream out(manifest_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
        out << manifest.dump(2) << "\n";
    }

    RunResult result;
    result.manifest_path = manifest_path.string();
    result.all_pass = outcome.pass;
    result.studies.push_back(std::move(outcome));
    return result;
}

namespace {

struct PlotPoint {
    double n = 0.0;
    double estimate = 0.0;
    bool flagged = false;
};

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) {
        out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '-';
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

std::vector<std::string> emit_plotdata(const std::string& manifest_path,
                                       const std::string& out_dir) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("studies")) {
        throw std::runtime_error("not a run manifest: " + manifest_path);
    }

    const fs::path base = fs::path(manifest_path).parent_path();
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::vector<std::string> written;
    bool plottable = false;

    for (const json& study : manifest["studies"]) {
        const std::string kind = study.value("kind", "");
        if (kind != "rate-study" && kind != "holder-study") continue;
        if (!study.contains("csv")) continue;
        plottable = true;
        const std::string id = study.value("id", "study");

        std::ifstream csv(base / study["csv"].get<std::string>(), std::ios::binary);
        if (!csv) {
            throw std::runtime_error("manifest references missing CSV: " +
                                     (base / study["csv"].get<std::string>()).string());
        }
        std::string line;
        if (!std::getline(csv, line) || line != kCsvHeader) {
            throw std::runtime_error("unexpected CSV header in " +
                                     study["csv"].get<std::string>());
        }
        std::map<std::string, std::vector<PlotPoint>> by_functional;
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv_line(line);
            if (cells.size() != 11) {
                throw std::runtime_error("malformed CSV row in " +
                                         study["csv"].get<std::string>());
            }
            PlotPoint pt;
            pt.n = std::stod(cells[2]);
            pt.estimate = std::stod(cells[8]);
            pt.flagged = cells[10] != "0";
            by_functional[cells[1]].push_back(pt);
        }

        const json guides = study.value("guides", json::object());
        for (auto& [functional, pts] : by_functional) {
            std::vector<PlotPoint> usable;
            for (const PlotPoint& pt : pts) {
                if (pt.estimate > 0.0 && !pt.flagged) usable.push_back(pt);
            }
            std::sort(usable.begin(), usable.end(),
                      [](const PlotPoint& a, const PlotPoint& b) { return a.n < b.n; });
            if (usable.empty()) continue;

            std::ostringstream data;
            data << "# log(n) log(error)  [" << id << " / " << functional << "]\n";
            for (const PlotPoint& pt : usable) {
                data << fmt17(std::log(pt.n)) << ' ' << fmt17(std::log(pt.estimate)) << '\n';
            }
            const std::string data_name = id + "_" + sanitize(functional) + ".dat";
            std::ofstream out(dir / data_name, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + (dir / data_name).string());
            out << data.str();
            written.push_back(data_name);

            if (usable.size() >= 2 && guides.contains(functional) &&
                guides[functional].is_number()) {
                const double slope = guides[functional].get<double>();
                const double ln0 = std::log(usable.front().n);
                const double le0 = std::log(usable.front().estimate);
                const double ln1 = std::log(usable.back().n);
                std::ostringstream guide;
                guide << "# guide line, slope " << fmt_short(slope) << "\n";
                guide << fmt17(ln0) << ' ' << fmt17(le0) << '\n';
                guide << fmt17(ln1) << ' ' << fmt17(le0 + slope * (ln1 - ln0)) << '\n';
                const std::string guide_name = id + "_" + sanitize(functional) + "_guide.dat";
                std::ofstream gout(dir / guide_name, std::ios::binary);
                if (!gout) {
                    throw std::runtime_error("cannot write " + (dir / guide_name).string());
                }
                gout << guide.str();
                written.push_back(guide_name);
            }
        }
    }
    if (!plottable) {
        throw std::runtime_error("manifest contains no completed rate or holder studies");
    }
    return written;
}

} // namespace jumpdiff
