#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "jumpdiff/config.hpp"
#include "jumpdiff/runner.hpp"

using namespace jumpdiff;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("runner_test_tmp") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

const char* kRateConfig = R"({
    "model": {"preset": "linear"},
    "fine_level": 8,
    "paths": 64,
    "seed": 5,
    "study": {"kind": "rate-study", "id": "demo", "n": [4, 16, 64], "reference": "exact"}
})";

} // namespace

TEST_CASE("rate study artifacts, determinism, and overrides") {
    const ExperimentConfig cfg = parse_config(kRateConfig);
    TempDir a("rate_a"), b("rate_b"), c("rate_c"), d("rate_d");

    const RunResult first = run_experiment(cfg, a.str());
    CHECK(first.all_pass);
    REQUIRE(first.studies.size() == 1);
    CHECK(first.studies[0].kind == "rate-study");
    CHECK(first.studies[0].id == "demo");
    CHECK(fs::exists(first.manifest_path));

    const fs::path csv_path = a.path / "demo_rate.csv";
    REQUIRE(fs::exists(csv_path));
    REQUIRE(fs::exists(a.path / "demo_ratefit_pointwise.json"));

    const std::string csv = slurp(csv_path);
    const auto rows = lines_of(csv);
    REQUIRE(rows.size() == 4);  // header + one row per n
    CHECK(rows[0] == "study_id,functional,n,p,m,kappa1,x,x_tilde,estimate,se,flagged");
    CHECK(rows[1].rfind("demo,pointwise,4,", 0) == 0);
    CHECK(rows[3].rfind("demo,pointwise,64,", 0) == 0);

    // identical run, identical bytes
    (void)run_experiment(cfg, b.str());
    CHECK(slurp(b.path / "demo_rate.csv") == csv);
    CHECK(slurp(b.path / "demo_ratefit_pointwise.json") ==
          slurp(a.path / "demo_ratefit_pointwise.json"));

    // more threads, identical bytes
    RunOverrides threaded;
    threaded.threads = 2;
    (void)run_experiment(cfg, c.str(), threaded);
    CHECK(slurp(c.path / "demo_rate.csv") == csv);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(c.path / "manifest.json"));
    CHECK(manifest["threads"] == 2);
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["studies"].size() == 1);

    // different seed, different numbers
    RunOverrides reseeded;
    reseeded.seed = 99;
    (void)run_experiment(cfg, d.str(), reseeded);
    CHECK(slurp(d.path / "demo_rate.csv") != csv);
}

TEST_CASE("config digest format and stability") {
    const ExperimentConfig cfg = parse_config(kRateConfig);
    const std::string digest = config_digest(cfg);
    REQUIRE(digest.size() == 6 + 16);
    CHECK(digest.rfind("fnv1a:", 0) == 0);
    for (std::size_t i = 6; i < digest.size(); ++i)
        CHECK(std::isxdigit(static_cast<unsigned char>(digest[i])));
    CHECK(config_digest(parse_config(kRateConfig)) == digest);

    ExperimentConfig other = parse_config(R"({
        "model": {"preset": "linear"},
        "paths": 128,
        "study": {"kind": "rate-study"}
    })");
    CHECK(config_digest(other) != digest);
}

TEST_CASE("slope asserts can fail a run") {
    const ExperimentConfig cfg = parse_config(R"({
        "model": {"preset": "linear"},
        "fine_level": 8,
        "paths": 64,
        "study": {"kind": "rate-study", "id": "strict", "n": [4, 16, 64],
                  "reference": "exact", "assert": {"slope_max": -10.0}}
    })");
    TempDir dir("assert");
    const RunResult result = run_experiment(cfg, dir.str());
    CHECK_FALSE(result.all_pass);
    CHECK_FALSE(result.studies[0].pass);
}

TEST_CASE("moment check artifacts") {
    const ExperimentConfig cfg = parse_config(R"({
        "model": {"preset": "linear"},
        "fine_level": 6,
        "paths": 64,
        "study": {"kind": "moment-check", "n": [4, 16],
                  "grid": {"lo": -5.0, "hi": 5.0, "step": 0.5}}
    })");
    TempDir dir("moment");
    const RunResult result = run_experiment(cfg, dir.str());
    CHECK(result.all_pass);
    const std::string csv = slurp(dir.path / "moment-check_moment.csv");
    CHECK(csv.find("lyapunov-mean[t=0.25]") != std::string::npos);
    CHECK(csv.find("lyapunov-bound[t=0.25]") != std::string::npos);
    CHECK(csv.find("lyapunov-mean[t=1]") != std::string::npos);
    // 3 starts x 2 grids x 3 times, two rows each, plus the header
    CHECK(lines_of(csv).size() == 1 + 3 * 2 * 3 * 2);
}

TEST_CASE("condition check artifacts") {
    const ExperimentConfig cfg = parse_config(R"({
        "model": {"preset": "trig"},
        "seed": 3,
        "study": {"kind": "check-conditions", "id": "audit",
                  "grid": {"lo": -5.0, "hi": 5.0, "step": 0.5},
                  "a4_samples": 2000,
                  "a4_box": {"lo": -3.0, "hi": 3.0}}
    })");
    TempDir dir("conditions");
    const RunResult result = run_experiment(cfg, dir.str());
    CHECK(result.all_pass);
    REQUIRE(result.studies.size() == 1);
    CHECK(result.studies[0].lines.size() == 5);

    const nlohmann::json report =
        nlohmann::json::parse(slurp(dir.path / "audit_conditions.json"));
    REQUIRE(report["reports"].size() == 5);
    for (const auto& entry : report["reports"]) {
        CHECK(entry["pass"] == true);
    }
    CHECK(report["cbar"].get<double>() >= 1.0);
}

TEST_CASE("holder study artifacts") {
    const ExperimentConfig cfg = parse_config(R"({
        "model": {"preset": "linear"},
        "fine_level": 7,
        "paths": 64,
        "study": {"kind": "holder-study", "id": "pair", "x_tilde": 2.0, "n": [4, 8, 16]}
    })");
    TempDir dir("holder");
    const RunResult result = run_experiment(cfg, dir.str());
    CHECK(result.all_pass);
    REQUIRE(fs::exists(dir.path / "pair_terms.json"));
    const auto rows = lines_of(slurp(dir.path / "pair_rate.csv"));
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].rfind("pair,corollary,", 0) == 0);
        std::vector<std::string> cells;
        std::istringstream is(rows[i]);
        std::string cell;
        while (std::getline(is, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 11);
        CHECK(cells[4] == "2");  // m
        CHECK(cells[5] == "2");  // kappa1
        CHECK(cells[7] == "2");  // x_tilde
    }
}

TEST_CASE("explicit grid sweeps populate inverse-mesh step counts") {
    const ExperimentConfig cfg = parse_config(R"({
        "model": {"preset": "linear"},
        "fine_level": 6,
        "paths": 64,
        "study": {"kind": "rate-study", "id": "gridsweep", "grids": [
            {"kind": "uniform", "n": 8},
            {"kind": "explicit", "breakpoints": [0.0, 0.25, 1.0]}
        ]}
    })");
    TempDir dir("grids");
    const RunResult result = run_experiment(cfg, dir.str());
    CHECK(result.all_pass);  // the failed fit is reported, not fatal, without asserts
    const auto rows = lines_of(slurp(dir.path / "gridsweep_rate.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].rfind("gridsweep,pointwise,8,", 0) == 0);
    CHECK(rows[2].rfind("gridsweep,pointwise,1,", 0) == 0);  // mesh 0.75 rounds to n_eff 1
    bool skipped = false;
    for (const auto& line : result.studies[0].lines)
        skipped = skipped || line.find("rate fit skipped") != std::string::npos;
    CHECK(skipped);
}

TEST_CASE("plot data generation") {
    const ExperimentConfig cfg = parse_config(kRateConfig);
    TempDir run_dir("plot_run"), plot_dir("plot_out");
    const RunResult result = run_experiment(cfg, run_dir.str());

    const auto files = emit_plotdata(result.manifest_path, plot_dir.str());
    REQUIRE(files.size() == 2);
    CHECK(files[0] == "demo_pointwise.dat");
    CHECK(files[1] == "demo_pointwise_guide.dat");

    const auto data = lines_of(slurp(plot_dir.path / "demo_pointwise.dat"));
    REQUIRE(data.size() == 4);  // comment header + three points
    CHECK(data[0].rfind("# log(n) log(error)", 0) == 0);
    double lx = 0.0, ly = 0.0;
    std::istringstream(data[1]) >> lx >> ly;
    CHECK(lx == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    const auto guide = lines_of(slurp(plot_dir.path / "demo_pointwise_guide.dat"));
    REQUIRE(guide.size() == 3);
    double gx0 = 0.0, gy0 = 0.0, gx1 = 0.0, gy1 = 0.0;
    std::istringstream(guide[1]) >> gx0 >> gy0;
    std::istringstream(guide[2]) >> gx1 >> gy1;
    // guide slope is the theoretical -1/p
    CHECK((gy1 - gy0) / (gx1 - gx0) == doctest::Approx(-0.5).epsilon(1e-12));

    CHECK_THROWS_WITH_AS((void)emit_plotdata("nowhere/manifest.json", plot_dir.str()),
                         doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("plot data requires a plottable study") {
    const ExperimentConfig cfg = parse_config(R"({
        "model": {"preset": "trig"},
        "study": {"kind": "check-conditions",
                  "grid": {"lo": -2.0, "hi": 2.0, "step": 0.5}, "a4_samples": 200}
    })");
    TempDir dir("plot_none");
    const RunResult result = run_experiment(cfg, dir.str());
    CHECK_THROWS_WITH_AS((void)emit_plotdata(result.manifest_path, dir.str()),
                         doctest::Contains("no completed rate or holder studies"),
                         std::runtime_error);
}
