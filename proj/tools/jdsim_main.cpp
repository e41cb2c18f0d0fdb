#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "jumpdiff/config.hpp"
#include "jumpdiff/levy.hpp"
#include "jumpdiff/model.hpp"
#include "jumpdiff/runner.hpp"
#include "jumpdiff/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // unexpected failure
constexpr int kExitBadConfig = 2;  // config does not parse or validate
constexpr int kExitAssert = 3;     // run --assert thresholds not met

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed, const std::optional<unsigned>& threads,
            bool assert_thresholds) {
    jumpdiff::ExperimentConfig config;
    try {
        config = jumpdiff::load_config(config_path);
    } catch (const jumpdiff::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitBadConfig;
    }

    jumpdiff::RunOverrides overrides;
    overrides.seed = seed;
    overrides.threads = threads;

    jumpdiff::RunResult result =
        jumpdiff::run_experiment(config, out_dir.value_or(config.out_dir), overrides);
    for (const jumpdiff::StudyOutcome& study : result.studies) {
        std::cout << "study " << study.kind << "/" << study.id << "\n";
        for (const std::string& line : study.lines) std::cout << "  " << line << "\n";
        std::cout << "  files:";
        for (const std::string& file : study.files) std::cout << " " << file;
        std::cout << "\n";
    }
    std::cout << "manifest: " << result.manifest_path << "\n";
    std::cout << "status: " << (result.all_pass ? "pass" : "fail") << "\n";
    if (assert_thresholds && !result.all_pass) return kExitAssert;
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open config file: " << config_path << "\n";
        return kExitBadConfig;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();

    jumpdiff::ParseOutcome outcome = jumpdiff::parse_config_text(buffer.str());
    if (!outcome.issues.empty()) {
        std::cerr << "invalid config (" << outcome.issues.size() << " problem"
                  << (outcome.issues.size() == 1 ? "" : "s") << "):\n";
        for (const std::string& issue : outcome.issues) std::cerr << "  - " << issue << "\n";
        return kExitBadConfig;
    }
    const jumpdiff::ExperimentConfig& config = outcome.config;
    std::cout << "config ok: " << jumpdiff::study_kind_name(config.study.kind) << "/"
              << config.study.id << ", model " << config.coeffs.name << ", "
              << jumpdiff::law_name(config.levy.law) << " jumps, digest "
              << jumpdiff::config_digest(config) << "\n";
    return kExitOk;
}

int cmd_presets() {
    for (const jumpdiff::ModelPreset& preset : jumpdiff::builtin_presets()) {
        std::cout << preset.id << ": " << preset.description << "\n";
        std::cout << "  coefficients: " << preset.coeffs.name << " (c=" << preset.coeffs.c
                  << ", b=" << preset.coeffs.b << ", L=" << preset.coeffs.L << ")\n";
        std::cout << "  jumps: " << jumpdiff::law_name(preset.levy.law) << ", intensity "
                  << preset.levy.intensity << ", horizon " << preset.horizon << "\n";
        jumpdiff::LyapunovFunction lyap = jumpdiff::calibrate_cbar(
            jumpdiff::make_lyapunov(preset.coeffs, preset.levy, 2.0), preset.coeffs,
            preset.levy, jumpdiff::linspace_grid(-5.0, 5.0, 0.5));
        std::cout << "  certified growth constant at p=2: " << lyap.cbar() << "\n";
    }
    return kExitOk;
}

int cmd_emit_plotdata(const std::string& manifest_path, std::string out_dir) {
    if (out_dir.empty()) {
        out_dir = std::filesystem::path(manifest_path).parent_path().string();
        if (out_dir.empty()) out_dir = ".";
    }
    std::vector<std::string> files = jumpdiff::emit_plotdata(manifest_path, out_dir);
    for (const std::string& file : files) std::cout << out_dir << "/" << file << "\n";
    if (files.empty()) std::cout << "no plottable studies in manifest\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"jdsim: strong approximation studies for Levy-driven jump diffusions"};
    app.set_version_flag("--version", std::string("jdsim ") + jumpdiff::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string manifest_path;
    std::string plot_out;
    std::uint64_t seed_value = 0;
    unsigned threads_value = 0;
    bool assert_thresholds = false;

    CLI::App* run = app.add_subcommand("run", "execute the study described by a config file");
    run->add_option("--config", config_path, "JSON config file")->required();
    CLI::Option* out_opt =
        run->add_option("--out", out_dir, "output directory (default: config out_dir)");
    CLI::Option* seed_opt = run->add_option("--seed", seed_value, "override the master seed");
    CLI::Option* threads_opt =
        run->add_option("--threads", threads_value, "override the worker thread count")
            ->check(CLI::Range(1u, 256u));
    run->add_flag("--assert", assert_thresholds,
                  "exit 3 when configured thresholds or built-in checks fail");

    CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
    validate->add_option("--config", config_path, "JSON config file")->required();

    app.add_subcommand("presets", "list the built-in model presets");

    CLI::App* plot = app.add_subcommand(
        "emit-plotdata", "write log-log plot files from a previous run's manifest");
    plot->add_option("--manifest", manifest_path, "manifest.json from a run")->required();
    plot->add_option("--out", plot_out, "output directory (default: next to the manifest)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("run")) {
            std::optional<std::uint64_t> seed;
            if (seed_opt->count() > 0) seed = seed_value;
            std::optional<unsigned> threads;
            if (threads_opt->count() > 0) threads = threads_value;
            std::optional<std::string> out;
            if (out_opt->count() > 0) out = out_dir;
            return cmd_run(config_path, out, seed, threads, assert_thresholds);
        }
        if (app.got_subcommand("validate")) return cmd_validate(config_path);
        if (app.got_subcommand("presets")) return cmd_presets();
        if (app.got_subcommand("emit-plotdata")) return cmd_emit_plotdata(manifest_path, plot_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
