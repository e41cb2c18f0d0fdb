#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jumpdiff/config.hpp"

namespace jumpdiff {

struct StudyOutcome {
    std::string id;
    std::string kind;
    bool pass = true;
    std::vector<std::string> files;  // paths relative to the output directory
    std::vector<std::string> lines;  // human-readable summary
};

struct RunResult {
    std::string manifest_path;
    std::vector<StudyOutcome> studies;
    bool all_pass = true;
};

// Command-line overrides applied on top of the parsed config.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

// FNV-1a over the canonical (sorted-key) JSON dump, as "fnv1a:<16 hex>".
std::string config_digest(const ExperimentConfig& config);

// Executes the configured study, writing CSV/JSON artifacts plus a manifest
// into out_dir. Data artifacts are byte-identical across thread counts; only
// the manifest records wall time and thread count.
RunResult run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                         const RunOverrides& overrides = {});

// Rebuilds gnuplot-ready (log n, log error) files and reference-slope guide
// lines from a manifest and the CSVs it references. No simulation is re-run.
// Returns the files written, relative to out_dir.
std::vector<std::string> emit_plotdata(const std::string& manifest_path,
                                       const std::string& out_dir);

} // namespace jumpdiff
