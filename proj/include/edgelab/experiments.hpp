#pragma once

#include <string>
#include <vector>

#include "edgelab/types.hpp"

namespace edgelab {

inline constexpr const char* kVersion = "0.1.0";

/// Result of one pipeline run. `pass` reflects every configured check;
/// `inconclusive` marks runs whose statistical gate (e.g. MCMC effective
/// sample size) failed, which is never reported as a pass.
struct ExperimentOutcome {
    bool pass = false;
    bool inconclusive = false;
    std::string summary;  // JSON text, also written to summary.json
};

/// Validate a config without running it. Returns human-readable problems,
/// each naming the failing field path; empty means valid.
std::vector<std::string> validate_experiment_config(const std::string& config_text);

/// Execute the configured pipeline, writing data.csv, summary.json and
/// manifest.json into out_dir (created if needed).
ExperimentOutcome run_experiment(const std::string& config_text, const std::string& out_dir);

/// FNV-1a 64-bit hash used for config fingerprints in manifests.
uint64_t fnv1a64(const std::string& bytes);

} // namespace edgelab
