#pragma once

#include <cstdint>
#include <string>

#include "dfv/experiment.hpp"
#include "dfv/features.hpp"

namespace dfv {

struct ReportConfig {
    double confidence = 0.75;
    double density_bandwidth = 0.0;  // <= 0: Silverman
    int density_grid = 512;
};

struct RunConfig {
    std::string manifest_path;
    std::string output_dir = "out";
    ExtractConfig extract;
    int repetitions = 30;
    double split = 0.7;
    std::uint64_t master_seed = 20260823;
    GmmConfig gmm;
    std::vector<int> pretest_grid = {1, 2, 4, 8, 16};
    int pretest_folds = 5;
    ReportConfig report;
    int max_threads = 0;  // 0 = hardware concurrency
};

// Strict loader: unknown keys are configuration errors, a configured
// manifest path must exist.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Canonical serialization of the effective config (defaults filled in);
// config_hash is the fnv1a of this string.
std::string run_config_to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

}  // namespace dfv
