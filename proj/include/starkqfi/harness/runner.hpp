#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "starkqfi/harness/config.hpp"

namespace starkqfi::harness {

struct PointStatus {
    std::string id;
    bool ok = true;
    std::string message;
};

struct RunReport {
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> files;
    std::vector<PointStatus> points;

    std::size_t failures() const;
    bool all_failed() const { return !points.empty() && failures() == points.size(); }
};

std::string tool_version();

/// configured > 0 wins, then STARKQFI_WORKERS, then hardware concurrency.
int resolve_workers(int configured);

/// Runs task(i) for i in [0, n) on up to `workers` threads. Threads pull the next
/// index from a shared counter. The first exception is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

/// Executes one experiment, writes its CSVs and manifest.json into cfg.output.
RunReport run(const ExperimentConfig& cfg);

/// Like run(build_config(map)), but also expands reproduce and table1 into their presets.
RunReport run(const ConfigMap& map);

/// Loads <config_dir>/<name>.cfg.
ConfigMap load_preset(const std::filesystem::path& config_dir, const std::string& name);

}  // namespace starkqfi::harness
