#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loop/orchestrator/run.hpp"

namespace loop::orchestrator {

struct BenchEntry {
    std::string name;
    std::string group;  // summary key, by default the domain file's directory name
    std::filesystem::path domain;
    std::filesystem::path problem;
    std::optional<std::size_t> optimal;  // reference plan length
};

/// {"instances": [{"name", "domain", "problem", "optimal"?, "group"?}]};
/// paths relative to the manifest.
struct Manifest {
    std::vector<BenchEntry> entries;

    static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
    static Manifest load(const std::filesystem::path& path);
};

struct BenchRow {
    BenchEntry entry;
    std::string status;  // a RunStatus name or "missing"
    std::size_t plan_length = 0;
    std::optional<bool> optimal;
    std::string route;
    std::string message;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
};

struct GroupSummary {
    std::string group;
    std::size_t instances = 0;
    std::size_t solved = 0;
    std::size_t with_reference = 0;
    std::size_t optimal = 0;
    double mean_wall = 0.0;

    double success_rate() const;     // percent
    double optimality_rate() const;  // percent of instances with a reference
    nlohmann::json to_json() const;
};

struct BenchReport {
    std::vector<BenchRow> rows;         // manifest order
    std::vector<GroupSummary> groups;   // by group name
    GroupSummary overall;

    nlohmann::json to_json() const;
    std::string table() const;
};

/// Runs every instance on a copy of `base`, so rows do not influence each
/// other, with up to `workers` instances at a time.
BenchReport bench(const Manifest& manifest, const Orchestrator& base,
                  const std::optional<std::filesystem::path>& run_dir = std::nullopt, std::size_t workers = 1);

}  // namespace loop::orchestrator
