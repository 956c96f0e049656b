#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loop/causal/causal_memory.hpp"
#include "loop/confidence/confidence.hpp"
#include "loop/embedding/embedding.hpp"
#include "loop/generation/client.hpp"
#include "loop/memory/experience.hpp"
#include "loop/orchestrator/config.hpp"
#include "loop/orchestrator/refine.hpp"
#include "loop/validation/validation.hpp"

namespace loop::orchestrator {

/// Either a domain/problem file pair or natural-language text with an
/// optional domain file as hint.
struct TaskRequest {
    std::optional<std::filesystem::path> domain_file;
    std::optional<std::filesystem::path> problem_file;
    std::optional<std::string> text;
    std::optional<double> budget;
    std::optional<confidence::Route> force_route;

    bool is_text() const { return text.has_value(); }
    /// Throws std::invalid_argument unless exactly one input form is present.
    void check() const;

    nlohmann::json to_json() const;
    static TaskRequest from_json(const nlohmann::json& j);
};

enum class RunStatus { success, failure, timeout, error };
const char* to_string(RunStatus s);

struct PlannerRun {
    std::string phase;
    planner::SearchStatus status = planner::SearchStatus::unsolvable;
    std::size_t plan_length = 0;
    std::size_t expanded = 0;
    std::size_t generated = 0;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
};

struct RunRecord {
    RunStatus status = RunStatus::error;
    std::string message;
    std::string input;  // "files" or "text"
    std::string domain;
    std::string problem;
    std::optional<confidence::Report> report;
    std::optional<confidence::Route> route;
    std::vector<std::string> notes;
    std::vector<PlannerRun> planner_runs;
    nlohmann::json decomposition;  // graph of the decomposition route, or null
    std::vector<validation::Verdict> verdicts;
    std::vector<RefineIteration> refinements;
    std::vector<std::string> plan;
    bool plan_valid = false;
    std::size_t learned_triples = 0;
    std::size_t memory_size = 0;
    nlohmann::json advisory;  // GNN relation guesses between consecutive steps, or null
    std::map<std::string, double> timings;

    bool success() const { return status == RunStatus::success; }
    nlohmann::json to_json() const;
    /// to_json without timings and wall-clock fields.
    nlohmann::json comparable() const;
    static nlohmann::json without_timings(nlohmann::json j);
};

/// The control loop with its memories. Not safe for concurrent runs; copy
/// it to run tasks in isolation.
class Orchestrator {
public:
    /// Without a client, a script named in the config is loaded.
    explicit Orchestrator(Config cfg, std::shared_ptr<generation::GenerationClient> client = nullptr);

    const Config& config() const { return cfg_; }
    memory::MemoryStore& memory() { return memory_; }
    const memory::MemoryStore& memory() const { return memory_; }
    causal::CausalMemory& causal() { return causal_; }
    const causal::CausalMemory& causal() const { return causal_; }
    validation::AgentPool& agents() { return pool_; }
    const validation::AgentPool& agents() const { return pool_; }
    const std::shared_ptr<generation::GenerationClient>& client() const { return client_; }
    const embedding::Embedder& embedder() const { return *embedder_; }

    /// experience.json, causal.json and reputations.json; missing files are
    /// skipped.
    void load_state(const std::filesystem::path& dir);
    void save_state(const std::filesystem::path& dir) const;

    /// Never throws for task-level problems; they end up in the record.
    /// With `run_dir` the inputs, a state snapshot, every PDDL iteration, the
    /// plan, the trace and the record are written there.
    RunRecord run(const TaskRequest& request, const std::optional<std::filesystem::path>& run_dir = std::nullopt);

private:
    Config cfg_;
    std::shared_ptr<generation::GenerationClient> client_;
    std::shared_ptr<const embedding::Embedder> embedder_;
    memory::MemoryStore memory_;
    causal::CausalMemory causal_;
    validation::AgentPool pool_;
};

/// Re-executes a persisted run from its snapshot.
RunRecord replay(const std::filesystem::path& run_dir);

struct ReplayCheck {
    bool identical = false;
    bool plan_valid = false;
    std::string difference;  // first differing JSON path, if any
};

/// Replays and compares with record.json, ignoring timings; re-validates the
/// stored plan of a successful run.
ReplayCheck check_replay(const std::filesystem::path& run_dir);

}  // namespace loop::orchestrator
