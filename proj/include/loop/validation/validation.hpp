#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loop/causal/causal_memory.hpp"
#include "loop/generation/client.hpp"
#include "loop/state/execution.hpp"
#include "loop/util/fair_shared_mutex.hpp"

namespace loop::validation {

inline constexpr double kApprovalThreshold = 0.7;
inline constexpr double kReputationFloor = 0.01;
inline constexpr double kPreventsConfidence = 0.8;

class EmptyConsensus : public std::invalid_argument {
public:
    EmptyConsensus() : std::invalid_argument("consensus over no scores") {}
};

class AllAgentsFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A backend that could not produce a score (unreachable service, malformed reply).
class BackendFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConsensusResult {
    double value = 0.0;
    bool approved = false;
};

/// Σ rᵢ·sᵢ / Σ rᵢ over (reputation, score) pairs. Throws EmptyConsensus.
ConsensusResult consensus(std::span<const std::pair<double, double>> scores, double threshold = kApprovalThreshold);

/// clamp(0.01, 1, 0.9·r + 0.1·[agreed])
double update_reputation(double reputation, bool agreed);

struct Review {
    double score = 0.0;
    std::string rationale;
};

/// What an agent sees: the task, the candidate plan and its simulation.
struct Context {
    const pddl::GroundTask& task;
    const Plan& plan;
    const ExecutionTrace& trace;
    const causal::CausalMemory* causal = nullptr;
    std::string task_text;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Throws BackendFailure.
    virtual Review review(const Context& ctx) const = 0;
    virtual std::string kind() const = 0;
};

enum class Check { symbolic, goal_coverage, causal_consistency, efficiency };
const char* to_string(Check c);
Check parse_check(const std::string& text);

/// Deterministic checks:
///  symbolic: 1 when the plan executes and reaches the goal, else 0.
///  goal_coverage: share of goal literals holding in the final state.
///  causal_consistency: 1 − share of steps needing an atom that an earlier
///    step is predicted to remove (PREVENTS at >= 0.8) with no step in
///    between adding it back.
///  efficiency: 1 − share of steps that return to an already visited state.
class RuleBackend final : public Backend {
public:
    explicit RuleBackend(Check check) : check_(check) {}
    Review review(const Context& ctx) const override;
    std::string kind() const override { return std::string("rule:") + to_string(check_); }
    Check check() const { return check_; }

private:
    Check check_;
};

/// Sends a structured request and expects exactly
///   SCORE: <number in [0,1]>
///   RATIONALE: <text>
class GenerativeBackend final : public Backend {
public:
    explicit GenerativeBackend(std::shared_ptr<generation::GenerationClient> client) : client_(std::move(client)) {}
    Review review(const Context& ctx) const override;
    std::string kind() const override { return "generative:" + client_->name(); }

    static nlohmann::json request_for(const Context& ctx);
    /// Throws BackendFailure on anything but the exact grammar.
    static Review parse_reply(const std::string& reply);

private:
    std::shared_ptr<generation::GenerationClient> client_;
};

/// Causal-consistency violations: 1-based step numbers.
std::vector<std::size_t> causal_conflicts(const pddl::GroundTask& task, const Plan& plan,
                                          const causal::CausalMemory& causal, double min_confidence = kPreventsConfidence);

struct Agent {
    std::string id;
    std::vector<std::string> expertise;  // domain names; empty for generals
    double reputation = 1.0;
    std::shared_ptr<const Backend> backend;

    bool expert_for(const std::string& domain) const;
};

struct AgentScore {
    std::string agent;
    double reputation = 0.0;
    double score = 0.0;
    std::string rationale;
};

struct AgentFailure {
    std::string agent;
    std::string error;
};

struct Verdict {
    std::vector<AgentScore> scores;
    std::vector<AgentFailure> failures;
    double consensus = 0.0;
    bool approved = false;

    nlohmann::json to_json() const;
};

/// Agents with reputations. Reputation updates take an exclusive lock.
class AgentPool {
public:
    AgentPool() = default;
    explicit AgentPool(std::vector<Agent> agents);
    AgentPool(const AgentPool& other);
    AgentPool& operator=(const AgentPool& other);

    /// Six domain experts (one per benchmark domain, symbolic check) and six
    /// generals: two symbolic, two goal-coverage, one causal-consistency, one
    /// efficiency. All reputations 1.0.
    static AgentPool default_pool();
    /// Same composition with the generals backed by `client`.
    static AgentPool generative_pool(std::shared_ptr<generation::GenerationClient> client);

    /// Experts for `domain` first (by id), then everyone else by reputation
    /// descending, ties by id; at most n.
    std::vector<Agent> select(const std::string& domain, std::size_t n = 12) const;
    bool has_expert(const std::string& domain) const;
    std::vector<Agent> agents() const;
    std::optional<double> reputation(const std::string& id) const;
    void set_reputation(const std::string& id, double r);
    /// Applies update_reputation to every agent that scored in `verdict`.
    /// An agent agrees when (score >= 0.5) equals `plan_valid`.
    void learn(const Verdict& verdict, bool plan_valid);

    /// {"agents": {id: reputation}}
    nlohmann::json reputations_json() const;
    /// Sets reputations of known ids; unknown ids are rejected.
    void load_reputations(const nlohmann::json& j);

private:
    std::vector<Agent> agents_;
    mutable util::FairSharedMutex mutex_;
};

/// Runs every agent concurrently and aggregates. Failing backends are
/// recorded and skipped. Throws AllAgentsFailed when none scored.
Verdict validate(const Context& ctx, const std::vector<Agent>& agents, double threshold = kApprovalThreshold);

}  // namespace loop::validation
