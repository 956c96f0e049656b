#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loop/causal/relation.hpp"
#include "loop/pddl/grounding.hpp"
#include "loop/state/execution.hpp"
#include "loop/util/fair_shared_mutex.hpp"

namespace loop::causal {

inline constexpr int kWildcardRole = -1;

/// A predicate whose arguments are lifted to action parameter positions
/// (kWildcardRole for constants the action does not bind).
struct StatePattern {
    std::string predicate;
    std::vector<int> roles;
    auto operator<=>(const StatePattern&) const = default;
};

struct TripleKey {
    std::string action;  // schema name
    Relation relation = Relation::PRODUCES;
    StatePattern pattern;
    auto operator<=>(const TripleKey&) const = default;
};

struct CausalTriple {
    TripleKey key;
    std::size_t support = 0;
    std::size_t contradictions = 0;
    /// support / (support + contradictions); 0 when never observed.
    double confidence() const;
};

struct TripleUpdate {
    TripleKey key;
    bool contradiction = false;
};

/// post \ pre
std::vector<AtomId> delta_plus(const State& pre, const State& post);
/// pre \ post
std::vector<AtomId> delta_minus(const State& pre, const State& post);

/// Lifts a ground atom against the action that touched it. A lifted atom of
/// the schema that reproduces `ground` under the binding wins (effects for
/// PRODUCES/PREVENTS, preconditions for REQUIRES); otherwise each constant
/// maps to the first parameter bound to it, or to the wildcard.
StatePattern lift(const pddl::ActionSchema& schema, const std::vector<std::string>& args, const pddl::Atom& ground,
                  Relation relation);

/// "at(?r,?to)" with schema parameter names, "at(?1,?2)" without.
std::string render(const StatePattern& p, const pddl::ActionSchema* schema = nullptr);
/// "(move, PRODUCES, at(?r,?to))"
std::string render(const TripleKey& k, const pddl::DomainModel* domain = nullptr);

/// Frequency-weighted store of lifted triples. Updates are serialized;
/// queries may run concurrently.
class CausalMemory {
public:
    CausalMemory() = default;
    CausalMemory(const CausalMemory& other);
    CausalMemory& operator=(const CausalMemory& other);

    /// Checks the trace, then: for a successful trace every step supports
    /// PRODUCES (Δ⁺), REQUIRES (positive preconditions) and PREVENTS (Δ⁻).
    /// A precondition failure contradicts the failing action's expected
    /// PRODUCES/PREVENTS triples that are already stored. Traces that end
    /// with the goal unmet change nothing. Throws InconsistentTrace.
    std::vector<TripleUpdate> learn_from_trace(const pddl::GroundTask& task, const ExecutionTrace& trace);

    /// Direct observation, used for relations not learned from traces. A
    /// contradiction of an unknown triple is ignored; returns whether the
    /// store changed.
    bool record(const TripleKey& key, bool supports);

    std::optional<CausalTriple> find(const TripleKey& key) const;

    /// Triples whose action or predicate equals `subject` (empty matches
    /// all), by confidence then support, descending.
    std::vector<CausalTriple> query(const std::string& subject, std::optional<Relation> relation = std::nullopt,
                                    double min_confidence = 0.0) const;

    /// True when some triple for `schema` has confidence >= threshold.
    bool covers(const std::string& schema, double threshold = 0.5) const;

    std::vector<CausalTriple> triples() const;
    std::size_t size() const;

    nlohmann::json export_json() const;
    static CausalMemory import_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static CausalMemory load(const std::filesystem::path& path);

private:
    void apply_locked(const TripleUpdate& u);

    std::map<TripleKey, CausalTriple> store_;
    mutable util::FairSharedMutex mutex_;
};

}  // namespace loop::causal
