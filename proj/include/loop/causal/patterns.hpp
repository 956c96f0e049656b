#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "loop/pddl/grounding.hpp"
#include "loop/state/execution.hpp"

namespace loop::causal {

enum class AbstractAction { acquire, transport, release, apply, toggle };

const char* to_string(AbstractAction a);
AbstractAction parse_abstract_action(const std::string& text);

/// Domain name -> schema name -> abstract role. A schema entry ending in '*'
/// matches by prefix. The "*" domain is consulted when a domain has no entry.
class ActionRoleTable {
public:
    static ActionRoleTable defaults();

    void set(const std::string& domain, const std::string& schema, AbstractAction role);
    std::optional<AbstractAction> role(const std::string& domain, const std::string& schema) const;
    /// Schemas of `target` (in declaration order) tagged with `role`.
    std::vector<std::string> schemas_for(const pddl::DomainModel& target, AbstractAction role) const;

    nlohmann::json to_json() const;
    static ActionRoleTable from_json(const nlohmann::json& j);

private:
    std::optional<AbstractAction> lookup(const std::map<std::string, AbstractAction>& entries,
                                         const std::string& schema) const;
    std::map<std::string, std::map<std::string, AbstractAction>> table_;
};

class EmptyPattern : public std::invalid_argument {
public:
    EmptyPattern() : std::invalid_argument("plan yields no abstract actions") {}
};

struct AbstractPattern {
    std::vector<AbstractAction> steps;
    std::string source_domain;
    /// Set when some plan actions had no role and were left out.
    bool omitted_unmappable = false;
    std::vector<std::string> omitted;
};

/// Maps each plan step to its role and collapses consecutive repeats.
/// Throws EmptyPattern when nothing maps.
AbstractPattern abstract_pattern(const std::vector<std::string>& schemas, const std::string& domain,
                                 const ActionRoleTable& table);
AbstractPattern abstract_pattern(const pddl::GroundTask& task, const Plan& plan, const ActionRoleTable& table);

struct TransferResult {
    /// One candidate schema list per pattern step; empty when unmapped.
    std::vector<std::vector<std::string>> skeleton;
    std::optional<AbstractAction> uncovered;
    bool mapped() const { return !uncovered.has_value(); }
};

TransferResult transfer(const AbstractPattern& pattern, const pddl::DomainModel& target, const ActionRoleTable& table);

}  // namespace loop::causal
