#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loop/pddl/model.hpp"
#include "loop/state/state.hpp"

namespace loop::pddl {

struct GroundingOptions {
    std::size_t max_actions = 1'000'000;
};

struct GroundAction {
    std::string schema;
    std::vector<std::string> args;
    std::vector<AtomId> pre_pos;
    std::vector<AtomId> pre_neg;
    std::vector<AtomId> add;
    std::vector<AtomId> del;

    /// "(schema a b)"
    std::string name() const;
};

/// Conjunctive goal over the atom universe.
struct Goal {
    std::vector<AtomId> positive;
    std::vector<AtomId> negative;

    bool satisfied_by(const State& s) const;
    bool empty() const { return positive.empty() && negative.empty(); }
};

/// Propositional form of a domain/problem pair. Immutable once built.
struct GroundTask {
    DomainModel domain;
    ProblemModel problem;
    /// Atom universe in canonical (lexicographic) order; AtomId indexes it.
    std::vector<Atom> atoms;
    /// Sorted by schema name, then argument tuple.
    std::vector<GroundAction> actions;
    State init;
    Goal goal;

    std::optional<AtomId> find_atom(const Atom& atom) const;
    std::optional<std::size_t> find_action(const std::string& schema, const std::vector<std::string>& args) const;
    std::string atom_name(AtomId id) const;
    std::string literal_name(GroundLiteral lit) const;

    /// Converts a set of atoms back into PDDL atoms.
    std::vector<Atom> to_atoms(const State& s) const;
    /// Goal expressed as PDDL literals.
    std::vector<Literal> to_literals(const Goal& g) const;
    Goal make_goal(const std::vector<Literal>& literals) const;

private:
    friend GroundTask ground(const DomainModel&, const ProblemModel&, const GroundingOptions&);
    std::map<Atom, AtomId> atom_index_;
    std::map<std::string, std::size_t> action_index_;
};

/// Instantiates every schema with every type-consistent binding. Equality
/// preconditions are decided statically and drop bindings that violate them.
/// Throws PddlError(grounding_limit) past options.max_actions.
GroundTask ground(const DomainModel& domain, const ProblemModel& problem, const GroundingOptions& options = {});

/// All objects (domain constants and problem objects) sorted by name.
std::vector<TypedName> all_objects(const DomainModel& domain, const ProblemModel& problem);

}  // namespace loop::pddl
