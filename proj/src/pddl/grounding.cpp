#include "loop/pddl/grounding.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace loop::pddl {

std::string GroundAction::name() const {
    std::string out = "(" + schema;
    for (const auto& a : args) out += " " + a;
    return out + ")";
}

bool Goal::satisfied_by(const State& s) const {
    for (AtomId a : positive)
        if (!s.contains(a)) return false;
    for (AtomId a : negative)
        if (s.contains(a)) return false;
    return true;
}

std::optional<AtomId> GroundTask::find_atom(const Atom& atom) const {
    auto it = atom_index_.find(atom);
    if (it == atom_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> GroundTask::find_action(const std::string& schema,
                                                   const std::vector<std::string>& args) const {
    GroundAction probe{schema, args, {}, {}, {}, {}};
    auto it = action_index_.find(probe.name());
    if (it == action_index_.end()) return std::nullopt;
    return it->second;
}

std::string GroundTask::atom_name(AtomId id) const { return to_string(atoms.at(id)); }

std::string GroundTask::literal_name(GroundLiteral lit) const {
    return lit.positive ? atom_name(lit.atom) : "(not " + atom_name(lit.atom) + ")";
}

std::vector<Atom> GroundTask::to_atoms(const State& s) const {
    std::vector<Atom> out;
    out.reserve(s.size());
    for (AtomId a : s.atoms()) out.push_back(atoms.at(a));
    return out;
}

std::vector<Literal> GroundTask::to_literals(const Goal& g) const {
    std::vector<Literal> out;
    for (AtomId a : g.positive) out.push_back({atoms.at(a), true});
    for (AtomId a : g.negative) out.push_back({atoms.at(a), false});
    return out;
}

Goal GroundTask::make_goal(const std::vector<Literal>& literals) const {
    Goal g;
    for (const auto& lit : literals) {
        auto id = find_atom(lit.atom);
        if (!id) throw std::invalid_argument("goal atom " + to_string(lit.atom) + " is not in the atom universe");
        (lit.positive ? g.positive : g.negative).push_back(*id);
    }
    for (auto* v : {&g.positive, &g.negative}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    return g;
}

std::vector<TypedName> all_objects(const DomainModel& domain, const ProblemModel& problem) {
    std::vector<TypedName> objects = domain.constants;
    objects.insert(objects.end(), problem.objects.begin(), problem.objects.end());
    std::sort(objects.begin(), objects.end(), [](const TypedName& a, const TypedName& b) { return a.name < b.name; });
    return objects;
}

namespace {

std::vector<std::string> objects_of_type(const DomainModel& domain, const std::vector<TypedName>& objects,
                                         const std::string& type) {
    std::vector<std::string> out;
    for (const auto& o : objects)
        if (domain.is_subtype(o.type, type)) out.push_back(o.name);
    return out;
}

Atom substitute(const Atom& atom, const ActionSchema& schema, const std::vector<std::string>& binding) {
    Atom out{atom.predicate, {}};
    out.args.reserve(atom.args.size());
    for (const auto& term : atom.args) {
        if (is_variable(term)) out.args.push_back(binding[static_cast<std::size_t>(schema.param_index(term))]);
        else out.args.push_back(term);
    }
    return out;
}

struct PendingAction {
    std::string schema;
    std::vector<std::string> args;
    std::vector<Atom> pre_pos, pre_neg, add, del;
};

// Odometer over per-parameter candidate lists. With candidates sorted by name
// the tuples come out in lexicographic order.
template <typename Visit>
void for_each_binding(const std::vector<std::vector<std::string>>& candidates, Visit&& visit) {
    for (const auto& c : candidates)
        if (c.empty()) return;
    std::vector<std::size_t> idx(candidates.size(), 0);
    std::vector<std::string> binding(candidates.size());
    for (;;) {
        for (std::size_t i = 0; i < idx.size(); ++i) binding[i] = candidates[i][idx[i]];
        visit(binding);
        std::size_t pos = idx.size();
        while (pos > 0) {
            --pos;
            if (++idx[pos] < candidates[pos].size()) break;
            idx[pos] = 0;
            if (pos == 0) return;
        }
        if (idx.empty()) return;
    }
}

}  // namespace

GroundTask ground(const DomainModel& domain, const ProblemModel& problem, const GroundingOptions& options) {
    GroundTask task;
    task.domain = domain;
    task.problem = problem;

    const auto objects = all_objects(domain, problem);

    std::vector<const ActionSchema*> schemas;
    for (const auto& a : domain.actions) schemas.push_back(&a);
    std::sort(schemas.begin(), schemas.end(),
              [](const ActionSchema* a, const ActionSchema* b) { return a->name < b->name; });

    std::vector<PendingAction> pending;
    for (const ActionSchema* schema : schemas) {
        std::vector<std::vector<std::string>> candidates;
        for (const auto& p : schema->params) candidates.push_back(objects_of_type(domain, objects, p.type));
        for_each_binding(candidates, [&](const std::vector<std::string>& binding) {
            PendingAction act{schema->name, binding, {}, {}, {}, {}};
            for (const auto& lit : schema->preconditions) {
                Atom atom = substitute(lit.atom, *schema, binding);
                if (lit.is_equality()) {
                    bool same = atom.args[0] == atom.args[1];
                    if (same != lit.positive) return;
                    continue;
                }
                (lit.positive ? act.pre_pos : act.pre_neg).push_back(std::move(atom));
            }
            for (const auto& e : schema->add_effects) act.add.push_back(substitute(e, *schema, binding));
            for (const auto& e : schema->del_effects) act.del.push_back(substitute(e, *schema, binding));
            if (pending.size() >= options.max_actions)
                throw PddlError(ErrorKind::grounding_limit, {},
                                "more than " + std::to_string(options.max_actions) + " ground actions");
            pending.push_back(std::move(act));
        });
    }

    // Atom universe: predicates over type-consistent objects, plus anything
    // the actions, init or goal mention.
    std::set<Atom> universe;
    for (const auto& pred : domain.predicates) {
        std::vector<std::vector<std::string>> candidates;
        for (const auto& p : pred.params) candidates.push_back(objects_of_type(domain, objects, p.type));
        if (candidates.empty()) {
            universe.insert(Atom{pred.name, {}});
            continue;
        }
        for_each_binding(candidates, [&](const std::vector<std::string>& args) { universe.insert(Atom{pred.name, args}); });
    }
    for (const auto& a : problem.init) universe.insert(a);
    for (const auto& l : problem.goal) universe.insert(l.atom);
    for (const auto& act : pending)
        for (const auto* list : {&act.pre_pos, &act.pre_neg, &act.add, &act.del})
            universe.insert(list->begin(), list->end());

    task.atoms.assign(universe.begin(), universe.end());
    for (std::size_t i = 0; i < task.atoms.size(); ++i) task.atom_index_.emplace(task.atoms[i], static_cast<AtomId>(i));

    auto ids = [&](const std::vector<Atom>& atoms) {
        std::vector<AtomId> out;
        out.reserve(atoms.size());
        for (const auto& a : atoms) out.push_back(task.atom_index_.at(a));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };

    task.actions.reserve(pending.size());
    for (auto& act : pending) {
        GroundAction g;
        g.schema = std::move(act.schema);
        g.args = std::move(act.args);
        g.pre_pos = ids(act.pre_pos);
        g.pre_neg = ids(act.pre_neg);
        g.add = ids(act.add);
        g.del = ids(act.del);
        std::erase_if(g.del, [&](AtomId d) { return std::binary_search(g.add.begin(), g.add.end(), d); });
        task.actions.push_back(std::move(g));
    }
    // Canonical order: schema name, then argument tuple.
    std::stable_sort(task.actions.begin(), task.actions.end(), [](const GroundAction& a, const GroundAction& b) {
        return std::tie(a.schema, a.args) < std::tie(b.schema, b.args);
    });
    task.actions.erase(std::unique(task.actions.begin(), task.actions.end(),
                                   [](const GroundAction& a, const GroundAction& b) {
                                       return a.schema == b.schema && a.args == b.args;
                                   }),
                       task.actions.end());
    for (std::size_t i = 0; i < task.actions.size(); ++i) task.action_index_.emplace(task.actions[i].name(), i);

    task.init = State(ids(problem.init));
    task.goal = task.make_goal(problem.goal);
    return task;
}

}  // namespace loop::pddl
