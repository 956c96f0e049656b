#include "loop/pddl/serializer.hpp"

#include <sstream>

namespace loop::pddl {

namespace {

void write_typed(std::ostream& out, const std::vector<TypedName>& names) {
    // Consecutive names sharing a type are grouped: "a b - t".
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out << ' ';
        out << names[i].name;
        bool last_of_group = i + 1 == names.size() || names[i + 1].type != names[i].type;
        if (last_of_group) out << " - " << names[i].type;
    }
}

void write_conjunction(std::ostream& out, const std::vector<std::string>& parts) {
    if (parts.empty()) {
        out << "(and)";
        return;
    }
    out << "(and";
    for (const auto& p : parts) out << ' ' << p;
    out << ')';
}

}  // namespace

std::string serialize_domain(const DomainModel& domain) {
    std::ostringstream out;
    out << "(define (domain " << domain.name << ")\n";
    if (!domain.requirements.empty()) {
        out << "  (:requirements";
        for (const auto& r : domain.requirements) out << ' ' << r;
        out << ")\n";
    }
    if (!domain.types.empty()) {
        std::vector<TypedName> types;
        for (const auto& t : domain.types) types.push_back({t.name, t.parent});
        out << "  (:types ";
        write_typed(out, types);
        out << ")\n";
    }
    if (!domain.constants.empty()) {
        out << "  (:constants ";
        write_typed(out, domain.constants);
        out << ")\n";
    }
    out << "  (:predicates";
    for (const auto& p : domain.predicates) {
        out << "\n    (" << p.name;
        if (!p.params.empty()) {
            out << ' ';
            write_typed(out, p.params);
        }
        out << ')';
    }
    out << ")\n";
    for (const auto& a : domain.actions) {
        out << "  (:action " << a.name << "\n    :parameters (";
        write_typed(out, a.params);
        out << ")\n    :precondition ";
        std::vector<std::string> pre;
        for (const auto& l : a.preconditions) pre.push_back(to_string(l));
        write_conjunction(out, pre);
        out << "\n    :effect ";
        std::vector<std::string> eff;
        for (const auto& e : a.add_effects) eff.push_back(to_string(e));
        for (const auto& e : a.del_effects) eff.push_back("(not " + to_string(e) + ")");
        write_conjunction(out, eff);
        out << ")\n";
    }
    out << ")\n";
    return out.str();
}

std::string serialize_problem(const ProblemModel& problem) {
    std::ostringstream out;
    out << "(define (problem " << problem.name << ")\n";
    out << "  (:domain " << problem.domain_name << ")\n";
    out << "  (:objects";
    if (!problem.objects.empty()) {
        out << ' ';
        write_typed(out, problem.objects);
    }
    out << ")\n  (:init";
    for (const auto& a : problem.init) out << "\n    " << to_string(a);
    out << ")\n  (:goal ";
    std::vector<std::string> goal;
    for (const auto& l : problem.goal) goal.push_back(to_string(l));
    write_conjunction(out, goal);
    out << "))\n";
    return out.str();
}

}  // namespace loop::pddl
