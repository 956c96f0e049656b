#include "loop/pddl/model.hpp"

#include <algorithm>
#include <sstream>

namespace loop::pddl {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::syntax: return "syntax error";
        case ErrorKind::unsupported_requirement: return "unsupported requirement";
        case ErrorKind::unsupported_construct: return "unsupported construct";
        case ErrorKind::duplicate_declaration: return "duplicate declaration";
        case ErrorKind::unbound_variable: return "unbound variable";
        case ErrorKind::unknown_predicate: return "unknown predicate";
        case ErrorKind::unknown_type: return "unknown type";
        case ErrorKind::unknown_object: return "unknown object";
        case ErrorKind::arity_mismatch: return "arity mismatch";
        case ErrorKind::type_mismatch: return "type mismatch";
        case ErrorKind::domain_mismatch: return "domain mismatch";
        case ErrorKind::grounding_limit: return "grounding limit exceeded";
    }
    return "error";
}

namespace {
std::string format_error(ErrorKind kind, Location loc, const std::string& message) {
    std::ostringstream out;
    if (loc.line > 0) out << loc.line << ':' << loc.column << ": ";
    out << to_string(kind) << ": " << message;
    return out.str();
}
}  // namespace

PddlError::PddlError(ErrorKind kind, Location loc, const std::string& message)
    : std::runtime_error(format_error(kind, loc, message)), kind_(kind), loc_(loc), message_(message) {}

int ActionSchema::param_index(const std::string& var) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name == var) return static_cast<int>(i);
    }
    return -1;
}

bool DomainModel::has_type(const std::string& type) const {
    if (type == kRootType) return true;
    return std::any_of(types.begin(), types.end(), [&](const TypeDecl& t) { return t.name == type; });
}

bool DomainModel::is_subtype(const std::string& type, const std::string& ancestor) const {
    if (ancestor == kRootType || type == ancestor) return true;
    std::string current = type;
    // Bounded walk; the parser rejects cycles but a hand-built model may not.
    for (std::size_t guard = 0; guard <= types.size(); ++guard) {
        auto it = std::find_if(types.begin(), types.end(),
                               [&](const TypeDecl& t) { return t.name == current; });
        if (it == types.end()) return false;
        current = it->parent;
        if (current == ancestor) return true;
        if (current == kRootType) return false;
    }
    return false;
}

const PredicateDecl* DomainModel::find_predicate(const std::string& pred) const {
    auto it = std::find_if(predicates.begin(), predicates.end(),
                           [&](const PredicateDecl& p) { return p.name == pred; });
    return it == predicates.end() ? nullptr : &*it;
}

const ActionSchema* DomainModel::find_action(const std::string& action) const {
    auto it = std::find_if(actions.begin(), actions.end(),
                           [&](const ActionSchema& a) { return a.name == action; });
    return it == actions.end() ? nullptr : &*it;
}

bool DomainModel::has_requirement(const std::string& flag) const {
    return std::find(requirements.begin(), requirements.end(), flag) != requirements.end();
}

std::string to_string(const Atom& atom) {
    std::string out = "(" + atom.predicate;
    for (const auto& a : atom.args) out += " " + a;
    return out + ")";
}

std::string to_string(const Literal& literal) {
    return literal.positive ? to_string(literal.atom) : "(not " + to_string(literal.atom) + ")";
}

}  // namespace loop::pddl
