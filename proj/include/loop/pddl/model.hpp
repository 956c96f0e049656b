#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <vector>

namespace loop::pddl {

/// 1-based source position. Zero means "no location".
struct Location {
    int line = 0;
    int column = 0;
};

enum class ErrorKind {
    syntax,
    unsupported_requirement,
    unsupported_construct,
    duplicate_declaration,
    unbound_variable,
    unknown_predicate,
    unknown_type,
    unknown_object,
    arity_mismatch,
    type_mismatch,
    domain_mismatch,
    grounding_limit,
};

const char* to_string(ErrorKind kind);

class PddlError : public std::runtime_error {
public:
    PddlError(ErrorKind kind, Location loc, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    Location location() const noexcept { return loc_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    Location loc_;
    std::string message_;
};

/// A diagnostic that did not abort parsing (e.g. a domain-name mismatch).
struct Diagnostic {
    ErrorKind kind;
    Location loc;
    std::string message;
};

inline constexpr const char* kRootType = "object";
inline constexpr const char* kEqualityPredicate = "=";

inline bool is_variable(const std::string& term) { return !term.empty() && term.front() == '?'; }

/// Predicate applied to terms. Terms starting with '?' are variables.
struct Atom {
    std::string predicate;
    std::vector<std::string> args;

    auto operator<=>(const Atom&) const = default;
    bool operator==(const Atom&) const = default;
};

struct Literal {
    Atom atom;
    bool positive = true;

    bool is_equality() const { return atom.predicate == kEqualityPredicate; }

    auto operator<=>(const Literal&) const = default;
    bool operator==(const Literal&) const = default;
};

struct TypedName {
    std::string name;
    std::string type = kRootType;

    bool operator==(const TypedName&) const = default;
};

struct TypeDecl {
    std::string name;
    std::string parent = kRootType;

    bool operator==(const TypeDecl&) const = default;
};

struct PredicateDecl {
    std::string name;
    std::vector<TypedName> params;

    bool operator==(const PredicateDecl&) const = default;
};

struct ActionSchema {
    std::string name;
    std::vector<TypedName> params;
    std::vector<Literal> preconditions;
    std::vector<Atom> add_effects;
    std::vector<Atom> del_effects;

    /// Index of the parameter named `var`, or -1.
    int param_index(const std::string& var) const;

    bool operator==(const ActionSchema&) const = default;
};

struct DomainModel {
    std::string name;
    std::vector<std::string> requirements;
    std::vector<TypeDecl> types;
    std::vector<TypedName> constants;
    std::vector<PredicateDecl> predicates;
    std::vector<ActionSchema> actions;

    bool has_type(const std::string& type) const;
    /// True when `type` equals `ancestor` or inherits from it.
    bool is_subtype(const std::string& type, const std::string& ancestor) const;
    const PredicateDecl* find_predicate(const std::string& name) const;
    const ActionSchema* find_action(const std::string& name) const;
    bool has_requirement(const std::string& flag) const;

    bool operator==(const DomainModel&) const = default;
};

struct ProblemModel {
    std::string name;
    std::string domain_name;
    std::vector<TypedName> objects;
    std::vector<Atom> init;
    std::vector<Literal> goal;

    bool operator==(const ProblemModel&) const = default;
};

std::string to_string(const Atom& atom);
std::string to_string(const Literal& literal);

}  // namespace loop::pddl
