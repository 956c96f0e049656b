#include "loop/pddl/parser.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "loop/pddl/sexpr.hpp"

namespace loop::pddl {

const std::vector<std::string>& supported_requirements() {
    static const std::vector<std::string> flags = {":strips", ":typing", ":negative-preconditions",
                                                   ":equality"};
    return flags;
}

namespace {

[[noreturn]] void fail(ErrorKind kind, const SExpr& at, const std::string& message) {
    throw PddlError(kind, at.loc, message);
}

const SExpr& expect_list(const SExpr& e, const char* what) {
    if (!e.is_list) fail(ErrorKind::syntax, e, std::string("expected ") + what + ", found '" + e.symbol + "'");
    return e;
}

const std::string& expect_name(const SExpr& e, const char* what) {
    if (e.is_list || e.symbol.empty()) fail(ErrorKind::syntax, e, std::string("expected ") + what);
    if (e.symbol.front() == '?' || e.symbol.front() == ':' || e.symbol == "-")
        fail(ErrorKind::syntax, e, std::string("expected ") + what + ", found '" + e.symbol + "'");
    return e.symbol;
}

// Unwraps "(define (<kind> NAME) ...)" and returns NAME.
std::string read_header(const SExpr& root, const char* kind) {
    expect_list(root, "'(define ...)'");
    if (root.items.empty() || !root.items[0].is_symbol("define"))
        fail(ErrorKind::syntax, root, "expected '(define ...)'");
    if (root.items.size() < 2) fail(ErrorKind::syntax, root, std::string("missing (") + kind + " NAME)");
    const SExpr& head = root.items[1];
    if (!head.is_list || head.items.size() != 2 || !head.items[0].is_symbol(kind))
        fail(ErrorKind::syntax, head, std::string("expected (") + kind + " NAME)");
    return expect_name(head.items[1], "a name");
}

struct TypedEntry {
    TypedName value;
    const SExpr* at;
};

// Parses "a b - t c - u d" starting at items[first].
std::vector<TypedEntry> read_typed_list(const SExpr& list, std::size_t first, bool variables) {
    std::vector<TypedEntry> out;
    std::vector<const SExpr*> pending;
    const auto& items = list.items;
    for (std::size_t i = first; i < items.size(); ++i) {
        const SExpr& item = items[i];
        if (item.is_symbol("-")) {
            if (pending.empty()) fail(ErrorKind::syntax, item, "'-' without preceding names");
            if (i + 1 >= items.size()) fail(ErrorKind::syntax, item, "missing type after '-'");
            const SExpr& type = items[++i];
            if (type.is_list) {
                if (type.head() == "either")
                    fail(ErrorKind::unsupported_construct, type, "'either' types are not supported");
                fail(ErrorKind::syntax, type, "expected a type name");
            }
            for (const SExpr* p : pending) out.push_back({{p->symbol, expect_name(type, "a type name")}, p});
            pending.clear();
            continue;
        }
        if (item.is_list) fail(ErrorKind::syntax, item, "unexpected list in typed list");
        if (variables && !is_variable(item.symbol))
            fail(ErrorKind::syntax, item, "expected a variable, found '" + item.symbol + "'");
        if (!variables) expect_name(item, "a name");
        pending.push_back(&item);
    }
    for (const SExpr* p : pending) out.push_back({{p->symbol, kRootType}, p});
    return out;
}

class DomainParser {
public:
    DomainModel parse(const SExpr& root) {
        model_.name = read_header(root, "domain");
        std::set<std::string> seen_sections;
        for (std::size_t i = 2; i < root.items.size(); ++i) {
            const SExpr& section = expect_list(root.items[i], "a domain section");
            std::string head = section.head();
            if (head != ":action" && !seen_sections.insert(head).second)
                fail(ErrorKind::duplicate_declaration, section, "section " + head + " appears twice");
            if (head == ":requirements") {
                read_requirements(section);
            } else if (head == ":types") {
                read_types(section);
            } else if (head == ":constants") {
                read_constants(section);
            } else if (head == ":predicates") {
                read_predicates(section);
            } else if (head == ":action") {
                read_action(section);
            } else if (head == ":functions" || head == ":durative-action" || head == ":derived" ||
                       head == ":axiom") {
                fail(ErrorKind::unsupported_construct, section, head + " is outside the STRIPS+typing subset");
            } else {
                fail(ErrorKind::syntax, section, "unknown domain section '" + head + "'");
            }
        }
        return std::move(model_);
    }

private:
    void read_requirements(const SExpr& section) {
        const auto& supported = supported_requirements();
        for (std::size_t i = 1; i < section.items.size(); ++i) {
            const SExpr& flag = section.items[i];
            if (flag.is_list || flag.symbol.empty() || flag.symbol.front() != ':')
                fail(ErrorKind::syntax, flag, "expected a requirement flag");
            if (std::find(supported.begin(), supported.end(), flag.symbol) == supported.end())
                fail(ErrorKind::unsupported_requirement, flag,
                     "requirement " + flag.symbol +
                         " is not supported (allowed: :strips :typing :negative-preconditions :equality)");
            if (!model_.has_requirement(flag.symbol)) model_.requirements.push_back(flag.symbol);
        }
    }

    void read_types(const SExpr& section) {
        auto entries = read_typed_list(section, 1, false);
        for (const auto& e : entries) {
            if (e.value.name == kRootType) continue;
            if (model_.has_type(e.value.name))
                fail(ErrorKind::duplicate_declaration, *e.at, "type '" + e.value.name + "' declared twice");
            model_.types.push_back({e.value.name, e.value.type});
        }
        // Parents that are referenced but never declared default to children of object.
        for (const auto& e : entries) {
            if (!model_.has_type(e.value.type)) model_.types.push_back({e.value.type, kRootType});
        }
        for (const auto& t : model_.types) {
            std::string current = t.parent;
            for (std::size_t guard = 0; current != kRootType; ++guard) {
                if (current == t.name || guard > model_.types.size())
                    fail(ErrorKind::syntax, section, "cyclic type hierarchy at '" + t.name + "'");
                auto it = std::find_if(model_.types.begin(), model_.types.end(),
                                       [&](const TypeDecl& d) { return d.name == current; });
                current = it->parent;
            }
        }
    }

    void check_type(const TypedEntry& e) {
        if (!model_.has_type(e.value.type))
            fail(ErrorKind::unknown_type, *e.at, "type '" + e.value.type + "' is not declared");
    }

    void read_constants(const SExpr& section) {
        for (const auto& e : read_typed_list(section, 1, false)) {
            check_type(e);
            for (const auto& c : model_.constants)
                if (c.name == e.value.name)
                    fail(ErrorKind::duplicate_declaration, *e.at, "constant '" + e.value.name + "' declared twice");
            model_.constants.push_back(e.value);
        }
    }

    void read_predicates(const SExpr& section) {
        for (std::size_t i = 1; i < section.items.size(); ++i) {
            const SExpr& decl = expect_list(section.items[i], "a predicate declaration");
            if (decl.items.empty()) fail(ErrorKind::syntax, decl, "empty predicate declaration");
            PredicateDecl pred;
            pred.name = expect_name(decl.items[0], "a predicate name");
            if (model_.find_predicate(pred.name))
                fail(ErrorKind::duplicate_declaration, decl, "predicate '" + pred.name + "' declared twice");
            std::set<std::string> names;
            for (const auto& e : read_typed_list(decl, 1, true)) {
                check_type(e);
                if (!names.insert(e.value.name).second)
                    fail(ErrorKind::duplicate_declaration, *e.at, "parameter '" + e.value.name + "' repeated");
                pred.params.push_back(e.value);
            }
            model_.predicates.push_back(std::move(pred));
        }
    }

    void read_action(const SExpr& section) {
        if (section.items.size() < 2) fail(ErrorKind::syntax, section, "missing action name");
        ActionSchema action;
        action.name = expect_name(section.items[1], "an action name");
        if (model_.find_action(action.name))
            fail(ErrorKind::duplicate_declaration, section.items[1], "action '" + action.name + "' declared twice");

        const SExpr* params = nullptr;
        const SExpr* pre = nullptr;
        const SExpr* eff = nullptr;
        for (std::size_t i = 2; i < section.items.size(); i += 2) {
            const SExpr& key = section.items[i];
            if (key.is_list) fail(ErrorKind::syntax, key, "expected :parameters, :precondition or :effect");
            if (i + 1 >= section.items.size()) fail(ErrorKind::syntax, key, "missing value for " + key.symbol);
            const SExpr* value = &section.items[i + 1];
            const SExpr** slot = nullptr;
            if (key.symbol == ":parameters") slot = &params;
            else if (key.symbol == ":precondition") slot = &pre;
            else if (key.symbol == ":effect") slot = &eff;
            else fail(ErrorKind::syntax, key, "unknown action key '" + key.symbol + "'");
            if (*slot) fail(ErrorKind::duplicate_declaration, key, key.symbol + " given twice");
            *slot = value;
        }

        if (params) {
            expect_list(*params, "a parameter list");
            for (const auto& e : read_typed_list(*params, 0, true)) {
                check_type(e);
                if (action.param_index(e.value.name) >= 0)
                    fail(ErrorKind::duplicate_declaration, *e.at, "parameter '" + e.value.name + "' repeated");
                action.params.push_back(e.value);
            }
        }
        if (pre) read_precondition(*pre, action);
        if (eff) read_effect(*eff, action);

        // STRIPS semantics: an atom both added and deleted ends up true.
        std::erase_if(action.del_effects, [&](const Atom& d) {
            return std::find(action.add_effects.begin(), action.add_effects.end(), d) != action.add_effects.end();
        });
        model_.actions.push_back(std::move(action));
    }

    Atom read_atom(const SExpr& e, const ActionSchema& action, bool allow_equality) {
        expect_list(e, "an atom");
        if (e.items.empty()) fail(ErrorKind::syntax, e, "empty atom");
        Atom atom;
        atom.predicate = e.items[0].is_symbol("=") ? std::string(kEqualityPredicate)
                                                   : expect_name(e.items[0], "a predicate name");
        std::size_t arity = 0;
        const PredicateDecl* decl = nullptr;
        if (atom.predicate == kEqualityPredicate) {
            if (!allow_equality) fail(ErrorKind::unsupported_construct, e, "equality is only allowed in preconditions");
            if (!model_.has_requirement(":equality"))
                fail(ErrorKind::unsupported_requirement, e, "'=' requires the :equality requirement");
            arity = 2;
        } else {
            decl = model_.find_predicate(atom.predicate);
            if (!decl) fail(ErrorKind::unknown_predicate, e, "predicate '" + atom.predicate + "' is not declared");
            arity = decl->params.size();
        }
        if (e.items.size() - 1 != arity)
            fail(ErrorKind::arity_mismatch, e,
                 "'" + atom.predicate + "' expects " + std::to_string(arity) + " argument(s), got " +
                     std::to_string(e.items.size() - 1));
        for (std::size_t i = 1; i < e.items.size(); ++i) {
            const SExpr& term = e.items[i];
            if (term.is_list) fail(ErrorKind::syntax, term, "nested terms are not supported");
            if (is_variable(term.symbol)) {
                if (action.param_index(term.symbol) < 0)
                    fail(ErrorKind::unbound_variable, term,
                         "variable " + term.symbol + " is not a parameter of '" + action.name + "'");
            } else {
                auto it = std::find_if(model_.constants.begin(), model_.constants.end(),
                                       [&](const TypedName& c) { return c.name == term.symbol; });
                if (it == model_.constants.end())
                    fail(ErrorKind::unknown_object, term, "constant '" + term.symbol + "' is not declared");
            }
            atom.args.push_back(term.symbol);
        }
        return atom;
    }

    void read_precondition(const SExpr& e, ActionSchema& action) {
        expect_list(e, "a precondition");
        std::string head = e.head();
        if (e.items.empty() || head == "and") {
            for (std::size_t i = 1; i < e.items.size(); ++i) read_precondition(e.items[i], action);
            return;
        }
        Literal lit;
        if (head == "not") {
            if (e.items.size() != 2) fail(ErrorKind::syntax, e, "'not' takes exactly one argument");
            lit.positive = false;
            lit.atom = read_atom(e.items[1], action, true);
            if (!lit.is_equality() && !model_.has_requirement(":negative-preconditions"))
                fail(ErrorKind::unsupported_requirement, e,
                     "negative precondition requires the :negative-preconditions requirement");
        } else if (head == "or" || head == "imply" || head == "forall" || head == "exists" || head == "when") {
            fail(ErrorKind::unsupported_construct, e, "'" + head + "' is outside the STRIPS+typing subset");
        } else {
            lit.atom = read_atom(e, action, true);
        }
        if (std::find(action.preconditions.begin(), action.preconditions.end(), lit) == action.preconditions.end())
            action.preconditions.push_back(std::move(lit));
    }

    void read_effect(const SExpr& e, ActionSchema& action) {
        expect_list(e, "an effect");
        std::string head = e.head();
        if (e.items.empty() || head == "and") {
            for (std::size_t i = 1; i < e.items.size(); ++i) read_effect(e.items[i], action);
            return;
        }
        if (head == "not") {
            if (e.items.size() != 2) fail(ErrorKind::syntax, e, "'not' takes exactly one argument");
            Atom atom = read_atom(e.items[1], action, false);
            if (std::find(action.del_effects.begin(), action.del_effects.end(), atom) == action.del_effects.end())
                action.del_effects.push_back(std::move(atom));
            return;
        }
        if (head == "when" || head == "forall" || head == "increase" || head == "decrease" || head == "assign")
            fail(ErrorKind::unsupported_construct, e, "'" + head + "' effects are outside the STRIPS+typing subset");
        Atom atom = read_atom(e, action, false);
        if (std::find(action.add_effects.begin(), action.add_effects.end(), atom) == action.add_effects.end())
            action.add_effects.push_back(std::move(atom));
    }

    DomainModel model_;
};

class ProblemParser {
public:
    ProblemParser(const DomainModel& domain, const ParseOptions& options, std::vector<Diagnostic>* warnings)
        : domain_(domain), options_(options), warnings_(warnings) {}

    ProblemModel parse(const SExpr& root) {
        model_.name = read_header(root, "problem");
        for (const auto& c : domain_.constants) object_types_[c.name] = c.type;
        bool have_domain = false;
        bool have_goal = false;
        std::set<std::string> seen_sections;
        for (std::size_t i = 2; i < root.items.size(); ++i) {
            const SExpr& section = expect_list(root.items[i], "a problem section");
            std::string head = section.head();
            if (!seen_sections.insert(head).second)
                fail(ErrorKind::duplicate_declaration, section, "section " + head + " appears twice");
            if (head == ":domain") {
                have_domain = true;
                if (section.items.size() != 2) fail(ErrorKind::syntax, section, "expected (:domain NAME)");
                model_.domain_name = expect_name(section.items[1], "a domain name");
                if (model_.domain_name != domain_.name) {
                    std::string msg = "problem targets domain '" + model_.domain_name + "' but the domain is '" +
                                      domain_.name + "'";
                    if (options_.domain_mismatch_is_error) fail(ErrorKind::domain_mismatch, section.items[1], msg);
                    if (warnings_) warnings_->push_back({ErrorKind::domain_mismatch, section.items[1].loc, msg});
                }
            } else if (head == ":requirements") {
                for (std::size_t k = 1; k < section.items.size(); ++k) {
                    const auto& flags = supported_requirements();
                    if (std::find(flags.begin(), flags.end(), section.items[k].symbol) == flags.end())
                        fail(ErrorKind::unsupported_requirement, section.items[k],
                             "requirement " + section.items[k].symbol + " is not supported");
                }
            } else if (head == ":objects") {
                read_objects(section);
            } else if (head == ":init") {
                for (std::size_t k = 1; k < section.items.size(); ++k) {
                    const SExpr& fact = section.items[k];
                    if (fact.head() == "not" || fact.head() == "=")
                        fail(ErrorKind::unsupported_construct, fact, "initial state must list positive atoms only");
                    Atom atom = read_ground_atom(fact);
                    if (std::find(model_.init.begin(), model_.init.end(), atom) == model_.init.end())
                        model_.init.push_back(std::move(atom));
                }
            } else if (head == ":goal") {
                have_goal = true;
                if (section.items.size() != 2) fail(ErrorKind::syntax, section, "expected (:goal FORMULA)");
                read_goal(section.items[1]);
            } else if (head == ":metric" || head == ":constraints") {
                fail(ErrorKind::unsupported_construct, section, head + " is outside the STRIPS+typing subset");
            } else {
                fail(ErrorKind::syntax, section, "unknown problem section '" + head + "'");
            }
        }
        if (!have_domain) fail(ErrorKind::syntax, root, "missing (:domain NAME)");
        if (!have_goal) fail(ErrorKind::syntax, root, "missing (:goal ...)");
        return std::move(model_);
    }

private:
    void read_objects(const SExpr& section) {
        for (const auto& e : read_typed_list(section, 1, false)) {
            if (!domain_.has_type(e.value.type))
                fail(ErrorKind::unknown_type, *e.at, "type '" + e.value.type + "' is not declared in the domain");
            if (object_types_.count(e.value.name))
                fail(ErrorKind::duplicate_declaration, *e.at, "object '" + e.value.name + "' declared twice");
            object_types_[e.value.name] = e.value.type;
            model_.objects.push_back(e.value);
        }
    }

    Atom read_ground_atom(const SExpr& e) {
        expect_list(e, "an atom");
        if (e.items.empty()) fail(ErrorKind::syntax, e, "empty atom");
        Atom atom;
        atom.predicate = expect_name(e.items[0], "a predicate name");
        const PredicateDecl* decl = domain_.find_predicate(atom.predicate);
        if (!decl) fail(ErrorKind::unknown_predicate, e, "predicate '" + atom.predicate + "' is not declared");
        if (e.items.size() - 1 != decl->params.size())
            fail(ErrorKind::arity_mismatch, e,
                 "'" + atom.predicate + "' expects " + std::to_string(decl->params.size()) + " argument(s), got " +
                     std::to_string(e.items.size() - 1));
        for (std::size_t i = 1; i < e.items.size(); ++i) {
            const SExpr& term = e.items[i];
            if (term.is_list) fail(ErrorKind::syntax, term, "nested terms are not supported");
            if (is_variable(term.symbol)) fail(ErrorKind::syntax, term, "variables are not allowed in a problem");
            auto it = object_types_.find(term.symbol);
            if (it == object_types_.end())
                fail(ErrorKind::unknown_object, term, "object '" + term.symbol + "' is not declared");
            const std::string& expected = decl->params[i - 1].type;
            if (!domain_.is_subtype(it->second, expected))
                fail(ErrorKind::type_mismatch, term,
                     "object '" + term.symbol + "' has type '" + it->second + "' but '" + atom.predicate +
                         "' expects '" + expected + "' at position " + std::to_string(i));
            atom.args.push_back(term.symbol);
        }
        return atom;
    }

    void read_goal(const SExpr& e) {
        expect_list(e, "a goal formula");
        std::string head = e.head();
        if (e.items.empty() || head == "and") {
            for (std::size_t i = 1; i < e.items.size(); ++i) read_goal(e.items[i]);
            return;
        }
        Literal lit;
        if (head == "not") {
            if (e.items.size() != 2) fail(ErrorKind::syntax, e, "'not' takes exactly one argument");
            if (!domain_.has_requirement(":negative-preconditions"))
                fail(ErrorKind::unsupported_requirement, e, "negative goals require :negative-preconditions");
            lit.positive = false;
            lit.atom = read_ground_atom(e.items[1]);
        } else if (head == "or" || head == "imply" || head == "forall" || head == "exists") {
            fail(ErrorKind::unsupported_construct, e, "'" + head + "' goals are outside the STRIPS+typing subset");
        } else {
            lit.atom = read_ground_atom(e);
        }
        if (std::find(model_.goal.begin(), model_.goal.end(), lit) == model_.goal.end())
            model_.goal.push_back(std::move(lit));
    }

    const DomainModel& domain_;
    const ParseOptions& options_;
    std::vector<Diagnostic>* warnings_;
    std::map<std::string, std::string> object_types_;
    ProblemModel model_;
};

}  // namespace

DomainModel parse_domain(std::string_view text) {
    auto forms = read_sexprs(text);
    if (forms.empty()) throw PddlError(ErrorKind::syntax, {1, 1}, "empty input");
    if (forms.size() > 1) fail(ErrorKind::syntax, forms[1], "unexpected content after '(define ...)'");
    return DomainParser().parse(forms.front());
}

ProblemModel parse_problem(std::string_view text, const DomainModel& domain, const ParseOptions& options,
                           std::vector<Diagnostic>* warnings) {
    auto forms = read_sexprs(text);
    if (forms.empty()) throw PddlError(ErrorKind::syntax, {1, 1}, "empty input");
    if (forms.size() > 1) fail(ErrorKind::syntax, forms[1], "unexpected content after '(define ...)'");
    return ProblemParser(domain, options, warnings).parse(forms.front());
}

}  // namespace loop::pddl
