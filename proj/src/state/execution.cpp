#include "loop/state/execution.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "loop/pddl/sexpr.hpp"

namespace loop {

using nlohmann::json;

const char* to_string(PlanSource source) {
    switch (source) {
        case PlanSource::builtin: return "builtin";
        case PlanSource::external: return "external";
        case PlanSource::generated: return "generated";
    }
    return "builtin";
}

const char* to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::goal_satisfied: return "goal-satisfied";
        case Outcome::precondition_violated: return "precondition-violated";
        case Outcome::goal_unmet: return "goal-unmet";
    }
    return "goal-satisfied";
}

std::optional<GroundLiteral> first_violation(const State& s, const GroundAction& a) {
    std::optional<GroundLiteral> best;
    auto consider = [&](AtomId atom, bool positive) {
        if (!best || atom < best->atom) best = GroundLiteral{atom, positive};
    };
    for (AtomId p : a.pre_pos)
        if (!s.contains(p)) {
            consider(p, true);
            break;  // pre_pos is sorted; later misses have larger ids
        }
    for (AtomId n : a.pre_neg)
        if (s.contains(n)) {
            consider(n, false);
            break;
        }
    return best;
}

bool applicable(const State& s, const GroundAction& a) {
    for (AtomId p : a.pre_pos)
        if (!s.contains(p)) return false;
    for (AtomId n : a.pre_neg)
        if (s.contains(n)) return false;
    return true;
}

State apply_unchecked(const State& s, const GroundAction& a) {
    std::vector<AtomId> kept;
    kept.reserve(s.size() + a.add.size());
    std::set_difference(s.atoms().begin(), s.atoms().end(), a.del.begin(), a.del.end(), std::back_inserter(kept));
    std::vector<AtomId> out;
    out.reserve(kept.size() + a.add.size());
    std::set_union(kept.begin(), kept.end(), a.add.begin(), a.add.end(), std::back_inserter(out));
    return State(std::move(out));
}

State apply(const State& s, const GroundAction& a) {
    if (auto v = first_violation(s, a)) {
        throw InapplicableAction(*v, a.name() + " is not applicable: " + (v->positive ? "" : "negated ") +
                                         "precondition atom #" + std::to_string(v->atom) + " violated");
    }
    return apply_unchecked(s, a);
}

ExecutionTrace validate_plan(const GroundTask& task, const Plan& plan, const State& init, const pddl::Goal& goal) {
    ExecutionTrace trace;
    trace.initial = init;
    State current = init;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const GroundAction& a = task.actions.at(plan.steps[i]);
        if (auto v = first_violation(current, a)) {
            trace.outcome = Outcome::precondition_violated;
            trace.failed_step = i + 1;
            trace.failed_action = plan.steps[i];
            trace.violated = v;
            trace.terminal = current;
            return trace;
        }
        State next = apply_unchecked(current, a);
        trace.steps.push_back({plan.steps[i], current, next});
        current = std::move(next);
    }
    trace.terminal = current;
    std::optional<GroundLiteral> unmet;
    for (AtomId p : goal.positive)
        if (!current.contains(p)) {
            unmet = GroundLiteral{p, true};
            break;
        }
    for (AtomId n : goal.negative)
        if (current.contains(n)) {
            if (!unmet || n < unmet->atom) unmet = GroundLiteral{n, false};
            break;
        }
    if (unmet) {
        trace.outcome = Outcome::goal_unmet;
        trace.failed_step = plan.steps.size();
        trace.violated = unmet;
    }
    return trace;
}

ExecutionTrace validate_plan(const GroundTask& task, const Plan& plan) {
    return validate_plan(task, plan, task.init, task.goal);
}

std::string describe_failure(const GroundTask& task, const ExecutionTrace& trace) {
    std::ostringstream out;
    switch (trace.outcome) {
        case Outcome::goal_satisfied:
            out << "plan reaches the goal in " << trace.steps.size() << " step(s)";
            break;
        case Outcome::precondition_violated:
            out << "step " << trace.failed_step << " " << task.actions.at(*trace.failed_action).name()
                << ": precondition " << task.literal_name(*trace.violated) << " does not hold";
            break;
        case Outcome::goal_unmet:
            out << "after " << trace.steps.size() << " step(s) goal literal " << task.literal_name(*trace.violated)
                << " does not hold";
            break;
    }
    return out.str();
}

void check_trace(const GroundTask& task, const ExecutionTrace& trace) {
    State expected = trace.initial;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& step = trace.steps[i];
        if (step.action >= task.actions.size())
            throw InconsistentTrace("step " + std::to_string(i + 1) + " references an unknown action");
        if (step.pre != expected)
            throw InconsistentTrace("step " + std::to_string(i + 1) + " pre-state does not match the previous post-state");
        const GroundAction& a = task.actions[step.action];
        if (!applicable(step.pre, a))
            throw InconsistentTrace("step " + std::to_string(i + 1) + " action " + a.name() + " is not applicable");
        if (apply_unchecked(step.pre, a) != step.post)
            throw InconsistentTrace("step " + std::to_string(i + 1) + " post-state is not (pre \\ del) + add");
        expected = step.post;
    }
    if (trace.terminal != expected) throw InconsistentTrace("terminal state does not match the last post-state");
}

PlanFormatError::PlanFormatError(int line, const std::string& message)
    : std::runtime_error("plan line " + std::to_string(line) + ": " + message), line_(line) {}

Plan parse_plan(const GroundTask& task, std::string_view text, PlanSource source) {
    Plan plan;
    plan.source = source;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto c = line.find(';'); c != std::string_view::npos) line = line.substr(0, c);
        auto open = line.find('(');
        if (open == std::string_view::npos) {
            if (line.find_first_not_of(" \t\r") != std::string_view::npos)
                throw PlanFormatError(line_no, "expected '(action arg ...)'");
            continue;
        }
        auto close = line.rfind(')');
        if (close == std::string_view::npos || close < open) throw PlanFormatError(line_no, "missing ')'");
        std::vector<pddl::SExpr> forms;
        try {
            forms = pddl::read_sexprs(line.substr(open, close - open + 1));
        } catch (const pddl::PddlError& e) {
            throw PlanFormatError(line_no, e.message());
        }
        if (forms.size() != 1 || !forms[0].is_list || forms[0].items.empty())
            throw PlanFormatError(line_no, "expected a single '(action arg ...)'");
        std::vector<std::string> words;
        for (const auto& item : forms[0].items) {
            if (item.is_list) throw PlanFormatError(line_no, "nested lists are not allowed in plan steps");
            words.push_back(item.symbol);
        }
        std::string schema = words.front();
        words.erase(words.begin());
        auto idx = task.find_action(schema, words);
        if (!idx) {
            std::string name = "(" + schema;
            for (const auto& w : words) name += " " + w;
            throw PlanFormatError(line_no, "unknown ground action " + name + ")");
        }
        plan.steps.push_back(*idx);
        if (end == text.size()) break;
    }
    return plan;
}

std::string format_plan(const GroundTask& task, const Plan& plan) {
    std::string out;
    for (std::size_t s : plan.steps) out += task.actions.at(s).name() + "\n";
    out += "; cost = " + std::to_string(plan.cost()) + " (unit cost)\n";
    return out;
}

namespace {

json atoms_json(const GroundTask& task, const State& s) {
    json arr = json::array();
    for (AtomId a : s.atoms()) arr.push_back(task.atom_name(a));
    return arr;
}

State atoms_from_json(const GroundTask& task, const json& arr) {
    std::vector<AtomId> ids;
    for (const auto& item : arr) {
        auto forms = pddl::read_sexprs(item.get<std::string>());
        if (forms.size() != 1 || !forms[0].is_list || forms[0].items.empty())
            throw InconsistentTrace("malformed atom '" + item.get<std::string>() + "'");
        pddl::Atom atom;
        atom.predicate = forms[0].items[0].symbol;
        for (std::size_t i = 1; i < forms[0].items.size(); ++i) atom.args.push_back(forms[0].items[i].symbol);
        auto id = task.find_atom(atom);
        if (!id) throw InconsistentTrace("atom " + item.get<std::string>() + " is not in the task's universe");
        ids.push_back(*id);
    }
    return State(std::move(ids));
}

std::size_t action_from_json(const GroundTask& task, const std::string& name) {
    Plan p = parse_plan(task, name);
    if (p.steps.size() != 1) throw InconsistentTrace("malformed action '" + name + "'");
    return p.steps.front();
}

json literal_json(const GroundTask& task, GroundLiteral lit) { return task.literal_name(lit); }

GroundLiteral literal_from_json(const GroundTask& task, const std::string& text) {
    auto forms = pddl::read_sexprs(text);
    if (forms.size() != 1 || !forms[0].is_list) throw InconsistentTrace("malformed literal '" + text + "'");
    const pddl::SExpr* node = &forms[0];
    bool positive = true;
    if (node->head() == "not" && node->items.size() == 2) {
        positive = false;
        node = &node->items[1];
    }
    pddl::Atom atom;
    atom.predicate = node->items.at(0).symbol;
    for (std::size_t i = 1; i < node->items.size(); ++i) atom.args.push_back(node->items[i].symbol);
    auto id = task.find_atom(atom);
    if (!id) throw InconsistentTrace("literal " + text + " is not in the task's universe");
    return {*id, positive};
}

}  // namespace

void write_trace(std::ostream& out, const GroundTask& task, const ExecutionTrace& trace) {
    out << json{{"record", "trace"},
                {"domain", task.domain.name},
                {"problem", task.problem.name},
                {"initial", atoms_json(task, trace.initial)}}
               .dump()
        << '\n';
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        out << json{{"record", "step"},
                    {"index", i + 1},
                    {"action", task.actions.at(s.action).name()},
                    {"pre", atoms_json(task, s.pre)},
                    {"post", atoms_json(task, s.post)}}
                   .dump()
            << '\n';
    }
    json outcome{{"record", "outcome"},
                 {"outcome", to_string(trace.outcome)},
                 {"failed_step", trace.failed_step},
                 {"terminal", atoms_json(task, trace.terminal)}};
    if (trace.failed_action) outcome["failed_action"] = task.actions.at(*trace.failed_action).name();
    if (trace.violated) outcome["violated"] = literal_json(task, *trace.violated);
    out << outcome.dump() << '\n';
}

ExecutionTrace read_trace(std::istream& in, const GroundTask& task) {
    ExecutionTrace trace;
    bool have_header = false;
    bool have_outcome = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw InconsistentTrace("trace line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string kind = rec.value("record", "");
        if (kind == "trace") {
            trace.initial = atoms_from_json(task, rec.at("initial"));
            have_header = true;
        } else if (kind == "step") {
            trace.steps.push_back({action_from_json(task, rec.at("action").get<std::string>()),
                                   atoms_from_json(task, rec.at("pre")), atoms_from_json(task, rec.at("post"))});
        } else if (kind == "outcome") {
            std::string o = rec.at("outcome").get<std::string>();
            if (o == "goal-satisfied") trace.outcome = Outcome::goal_satisfied;
            else if (o == "precondition-violated") trace.outcome = Outcome::precondition_violated;
            else if (o == "goal-unmet") trace.outcome = Outcome::goal_unmet;
            else throw InconsistentTrace("unknown outcome '" + o + "'");
            trace.failed_step = rec.value("failed_step", std::size_t{0});
            trace.terminal = atoms_from_json(task, rec.at("terminal"));
            if (rec.contains("failed_action"))
                trace.failed_action = action_from_json(task, rec["failed_action"].get<std::string>());
            if (rec.contains("violated")) trace.violated = literal_from_json(task, rec["violated"].get<std::string>());
            have_outcome = true;
        } else {
            throw InconsistentTrace("trace line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
        }
    }
    if (!have_header || !have_outcome) throw InconsistentTrace("trace is missing its header or outcome record");
    return trace;
}

}  // namespace loop
