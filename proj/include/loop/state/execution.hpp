#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "loop/pddl/grounding.hpp"
#include "loop/state/state.hpp"

namespace loop {

using pddl::GroundAction;
using pddl::GroundTask;

enum class PlanSource { builtin, external, generated };

const char* to_string(PlanSource source);

/// Ordered action indices into GroundTask::actions. Unit cost per step.
struct Plan {
    std::vector<std::size_t> steps;
    PlanSource source = PlanSource::builtin;

    std::size_t cost() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
    bool operator==(const Plan&) const = default;
};

class InapplicableAction : public std::runtime_error {
public:
    InapplicableAction(GroundLiteral violated, const std::string& message)
        : std::runtime_error(message), violated_(violated) {}
    GroundLiteral violated() const noexcept { return violated_; }

private:
    GroundLiteral violated_;
};

/// Positive preconditions hold and negated ones are absent.
bool applicable(const State& s, const GroundAction& a);

/// First violated precondition in canonical atom order, if any.
std::optional<GroundLiteral> first_violation(const State& s, const GroundAction& a);

/// (s \ del) ∪ add. Throws InapplicableAction naming the first violated
/// precondition.
State apply(const State& s, const GroundAction& a);

/// Successor without the applicability check. Callers must have checked.
State apply_unchecked(const State& s, const GroundAction& a);

enum class Outcome { goal_satisfied, precondition_violated, goal_unmet };

const char* to_string(Outcome outcome);

struct TraceStep {
    std::size_t action = 0;
    State pre;
    State post;

    bool operator==(const TraceStep&) const = default;
};

struct ExecutionTrace {
    State initial;
    std::vector<TraceStep> steps;  // only steps that were executed
    State terminal;
    Outcome outcome = Outcome::goal_satisfied;
    /// 1-based step that failed; for goal_unmet it is the plan length.
    std::size_t failed_step = 0;
    /// The action that could not be applied (precondition_violated only).
    std::optional<std::size_t> failed_action;
    /// Exactly one literal: the violated precondition or the unmet goal.
    std::optional<GroundLiteral> violated;

    bool ok() const { return outcome == Outcome::goal_satisfied; }
    bool operator==(const ExecutionTrace&) const = default;
};

/// Simulates `plan` from the task's initial state against its goal.
ExecutionTrace validate_plan(const GroundTask& task, const Plan& plan);
/// Same, from an arbitrary state and goal.
ExecutionTrace validate_plan(const GroundTask& task, const Plan& plan, const State& init, const pddl::Goal& goal);

/// Human-readable failure, e.g. "step 2 (pick-up b): precondition (handempty) does not hold".
std::string describe_failure(const GroundTask& task, const ExecutionTrace& trace);

class InconsistentTrace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checks chaining (post_i == pre_{i+1}) and the STRIPS successor rule for
/// every step. Throws InconsistentTrace.
void check_trace(const GroundTask& task, const ExecutionTrace& trace);

class PlanFormatError : public std::runtime_error {
public:
    PlanFormatError(int line, const std::string& message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// IPC plan file: one "(name arg ...)" per line, ';' comments, optional
/// "N: " step prefixes and "[cost]" suffixes. Names are case-insensitive.
Plan parse_plan(const GroundTask& task, std::string_view text, PlanSource source = PlanSource::external);
std::string format_plan(const GroundTask& task, const Plan& plan);

/// Line-delimited JSON: a header record, one record per step, an outcome record.
void write_trace(std::ostream& out, const GroundTask& task, const ExecutionTrace& trace);
ExecutionTrace read_trace(std::istream& in, const GroundTask& task);

}  // namespace loop
