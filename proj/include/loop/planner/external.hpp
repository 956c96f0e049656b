#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "loop/planner/search.hpp"

namespace loop::planner {

class ExternalPlannerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ExternalPlannerMissing : public ExternalPlannerError {
public:
    using ExternalPlannerError::ExternalPlannerError;
};

/// The planner emitted a plan that does not parse or does not reach the goal.
class ExternalInvalidPlan : public ExternalPlannerError {
public:
    using ExternalPlannerError::ExternalPlannerError;
};

enum class ExitMeaning { plan, unsolvable, timeout, error };

struct ExternalPlannerConfig {
    std::string name;
    /// Shell command with {domain}, {problem}, {plan_out} and {budget}
    /// placeholders. Paths are substituted shell-quoted; budget as whole seconds.
    std::string command;
    /// Exit codes not listed here count as errors.
    std::map<int, ExitMeaning> exit_codes;
};

/// Fast Downward exit codes.
std::map<int, ExitMeaning> fast_downward_exit_codes();

/// Built-in configurations: "seq-opt-fdss-1" and "lama". The executable is
/// taken from $LOOP_FAST_DOWNWARD, defaulting to "fast-downward.py".
ExternalPlannerConfig builtin_external_config(const std::string& name);

std::string expand_command(const std::string& templ, const std::filesystem::path& domain,
                           const std::filesystem::path& problem, const std::filesystem::path& plan_out,
                           double budget_seconds);

/// Writes the canonical domain and problem into `work_dir`, runs the planner
/// and validates whatever plan it writes. Throws ExternalPlannerMissing,
/// ExternalInvalidPlan or ExternalPlannerError.
PlannerResult solve_external(const pddl::GroundTask& task, const ExternalPlannerConfig& cfg, double budget_seconds,
                             const std::filesystem::path& work_dir);

}  // namespace loop::planner
