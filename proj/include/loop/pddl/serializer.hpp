#pragma once

#include <string>

#include "loop/pddl/model.hpp"

namespace loop::pddl {

// Canonical PDDL text: two-space indentation, one declaration per line,
// explicit "(and)" for empty conjunctions. Output is stable for a given model.
std::string serialize_domain(const DomainModel& domain);
std::string serialize_problem(const ProblemModel& problem);

}  // namespace loop::pddl
