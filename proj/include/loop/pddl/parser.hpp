#pragma once

#include <string_view>
#include <vector>

#include "loop/pddl/model.hpp"

namespace loop::pddl {

struct ParseOptions {
    /// Promote a problem/domain name mismatch from a warning to an error.
    bool domain_mismatch_is_error = false;
};

/// Requirement flags accepted by the parser. Anything else is rejected.
const std::vector<std::string>& supported_requirements();

/// Parses and validates a typed-STRIPS domain. Throws PddlError with a
/// 1-based location on the first problem found.
DomainModel parse_domain(std::string_view text);

/// Parses a problem and cross-checks it against `domain`. Non-fatal
/// diagnostics are appended to `warnings` when provided.
ProblemModel parse_problem(std::string_view text, const DomainModel& domain,
                           const ParseOptions& options = {},
                           std::vector<Diagnostic>* warnings = nullptr);

}  // namespace loop::pddl
