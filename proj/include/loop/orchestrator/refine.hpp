#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "loop/generation/client.hpp"

namespace loop::orchestrator {

inline constexpr std::size_t kMaxRefineIterations = 5;

struct PddlTexts {
    std::string domain;
    std::string problem;

    bool operator==(const PddlTexts&) const = default;
};

struct SplitPddl {
    std::optional<std::string> domain;
    std::optional<std::string> problem;
};

/// Extracts the first "(define (domain ...))" and "(define (problem ...))"
/// forms from free text such as a generation reply.
SplitPddl split_pddl(std::string_view text);

/// Parser diagnostics as "domain:LINE:COL: kind: message" lines. Empty when
/// both texts parse and the problem checks against the domain.
std::vector<std::string> diagnose(const PddlTexts& texts);

/// Line diff: " " kept, "-" removed, "+" added, one line each.
std::string line_diff(std::string_view before, std::string_view after);

enum class RefineStatus { clean, no_progress, exhausted, client_failure };
const char* to_string(RefineStatus s);

struct RefineIteration {
    std::size_t index = 0;  // 1-based
    std::vector<std::string> diagnostics;
    std::string domain_diff;
    std::string problem_diff;

    nlohmann::json to_json() const;
};

struct RefineResult {
    PddlTexts texts;
    std::vector<RefineIteration> iterations;
    RefineStatus status = RefineStatus::clean;
    std::string error;

    bool ok() const { return status == RefineStatus::clean; }
};

struct RefineOptions {
    std::size_t max_iterations = kMaxRefineIterations;
    double temperature = 0.1;
    std::string task_text;
};

/// Sends repair requests ("refine_problem") built from parser diagnostics
/// plus `feedback` until the texts parse cleanly with no feedback left.
/// Feedback only counts before the first revision. Stops when a revision
/// repeats an earlier text, when the client fails, or after
/// max_iterations revisions.
RefineResult refine_pddl(PddlTexts candidate, std::vector<std::string> feedback, generation::GenerationClient& client,
                         const RefineOptions& opts = {});

/// Asks the client ("generate_problem") for PDDL for a natural-language
/// task. With `domain` given only a problem is needed. Throws
/// generation::GenerationError when the reply lacks a required form.
PddlTexts generate_pddl(const std::string& task_text, const std::optional<std::string>& domain,
                        generation::GenerationClient& client, double temperature = 0.1);

}  // namespace loop::orchestrator
