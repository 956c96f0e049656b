#include "loop/planner/external.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "loop/pddl/serializer.hpp"
#include "loop/util/subprocess.hpp"

namespace loop::planner {

namespace fs = std::filesystem;

std::map<int, ExitMeaning> fast_downward_exit_codes() {
    return {
        {0, ExitMeaning::plan},        {1, ExitMeaning::plan},        {2, ExitMeaning::plan},
        {3, ExitMeaning::plan},        {10, ExitMeaning::unsolvable}, {11, ExitMeaning::unsolvable},
        {12, ExitMeaning::unsolvable}, {23, ExitMeaning::timeout},    {24, ExitMeaning::timeout},
    };
}

ExternalPlannerConfig builtin_external_config(const std::string& name) {
    const char* env = std::getenv("LOOP_FAST_DOWNWARD");
    std::string exe = env && *env ? env : "fast-downward.py";
    std::string alias;
    if (name == "seq-opt-fdss-1") alias = "seq-opt-fdss-1";
    else if (name == "lama") alias = "lama";
    else throw std::invalid_argument("unknown external planner configuration '" + name + "'");
    return {name,
            exe + " --alias " + alias + " --overall-time-limit {budget}s --plan-file {plan_out} {domain} {problem}",
            fast_downward_exit_codes()};
}

std::string expand_command(const std::string& templ, const fs::path& domain, const fs::path& problem,
                           const fs::path& plan_out, double budget_seconds) {
    const std::map<std::string, std::string> values = {
        {"{domain}", util::shell_quote(domain.string())},
        {"{problem}", util::shell_quote(problem.string())},
        {"{plan_out}", util::shell_quote(plan_out.string())},
        {"{budget}", std::to_string(std::max<long>(1, std::lround(std::floor(budget_seconds))))},
    };
    std::string out;
    for (std::size_t i = 0; i < templ.size();) {
        bool matched = false;
        if (templ[i] == '{') {
            for (const auto& [key, value] : values) {
                if (templ.compare(i, key.size(), key) == 0) {
                    out += value;
                    i += key.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) out += templ[i++];
    }
    return out;
}

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Anytime planners write plan_out.1, plan_out.2, ...; the last is the best.
std::optional<fs::path> find_plan_file(const fs::path& plan_out) {
    if (fs::exists(plan_out)) return plan_out;
    std::optional<fs::path> best;
    long best_n = -1;
    if (!fs::exists(plan_out.parent_path())) return std::nullopt;
    const std::string prefix = plan_out.filename().string() + ".";
    for (const auto& entry : fs::directory_iterator(plan_out.parent_path())) {
        std::string name = entry.path().filename().string();
        if (name.rfind(prefix, 0) != 0) continue;
        std::string suffix = name.substr(prefix.size());
        if (suffix.empty() || suffix.find_first_not_of("0123456789") != std::string::npos) continue;
        long n = std::stol(suffix);
        if (n > best_n) {
            best_n = n;
            best = entry.path();
        }
    }
    return best;
}

}  // namespace

PlannerResult solve_external(const pddl::GroundTask& task, const ExternalPlannerConfig& cfg, double budget_seconds,
                             const fs::path& work_dir) {
    if (!(budget_seconds > 0)) throw std::invalid_argument("time budget must be positive");
    const auto start = std::chrono::steady_clock::now();

    fs::create_directories(work_dir);
    const fs::path domain = work_dir / "domain.pddl";
    const fs::path problem = work_dir / "problem.pddl";
    const fs::path plan_out = work_dir / "plan.out";
    std::ofstream(domain) << pddl::serialize_domain(task.domain);
    std::ofstream(problem) << pddl::serialize_problem(task.problem);
    fs::remove(plan_out);
    for (const auto& entry : fs::directory_iterator(work_dir))
        if (entry.path().filename().string().rfind("plan.out.", 0) == 0) fs::remove(entry.path());

    const std::string command = expand_command(cfg.command, domain, problem, plan_out, budget_seconds);
    const std::string program = util::command_program(command);
    if (!util::find_executable(program))
        throw ExternalPlannerMissing("external planner '" + cfg.name + "': executable '" + program + "' not found");

    // Grace period so the planner's own limit triggers first.
    auto proc = util::run_shell(command, {}, budget_seconds + 5.0);

    PlannerResult result;
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    if (proc.timed_out) {
        result.status = SearchStatus::timeout;
        result.wall_seconds = elapsed();
        return result;
    }

    ExitMeaning meaning = ExitMeaning::error;
    if (auto it = cfg.exit_codes.find(proc.exit_code); it != cfg.exit_codes.end()) meaning = it->second;
    auto plan_file = find_plan_file(plan_out);

    if (!plan_file) {
        result.wall_seconds = elapsed();
        switch (meaning) {
            case ExitMeaning::unsolvable: result.status = SearchStatus::unsolvable; return result;
            case ExitMeaning::timeout: result.status = SearchStatus::timeout; return result;
            case ExitMeaning::plan:
                throw ExternalPlannerError("external planner '" + cfg.name + "' reported success but wrote no plan");
            case ExitMeaning::error: break;
        }
        std::string tail = proc.err.size() > 400 ? proc.err.substr(proc.err.size() - 400) : proc.err;
        throw ExternalPlannerError("external planner '" + cfg.name + "' failed with exit code " +
                                   std::to_string(proc.exit_code) + (tail.empty() ? "" : ": " + tail));
    }

    Plan plan;
    try {
        plan = parse_plan(task, slurp(*plan_file), PlanSource::external);
    } catch (const PlanFormatError& e) {
        throw ExternalInvalidPlan("external planner '" + cfg.name + "' wrote an unreadable plan: " + e.what());
    }
    auto trace = validate_plan(task, plan);
    if (!trace.ok())
        throw ExternalInvalidPlan("external planner '" + cfg.name + "' wrote an invalid plan: " +
                                  describe_failure(task, trace));
    result.status = SearchStatus::solved;
    result.plan = std::move(plan);
    result.wall_seconds = elapsed();
    return result;
}

}  // namespace loop::planner
