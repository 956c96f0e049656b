#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "loop/orchestrator/bench.hpp"
#include "loop/orchestrator/run.hpp"
#include "loop/pddl/parser.hpp"

using namespace loop;
using namespace loop::orchestrator;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string script;
    std::string memory_dir;
    std::optional<double> budget;
    std::optional<double> threshold;
    std::string planner;
    std::string validators;
    std::optional<std::size_t> agents;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--script", c.script, "scripted generation client (JSON rules)")->check(CLI::ExistingFile);
    cmd->add_option("--memory-dir", c.memory_dir, "directory holding experience, causal and reputation state");
    cmd->add_option("--budget", c.budget, "time budget in seconds");
    cmd->add_option("--threshold", c.threshold, "confidence threshold for the decomposition route");
    cmd->add_option("--planner", c.planner, "builtin or external")->check(CLI::IsMember({"builtin", "external"}));
    cmd->add_option("--validators", c.validators, "rule or generative")->check(CLI::IsMember({"rule", "generative"}));
    cmd->add_option("--agents", c.agents, "number of validator agents");
    cmd->add_option("--seed", c.seed, "seed for GNN weights");
}

Config make_config(const Common& c) {
    Config cfg = c.config.empty() ? Config{} : Config::load(c.config);
    if (c.budget) cfg.budget = *c.budget;
    if (c.threshold) cfg.threshold = *c.threshold;
    if (!c.planner.empty()) cfg.planner = parse_planner_kind(c.planner);
    if (!c.validators.empty()) cfg.validators = parse_validator_kind(c.validators);
    if (c.agents) cfg.agents = *c.agents;
    if (c.seed) cfg.seed = *c.seed;
    if (!c.script.empty()) cfg.script = fs::path(c.script);
    if (!c.memory_dir.empty()) cfg.memory_dir = fs::path(c.memory_dir);
    cfg.check();
    return cfg;
}

Orchestrator make_orchestrator(const Config& cfg) {
    std::shared_ptr<generation::GenerationClient> client;
    if (!cfg.script) client = generation::HttpClient::from_env();
    Orchestrator o(cfg, client);
    if (cfg.memory_dir) o.load_state(*cfg.memory_dir);
    return o;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

pddl::GroundTask load_task(const std::string& domain, const std::string& problem) {
    auto d = pddl::parse_domain(read_file(domain));
    auto p = pddl::parse_problem(read_file(problem), d);
    return pddl::ground(d, p);
}

void print_record(const RunRecord& r) {
    std::cout << "status: " << to_string(r.status) << '\n';
    if (!r.message.empty()) std::cout << "message: " << r.message << '\n';
    if (r.report)
        std::cout << "confidence: " << r.report->c_total << " (exp " << r.report->c_exp << ", complexity "
                  << r.report->c_complexity << ", causal " << r.report->c_causal << ", domain " << r.report->c_domain
                  << ")\n";
    if (r.route) std::cout << "route: " << confidence::to_string(*r.route) << '\n';
    for (const auto& n : r.notes) std::cout << "note: " << n << '\n';
    if (!r.verdicts.empty())
        std::cout << "consensus: " << r.verdicts.back().consensus << (r.verdicts.back().approved ? " approved" : " rejected")
                  << '\n';
    if (!r.plan.empty()) {
        std::cout << "plan (" << r.plan.size() << " steps):\n";
        for (const auto& s : r.plan) std::cout << "  " << s << '\n';
    }
}

int exit_code(RunStatus s) {
    switch (s) {
        case RunStatus::success: return 0;
        case RunStatus::failure:
        case RunStatus::timeout: return 1;
        case RunStatus::error: return 2;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"loop: confidence-routed planning with validation and causal learning"};
    app.require_subcommand(1);

    Common common;
    std::string domain, problem, text, run_dir, route, plan_file, trace_file, manifest, json_out, memory_file;
    bool as_json = false, advisory = false;
    std::size_t workers = 0;

    auto* solve = app.add_subcommand("solve", "solve a domain/problem pair or a natural-language task");
    add_common(solve, common);
    solve->add_option("--domain", domain, "domain file (hint for --text)")->check(CLI::ExistingFile);
    auto* prob_opt = solve->add_option("--problem", problem, "problem file")->check(CLI::ExistingFile);
    solve->add_option("--text", text, "natural-language task")->excludes(prob_opt);
    solve->add_option("--run-dir", run_dir, "directory for the run's artifacts");
    solve->add_option("--route", route, "force a route")->check(CLI::IsMember({"decomposition", "progressive"}));
    solve->add_flag("--gnn-advisory", advisory, "attach GNN relation guesses to the record");
    solve->add_flag("--json", as_json, "print the run record as JSON");

    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark manifest");
    add_common(bench_cmd, common);
    bench_cmd->add_option("manifest", manifest, "manifest JSON")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--run-dir", run_dir, "directory for per-instance run artifacts");
    bench_cmd->add_option("--out", json_out, "write the JSON report here");
    bench_cmd->add_option("--workers", workers, "instances run at once");

    auto* mem = app.add_subcommand("memory", "export or import learned state");
    mem->require_subcommand(1);
    auto* mem_export = mem->add_subcommand("export", "write experience, causal and reputation state to one file");
    add_common(mem_export, common);
    mem_export->add_option("file", memory_file, "output file")->required();
    auto* mem_import = mem->add_subcommand("import", "load a file written by export into --memory-dir");
    add_common(mem_import, common);
    mem_import->add_option("file", memory_file, "input file")->required()->check(CLI::ExistingFile);

    auto* validate_cmd = app.add_subcommand("validate", "simulate a plan file and ask the validator agents");
    add_common(validate_cmd, common);
    validate_cmd->add_option("--domain", domain, "domain file")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--problem", problem, "problem file")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("plan", plan_file, "plan file")->required()->check(CLI::ExistingFile);
    validate_cmd->add_flag("--json", as_json, "print the verdict as JSON");

    auto* learn_cmd = app.add_subcommand("learn", "learn causal triples from a trace log");
    add_common(learn_cmd, common);
    learn_cmd->add_option("--domain", domain, "domain file")->required()->check(CLI::ExistingFile);
    learn_cmd->add_option("--problem", problem, "problem file")->required()->check(CLI::ExistingFile);
    learn_cmd->add_option("trace", trace_file, "trace log (JSON lines)")->required()->check(CLI::ExistingFile);

    auto* replay_cmd = app.add_subcommand("replay", "re-run a persisted run and compare records");
    replay_cmd->add_option("run_dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            auto cfg = make_config(common);
            if (advisory) cfg.gnn_advisory = true;
            if (text.empty() && problem.empty()) throw CLI::RequiredError("--problem or --text");
            auto o = make_orchestrator(cfg);
            TaskRequest req;
            if (!domain.empty()) req.domain_file = fs::path(domain);
            if (!problem.empty()) req.problem_file = fs::path(problem);
            if (!text.empty()) req.text = text;
            if (!route.empty())
                req.force_route = route == "decomposition" ? confidence::Route::decomposition : confidence::Route::progressive;
            std::optional<fs::path> dir;
            if (!run_dir.empty()) dir = fs::path(run_dir);
            auto rec = o.run(req, dir);
            if (cfg.memory_dir) o.save_state(*cfg.memory_dir);
            if (as_json) std::cout << rec.to_json().dump(2) << '\n';
            else print_record(rec);
            return exit_code(rec.status);
        }
        if (*bench_cmd) {
            auto cfg = make_config(common);
            auto o = make_orchestrator(cfg);
            std::optional<fs::path> dir;
            if (!run_dir.empty()) dir = fs::path(run_dir);
            auto report = bench(Manifest::load(manifest), o, dir, workers ? workers : cfg.workers);
            std::cout << report.table();
            if (!json_out.empty()) std::ofstream(json_out) << report.to_json().dump(2) << '\n';
            return 0;
        }
        if (*mem_export) {
            auto cfg = make_config(common);
            auto o = make_orchestrator(cfg);
            json j = {{"experience", o.memory().export_json()},
                      {"causal", o.causal().export_json()},
                      {"reputations", o.agents().reputations_json()}};
            std::ofstream(memory_file) << j.dump(2) << '\n';
            std::cout << "exported " << o.memory().size() << " experiences and " << o.causal().size() << " triples\n";
            return 0;
        }
        if (*mem_import) {
            auto cfg = make_config(common);
            if (!cfg.memory_dir) throw CLI::RequiredError("--memory-dir");
            auto j = json::parse(read_file(memory_file));
            auto o = make_orchestrator(cfg);
            o.memory() = memory::MemoryStore::import_json(j.at("experience"));
            o.causal() = causal::CausalMemory::import_json(j.at("causal"));
            o.agents().load_reputations(j.at("reputations"));
            o.save_state(*cfg.memory_dir);
            std::cout << "imported " << o.memory().size() << " experiences and " << o.causal().size() << " triples\n";
            return 0;
        }
        if (*validate_cmd) {
            auto cfg = make_config(common);
            auto o = make_orchestrator(cfg);
            auto task = load_task(domain, problem);
            auto plan = parse_plan(task, read_file(plan_file));
            auto trace = validate_plan(task, plan);
            validation::Context ctx{task, plan, trace, &o.causal(), ""};
            auto verdict = validation::validate(ctx, o.agents().select(task.domain.name, cfg.agents), cfg.approval);
            if (as_json) {
                json j = verdict.to_json();
                j["simulation"] = trace.ok() ? "ok" : describe_failure(task, trace);
                std::cout << j.dump(2) << '\n';
            } else {
                std::cout << "simulation: " << (trace.ok() ? "ok" : describe_failure(task, trace)) << '\n';
                for (const auto& s : verdict.scores) std::cout << "  " << s.agent << ": " << s.score << "  " << s.rationale << '\n';
                for (const auto& f : verdict.failures) std::cout << "  " << f.agent << ": failed: " << f.error << '\n';
                std::cout << "consensus: " << verdict.consensus << (verdict.approved ? " approved" : " rejected") << '\n';
            }
            return verdict.approved && trace.ok() ? 0 : 1;
        }
        if (*learn_cmd) {
            auto cfg = make_config(common);
            auto o = make_orchestrator(cfg);
            auto task = load_task(domain, problem);
            std::ifstream in(trace_file);
            auto trace = read_trace(in, task);
            auto updates = o.causal().learn_from_trace(task, trace);
            std::size_t contradictions = 0;
            for (const auto& u : updates) contradictions += u.contradiction;
            std::cout << updates.size() - contradictions << " supporting and " << contradictions
                      << " contradicting observations; " << o.causal().size() << " triples stored\n";
            if (cfg.memory_dir) o.save_state(*cfg.memory_dir);
            return 0;
        }
        if (*replay_cmd) {
            auto check = check_replay(run_dir);
            std::cout << "record: " << (check.identical ? "identical" : "differs at " + check.difference) << '\n';
            std::cout << "plan: " << (check.plan_valid ? "valid" : "not valid or absent") << '\n';
            return check.identical ? 0 : 1;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const pddl::PddlError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
