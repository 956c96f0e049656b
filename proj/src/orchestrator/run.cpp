#include "loop/orchestrator/run.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>

#include "loop/decomposition/decomposition.hpp"
#include "loop/gnn/gnn.hpp"
#include "loop/pddl/parser.hpp"
#include "loop/planner/external.hpp"
#include "loop/util/hash.hpp"

namespace loop::orchestrator {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
    try {
        return json::parse(read_text(p));
    } catch (const json::exception& e) {
        throw std::runtime_error(p.string() + " is not valid JSON: " + e.what());
    }
}

std::optional<confidence::Route> parse_route(const std::string& s) {
    if (s == "decomposition") return confidence::Route::decomposition;
    if (s == "progressive") return confidence::Route::progressive;
    throw std::invalid_argument("unknown route '" + s + "'");
}

std::int64_t unix_millis() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::vector<std::string> action_names(const pddl::GroundTask& task, const Plan& plan) {
    std::vector<std::string> out;
    for (std::size_t s : plan.steps) out.push_back(task.actions.at(s).name());
    return out;
}

PlannerRun planner_run(std::string phase, const planner::PlannerResult& r) {
    return {std::move(phase), r.status, r.plan ? r.plan->steps.size() : 0, r.expanded, r.generated, r.wall_seconds};
}

std::shared_ptr<const embedding::Embedder> make_embedder(const Config& cfg) {
    std::shared_ptr<const embedding::Embedder> inner;
    if (cfg.embedder == "hash") inner = std::make_shared<embedding::HashEmbedder>();
    else inner = std::make_shared<embedding::ProcessEmbedder>(cfg.embedder);
    return std::make_shared<embedding::CachingEmbedder>(inner);
}

fs::path fresh_work_dir() {
    static std::atomic<unsigned> counter{0};
    auto dir = fs::temp_directory_path() /
               ("loop-external-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
}

json advisory_for(const pddl::GroundTask& task, const Plan& plan, const Config& cfg, const embedding::Embedder& emb) {
    gnn::GnnWeights w = cfg.gnn_weights ? gnn::GnnWeights::load(*cfg.gnn_weights) : gnn::GnnWeights::seeded(cfg.seed);
    gnn::TaskGraph g;
    for (std::size_t i = 0; i < plan.steps.size(); ++i)
        g.add_node("step-" + std::to_string(i + 1), task.actions[plan.steps[i]].name(), emb);
    for (std::size_t i = 0; i + 1 < plan.steps.size(); ++i) g.add_edge(i, i + 1);
    json out = json::array();
    if (g.nodes.empty()) return out;
    auto h = gnn::gat_forward(g, gnn::node_init(g, w), w);
    for (auto [u, v] : g.edges) {
        auto p = gnn::classify_edge(h[u], h[v], w);
        out.push_back({{"from", g.nodes[u].text},
                       {"to", g.nodes[v].text},
                       {"relation", loop::to_string(p.relation)},
                       {"confidence", p.confidence}});
    }
    return out;
}

void diff_json(const json& a, const json& b, const std::string& path, std::string& out) {
    if (!out.empty()) return;
    if (a.type() != b.type()) {
        out = path.empty() ? "/" : path;
        return;
    }
    if (a.is_object()) {
        for (const auto& [k, v] : a.items()) {
            if (!b.contains(k)) {
                out = path + "/" + k;
                return;
            }
            diff_json(v, b.at(k), path + "/" + k, out);
        }
        for (const auto& [k, v] : b.items())
            if (!a.contains(k) && out.empty()) out = path + "/" + k;
    } else if (a.is_array()) {
        if (a.size() != b.size()) {
            out = path + " (length)";
            return;
        }
        for (std::size_t i = 0; i < a.size(); ++i) diff_json(a[i], b[i], path + "/" + std::to_string(i), out);
    } else if (a != b) {
        out = path.empty() ? "/" : path;
    }
}

}  // namespace

void TaskRequest::check() const {
    if (text && problem_file) throw std::invalid_argument("give either a problem file or task text, not both");
    if (!text && !problem_file) throw std::invalid_argument("a problem file or task text is required");
    if (problem_file && !domain_file) throw std::invalid_argument("a problem file needs a domain file");
    if (text && text->find_first_not_of(" \t\r\n") == std::string::npos)
        throw std::invalid_argument("task text is empty");
    if (budget && !(*budget >= 0.0)) throw std::invalid_argument("budget must be >= 0");
}

json TaskRequest::to_json() const {
    json j = json::object();
    j["domain_file"] = domain_file ? json(domain_file->string()) : json(nullptr);
    j["problem_file"] = problem_file ? json(problem_file->string()) : json(nullptr);
    j["text"] = text ? json(*text) : json(nullptr);
    j["budget"] = budget ? json(*budget) : json(nullptr);
    j["force_route"] = force_route ? json(confidence::to_string(*force_route)) : json(nullptr);
    return j;
}

TaskRequest TaskRequest::from_json(const json& j) {
    TaskRequest r;
    try {
        if (!j.value("domain_file", json(nullptr)).is_null()) r.domain_file = j["domain_file"].get<std::string>();
        if (!j.value("problem_file", json(nullptr)).is_null()) r.problem_file = j["problem_file"].get<std::string>();
        if (!j.value("text", json(nullptr)).is_null()) r.text = j["text"].get<std::string>();
        if (!j.value("budget", json(nullptr)).is_null()) r.budget = j["budget"].get<double>();
        if (!j.value("force_route", json(nullptr)).is_null())
            r.force_route = parse_route(j["force_route"].get<std::string>());
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed request: ") + e.what());
    }
    r.check();
    return r;
}

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::success: return "success";
        case RunStatus::failure: return "failure";
        case RunStatus::timeout: return "timeout";
        case RunStatus::error: return "error";
    }
    return "?";
}

json PlannerRun::to_json() const {
    return {{"phase", phase},
            {"status", planner::to_string(status)},
            {"plan_length", plan_length},
            {"expanded", expanded},
            {"generated", generated},
            {"wall_seconds", wall_seconds}};
}

json RunRecord::to_json() const {
    json j;
    j["status"] = to_string(status);
    j["message"] = message;
    j["input"] = input;
    j["domain"] = domain;
    j["problem"] = problem;
    j["confidence"] = report ? report->to_json() : json(nullptr);
    j["route"] = route ? json(confidence::to_string(*route)) : json(nullptr);
    j["notes"] = notes;
    j["planner_runs"] = json::array();
    for (const auto& p : planner_runs) j["planner_runs"].push_back(p.to_json());
    j["decomposition"] = decomposition;
    j["verdicts"] = json::array();
    for (const auto& v : verdicts) j["verdicts"].push_back(v.to_json());
    j["refinements"] = json::array();
    for (const auto& r : refinements) j["refinements"].push_back(r.to_json());
    j["plan"] = plan;
    j["plan_length"] = plan.size();
    j["plan_valid"] = plan_valid;
    j["learned_triples"] = learned_triples;
    j["memory_size"] = memory_size;
    j["advisory"] = advisory;
    j["timings"] = timings;
    return j;
}

json RunRecord::without_timings(json j) {
    j.erase("timings");
    if (j.contains("planner_runs"))
        for (auto& p : j["planner_runs"]) p.erase("wall_seconds");
    return j;
}

json RunRecord::comparable() const { return without_timings(to_json()); }

Orchestrator::Orchestrator(Config cfg, std::shared_ptr<generation::GenerationClient> client)
    : cfg_(std::move(cfg)), client_(std::move(client)), memory_(cfg_.memory_capacity) {
    cfg_.check();
    if (!client_ && cfg_.script) client_ = generation::ScriptedClient::load(*cfg_.script);
    embedder_ = make_embedder(cfg_);
    if (cfg_.validators == ValidatorKind::generative) {
        if (!client_) throw std::invalid_argument("generative validators need a generation client");
        pool_ = validation::AgentPool::generative_pool(client_);
    } else {
        pool_ = validation::AgentPool::default_pool();
    }
}

void Orchestrator::load_state(const fs::path& dir) {
    if (fs::exists(dir / "experience.json")) {
        auto loaded = memory::MemoryStore::load(dir / "experience.json");
        memory::MemoryStore resized(cfg_.memory_capacity);
        for (const auto& e : loaded.entries()) resized.insert(e.experience);
        memory_ = resized;
    }
    if (fs::exists(dir / "causal.json")) causal_ = causal::CausalMemory::load(dir / "causal.json");
    if (fs::exists(dir / "reputations.json")) pool_.load_reputations(read_json(dir / "reputations.json"));
}

void Orchestrator::save_state(const fs::path& dir) const {
    fs::create_directories(dir);
    memory_.save(dir / "experience.json");
    causal_.save(dir / "causal.json");
    write_json(dir / "reputations.json", pool_.reputations_json());
}

RunRecord Orchestrator::run(const TaskRequest& request, const std::optional<fs::path>& run_dir) {
    const auto start = Clock::now();
    RunRecord rec;
    rec.input = request.is_text() ? "text" : "files";
    std::optional<pddl::GroundTask> task;
    std::optional<ExecutionTrace> final_trace;
    Plan final_plan;
    PddlTexts texts;

    auto finish = [&]() -> RunRecord {
        rec.memory_size = memory_.size();
        rec.timings["total"] = seconds_since(start);
        if (run_dir) {
            if (task) {
                write_text(*run_dir / "domain.pddl", texts.domain);
                write_text(*run_dir / "problem.pddl", texts.problem);
                if (!rec.plan.empty() || rec.success()) write_text(*run_dir / "plan.txt", format_plan(*task, final_plan));
                if (final_trace) {
                    std::ofstream out(*run_dir / "trace.jsonl");
                    write_trace(out, *task, *final_trace);
                }
            }
            std::ofstream log(*run_dir / "refinement.jsonl");
            for (const auto& it : rec.refinements) log << it.to_json().dump() << '\n';
            write_json(*run_dir / "record.json", rec.to_json());
        }
        return rec;
    };
    auto fail = [&](RunStatus s, std::string msg) {
        rec.status = s;
        rec.message = std::move(msg);
        return finish();
    };

    try {
        request.check();
    } catch (const std::exception& e) {
        return fail(RunStatus::error, e.what());
    }
    const double budget = request.budget.value_or(cfg_.budget);
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(budget));
    auto remaining = [&] { return std::chrono::duration<double>(deadline - Clock::now()).count(); };

    try {
        if (run_dir) {
            fs::create_directories(*run_dir);
            write_json(*run_dir / "config.json", cfg_.to_json());
            json req = request.to_json();
            req["client"] = client_ ? json(client_->name()) : json(nullptr);
            write_json(*run_dir / "request.json", req);
            save_state(*run_dir / "state");
            if (auto scripted = std::dynamic_pointer_cast<generation::ScriptedClient>(client_))
                write_json(*run_dir / "script.json", scripted->to_json());
            if (request.domain_file) write_text(*run_dir / "input" / "domain.pddl", read_text(*request.domain_file));
            if (request.problem_file) write_text(*run_dir / "input" / "problem.pddl", read_text(*request.problem_file));
        }
        if (budget <= 0.0) return fail(RunStatus::timeout, "budget exhausted before planning");

        // Inputs.
        if (request.is_text()) {
            if (!client_)
                return fail(RunStatus::error,
                            "natural-language input needs a generation client (a script or LOOP_GENERATION_ENDPOINT)");
            std::optional<std::string> hint;
            if (request.domain_file) hint = read_text(*request.domain_file);
            texts = generate_pddl(*request.text, hint, *client_, cfg_.temperature);
        } else {
            texts.domain = read_text(*request.domain_file);
            texts.problem = read_text(*request.problem_file);
        }
        RefineOptions ropts;
        ropts.temperature = cfg_.temperature;
        ropts.task_text = request.text.value_or("");
        std::size_t iteration = 0;
        auto persist_iteration = [&] {
            if (!run_dir) return;
            auto stem = "iter-" + std::to_string(iteration);
            write_text(*run_dir / "pddl" / (stem + "-domain.pddl"), texts.domain);
            write_text(*run_dir / "pddl" / (stem + "-problem.pddl"), texts.problem);
        };
        auto refine = [&](std::vector<std::string> feedback) -> bool {
            ropts.max_iterations = cfg_.refine_iterations - std::min(cfg_.refine_iterations, rec.refinements.size());
            auto r = refine_pddl(texts, std::move(feedback), *client_, ropts);
            for (auto& it : r.iterations) {
                it.index = rec.refinements.size() + 1;
                rec.refinements.push_back(it);
            }
            texts = r.texts;
            if (!r.ok()) {
                rec.status = RunStatus::failure;
                rec.message = std::string("refinement stopped (") + to_string(r.status) + "): " + r.error;
                return false;
            }
            return true;
        };
        auto parse = [&]() -> bool {
            auto diags = diagnose(texts);
            if (diags.empty()) return true;
            if (!client_) {
                rec.status = RunStatus::error;
                rec.message = "PDDL does not parse: " + diags.front();
                return false;
            }
            ++iteration;
            bool ok = refine({});
            persist_iteration();
            return ok;
        };
        persist_iteration();
        if (!parse()) return finish();

        auto build = [&] {
            auto dom = pddl::parse_domain(texts.domain);
            auto prob = pddl::parse_problem(texts.problem, dom);
            task = pddl::ground(dom, prob);
            rec.domain = task->domain.name;
            rec.problem = task->problem.name;
        };
        build();

        // Confidence and route.
        auto t_conf = Clock::now();
        auto query = embedder_->embed(embedding::linearize_problem(task->problem));
        confidence::Options copts;
        copts.route_threshold = cfg_.threshold;
        rec.report = confidence::assess(query, *task, memory_, causal_, pool_.has_expert(task->domain.name), copts);
        rec.route = request.force_route.value_or(confidence::route(*rec.report, cfg_.threshold));
        rec.timings["confidence"] = seconds_since(t_conf);

        double planning = 0.0, validating = 0.0;
        for (std::size_t attempt = 0;; ++attempt) {
            if (remaining() <= 0.0) return fail(RunStatus::timeout, "budget of " + std::to_string(budget) + " s exhausted");
            planner::SearchConfig scfg = cfg_.search();
            scfg.time_budget = remaining();

            std::optional<Plan> candidate;
            std::vector<std::string> feedback;
            auto t_plan = Clock::now();
            if (attempt == 0 && rec.route == confidence::Route::decomposition && !task->goal.empty()) {
                try {
                    auto d = decomposition::solve(*task, &causal_, scfg);
                    rec.decomposition = d.graph.to_json(*task);
                    for (const auto& n : d.nodes) rec.planner_runs.push_back(planner_run("subtask-" + std::to_string(n.node), n.result));
                    if (d.merge_failures) {
                        std::string nodes;
                        for (auto n : d.repaired) nodes += (nodes.empty() ? "" : ",") + std::to_string(n);
                        rec.notes.push_back("merge failed; re-planned subtasks " + nodes);
                    }
                    if (run_dir) decomposition::write_subtasks(*run_dir / "subtasks", *task, d.nodes);
                    candidate = d.plan;
                } catch (const decomposition::DecompositionFailure& e) {
                    rec.notes.push_back(std::string("decomposition abandoned: ") + e.what() + "; planning monolithically");
                }
            }
            if (!candidate) {
                if (remaining() <= 0.0) return fail(RunStatus::timeout, "budget of " + std::to_string(budget) + " s exhausted");
                scfg.time_budget = remaining();
                planner::PlannerResult r;
                if (cfg_.planner == PlannerKind::external) {
                    auto work = run_dir ? *run_dir / ("external-" + std::to_string(attempt)) : fresh_work_dir();
                    r = planner::solve_external(*task, planner::builtin_external_config(cfg_.external), scfg.time_budget, work);
                } else {
                    r = planner::solve(*task, scfg);
                }
                rec.planner_runs.push_back(planner_run(attempt == 0 ? "monolithic" : "monolithic-" + std::to_string(attempt), r));
                if (r.status == planner::SearchStatus::timeout) {
                    planning += seconds_since(t_plan);
                    rec.timings["planning"] = planning;
                    return fail(RunStatus::timeout, "planner ran out of time");
                }
                if (r.solved()) candidate = *r.plan;
                else feedback.push_back(std::string("planner: no plan found (") + planner::to_string(r.status) + ")");
            }
            planning += seconds_since(t_plan);

            if (candidate) {
                auto t_val = Clock::now();
                auto trace = validate_plan(*task, *candidate);
                validation::Context ctx{*task, *candidate, trace, &causal_, request.text.value_or("")};
                auto verdict = validation::validate(ctx, pool_.select(task->domain.name, cfg_.agents), cfg_.approval);
                pool_.learn(verdict, trace.ok());
                rec.verdicts.push_back(verdict);
                validating += seconds_since(t_val);
                final_plan = *candidate;
                final_trace = trace;
                rec.plan = action_names(*task, *candidate);
                rec.plan_valid = trace.ok();
                if (trace.ok() && verdict.approved) break;
                if (!trace.ok()) {
                    feedback.push_back("simulation: " + describe_failure(*task, trace));
                    if (trace.outcome == Outcome::precondition_violated) causal_.learn_from_trace(*task, trace);
                }
                for (const auto& s : verdict.scores)
                    if (s.score < 0.5) feedback.push_back("validator " + s.agent + ": " + s.rationale);
                feedback.push_back("consensus " + std::to_string(verdict.consensus) + " below approval threshold");
            }

            rec.timings["planning"] = planning;
            rec.timings["validation"] = validating;
            std::string why = candidate ? "plan rejected by validators (consensus " +
                                              std::to_string(rec.verdicts.back().consensus) + ")"
                                        : feedback.front();
            auto record_failure = [&] {
                if (candidate && !candidate->empty()) {
                    memory::Experience e;
                    e.embedding = query;
                    e.domain = task->domain.name;
                    e.problem_digest = hex_digest(texts.problem);
                    e.plan = rec.plan;
                    e.plan_length = rec.plan.size();
                    e.outcome = memory::ExperienceOutcome::failure;
                    e.timestamp = unix_millis();
                    memory_.insert(std::move(e));
                }
            };
            if (!client_ || rec.refinements.size() >= cfg_.refine_iterations) {
                record_failure();
                return fail(RunStatus::failure, why);
            }
            ++iteration;
            bool ok = refine(std::move(feedback));
            persist_iteration();
            if (!ok) {
                record_failure();
                return finish();
            }
            build();
            rec.plan.clear();
            rec.plan_valid = false;
            final_trace.reset();
        }
        rec.timings["planning"] = planning;
        rec.timings["validation"] = validating;

        // Learning.
        auto t_learn = Clock::now();
        if (!final_plan.empty()) {
            memory::Experience e;
            e.embedding = query;
            e.domain = task->domain.name;
            e.problem_digest = hex_digest(texts.problem);
            e.plan = rec.plan;
            e.plan_length = rec.plan.size();
            e.outcome = memory::ExperienceOutcome::success;
            e.wall_time = seconds_since(start);
            e.timestamp = unix_millis();
            memory_.insert(std::move(e));
        } else {
            rec.notes.push_back("goal already holds; empty plan not stored");
        }
        for (const auto& u : causal_.learn_from_trace(*task, *final_trace))
            if (!u.contradiction) ++rec.learned_triples;
        if (cfg_.gnn_advisory) {
            rec.advisory = advisory_for(*task, final_plan, cfg_, *embedder_);
            if (run_dir) write_json(*run_dir / "advisory.json", rec.advisory);
        }
        rec.timings["learning"] = seconds_since(t_learn);
        rec.status = RunStatus::success;
        rec.message = "plan of " + std::to_string(rec.plan.size()) + " steps approved";
        return finish();
    } catch (const pddl::PddlError& e) {
        return fail(RunStatus::error, std::string("PDDL error: ") + e.what());
    } catch (const generation::GenerationError& e) {
        return fail(RunStatus::error, std::string("generation client: ") + e.what());
    } catch (const validation::AllAgentsFailed& e) {
        return fail(RunStatus::failure, e.what());
    } catch (const std::exception& e) {
        return fail(RunStatus::error, e.what());
    }
}

RunRecord replay(const fs::path& run_dir) {
    auto cfg = Config::from_json(read_json(run_dir / "config.json"));
    cfg.memory_dir.reset();
    cfg.script.reset();
    auto req_json = read_json(run_dir / "request.json");
    std::shared_ptr<generation::GenerationClient> client;
    if (fs::exists(run_dir / "script.json")) {
        client = generation::ScriptedClient::from_json(read_json(run_dir / "script.json"));
    } else if (!req_json.value("client", json(nullptr)).is_null()) {
        throw std::runtime_error("run used a " + req_json["client"].get<std::string>() +
                                 " generation client, which cannot be replayed");
    }
    req_json.erase("client");
    auto req = TaskRequest::from_json(req_json);
    if (req.domain_file) req.domain_file = run_dir / "input" / "domain.pddl";
    if (req.problem_file) req.problem_file = run_dir / "input" / "problem.pddl";
    Orchestrator o(cfg, client);
    o.load_state(run_dir / "state");
    return o.run(req);
}

ReplayCheck check_replay(const fs::path& run_dir) {
    ReplayCheck c;
    auto stored = RunRecord::without_timings(read_json(run_dir / "record.json"));
    auto again = replay(run_dir).comparable();
    diff_json(stored, again, "", c.difference);
    c.identical = c.difference.empty();
    if (stored.value("status", "") == "success") {
        auto dom = pddl::parse_domain(read_text(run_dir / "domain.pddl"));
        auto prob = pddl::parse_problem(read_text(run_dir / "problem.pddl"), dom);
        auto task = pddl::ground(dom, prob);
        auto plan = parse_plan(task, read_text(run_dir / "plan.txt"));
        c.plan_valid = validate_plan(task, plan).ok();
    }
    return c;
}

}  // namespace loop::orchestrator
