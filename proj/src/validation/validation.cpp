#include "loop/validation/validation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <future>
#include <mutex>
#include <regex>
#include <set>

namespace loop::validation {

using nlohmann::json;

ConsensusResult consensus(std::span<const std::pair<double, double>> scores, double threshold) {
    if (scores.empty()) throw EmptyConsensus();
    double num = 0.0, den = 0.0;
    for (auto [r, s] : scores) {
        num += r * s;
        den += r;
    }
    if (!(den > 0.0)) throw std::invalid_argument("consensus needs positive total reputation");
    double v = num / den;
    return {v, v >= threshold};
}

double update_reputation(double reputation, bool agreed) {
    return std::clamp(0.9 * reputation + 0.1 * (agreed ? 1.0 : 0.0), kReputationFloor, 1.0);
}

const char* to_string(Check c) {
    switch (c) {
        case Check::symbolic: return "symbolic";
        case Check::goal_coverage: return "goal-coverage";
        case Check::causal_consistency: return "causal-consistency";
        case Check::efficiency: return "efficiency";
    }
    return "?";
}

Check parse_check(const std::string& text) {
    for (auto c : {Check::symbolic, Check::goal_coverage, Check::causal_consistency, Check::efficiency})
        if (text == to_string(c)) return c;
    throw std::invalid_argument("unknown check '" + text + "'");
}

namespace {

bool pattern_covers(const causal::StatePattern& p, const std::vector<std::string>& args, const pddl::Atom& atom) {
    if (p.predicate != atom.predicate || p.roles.size() != atom.args.size()) return false;
    for (std::size_t i = 0; i < p.roles.size(); ++i) {
        int r = p.roles[i];
        if (r == causal::kWildcardRole) continue;
        if (r < 0 || static_cast<std::size_t>(r) >= args.size() || args[static_cast<std::size_t>(r)] != atom.args[i])
            return false;
    }
    return true;
}

std::string percent(double v) {
    return std::to_string(static_cast<int>(std::lround(v * 100.0))) + "%";
}

}  // namespace

std::vector<std::size_t> causal_conflicts(const pddl::GroundTask& task, const Plan& plan,
                                          const causal::CausalMemory& causal, double min_confidence) {
    std::map<std::string, std::vector<causal::StatePattern>> prevents;
    for (std::size_t a : plan.steps) {
        const auto& schema = task.actions.at(a).schema;
        if (prevents.count(schema)) continue;
        auto& list = prevents[schema];
        for (const auto& t : causal.query(schema, Relation::PREVENTS, min_confidence))
            if (t.key.action == schema) list.push_back(t.key.pattern);
    }
    auto removes = [&](std::size_t step, AtomId atom) {
        const auto& act = task.actions.at(plan.steps[step]);
        if (std::binary_search(act.add.begin(), act.add.end(), atom)) return false;
        for (const auto& p : prevents[act.schema])
            if (pattern_covers(p, act.args, task.atoms.at(atom))) return true;
        return false;
    };
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const auto& act = task.actions.at(plan.steps[i]);
        bool conflict = false;
        for (AtomId p : act.pre_pos) {
            for (std::size_t j = i; j-- > 0;) {
                const auto& prior = task.actions.at(plan.steps[j]);
                if (std::binary_search(prior.add.begin(), prior.add.end(), p)) break;
                if (removes(j, p)) {
                    conflict = true;
                    break;
                }
            }
            if (conflict) break;
        }
        if (conflict) out.push_back(i + 1);
    }
    return out;
}

Review RuleBackend::review(const Context& ctx) const {
    switch (check_) {
        case Check::symbolic:
            if (ctx.trace.ok()) return {1.0, "plan executes and reaches the goal"};
            return {0.0, describe_failure(ctx.task, ctx.trace)};
        case Check::goal_coverage: {
            const auto& g = ctx.task.goal;
            std::size_t total = g.positive.size() + g.negative.size();
            if (total == 0) return {1.0, "empty goal"};
            std::size_t met = 0;
            for (AtomId a : g.positive) met += ctx.trace.terminal.contains(a) ? 1 : 0;
            for (AtomId a : g.negative) met += ctx.trace.terminal.contains(a) ? 0 : 1;
            double s = static_cast<double>(met) / static_cast<double>(total);
            return {s, std::to_string(met) + " of " + std::to_string(total) + " goal literals hold"};
        }
        case Check::causal_consistency: {
            if (!ctx.causal) return {1.0, "no causal knowledge"};
            if (ctx.plan.empty()) return {1.0, "empty plan"};
            auto conflicts = causal_conflicts(ctx.task, ctx.plan, *ctx.causal);
            double s = 1.0 - static_cast<double>(conflicts.size()) / static_cast<double>(ctx.plan.steps.size());
            if (conflicts.empty()) return {s, "no step needs a fact predicted removed"};
            return {s, "step " + std::to_string(conflicts.front()) + " needs a fact an earlier step removes"};
        }
        case Check::efficiency: {
            if (ctx.trace.steps.empty()) return {1.0, "no steps"};
            std::set<State> seen{ctx.trace.initial};
            std::size_t revisits = 0;
            for (const auto& s : ctx.trace.steps)
                if (!seen.insert(s.post).second) ++revisits;
            double s = 1.0 - static_cast<double>(revisits) / static_cast<double>(ctx.trace.steps.size());
            return {s, std::to_string(revisits) + " steps revisit a state (" + percent(1.0 - s) + ")"};
        }
    }
    throw BackendFailure("unknown check");
}

json GenerativeBackend::request_for(const Context& ctx) {
    json plan = json::array();
    for (std::size_t a : ctx.plan.steps) plan.push_back(ctx.task.actions.at(a).name());
    json triples = json::array();
    if (ctx.causal) {
        auto all = ctx.causal->query("");
        for (std::size_t i = 0; i < all.size() && i < 10; ++i)
            triples.push_back({{"triple", causal::render(all[i].key, &ctx.task.domain)},
                               {"confidence", all[i].confidence()}});
    }
    json goal = json::array();
    for (const auto& l : ctx.task.problem.goal) goal.push_back(pddl::to_string(l));
    return {{"purpose", "validate"},
            {"task", ctx.task_text},
            {"domain", ctx.task.domain.name},
            {"problem", ctx.task.problem.name},
            {"goal", goal},
            {"plan", plan},
            {"causal", triples},
            {"reply_format", "SCORE: <number in [0,1]>\nRATIONALE: <text>"}};
}

Review GenerativeBackend::parse_reply(const std::string& reply) {
    static const std::regex grammar(R"(^SCORE:[ \t]*([0-9]+(?:\.[0-9]+)?|\.[0-9]+)[ \t]*\r?\nRATIONALE:[ \t]*(\S[\s\S]*?)\s*$)");
    std::smatch m;
    if (!std::regex_match(reply, m, grammar)) throw BackendFailure("malformed validator reply");
    double score = std::stod(m[1].str());
    if (score < 0.0 || score > 1.0) throw BackendFailure("validator score outside [0,1]");
    return {score, m[2].str()};
}

Review GenerativeBackend::review(const Context& ctx) const {
    std::string reply;
    try {
        reply = client_->complete(request_for(ctx));
    } catch (const std::exception& e) {
        throw BackendFailure(e.what());
    }
    return parse_reply(reply);
}

bool Agent::expert_for(const std::string& domain) const {
    return std::find(expertise.begin(), expertise.end(), domain) != expertise.end();
}

json Verdict::to_json() const {
    json s = json::array();
    for (const auto& a : scores)
        s.push_back({{"agent", a.agent}, {"reputation", a.reputation}, {"score", a.score}, {"rationale", a.rationale}});
    json f = json::array();
    for (const auto& a : failures) f.push_back({{"agent", a.agent}, {"error", a.error}});
    return {{"scores", s}, {"failures", f}, {"consensus", consensus}, {"approved", approved}};
}

AgentPool::AgentPool(std::vector<Agent> agents) : agents_(std::move(agents)) {
    std::set<std::string> ids;
    for (const auto& a : agents_) {
        if (!ids.insert(a.id).second) throw std::invalid_argument("duplicate agent id '" + a.id + "'");
        if (!(a.reputation > 0.0) || a.reputation > 1.0)
            throw std::invalid_argument("agent '" + a.id + "' reputation outside (0,1]");
        if (!a.backend) throw std::invalid_argument("agent '" + a.id + "' has no backend");
    }
}

AgentPool::AgentPool(const AgentPool& other) {
    std::shared_lock lock(other.mutex_);
    agents_ = other.agents_;
}

AgentPool& AgentPool::operator=(const AgentPool& other) {
    if (this == &other) return *this;
    std::vector<Agent> copy;
    {
        std::shared_lock lock(other.mutex_);
        copy = other.agents_;
    }
    std::unique_lock lock(mutex_);
    agents_ = std::move(copy);
    return *this;
}

namespace {

std::vector<Agent> standard_agents(const std::shared_ptr<generation::GenerationClient>& client) {
    std::vector<Agent> out;
    auto symbolic = std::make_shared<RuleBackend>(Check::symbolic);
    for (const char* d : {"blocksworld", "gripper", "floortile", "storage", "rovers", "satellite"})
        out.push_back({std::string("expert-") + d, {d}, 1.0, symbolic});
    auto general = [&](Check c) -> std::shared_ptr<const Backend> {
        if (client) return std::make_shared<GenerativeBackend>(client);
        return std::make_shared<RuleBackend>(c);
    };
    out.push_back({"general-symbolic-1", {}, 1.0, general(Check::symbolic)});
    out.push_back({"general-symbolic-2", {}, 1.0, general(Check::symbolic)});
    out.push_back({"general-goal-1", {}, 1.0, general(Check::goal_coverage)});
    out.push_back({"general-goal-2", {}, 1.0, general(Check::goal_coverage)});
    out.push_back({"general-causal", {}, 1.0, general(Check::causal_consistency)});
    out.push_back({"general-efficiency", {}, 1.0, general(Check::efficiency)});
    return out;
}

}  // namespace

AgentPool AgentPool::default_pool() { return AgentPool(standard_agents(nullptr)); }

AgentPool AgentPool::generative_pool(std::shared_ptr<generation::GenerationClient> client) {
    if (!client) throw std::invalid_argument("generative pool needs a client");
    return AgentPool(standard_agents(client));
}

std::vector<Agent> AgentPool::select(const std::string& domain, std::size_t n) const {
    std::vector<Agent> experts, rest;
    {
        std::shared_lock lock(mutex_);
        for (const auto& a : agents_) (a.expert_for(domain) ? experts : rest).push_back(a);
    }
    std::sort(experts.begin(), experts.end(), [](const Agent& a, const Agent& b) { return a.id < b.id; });
    std::sort(rest.begin(), rest.end(), [](const Agent& a, const Agent& b) {
        if (a.reputation != b.reputation) return a.reputation > b.reputation;
        return a.id < b.id;
    });
    experts.insert(experts.end(), rest.begin(), rest.end());
    if (experts.size() > n) experts.resize(n);
    return experts;
}

bool AgentPool::has_expert(const std::string& domain) const {
    std::shared_lock lock(mutex_);
    return std::any_of(agents_.begin(), agents_.end(), [&](const Agent& a) { return a.expert_for(domain); });
}

std::vector<Agent> AgentPool::agents() const {
    std::shared_lock lock(mutex_);
    return agents_;
}

std::optional<double> AgentPool::reputation(const std::string& id) const {
    std::shared_lock lock(mutex_);
    for (const auto& a : agents_)
        if (a.id == id) return a.reputation;
    return std::nullopt;
}

void AgentPool::set_reputation(const std::string& id, double r) {
    if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("reputation outside (0,1]");
    std::unique_lock lock(mutex_);
    for (auto& a : agents_)
        if (a.id == id) {
            a.reputation = r;
            return;
        }
    throw std::invalid_argument("unknown agent '" + id + "'");
}

void AgentPool::learn(const Verdict& verdict, bool plan_valid) {
    std::unique_lock lock(mutex_);
    for (const auto& s : verdict.scores)
        for (auto& a : agents_)
            if (a.id == s.agent) a.reputation = update_reputation(a.reputation, (s.score >= 0.5) == plan_valid);
}

json AgentPool::reputations_json() const {
    std::shared_lock lock(mutex_);
    json j = json::object();
    for (const auto& a : agents_) j[a.id] = a.reputation;
    return {{"agents", j}};
}

void AgentPool::load_reputations(const json& j) {
    try {
        for (const auto& [id, r] : j.at("agents").items()) set_reputation(id, r.get<double>());
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed reputation document: ") + e.what());
    }
}

Verdict validate(const Context& ctx, const std::vector<Agent>& agents, double threshold) {
    std::vector<std::future<Review>> jobs;
    jobs.reserve(agents.size());
    for (const auto& a : agents)
        jobs.push_back(std::async(std::launch::async, [&ctx, backend = a.backend] { return backend->review(ctx); }));
    Verdict v;
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        try {
            Review r = jobs[i].get();
            if (!(r.score >= 0.0 && r.score <= 1.0)) throw BackendFailure("score outside [0,1]");
            v.scores.push_back({agents[i].id, agents[i].reputation, r.score, r.rationale});
            pairs.emplace_back(agents[i].reputation, r.score);
        } catch (const std::exception& e) {
            v.failures.push_back({agents[i].id, e.what()});
        }
    }
    if (pairs.empty()) throw AllAgentsFailed("all " + std::to_string(agents.size()) + " validator agents failed");
    auto c = consensus(pairs, threshold);
    v.consensus = c.value;
    v.approved = c.approved;
    return v;
}

}  // namespace loop::validation
