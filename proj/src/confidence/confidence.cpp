#include "loop/confidence/confidence.hpp"

#include <algorithm>
#include <sstream>

namespace loop::confidence {

nlohmann::json Report::to_json() const {
    return {{"c_exp", c_exp},       {"c_complexity", c_complexity}, {"c_causal", c_causal},
            {"c_domain", c_domain}, {"c_total", c_total},           {"notes", notes}};
}

double combine(double c_exp, double c_complexity, double c_causal, double c_domain, const Weights& w) {
    return w.experience * c_exp + w.complexity * (1.0 - c_complexity) + w.causal * c_causal + w.domain * c_domain;
}

double complexity(std::size_t objects, std::size_t goals, std::size_t ground_actions, const ComplexityScale& s) {
    double v = s.object_weight * static_cast<double>(objects) / s.objects +
               s.goal_weight * static_cast<double>(goals) / s.goals +
               s.action_weight * static_cast<double>(ground_actions) / s.actions;
    return std::min(1.0, v);
}

double complexity(const pddl::GroundTask& task, const ComplexityScale& s) {
    return complexity(pddl::all_objects(task.domain, task.problem).size(), task.problem.goal.size(),
                      task.actions.size(), s);
}

double experience_component(const memory::MemoryStore& mem, std::span<const double> query, std::size_t k) {
    auto matches = mem.retrieve_similar(query, k);
    if (matches.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& m : matches) sum += std::max(0.0, m.similarity);
    return sum / static_cast<double>(matches.size());
}

double causal_component(const pddl::DomainModel& domain, const causal::CausalMemory& causal, double min_conf) {
    if (domain.actions.empty()) return 0.0;
    std::size_t covered = 0;
    for (const auto& a : domain.actions)
        if (causal.covers(a.name, min_conf)) ++covered;
    return static_cast<double>(covered) / static_cast<double>(domain.actions.size());
}

double domain_component(bool expert_registered, const memory::SuccessRate& rate, double default_rate) {
    return 0.5 * (expert_registered ? 1.0 : 0.0) + 0.5 * (rate.count ? rate.rate : default_rate);
}

Report assess(std::span<const double> query, const pddl::GroundTask& task, const memory::MemoryStore& mem,
              const causal::CausalMemory& causal, bool expert_registered, const Options& opts) {
    Report r;
    auto matches = mem.retrieve_similar(query, opts.top_k);
    r.c_exp = experience_component(mem, query, opts.top_k);
    r.c_complexity = complexity(task, opts.scale);
    r.c_causal = causal_component(task.domain, causal, opts.causal_min_confidence);
    auto rate = mem.domain_success_rate(task.domain.name);
    r.c_domain = domain_component(expert_registered, rate, opts.default_success_rate);
    r.c_total = combine(r.c_exp, r.c_complexity, r.c_causal, r.c_domain, opts.weights);

    std::ostringstream exp;
    exp << matches.size() << " similar successes";
    r.notes["c_exp"] = exp.str();
    r.notes["c_complexity"] = std::to_string(pddl::all_objects(task.domain, task.problem).size()) + " objects, " +
                              std::to_string(task.problem.goal.size()) + " goals, " +
                              std::to_string(task.actions.size()) + " ground actions";
    r.notes["c_causal"] = "schemas covered at confidence >= " + std::to_string(opts.causal_min_confidence);
    r.notes["c_domain"] = std::string(expert_registered ? "expert registered" : "no expert") + ", " +
                          std::to_string(rate.count) + " prior runs";
    return r;
}

const char* to_string(Route r) { return r == Route::decomposition ? "decomposition" : "progressive"; }

Route route(const Report& r, double threshold) {
    return r.c_total >= threshold ? Route::decomposition : Route::progressive;
}

}  // namespace loop::confidence
