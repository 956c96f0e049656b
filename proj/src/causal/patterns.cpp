#include "loop/causal/patterns.hpp"

namespace loop::causal {

using nlohmann::json;

const char* to_string(AbstractAction a) {
    switch (a) {
        case AbstractAction::acquire: return "acquire";
        case AbstractAction::transport: return "transport";
        case AbstractAction::release: return "release";
        case AbstractAction::apply: return "apply";
        case AbstractAction::toggle: return "toggle";
    }
    return "?";
}

AbstractAction parse_abstract_action(const std::string& text) {
    for (auto a : {AbstractAction::acquire, AbstractAction::transport, AbstractAction::release, AbstractAction::apply,
                   AbstractAction::toggle})
        if (text == to_string(a)) return a;
    throw std::invalid_argument("unknown abstract action '" + text + "'");
}

ActionRoleTable ActionRoleTable::defaults() {
    using A = AbstractAction;
    ActionRoleTable t;
    const std::map<std::string, std::map<std::string, A>> entries = {
        {"gripper", {{"pick", A::acquire}, {"move", A::transport}, {"drop", A::release}}},
        {"blocksworld",
         {{"pick-up", A::acquire}, {"unstack", A::acquire}, {"put-down", A::release}, {"stack", A::release}}},
        {"transport", {{"load", A::acquire}, {"drive", A::transport}, {"unload", A::release}}},
        {"storage",
         {{"lift", A::acquire},
          {"move", A::transport},
          {"go-out", A::transport},
          {"go-in", A::transport},
          {"drop", A::release}}},
        {"rovers",
         {{"navigate", A::transport},
          {"sample-soil", A::acquire},
          {"communicate-soil-data", A::release},
          {"drop", A::release}}},
        {"satellite",
         {{"turn-to", A::transport},
          {"switch-on", A::toggle},
          {"switch-off", A::toggle},
          {"calibrate", A::apply},
          {"take-image", A::apply}}},
        {"floortile", {{"move-*", A::transport}, {"paint-*", A::apply}, {"change-color", A::toggle}}},
        {"*",
         {{"pick", A::acquire},
          {"pick-up", A::acquire},
          {"load", A::acquire},
          {"lift", A::acquire},
          {"move", A::transport},
          {"drive", A::transport},
          {"fly", A::transport},
          {"navigate", A::transport},
          {"drop", A::release},
          {"put-down", A::release},
          {"unload", A::release}}},
    };
    t.table_ = entries;
    return t;
}

void ActionRoleTable::set(const std::string& domain, const std::string& schema, AbstractAction role) {
    table_[domain][schema] = role;
}

std::optional<AbstractAction> ActionRoleTable::lookup(const std::map<std::string, AbstractAction>& entries,
                                                      const std::string& schema) const {
    if (auto it = entries.find(schema); it != entries.end()) return it->second;
    std::optional<AbstractAction> best;
    std::size_t best_len = 0;
    for (const auto& [key, role] : entries) {
        if (key.empty() || key.back() != '*') continue;
        std::string prefix = key.substr(0, key.size() - 1);
        if (schema.rfind(prefix, 0) == 0 && prefix.size() >= best_len) {
            best = role;
            best_len = prefix.size();
        }
    }
    return best;
}

std::optional<AbstractAction> ActionRoleTable::role(const std::string& domain, const std::string& schema) const {
    if (auto it = table_.find(domain); it != table_.end()) return lookup(it->second, schema);
    if (auto it = table_.find("*"); it != table_.end()) return lookup(it->second, schema);
    return std::nullopt;
}

std::vector<std::string> ActionRoleTable::schemas_for(const pddl::DomainModel& target, AbstractAction r) const {
    std::vector<std::string> out;
    for (const auto& a : target.actions)
        if (role(target.name, a.name) == r) out.push_back(a.name);
    return out;
}

json ActionRoleTable::to_json() const {
    json j = json::object();
    for (const auto& [domain, entries] : table_)
        for (const auto& [schema, r] : entries) j[domain][schema] = to_string(r);
    return j;
}

ActionRoleTable ActionRoleTable::from_json(const json& j) {
    ActionRoleTable t;
    for (const auto& [domain, entries] : j.items())
        for (const auto& [schema, r] : entries.items()) t.set(domain, schema, parse_abstract_action(r.get<std::string>()));
    return t;
}

AbstractPattern abstract_pattern(const std::vector<std::string>& schemas, const std::string& domain,
                                 const ActionRoleTable& table) {
    AbstractPattern p;
    p.source_domain = domain;
    for (const auto& s : schemas) {
        auto r = table.role(domain, s);
        if (!r) {
            p.omitted_unmappable = true;
            p.omitted.push_back(s);
            continue;
        }
        if (p.steps.empty() || p.steps.back() != *r) p.steps.push_back(*r);
    }
    if (p.steps.empty()) throw EmptyPattern();
    return p;
}

AbstractPattern abstract_pattern(const pddl::GroundTask& task, const Plan& plan, const ActionRoleTable& table) {
    std::vector<std::string> schemas;
    for (std::size_t a : plan.steps) schemas.push_back(task.actions.at(a).schema);
    return abstract_pattern(schemas, task.domain.name, table);
}

TransferResult transfer(const AbstractPattern& pattern, const pddl::DomainModel& target, const ActionRoleTable& table) {
    TransferResult r;
    for (AbstractAction step : pattern.steps) {
        auto candidates = table.schemas_for(target, step);
        if (candidates.empty()) {
            r.uncovered = step;
            r.skeleton.clear();
            return r;
        }
        r.skeleton.push_back(std::move(candidates));
    }
    return r;
}

}  // namespace loop::causal
