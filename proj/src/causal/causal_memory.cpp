#include "loop/causal/causal_memory.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>

namespace loop::causal {

using nlohmann::json;

double CausalTriple::confidence() const {
    std::size_t total = support + contradictions;
    return total ? static_cast<double>(support) / static_cast<double>(total) : 0.0;
}

std::vector<AtomId> delta_plus(const State& pre, const State& post) {
    std::vector<AtomId> out;
    std::set_difference(post.atoms().begin(), post.atoms().end(), pre.atoms().begin(), pre.atoms().end(),
                        std::back_inserter(out));
    return out;
}

std::vector<AtomId> delta_minus(const State& pre, const State& post) { return delta_plus(post, pre); }

StatePattern lift(const pddl::ActionSchema& schema, const std::vector<std::string>& args, const pddl::Atom& ground,
                  Relation relation) {
    std::vector<const pddl::Atom*> lifted;
    if (relation == Relation::PRODUCES) {
        for (const auto& a : schema.add_effects) lifted.push_back(&a);
    } else if (relation == Relation::PREVENTS) {
        for (const auto& a : schema.del_effects) lifted.push_back(&a);
    } else {
        for (const auto& l : schema.preconditions)
            if (l.positive && !l.is_equality()) lifted.push_back(&l.atom);
    }
    for (const pddl::Atom* a : lifted) {
        if (a->predicate != ground.predicate || a->args.size() != ground.args.size()) continue;
        StatePattern p{ground.predicate, {}};
        bool ok = true;
        for (std::size_t i = 0; i < a->args.size() && ok; ++i) {
            const std::string& term = a->args[i];
            if (pddl::is_variable(term)) {
                int idx = schema.param_index(term);
                ok = idx >= 0 && args.at(static_cast<std::size_t>(idx)) == ground.args[i];
                p.roles.push_back(idx);
            } else {
                ok = term == ground.args[i];
                p.roles.push_back(kWildcardRole);
            }
        }
        if (ok) return p;
    }
    StatePattern p{ground.predicate, {}};
    for (const auto& c : ground.args) {
        auto it = std::find(args.begin(), args.end(), c);
        p.roles.push_back(it == args.end() ? kWildcardRole : static_cast<int>(it - args.begin()));
    }
    return p;
}

std::string render(const StatePattern& p, const pddl::ActionSchema* schema) {
    std::string out = p.predicate + "(";
    for (std::size_t i = 0; i < p.roles.size(); ++i) {
        if (i) out += ",";
        int r = p.roles[i];
        if (r == kWildcardRole) out += "*";
        else if (schema && static_cast<std::size_t>(r) < schema->params.size()) out += schema->params[static_cast<std::size_t>(r)].name;
        else out += "?" + std::to_string(r + 1);
    }
    return out + ")";
}

std::string render(const TripleKey& k, const pddl::DomainModel* domain) {
    const pddl::ActionSchema* schema = domain ? domain->find_action(k.action) : nullptr;
    return "(" + k.action + ", " + to_string(k.relation) + ", " + render(k.pattern, schema) + ")";
}

CausalMemory::CausalMemory(const CausalMemory& other) {
    std::shared_lock lock(other.mutex_);
    store_ = other.store_;
}

CausalMemory& CausalMemory::operator=(const CausalMemory& other) {
    if (this == &other) return *this;
    std::map<TripleKey, CausalTriple> copy;
    {
        std::shared_lock lock(other.mutex_);
        copy = other.store_;
    }
    std::unique_lock lock(mutex_);
    store_ = std::move(copy);
    return *this;
}

void CausalMemory::apply_locked(const TripleUpdate& u) {
    auto [it, inserted] = store_.try_emplace(u.key, CausalTriple{u.key, 0, 0});
    if (u.contradiction) ++it->second.contradictions;
    else ++it->second.support;
}

std::vector<TripleUpdate> CausalMemory::learn_from_trace(const pddl::GroundTask& task, const ExecutionTrace& trace) {
    check_trace(task, trace);
    std::vector<TripleUpdate> updates;
    auto schema_of = [&](const pddl::GroundAction& a) -> const pddl::ActionSchema& {
        const auto* s = task.domain.find_action(a.schema);
        if (!s) throw InconsistentTrace("trace action " + a.name() + " has no schema in the domain");
        return *s;
    };

    if (trace.outcome == Outcome::goal_satisfied) {
        for (const auto& step : trace.steps) {
            const auto& act = task.actions.at(step.action);
            const auto& schema = schema_of(act);
            auto emit = [&](Relation r, AtomId atom) {
                updates.push_back({{act.schema, r, lift(schema, act.args, task.atoms.at(atom), r)}, false});
            };
            for (AtomId a : delta_plus(step.pre, step.post)) emit(Relation::PRODUCES, a);
            for (AtomId a : act.pre_pos) emit(Relation::REQUIRES, a);
            for (AtomId a : delta_minus(step.pre, step.post)) emit(Relation::PREVENTS, a);
        }
        std::unique_lock lock(mutex_);
        for (const auto& u : updates) apply_locked(u);
        return updates;
    }

    if (trace.outcome == Outcome::precondition_violated && trace.failed_action) {
        const auto& act = task.actions.at(*trace.failed_action);
        const auto& schema = schema_of(act);
        std::set<TripleKey> expected;
        for (AtomId a : act.add) expected.insert({act.schema, Relation::PRODUCES, lift(schema, act.args, task.atoms.at(a), Relation::PRODUCES)});
        for (AtomId a : act.del) expected.insert({act.schema, Relation::PREVENTS, lift(schema, act.args, task.atoms.at(a), Relation::PREVENTS)});
        std::unique_lock lock(mutex_);
        for (const auto& key : expected) {
            if (!store_.count(key)) continue;
            TripleUpdate u{key, true};
            apply_locked(u);
            updates.push_back(u);
        }
    }
    return updates;
}

bool CausalMemory::record(const TripleKey& key, bool supports) {
    std::unique_lock lock(mutex_);
    if (!supports && !store_.count(key)) return false;
    apply_locked({key, !supports});
    return true;
}

std::optional<CausalTriple> CausalMemory::find(const TripleKey& key) const {
    std::shared_lock lock(mutex_);
    auto it = store_.find(key);
    if (it == store_.end()) return std::nullopt;
    return it->second;
}

std::vector<CausalTriple> CausalMemory::query(const std::string& subject, std::optional<Relation> relation,
                                              double min_confidence) const {
    std::vector<CausalTriple> out;
    {
        std::shared_lock lock(mutex_);
        for (const auto& [key, t] : store_) {
            if (!subject.empty() && key.action != subject && key.pattern.predicate != subject) continue;
            if (relation && key.relation != *relation) continue;
            if (t.confidence() < min_confidence) continue;
            out.push_back(t);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const CausalTriple& a, const CausalTriple& b) {
        if (a.confidence() != b.confidence()) return a.confidence() > b.confidence();
        return a.support > b.support;
    });
    return out;
}

bool CausalMemory::covers(const std::string& schema, double threshold) const {
    std::shared_lock lock(mutex_);
    for (const auto& [key, t] : store_)
        if (key.action == schema && t.support > 0 && t.confidence() >= threshold) return true;
    return false;
}

std::vector<CausalTriple> CausalMemory::triples() const {
    std::shared_lock lock(mutex_);
    std::vector<CausalTriple> out;
    for (const auto& [k, t] : store_) out.push_back(t);
    return out;
}

std::size_t CausalMemory::size() const {
    std::shared_lock lock(mutex_);
    return store_.size();
}

json CausalMemory::export_json() const {
    json triples = json::array();
    for (const auto& t : this->triples()) {
        triples.push_back({{"action", t.key.action},
                           {"relation", to_string(t.key.relation)},
                           {"predicate", t.key.pattern.predicate},
                           {"roles", t.key.pattern.roles},
                           {"support", t.support},
                           {"contradictions", t.contradictions},
                           {"confidence", t.confidence()}});
    }
    return json{{"kind", "causal-memory"}, {"version", 1}, {"triples", std::move(triples)}};
}

CausalMemory CausalMemory::import_json(const json& j) {
    CausalMemory m;
    try {
        if (j.at("kind").get<std::string>() != "causal-memory")
            throw std::invalid_argument("not a causal-memory document");
        for (const auto& t : j.at("triples")) {
            TripleKey key{t.at("action").get<std::string>(), parse_relation(t.at("relation").get<std::string>()),
                          {t.at("predicate").get<std::string>(), t.at("roles").get<std::vector<int>>()}};
            CausalTriple triple{key, t.at("support").get<std::size_t>(), t.at("contradictions").get<std::size_t>()};
            if (triple.support == 0) throw std::invalid_argument("stored triple without support: " + render(key));
            for (int r : key.pattern.roles)
                if (r < kWildcardRole) throw std::invalid_argument("negative role in " + render(key));
            if (!m.store_.emplace(key, triple).second) throw std::invalid_argument("duplicate triple " + render(key));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed causal document: ") + e.what());
    }
    return m;
}

void CausalMemory::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << export_json().dump(1) << '\n';
}

CausalMemory CausalMemory::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return import_json(j);
}

}  // namespace loop::causal
