#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "loop/causal/causal_memory.hpp"
#include "loop/causal/patterns.hpp"
#include "loop/planner/search.hpp"

using namespace loop;
using namespace loop::causal;

namespace {

const char* kDomain = R"(
(define (domain step-gripper)
  (:requirements :strips :typing)
  (:types gripper room ball)
  (:predicates (at ?g - gripper ?r - room) (holding ?g - gripper ?b - ball))
  (:action move
    :parameters (?g - gripper ?from - room ?to - room)
    :precondition (at ?g ?from)
    :effect (and (at ?g ?to) (not (at ?g ?from))))
  (:action wait
    :parameters (?g - gripper)
    :precondition (and)
    :effect (and)))
)";

const char* kProblem = R"(
(define (problem one-move)
  (:domain step-gripper)
  (:objects gripper1 - gripper rooma roomb - room ball1 - ball)
  (:init (at gripper1 rooma) (holding gripper1 ball1))
  (:goal (and (at gripper1 roomb))))
)";

pddl::GroundTask step_task() {
    auto d = pddl::parse_domain(kDomain);
    auto p = pddl::parse_problem(kProblem, d);
    return pddl::ground(d, p);
}

ExecutionTrace run(const pddl::GroundTask& t, const std::string& plan) {
    return validate_plan(t, parse_plan(t, plan, PlanSource::builtin));
}

const TripleKey kMoveProducesAt{"move", Relation::PRODUCES, {"at", {0, 2}}};

}  // namespace

TEST_CASE("delta sets") {
    auto t = step_task();
    auto id = [&](const char* pred, std::vector<std::string> args) { return t.find_atom({pred, args}).value(); };
    State pre({id("at", {"gripper1", "rooma"}), id("holding", {"gripper1", "ball1"})});
    State post({id("at", {"gripper1", "roomb"}), id("holding", {"gripper1", "ball1"})});
    CHECK(delta_plus(pre, post) == std::vector<AtomId>{id("at", {"gripper1", "roomb"})});
    CHECK(delta_minus(pre, post) == std::vector<AtomId>{id("at", {"gripper1", "rooma"})});
    CHECK(delta_plus(pre, pre).empty());
    CHECK(delta_minus(pre, pre).empty());
    State pq({1, 2});
    CHECK(delta_plus(State{}, pq) == std::vector<AtomId>{1, 2});
    CHECK(delta_minus(State{}, pq).empty());

    std::mt19937 rng(5);
    for (int i = 0; i < 2000; ++i) {
        std::set<AtomId> a, b;
        for (AtomId x = 0; x < 40; ++x) {
            if (rng() % 2) a.insert(x);
            if (rng() % 2) b.insert(x);
        }
        State sa({a.begin(), a.end()}), sb({b.begin(), b.end()});
        std::vector<AtomId> plus, minus;
        for (AtomId x : b)
            if (!a.count(x)) plus.push_back(x);
        for (AtomId x : a)
            if (!b.count(x)) minus.push_back(x);
        CHECK(delta_plus(sa, sb) == plus);
        CHECK(delta_minus(sa, sb) == minus);
    }
}

TEST_CASE("learning the worked move step") {
    auto t = step_task();
    CausalMemory m;
    CHECK(m.query("move").empty());
    auto updates = m.learn_from_trace(t, run(t, "(move gripper1 rooma roomb)"));
    CHECK(updates.size() == 3);
    auto hit = m.find(kMoveProducesAt);
    REQUIRE(hit);
    CHECK(hit->support == 1);
    CHECK(hit->confidence() == 1.0);
    CHECK(render(kMoveProducesAt, &t.domain) == "(move, PRODUCES, at(?g,?to))");
    CHECK(render(kMoveProducesAt) == "(move, PRODUCES, at(?1,?3))");

    auto q = m.query("move", Relation::PRODUCES, 0.5);
    REQUIRE(q.size() == 1);
    CHECK(q[0].key == kMoveProducesAt);
    CHECK(m.find({"move", Relation::PREVENTS, {"at", {0, 1}}}));
    CHECK(m.find({"move", Relation::REQUIRES, {"at", {0, 1}}}));
    CHECK(m.query("at").size() == 3);
    CHECK(m.covers("move"));
    CHECK_FALSE(m.covers("wait"));

    SUBCASE("relearning doubles support") {
        m.learn_from_trace(t, run(t, "(move gripper1 rooma roomb)"));
        CHECK(m.find(kMoveProducesAt)->support == 2);
        CHECK(m.find(kMoveProducesAt)->confidence() == 1.0);
        CHECK(m.size() == 3);
    }
}

TEST_CASE("no-change steps add no produce or prevent triples") {
    auto t = step_task();
    auto d = t.domain;
    auto p = pddl::parse_problem(
        "(define (problem still) (:domain step-gripper) (:objects gripper1 - gripper rooma - room)"
        " (:init (at gripper1 rooma)) (:goal (and (at gripper1 rooma))))",
        d);
    auto still = pddl::ground(d, p);
    CausalMemory m;
    m.learn_from_trace(still, run(still, "(wait gripper1)\n(wait gripper1)\n"));
    CHECK(m.query("", Relation::PRODUCES).empty());
    CHECK(m.query("", Relation::PREVENTS).empty());
}

TEST_CASE("contradictions from failed traces") {
    auto t = step_task();
    CausalMemory m;
    for (int i = 0; i < 3; ++i) m.learn_from_trace(t, run(t, "(move gripper1 rooma roomb)"));

    // Moving from the wrong room fails on the first step.
    auto failed = run(t, "(move gripper1 roomb rooma)");
    REQUIRE(failed.outcome == Outcome::precondition_violated);
    auto updates = m.learn_from_trace(t, failed);
    CHECK(updates.size() == 2);
    auto hit = m.find(kMoveProducesAt);
    CHECK(hit->support == 3);
    CHECK(hit->contradictions == 1);
    CHECK(hit->confidence() == 0.75);
    CHECK(m.query("move", Relation::PRODUCES, 1.0).empty());
    CHECK(m.query("move", Relation::PRODUCES, 0.75).size() == 1);
    CHECK(m.find({"move", Relation::REQUIRES, {"at", {0, 1}}})->contradictions == 0);

    SUBCASE("confidence never increases with contradictions") {
        double last = hit->confidence();
        for (int i = 0; i < 5; ++i) {
            m.learn_from_trace(t, failed);
            double c = m.find(kMoveProducesAt)->confidence();
            CHECK(c <= last);
            last = c;
        }
    }
    SUBCASE("unknown keys are not created by failures") {
        CausalMemory empty;
        CHECK(empty.learn_from_trace(t, failed).empty());
        CHECK(empty.size() == 0);
    }
    SUBCASE("traces ending short of the goal change nothing") {
        auto unmet = run(t, "(wait gripper1)");
        REQUIRE(unmet.outcome == Outcome::goal_unmet);
        auto before = m.export_json();
        CHECK(m.learn_from_trace(t, unmet).empty());
        CHECK(m.export_json() == before);
    }
    SUBCASE("inconsistent traces are rejected") {
        auto bad = run(t, "(move gripper1 rooma roomb)");
        bad.steps[0].post = bad.steps[0].pre;
        CHECK_THROWS_AS(m.learn_from_trace(t, bad), InconsistentTrace);
    }
}

TEST_CASE("learned produce triples are lifted add effects") {
    for (const auto& [dom, prob] : fixtures::all_instances()) {
        CAPTURE(dom);
        auto task = fixtures::ground(dom, prob);
        planner::SearchConfig cfg;
        cfg.mode = planner::SearchMode::satisficing;
        cfg.heuristic = planner::HeuristicKind::h_add;
        auto r = planner::solve(task, cfg);
        REQUIRE(r.solved());
        CausalMemory m;
        m.learn_from_trace(task, validate_plan(task, *r.plan));
        auto size = m.size();
        m.learn_from_trace(task, validate_plan(task, *r.plan));
        CHECK(m.size() == size);
        for (const auto& triple : m.query("", Relation::PRODUCES)) {
            const auto* schema = task.domain.find_action(triple.key.action);
            REQUIRE(schema);
            bool found = false;
            for (const auto& eff : schema->add_effects) {
                if (eff.predicate != triple.key.pattern.predicate) continue;
                std::vector<int> roles;
                for (const auto& term : eff.args) roles.push_back(pddl::is_variable(term) ? schema->param_index(term) : -1);
                if (roles == triple.key.pattern.roles) found = true;
            }
            CHECK_MESSAGE(found, render(triple.key, &task.domain));
        }
    }
}

TEST_CASE("lifting") {
    auto bw = fixtures::load("blocksworld", "p01");
    const auto* stack = bw.domain.find_action("stack");
    REQUIRE(stack);
    // clear(?x) is produced, clear(?y) is required.
    CHECK(lift(*stack, {"a", "b"}, {"clear", {"a"}}, Relation::PRODUCES).roles == std::vector<int>{0});
    CHECK(lift(*stack, {"a", "b"}, {"clear", {"b"}}, Relation::REQUIRES).roles == std::vector<int>{1});
    CHECK(lift(*stack, {"a", "b"}, {"on", {"a", "c"}}, Relation::PRODUCES).roles == std::vector<int>{0, -1});
}

TEST_CASE("manual observations and ordering") {
    CausalMemory m;
    TripleKey enables{"pick", Relation::ENABLES, {"carry", {0, 1, 2}}};
    TripleKey modifies{"move", Relation::MODIFIES, {"at-robby", {0, 2}}};
    CHECK_FALSE(m.record(enables, false));
    CHECK(m.size() == 0);
    CHECK(m.record(enables, true));
    for (int i = 0; i < 4; ++i) m.record(modifies, true);
    m.record(modifies, false);
    auto all = m.query("");
    REQUIRE(all.size() == 2);
    CHECK(all[0].key == enables);
    CHECK(all[1].key == modifies);
    CHECK(all[1].confidence() == 0.8);
    m.record(enables, true);
    m.record(enables, true);
    m.record(enables, true);
    m.record(enables, false);
    m.record(modifies, true);
    // 0.75 (3 of 4 supports) against 5 of 6 ≈ 0.833.
    all = m.query("");
    CHECK(all[0].key == modifies);
}

TEST_CASE("export and import") {
    auto t = step_task();
    CausalMemory m;
    m.learn_from_trace(t, run(t, "(move gripper1 rooma roomb)"));
    m.record({"pick", Relation::ENABLES, {"carry", {0, -1}}}, true);
    auto doc = m.export_json();
    auto back = CausalMemory::import_json(doc);
    CHECK(back.export_json() == doc);
    auto bad = doc;
    bad["triples"][0]["support"] = 0;
    CHECK_THROWS_AS(CausalMemory::import_json(bad), std::invalid_argument);
    bad = doc;
    bad["triples"].push_back(doc["triples"][0]);
    CHECK_THROWS_AS(CausalMemory::import_json(bad), std::invalid_argument);
    bad = doc;
    bad["triples"][0]["relation"] = "CAUSES";
    CHECK_THROWS_AS(CausalMemory::import_json(bad), std::invalid_argument);
}

TEST_CASE("pattern abstraction and transfer") {
    auto table = ActionRoleTable::defaults();
    using A = AbstractAction;
    SUBCASE("gripper plan") {
        auto task = fixtures::ground("gripper", "p01");
        planner::SearchConfig cfg;
        auto r = planner::solve(task, cfg);
        REQUIRE(r.solved());
        auto p = abstract_pattern(task, *r.plan, table);
        CHECK(p.steps == std::vector<A>{A::acquire, A::transport, A::release});
        CHECK_FALSE(p.omitted_unmappable);
        CHECK(p.source_domain == "gripper");
    }
    SUBCASE("blocksworld unstack then stack") {
        auto p = abstract_pattern({"unstack", "stack"}, "blocksworld", table);
        CHECK(p.steps == std::vector<A>{A::acquire, A::release});
    }
    SUBCASE("empty and unmappable plans") {
        CHECK_THROWS_AS(abstract_pattern({}, "gripper", table), EmptyPattern);
        CHECK_THROWS_AS(abstract_pattern({"teleport"}, "gripper", table), EmptyPattern);
        auto p = abstract_pattern({"pick", "teleport", "drop"}, "gripper", table);
        CHECK(p.omitted_unmappable);
        CHECK(p.omitted == std::vector<std::string>{"teleport"});
        CHECK(p.steps == std::vector<A>{A::acquire, A::release});
    }
    SUBCASE("transfer") {
        auto transport = fixtures::load("transport", "p01").domain;
        auto r = transfer(abstract_pattern({"pick", "move", "drop"}, "gripper", table), transport, table);
        REQUIRE(r.mapped());
        CHECK(r.skeleton == std::vector<std::vector<std::string>>{{"load"}, {"drive"}, {"unload"}});

        auto gripper = fixtures::load("gripper", "p01").domain;
        auto none = transfer(abstract_pattern({"switch-on"}, "satellite", table), gripper, table);
        CHECK_FALSE(none.mapped());
        CHECK(none.uncovered == A::toggle);
        CHECK(none.skeleton.empty());

        auto bw = fixtures::load("blocksworld", "p01").domain;
        auto acq = transfer(AbstractPattern{{A::acquire}, "gripper", false, {}}, bw, table);
        REQUIRE(acq.mapped());
        CHECK(acq.skeleton == std::vector<std::vector<std::string>>{{"pick-up", "unstack"}});
    }
    SUBCASE("prefix entries and editing") {
        CHECK(table.role("floortile", "paint-up") == A::apply);
        CHECK(table.role("floortile", "move-left") == A::transport);
        CHECK(table.role("floortile", "change-color") == A::toggle);
        CHECK(table.role("unknown-domain", "drive") == A::transport);
        auto copy = ActionRoleTable::from_json(table.to_json());
        CHECK(copy.to_json() == table.to_json());
        copy.set("gripper", "move", A::apply);
        CHECK(copy.role("gripper", "move") == A::apply);
        CHECK_THROWS(parse_abstract_action("fly"));
    }
}
