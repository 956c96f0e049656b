#include <doctest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "loop/pddl/parser.hpp"
#include "loop/state/execution.hpp"

using namespace loop;
using loop::pddl::Atom;

namespace {

// Minimal domain mirroring the worked gripper step: the "gripper" is the mover.
const char* kStepGripperDomain = R"(
(define (domain step-gripper)
  (:requirements :strips :typing)
  (:types gripper room ball)
  (:predicates (at ?g - gripper ?r - room) (holding ?g - gripper ?b - ball))
  (:action move
    :parameters (?g - gripper ?from - room ?to - room)
    :precondition (at ?g ?from)
    :effect (and (at ?g ?to) (not (at ?g ?from))))
  (:action noop
    :parameters (?g - gripper)
    :precondition (and)
    :effect (and)))
)";

const char* kStepGripperProblem = R"(
(define (problem one-move)
  (:domain step-gripper)
  (:objects gripper1 - gripper rooma roomb - room ball1 - ball)
  (:init (at gripper1 rooma) (holding gripper1 ball1))
  (:goal (and (at gripper1 roomb))))
)";

State state_of(const GroundTask& t, std::initializer_list<Atom> atoms) {
    std::vector<AtomId> ids;
    for (const auto& a : atoms) ids.push_back(t.find_atom(a).value());
    return State(ids);
}

const GroundAction& action(const GroundTask& t, const std::string& schema, std::vector<std::string> args) {
    return t.actions.at(t.find_action(schema, args).value());
}

Plan plan_of(const GroundTask& t, const std::string& text) { return parse_plan(t, text, PlanSource::builtin); }

}  // namespace

TEST_CASE("applicable") {
    auto bw = fixtures::ground("blocksworld", "p02");
    SUBCASE("pick-up(c) with hand empty and c clear on the table") {
        State s = state_of(bw, {{"handempty", {}}, {"clear", {"c"}}, {"ontable", {"c"}}});
        CHECK(applicable(s, action(bw, "pick-up", {"c"})));
    }
    SUBCASE("empty state fails any action with positive preconditions") {
        for (const auto& a : bw.actions) {
            if (!a.pre_pos.empty()) CHECK_FALSE(applicable(State{}, a));
        }
    }
    SUBCASE("unstack(a,d) while holding b") {
        State s = state_of(bw, {{"holding", {"b"}}, {"on", {"a", "d"}}, {"clear", {"a"}}});
        CHECK_FALSE(applicable(s, action(bw, "unstack", {"a", "d"})));
        auto v = first_violation(s, action(bw, "unstack", {"a", "d"}));
        REQUIRE(v);
        CHECK(bw.literal_name(*v) == "(handempty)");
    }
}

TEST_CASE("apply") {
    SUBCASE("worked gripper move") {
        auto d = pddl::parse_domain(kStepGripperDomain);
        auto p = pddl::parse_problem(kStepGripperProblem, d);
        auto t = pddl::ground(d, p);
        State pre = state_of(t, {{"at", {"gripper1", "rooma"}}, {"holding", {"gripper1", "ball1"}}});
        State post = apply(pre, action(t, "move", {"gripper1", "rooma", "roomb"}));
        CHECK(post == state_of(t, {{"at", {"gripper1", "roomb"}}, {"holding", {"gripper1", "ball1"}}}));
        CHECK(pre == state_of(t, {{"at", {"gripper1", "rooma"}}, {"holding", {"gripper1", "ball1"}}}));
        CHECK(apply(pre, action(t, "noop", {"gripper1"})) == pre);
    }
    SUBCASE("stack(a,b)") {
        auto bw = fixtures::ground("blocksworld", "p01");
        State pre = state_of(bw, {{"holding", {"a"}}, {"clear", {"b"}}, {"ontable", {"b"}}});
        State post = apply(pre, action(bw, "stack", {"a", "b"}));
        CHECK(post == state_of(bw, {{"on", {"a", "b"}}, {"clear", {"a"}}, {"handempty", {}}, {"ontable", {"b"}}}));
    }
    SUBCASE("inapplicable action names the first violated precondition") {
        auto bw = fixtures::ground("blocksworld", "p01");
        try {
            apply(State{}, action(bw, "pick-up", {"a"}));
            FAIL("expected InapplicableAction");
        } catch (const InapplicableAction& e) {
            // (clear a) < (handempty) < (ontable a) in canonical order.
            CHECK(bw.literal_name(e.violated()) == "(clear a)");
        }
    }
}

TEST_CASE("frame property on random states") {
    auto t = fixtures::ground("gripper", "p02");
    std::mt19937 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<AtomId> ids;
        for (AtomId a = 0; a < t.atoms.size(); ++a)
            if (rng() % 2) ids.push_back(a);
        State s(ids);
        const auto& a = t.actions[rng() % t.actions.size()];
        State post = apply_unchecked(s, a);
        for (AtomId atom = 0; atom < t.atoms.size(); ++atom) {
            bool touched = std::binary_search(a.add.begin(), a.add.end(), atom) ||
                           std::binary_search(a.del.begin(), a.del.end(), atom);
            if (!touched) CHECK(post.contains(atom) == s.contains(atom));
        }
    }
}

TEST_CASE("validate_plan") {
    auto sussman = fixtures::ground("blocksworld", "sussman");
    SUBCASE("Sussman anomaly optimal plan") {
        Plan plan = plan_of(sussman, "(unstack c a)\n(put-down c)\n(pick-up b)\n(stack b c)\n(pick-up a)\n(stack a b)\n");
        auto trace = validate_plan(sussman, plan);
        CHECK(trace.ok());
        CHECK(trace.steps.size() == 6);
        CHECK_NOTHROW(check_trace(sussman, trace));
    }
    SUBCASE("empty plan when goal already holds") {
        auto d = pddl::parse_domain(fixtures::read_file(fixtures::domain_path("blocksworld")));
        auto p = pddl::parse_problem(
            "(define (problem done) (:domain blocksworld) (:objects a b - block)"
            " (:init (on a b) (ontable b) (clear a) (handempty)) (:goal (on a b)))",
            d);
        auto t = pddl::ground(d, p);
        auto trace = validate_plan(t, Plan{});
        CHECK(trace.ok());
        CHECK(trace.steps.empty());
    }
    SUBCASE("second pick-up while holding fails at step 2 on handempty") {
        auto bw = fixtures::ground("blocksworld", "p01");
        Plan plan = plan_of(bw, "(pick-up a)\n(pick-up b)\n");
        auto trace = validate_plan(bw, plan);
        CHECK(trace.outcome == Outcome::precondition_violated);
        CHECK(trace.failed_step == 2);
        REQUIRE(trace.violated);
        CHECK(bw.literal_name(*trace.violated) == "(handempty)");
        CHECK(trace.steps.size() == 1);
        CHECK(describe_failure(bw, trace) == "step 2 (pick-up b): precondition (handempty) does not hold");
    }
    SUBCASE("applicable plan that misses the goal") {
        Plan plan = plan_of(sussman, "(unstack c a)\n(put-down c)\n");
        auto trace = validate_plan(sussman, plan);
        CHECK(trace.outcome == Outcome::goal_unmet);
        CHECK(trace.failed_step == 2);
        CHECK(sussman.literal_name(*trace.violated) == "(on a b)");
    }
}

TEST_CASE("replaying a trace reproduces every post-state") {
    auto t = fixtures::ground("gripper", "p01");
    std::mt19937 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Plan plan;
        for (int i = 0; i < 8; ++i) plan.steps.push_back(rng() % t.actions.size());
        auto trace = validate_plan(t, plan);
        State s = trace.initial;
        for (const auto& step : trace.steps) {
            CHECK(step.pre == s);
            s = apply(s, t.actions[step.action]);
            CHECK(step.post == s);
        }
        CHECK(trace.terminal == s);
        CHECK(validate_plan(t, plan) == trace);
    }
}

TEST_CASE("plan text format") {
    auto t = fixtures::ground("gripper", "p01");
    std::string text =
        "; produced by a planner\n"
        "(PICK robby ball1 rooma left)\n"
        "0: (pick robby ball2 rooma right) ; with step prefix\n"
        "\n"
        "(move robby rooma roomb)\n"
        "; cost = 3 (unit cost)\n";
    Plan p = parse_plan(t, text);
    CHECK(p.steps.size() == 3);
    CHECK(p.source == PlanSource::external);
    Plan again = parse_plan(t, format_plan(t, p));
    CHECK(again.steps == p.steps);
    CHECK_THROWS_AS(parse_plan(t, "(fly robby rooma)\n"), PlanFormatError);
    CHECK_THROWS_AS(parse_plan(t, "pick robby\n"), PlanFormatError);
    try {
        parse_plan(t, "(move robby rooma roomb)\n(move robby roomb)\n");
    } catch (const PlanFormatError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("trace log round-trips and tampering is detected") {
    auto t = fixtures::ground("blocksworld", "sussman");
    Plan plan = plan_of(t, "(unstack c a)\n(put-down c)\n(pick-up b)\n(stack b c)\n(pick-up a)\n(stack a b)\n");
    auto trace = validate_plan(t, plan);
    std::stringstream log;
    write_trace(log, t, trace);
    std::string text = log.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 8);
    std::istringstream in(text);
    auto loaded = read_trace(in, t);
    CHECK(loaded == trace);

    auto bad = trace;
    bad.steps[2].post = bad.steps[2].pre;
    CHECK_THROWS_AS(check_trace(t, bad), InconsistentTrace);

    auto failing = validate_plan(t, plan_of(t, "(pick-up a)\n"));
    std::stringstream log2;
    write_trace(log2, t, failing);
    std::istringstream in2(log2.str());
    CHECK(read_trace(in2, t) == failing);
}
