#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "loop/planner/external.hpp"
#include "loop/planner/heuristics.hpp"
#include "loop/planner/search.hpp"
#include "loop/util/subprocess.hpp"
#include "oracles.hpp"

using namespace loop;
using namespace loop::planner;
namespace fs = std::filesystem;

namespace {

SearchConfig optimal(HeuristicKind h = HeuristicKind::h_max) {
    SearchConfig c;
    c.mode = SearchMode::optimal;
    c.heuristic = h;
    c.time_budget = 30;
    return c;
}

SearchConfig satisficing(HeuristicKind h = HeuristicKind::h_add) {
    SearchConfig c;
    c.mode = SearchMode::satisficing;
    c.heuristic = h;
    c.time_budget = 30;
    return c;
}

State state_of(const pddl::GroundTask& t, std::initializer_list<pddl::Atom> atoms) {
    std::vector<AtomId> ids;
    for (const auto& a : atoms) ids.push_back(t.find_atom(a).value());
    return State(ids);
}

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("loop-test-planner-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_script(const fs::path& dir, const std::string& body) {
    fs::path p = dir / "fake-planner.sh";
    std::ofstream(p) << "#!/bin/sh\n" << body;
    fs::permissions(p, fs::perms::owner_all);
    return p;
}

}  // namespace

TEST_CASE("optimal lengths on the worked examples") {
    auto sussman = fixtures::ground("blocksworld", "sussman");
    for (auto h : {HeuristicKind::blind, HeuristicKind::h_max}) {
        auto r = solve(sussman, optimal(h));
        REQUIRE(r.solved());
        CHECK(r.plan->cost() == 6);
    }
    auto gripper = fixtures::ground("gripper", "p01");
    auto r = solve(gripper, optimal());
    REQUIRE(r.solved());
    CHECK(r.plan->cost() == 5);
    CHECK(format_plan(gripper, *r.plan).find("(move robby rooma roomb)") != std::string::npos);
}

TEST_CASE("optimal and satisficing plans agree with the breadth-first oracle") {
    for (const auto& [dom, prob] : fixtures::all_instances()) {
        CAPTURE(dom);
        CAPTURE(prob);
        auto loaded = fixtures::load(dom, prob);
        auto oracle_result = oracle::bfs_plan_length(loaded.domain, loaded.problem);
        REQUIRE(oracle_result.reachable <= 100000);
        auto task = pddl::ground(loaded.domain, loaded.problem);
        auto opt = solve(task, optimal());
        if (!oracle_result.length) {
            CHECK(opt.status == SearchStatus::unsolvable);
            continue;
        }
        REQUIRE(opt.solved());
        CHECK(opt.plan->cost() == *oracle_result.length);
        auto instances = oracle::brute_force_ground(loaded.domain, loaded.problem);
        CHECK(oracle::simulate(instances, loaded.problem, opt.plan->steps));

        auto blind = solve(task, optimal(HeuristicKind::blind));
        REQUIRE(blind.solved());
        CHECK(blind.plan->cost() == *oracle_result.length);
        CHECK(blind.expanded >= opt.expanded);

        for (auto cfg : {satisficing(HeuristicKind::h_add), satisficing(HeuristicKind::h_max),
                         satisficing(HeuristicKind::blind)}) {
            auto sat = solve(task, cfg);
            REQUIRE(sat.solved());
            CHECK(validate_plan(task, *sat.plan).ok());
            CHECK(sat.plan->cost() >= *oracle_result.length);
        }
    }
}

TEST_CASE("goal already satisfied") {
    auto d = pddl::parse_domain(fixtures::read_file(fixtures::domain_path("blocksworld")));
    auto p = pddl::parse_problem(
        "(define (problem done) (:domain blocksworld) (:objects a b - block)"
        " (:init (on a b) (ontable b) (clear a) (handempty)) (:goal (and (on a b))))",
        d);
    for (auto cfg : {optimal(), satisficing()}) {
        auto r = solve(d, p, cfg);
        REQUIRE(r.solved());
        CHECK(r.plan->empty());
        CHECK(r.expanded <= 1);
    }
}

TEST_CASE("unsolvable, timeout and cap") {
    auto d = pddl::parse_domain(fixtures::read_file(fixtures::domain_path("blocksworld")));
    auto p = pddl::parse_problem(
        "(define (problem stuck) (:domain blocksworld) (:objects a b - block)"
        " (:init (ontable a) (ontable b) (clear a) (clear b)) (:goal (and (on a b))))",
        d);
    CHECK(solve(d, p, optimal()).status == SearchStatus::unsolvable);
    CHECK(solve(d, p, optimal(HeuristicKind::blind)).status == SearchStatus::unsolvable);
    CHECK(solve(d, p, satisficing()).status == SearchStatus::unsolvable);

    auto sussman = fixtures::ground("blocksworld", "sussman");
    auto tight = optimal(HeuristicKind::blind);
    tight.time_budget = 1e-9;
    CHECK(solve(sussman, tight).status == SearchStatus::timeout);

    auto capped = optimal(HeuristicKind::blind);
    capped.node_cap = 3;
    auto r = solve(sussman, capped);
    CHECK(r.status == SearchStatus::cap_exceeded);
    CHECK_FALSE(r.plan);

    std::atomic<bool> cancel{true};
    auto cancelled = optimal(HeuristicKind::blind);
    cancelled.cancel = &cancel;
    CHECK(solve(sussman, cancelled).status == SearchStatus::timeout);
}

TEST_CASE("configuration checks") {
    auto t = fixtures::ground("blocksworld", "sussman");
    auto c = optimal();
    c.node_cap = 0;
    CHECK_THROWS_AS(solve(t, c), std::invalid_argument);
    c = optimal();
    c.time_budget = 0;
    CHECK_THROWS_AS(solve(t, c), std::invalid_argument);
    CHECK_THROWS_AS(solve(t, optimal(HeuristicKind::h_add)), std::invalid_argument);
    c = optimal();
    c.scorer = [](const State&) { return 0.0; };
    CHECK_THROWS_AS(solve(t, c), std::invalid_argument);
    CHECK(parse_heuristic("h_max") == HeuristicKind::h_max);
    CHECK(parse_search_mode("satisficing") == SearchMode::satisficing);
    CHECK_THROWS(parse_heuristic("lm-cut"));
}

TEST_CASE("search is deterministic") {
    auto t = fixtures::ground("gripper", "p02");
    for (auto cfg : {optimal(), satisficing()}) {
        auto a = solve(t, cfg);
        auto b = solve(t, cfg);
        REQUIRE(a.solved());
        CHECK(a.plan == b.plan);
        CHECK(a.expanded == b.expanded);
    }
}

TEST_CASE("state scorer hook") {
    auto t = fixtures::ground("gripper", "p01");
    auto cfg = satisficing();
    std::size_t calls = 0;
    cfg.scorer = [&](const State& s) {
        ++calls;
        return static_cast<double>(t.goal.positive.size()) -
               static_cast<double>(std::count_if(t.goal.positive.begin(), t.goal.positive.end(),
                                                 [&](AtomId g) { return s.contains(g); }));
    };
    auto r = solve(t, cfg);
    REQUIRE(r.solved());
    CHECK(validate_plan(t, *r.plan).ok());
    CHECK(calls > 0);
}

TEST_CASE("h_add and h_max") {
    auto bw = fixtures::ground("blocksworld", "p01");
    REQUIRE(bw.actions.size() == 18);
    SUBCASE("goal contained in state") {
        State s = state_of(bw, {{"on", {"a", "b"}}, {"on", {"b", "c"}}, {"ontable", {"c"}}, {"clear", {"a"}}});
        CHECK(h_add(s, bw.goal, bw.actions) == 0.0);
        CHECK(h_max(s, bw.goal, bw.actions) == 0.0);
    }
    SUBCASE("one stack away") {
        State s = state_of(bw, {{"holding", {"a"}}, {"on", {"b", "c"}}, {"ontable", {"c"}}, {"clear", {"b"}}});
        CHECK(h_add(s, bw.goal, bw.actions) == 1.0);
        CHECK(h_max(s, bw.goal, bw.actions) == 1.0);
    }
    SUBCASE("initial tower state") {
        // on(a,b) and on(b,c) each need pick-up then stack.
        CHECK(h_add(bw.init, bw.goal, bw.actions) == 4.0);
        CHECK(h_max(bw.init, bw.goal, bw.actions) == 2.0);
    }
    SUBCASE("no producer") {
        std::vector<pddl::GroundAction> only_pickups;
        for (const auto& a : bw.actions)
            if (a.schema == "pick-up") only_pickups.push_back(a);
        CHECK(h_add(bw.init, bw.goal, only_pickups) == kInfinity);
        CHECK(h_max(bw.init, bw.goal, only_pickups) == kInfinity);
    }
    SUBCASE("h_max never exceeds the true distance") {
        RelaxedHeuristic rh(bw);
        auto loaded = fixtures::load("blocksworld", "p01");
        auto r = solve(bw, optimal(HeuristicKind::blind));
        REQUIRE(r.solved());
        State s = bw.init;
        std::size_t left = r.plan->cost();
        for (std::size_t a : r.plan->steps) {
            CHECK(rh.h_max(s, bw.goal) <= static_cast<double>(left));
            CHECK(rh.h_add(s, bw.goal) >= rh.h_max(s, bw.goal));
            s = apply(s, bw.actions[a]);
            --left;
        }
        CHECK(rh.h_max(s, bw.goal) == 0.0);
    }
}

TEST_CASE("subprocess helper") {
    auto r = util::run_shell("cat; echo done >&2; exit 3", "hello\n");
    CHECK(r.exit_code == 3);
    CHECK(r.out == "hello\n");
    CHECK(r.err == "done\n");
    CHECK_FALSE(r.timed_out);
    auto slow = util::run_shell("sleep 5", {}, 0.2);
    CHECK(slow.timed_out);
    CHECK(util::shell_quote("it's") == "'it'\\''s'");
    CHECK(util::command_program("  '/a b/c' --x") == "/a b/c");
    CHECK(util::find_executable("sh"));
    CHECK_FALSE(util::find_executable("definitely-not-a-real-program-xyz"));
}

TEST_CASE("external planner adapter") {
    auto task = fixtures::ground("blocksworld", "sussman");
    const std::string good = "(unstack c a)\n(put-down c)\n(pick-up b)\n(stack b c)\n(pick-up a)\n(stack a b)\n; cost = 6\n";

    SUBCASE("plan file is parsed and validated") {
        auto dir = scratch_dir("good");
        std::ofstream(dir / "canned.plan") << good;
        auto script = write_script(dir, "test -s \"$2\" && test -s \"$3\" && cp \"" + (dir / "canned.plan").string() +
                                            "\" \"$1\"\n");
        ExternalPlannerConfig cfg{"fake", script.string() + " {plan_out} {domain} {problem} {budget}",
                                  fast_downward_exit_codes()};
        auto r = solve_external(task, cfg, 10, dir / "work");
        REQUIRE(r.solved());
        CHECK(r.plan->cost() == 6);
        CHECK(r.plan->source == PlanSource::external);
        auto reparsed = pddl::parse_domain(fixtures::read_file(dir / "work" / "domain.pddl"));
        CHECK(reparsed == task.domain);
    }
    SUBCASE("numbered plan files: the highest index wins") {
        auto dir = scratch_dir("numbered");
        std::ofstream(dir / "canned.plan") << good;
        auto script = write_script(dir, "echo '(unstack c a)' > \"$1.1\"\ncp \"" + (dir / "canned.plan").string() +
                                            "\" \"$1.2\"\n");
        ExternalPlannerConfig cfg{"fake", script.string() + " {plan_out}", fast_downward_exit_codes()};
        auto r = solve_external(task, cfg, 10, dir / "work");
        REQUIRE(r.solved());
        CHECK(r.plan->cost() == 6);
    }
    SUBCASE("unsolvable exit code") {
        auto dir = scratch_dir("unsolvable");
        auto script = write_script(dir, "exit 11\n");
        ExternalPlannerConfig cfg{"fake", script.string(), fast_downward_exit_codes()};
        auto r = solve_external(task, cfg, 10, dir / "work");
        CHECK(r.status == SearchStatus::unsolvable);
        CHECK_FALSE(r.plan);
    }
    SUBCASE("timeout exit code") {
        auto dir = scratch_dir("timeout");
        auto script = write_script(dir, "exit 23\n");
        ExternalPlannerConfig cfg{"fake", script.string(), fast_downward_exit_codes()};
        CHECK(solve_external(task, cfg, 10, dir / "work").status == SearchStatus::timeout);
    }
    SUBCASE("unknown exit code without a plan is an error") {
        auto dir = scratch_dir("crash");
        auto script = write_script(dir, "echo boom >&2\nexit 37\n");
        ExternalPlannerConfig cfg{"fake", script.string(), fast_downward_exit_codes()};
        CHECK_THROWS_AS(solve_external(task, cfg, 10, dir / "work"), ExternalPlannerError);
    }
    SUBCASE("corrupted plan is rejected") {
        auto dir = scratch_dir("corrupt");
        std::ofstream(dir / "canned.plan") << "(unstack c a)\n(pick-up b)\n";
        auto script = write_script(dir, "cp \"" + (dir / "canned.plan").string() + "\" \"$1\"\n");
        ExternalPlannerConfig cfg{"fake", script.string() + " {plan_out}", fast_downward_exit_codes()};
        CHECK_THROWS_AS(solve_external(task, cfg, 10, dir / "work"), ExternalInvalidPlan);
    }
    SUBCASE("garbage plan is rejected") {
        auto dir = scratch_dir("garbage");
        auto script = write_script(dir, "echo '(teleport a)' > \"$1\"\n");
        ExternalPlannerConfig cfg{"fake", script.string() + " {plan_out}", fast_downward_exit_codes()};
        CHECK_THROWS_AS(solve_external(task, cfg, 10, dir / "work"), ExternalInvalidPlan);
    }
    SUBCASE("missing executable") {
        ExternalPlannerConfig cfg{"fake", "/nonexistent/planner {domain}", fast_downward_exit_codes()};
        CHECK_THROWS_AS(solve_external(task, cfg, 10, scratch_dir("missing")), ExternalPlannerMissing);
    }
    SUBCASE("built-in templates") {
        auto cfg = builtin_external_config("lama");
        CHECK(cfg.command.find("{plan_out}") != std::string::npos);
        CHECK(builtin_external_config("seq-opt-fdss-1").command.find("seq-opt-fdss-1") != std::string::npos);
        CHECK_THROWS(builtin_external_config("bogus"));
        CHECK(expand_command("x {domain} {budget} {budget2}", "/tmp/a b", "p", "o", 299.7) ==
              "x '/tmp/a b' 299 {budget2}");
    }
}
