#include <doctest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "loop/decomposition/decomposition.hpp"
#include "loop/pddl/parser.hpp"
#include "oracles.hpp"
#include "random_fixtures.hpp"

using namespace loop;
using namespace loop::decomposition;

namespace {

planner::SearchConfig fast_config() {
    planner::SearchConfig cfg;
    cfg.mode = planner::SearchMode::satisficing;
    cfg.heuristic = planner::HeuristicKind::h_add;
    cfg.time_budget = 30.0;
    return cfg;
}

GroundLiteral goal_lit(const pddl::GroundTask& t, pddl::Atom a) { return {t.find_atom(a).value(), true}; }

std::vector<std::string> goal_names(const pddl::GroundTask& t, const Subtask& s) {
    std::vector<std::string> out;
    for (auto l : s.goals) out.push_back(t.literal_name(l));
    return out;
}

bool oracle_accepts(const pddl::GroundTask& t, const Plan& plan) {
    auto instances = oracle::brute_force_ground(t.domain, t.problem);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < instances.size(); ++i) index[instances[i].name] = i;
    std::vector<std::size_t> steps;
    for (std::size_t s : plan.steps) steps.push_back(index.at(t.actions[s].name()));
    return oracle::simulate(instances, t.problem, steps);
}

}  // namespace

TEST_CASE("lower stack goal comes first") {
    auto t = fixtures::ground("blocksworld", "p02");
    auto g = decompose(t);
    REQUIRE(g.nodes.size() == 2);
    CHECK(goal_names(t, g.nodes[0]) == std::vector<std::string>{"(on b c)"});
    CHECK(goal_names(t, g.nodes[1]) == std::vector<std::string>{"(on c d)"});
    CHECK(g.edges == std::vector<std::pair<std::size_t, std::size_t>>{{1, 0}});
    CHECK(g.waves() == std::vector<std::vector<std::size_t>>{{1}, {0}});
    auto r = solve(t, g, fast_config());
    CHECK(validate_plan(t, r.plan).ok());
}

TEST_CASE("clustering") {
    SUBCASE("single goal literal gives one node") {
        auto d = pddl::parse_domain(fixtures::read_file(fixtures::domain_path("blocksworld")));
        auto p = pddl::parse_problem(
            "(define (problem one) (:domain blocksworld) (:objects a b - block)"
            " (:init (ontable a) (ontable b) (clear a) (clear b) (handempty)) (:goal (on a b)))",
            d);
        auto t = pddl::ground(d, p);
        auto g = decompose(t);
        CHECK(g.nodes.size() == 1);
        CHECK(g.edges.empty());
        auto r = solve(t, g, fast_config());
        CHECK(r.plan == *r.nodes[0].result.plan);
    }
    SUBCASE("balls with disjoint objects are independent") {
        auto t = fixtures::ground("gripper", "p01");
        auto g = decompose(t);
        CHECK(g.nodes.size() == 2);
        CHECK(g.edges.empty());
        CHECK(g.waves() == std::vector<std::vector<std::size_t>>{{0, 1}});
        auto r = solve(t, g, fast_config());
        CHECK(validate_plan(t, r.plan).ok());
        CHECK(r.nodes[0].wave == 0);
        CHECK(r.nodes[1].wave == 0);
    }
    SUBCASE("every fixture yields a DAG partitioning its goal") {
        for (const auto& [dom, prob] : fixtures::all_instances()) {
            CAPTURE(dom);
            auto t = fixtures::ground(dom, prob);
            auto g = decompose(t);
            CHECK(g.acyclic());
            CHECK_NOTHROW(g.check(t.goal));
        }
    }
}

TEST_CASE("graph construction") {
    std::vector<std::vector<GroundLiteral>> groups{{{0, true}}, {{1, true}}, {{2, true}}, {{3, true}}};
    SUBCASE("chain of three gives three waves") {
        auto g = make_graph({groups[0], groups[1], groups[2]}, {{0, 1}, {1, 2}});
        CHECK(g.waves().size() == 3);
        CHECK(g.topological_order() == std::vector<std::size_t>{0, 1, 2});
        CHECK(g.ancestors(2) == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("cycles collapse into one node") {
        auto g = make_graph(groups, {{0, 1}, {1, 2}, {2, 1}, {2, 3}, {1, 1}});
        REQUIRE(g.nodes.size() == 3);
        CHECK(g.nodes[1].goals.size() == 2);
        CHECK(g.acyclic());
        CHECK(g.edges == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}});
    }
    SUBCASE("a full cycle becomes a single node") {
        auto g = make_graph(groups, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
        CHECK(g.nodes.size() == 1);
        CHECK(g.edges.empty());
    }
    SUBCASE("check rejects a broken partition") {
        auto g = make_graph({groups[0]}, {});
        pddl::Goal goal;
        goal.positive = {0, 1};
        CHECK_THROWS_AS(g.check(goal), std::logic_error);
        DependencyGraph cyclic = make_graph({groups[0], groups[1]}, {});
        cyclic.edges = {{0, 1}, {1, 0}};
        CHECK_FALSE(cyclic.acyclic());
        CHECK_THROWS_AS(cyclic.topological_order(), std::logic_error);
    }
}

TEST_CASE("node budget") {
    CHECK(node_budget(300.0, 2) == 150.0);
    CHECK(node_budget(20.0, 10) == kMinNodeBudget);
    CHECK(node_budget(3.0, 10) == 3.0);
}

TEST_CASE("clobbering sub-plan is caught and repaired") {
    auto t = fixtures::ground("blocksworld", "sussman");
    auto g = make_graph({{goal_lit(t, {"on", {"a", "b"}})}, {goal_lit(t, {"on", {"b", "c"}})}}, {});
    REQUIRE(g.waves().size() == 1);
    auto nodes = plan_subtasks(t, g, fast_config());
    std::vector<Plan> plans{*nodes[0].result.plan, *nodes[1].result.plan};
    try {
        merge(t, g, plans);
        FAIL("expected MergeInvalid");
    } catch (const MergeInvalid& e) {
        CHECK(e.node() == 1);
        CHECK(e.step() == plans[0].steps.size() + 1);
    }
    auto r = solve(t, g, fast_config());
    CHECK(r.merge_failures == 1);
    CHECK(r.repaired == std::vector<std::size_t>{1});
    CHECK(validate_plan(t, r.plan).ok());
    CHECK(oracle_accepts(t, r.plan));
}

TEST_CASE("unsolved subtask signals failure") {
    auto t = fixtures::ground("blocksworld", "p02");
    auto cfg = fast_config();
    cfg.node_cap = 1;
    try {
        solve(t, nullptr, cfg);
        FAIL("expected DecompositionFailure");
    } catch (const DecompositionFailure& e) {
        CHECK(e.node() == 1);
    }
}

TEST_CASE("randomized decomposable problems merge into valid plans") {
    auto suite = fixtures::decomposable_suite(20240601);
    REQUIRE(suite.size() == 50);
    std::size_t accepted = 0, multi = 0, repaired = 0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        CAPTURE(i);
        auto d = pddl::parse_domain(fixtures::read_file(fixtures::domain_path(suite[i].domain)));
        auto p = pddl::parse_problem(suite[i].problem_text, d);
        auto t = pddl::ground(d, p);
        Result r;
        try {
            r = solve(t, nullptr, fast_config());
        } catch (const DecompositionFailure&) {
            continue;
        }
        ++accepted;
        multi += r.graph.nodes.size() > 1;
        repaired += !r.repaired.empty();
        CHECK(r.graph.acyclic());
        CHECK(oracle_accepts(t, r.plan));
    }
    MESSAGE("accepted " << accepted << ", multi-node " << multi << ", repaired " << repaired);
    CHECK(accepted == suite.size());
    CHECK(multi > 25);
}

TEST_CASE("subtask files") {
    auto t = fixtures::ground("gripper", "p01");
    auto r = solve(t, nullptr, fast_config());
    auto dir = std::filesystem::temp_directory_path() / "loop-subtasks-test";
    std::filesystem::remove_all(dir);
    write_subtasks(dir, t, r.nodes);
    for (std::size_t n = 0; n < r.nodes.size(); ++n) {
        auto stem = "node-" + std::to_string(n);
        auto d = pddl::parse_domain(fixtures::read_file(dir / (stem + "-domain.pddl")));
        auto p = pddl::parse_problem(fixtures::read_file(dir / (stem + "-problem.pddl")), d);
        CHECK(p.goal.size() == r.nodes[n].goal.positive.size());
    }
    auto j = r.graph.to_json(t);
    CHECK(j["nodes"].size() == 2);
    std::filesystem::remove_all(dir);
}
