#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "probplan/pddl/parser.hpp"
#include "probplan/search/planner.hpp"
#include "probplan/search/rectify.hpp"
#include "probplan/util/rng.hpp"

using namespace probplan;
using namespace probplan::pddl;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

DomainDef blocks_domain() {
  return parse_domain(
      read_file(std::string(PROBPLAN_REPO_DIR) + "/domains/blocksworld.pddl"));
}

GroundedProblem blocks_grounded(int n) {
  const DomainDef domain = blocks_domain();
  std::ostringstream os;
  os << "(define (problem p) (:domain blocksworld) (:objects";
  for (int i = 0; i < n; ++i) os << ' ' << static_cast<char>('a' + i);
  os << ") (:init (handempty)) (:goal (and (handempty))))";
  return ground(domain, parse_problem(os.str(), domain));
}

// All blocks on the table, hand empty.
SymbolicState all_on_table(const GroundedProblem& g, int n) {
  SymbolicState s(g.universe);
  s.set(*g.universe->find("handempty", {}));
  for (int i = 0; i < n; ++i) {
    const std::string obj(1, static_cast<char>('a' + i));
    s.set(*g.universe->find("ontable", {obj}));
    s.set(*g.universe->find("clear", {obj}));
  }
  return s;
}

// Random reachable blocksworld configuration: a random partition of the
// blocks into towers. Independent of the task generators in the domains
// module, so planner properties do not lean on them.
SymbolicState random_config(const GroundedProblem& g, int n, Rng& rng) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  SymbolicState s(g.universe);
  s.set(*g.universe->find("handempty", {}));
  std::size_t i = 0;
  while (i < order.size()) {
    const std::size_t height = 1 + rng.below(order.size() - i);
    const auto name = [&](std::size_t k) {
      return std::string(1, static_cast<char>('a' + order[i + k]));
    };
    s.set(*g.universe->find("ontable", {name(0)}));
    for (std::size_t k = 1; k < height; ++k) {
      s.set(*g.universe->find("on", {name(k), name(k - 1)}));
    }
    s.set(*g.universe->find("clear", {name(height - 1)}));
    i += height;
  }
  return s;
}

std::vector<std::string> plan_strings(const PlanResult& result) {
  std::vector<std::string> out;
  for (const Action& a : result.plan) out.push_back(a.to_string());
  return out;
}

}  // namespace

TEST_CASE("matched immediately when init equals goal") {
  const auto g = blocks_grounded(2);
  const SymbolicState s = all_on_table(g, 2);
  const BeliefState b = BeliefState::from_symbolic(s);

  const PlanResult cp = continuous_plan(b, b, g.actions);
  CHECK(cp.status == PlanStatus::matched);
  CHECK(cp.plan.empty());
  CHECK(cp.final_belief_distance == 0.0);

  const PlanResult sp = symbolic_plan(s, s, g.actions);
  CHECK(sp.status == PlanStatus::matched);
  CHECK(sp.plan.empty());
}

TEST_CASE("two-block stacking has the unique shortest plan") {
  const auto g = blocks_grounded(2);
  const SymbolicState init = all_on_table(g, 2);
  SymbolicState goal(g.universe);
  goal.set(*g.universe->find("on", {"a", "b"}));

  const PlanResult sp = symbolic_plan(init, goal, g.actions);
  CHECK(sp.status == PlanStatus::matched);
  CHECK(plan_strings(sp) == std::vector<std::string>{"pick-up(a)", "stack(a,b)"});

  SUBCASE("continuous planner, support-only goal belief") {
    // Embedding just {on(a,b)} asserts every other atom false, which no
    // reachable configuration matches exactly; the best incumbent is still
    // the same two-action plan.
    const PlanResult cp = continuous_plan(BeliefState::from_symbolic(init),
                                          BeliefState::from_symbolic(goal), g.actions);
    CHECK(plan_strings(cp) == std::vector<std::string>{"pick-up(a)", "stack(a,b)"});
  }

  SUBCASE("continuous planner, full goal configuration") {
    SymbolicState full = goal;
    full.set(*g.universe->find("ontable", {"b"}));
    full.set(*g.universe->find("clear", {"a"}));
    full.set(*g.universe->find("handempty", {}));
    const PlanResult cp = continuous_plan(BeliefState::from_symbolic(init),
                                          BeliefState::from_symbolic(full), g.actions);
    CHECK(cp.status == PlanStatus::matched);
    CHECK(cp.final_belief_distance == 0.0);
    CHECK(plan_strings(cp) == std::vector<std::string>{"pick-up(a)", "stack(a,b)"});
  }
}

TEST_CASE("unreachable goal reports no_improvement") {
  const auto g = blocks_grounded(2);
  const SymbolicState init = all_on_table(g, 2);
  SymbolicState goal(g.universe);
  goal.set(*g.universe->find("on", {"a", "b"}));
  goal.set(*g.universe->find("on", {"b", "a"}));

  const PlanResult sp = symbolic_plan(init, goal, g.actions);
  CHECK(sp.status == PlanStatus::no_improvement);
}

TEST_CASE("planning on an invalid belief still reduces the distance") {
  const auto g = blocks_grounded(8);
  const SymbolicState base = all_on_table(g, 8);

  BeliefState init = BeliefState::from_symbolic(base);
  init.set(*g.universe->find("on", {"e", "a"}), 0.9);
  init.set(*g.universe->find("clear", {"a"}), 0.9);  // inconsistent with on(e,a)

  SymbolicState goal_state = base;
  goal_state.reset(*g.universe->find("ontable", {"e"}));
  goal_state.reset(*g.universe->find("clear", {"a"}));
  goal_state.set(*g.universe->find("on", {"e", "a"}));
  const BeliefState goal = BeliefState::from_symbolic(goal_state);

  const double initial_distance = l1_distance(init, goal);
  const PlanResult cp = continuous_plan(init, goal, g.actions);
  CHECK_FALSE(cp.plan.empty());
  CHECK(cp.final_belief_distance < initial_distance);
}

TEST_CASE("deterministic-belief equivalence with the symbolic planner") {
  const int n = 4;
  const auto g = blocks_grounded(n);
  Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const SymbolicState init = random_config(g, n, rng);
    const SymbolicState goal = random_config(g, n, rng);

    const PlanResult sp = symbolic_plan(init, goal, g.actions);
    REQUIRE(sp.status == PlanStatus::matched);

    const PlanResult cp = continuous_plan(BeliefState::from_symbolic(init),
                                          BeliefState::from_symbolic(goal), g.actions);
    REQUIRE(cp.status == PlanStatus::matched);

    // both plans reach the goal under discrete execution
    for (const PlanResult* result : {&sp, &cp}) {
      SymbolicState s = init;
      for (const Action& a : result->plan) s = apply_discrete(s, a);
      CHECK(s.satisfies(goal));
    }
  }
}

TEST_CASE("executing the returned plan reproduces final_belief_distance") {
  const auto g = blocks_grounded(3);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    BeliefState init(g.universe), goal(g.universe);
    for (AtomId id = 0; id < g.universe->size(); ++id) {
      init.set(id, rng.uniform());
      goal.set(id, rng.uniform());
    }
    SearchConfig cfg;
    cfg.node_budget = 500;
    const PlanResult cp = continuous_plan(init, goal, g.actions, cfg);

    BeliefState b = init;
    for (const Action& a : cp.plan) b = apply_attempt(b, a);
    CHECK(l1_distance(b, goal) == doctest::Approx(cp.final_belief_distance).epsilon(1e-12));
    CHECK(cp.final_belief_distance <= l1_distance(init, goal));
  }
}

TEST_CASE("search is deterministic") {
  const auto g = blocks_grounded(4);
  BeliefState init(g.universe), goal(g.universe);
  Rng rng(77);
  for (AtomId id = 0; id < g.universe->size(); ++id) {
    init.set(id, rng.uniform());
    goal.set(id, rng.uniform());
  }
  SearchConfig cfg;
  cfg.node_budget = 2000;
  const PlanResult a = continuous_plan(init, goal, g.actions, cfg);
  const PlanResult b = continuous_plan(init, goal, g.actions, cfg);
  CHECK(a.status == b.status);
  CHECK(a.final_belief_distance == b.final_belief_distance);
  CHECK(plan_strings(a) == plan_strings(b));
  CHECK(a.nodes_generated == b.nodes_generated);
}

TEST_CASE("config validation") {
  const auto g = blocks_grounded(2);
  const BeliefState b(g.universe);
  SearchConfig cfg;
  cfg.node_budget = 0;
  CHECK_THROWS_AS(continuous_plan(b, b, g.actions, cfg), std::invalid_argument);
}

TEST_CASE("plan JSON") {
  const auto g = blocks_grounded(2);
  const SymbolicState init = all_on_table(g, 2);
  SymbolicState goal(g.universe);
  goal.set(*g.universe->find("on", {"a", "b"}));
  const PlanResult sp = symbolic_plan(init, goal, g.actions);
  const auto j = plan_to_json(sp);
  CHECK(j["status"] == "matched");
  CHECK(j["plan"][0] == "pick-up(a)");
  CHECK(j["plan"][1] == "stack(a,b)");
}

TEST_CASE("discretize_map") {
  const auto g = blocks_grounded(2);

  SUBCASE("worked example yields an invalid blocksworld state") {
    // Clear(A)=0.6, Clear(B)=0.3, On(A,B)=0.7
    BeliefState belief(g.universe);
    belief.set(*g.universe->find("clear", {"a"}), 0.6);
    belief.set(*g.universe->find("clear", {"b"}), 0.3);
    belief.set(*g.universe->find("on", {"a", "b"}), 0.7);
    const SymbolicState state = discretize_map(belief);
    CHECK(state.count() == 2);
    CHECK(state.test(*g.universe->find("clear", {"a"})));
    CHECK(state.test(*g.universe->find("on", {"a", "b"})));
    // Not a reachable blocksworld state: a rests on b, yet b has no support
    // and the hand is neither empty nor holding anything.
    CHECK_FALSE(state.test(*g.universe->find("ontable", {"b"})));
    CHECK_FALSE(state.test(*g.universe->find("handempty", {})));
  }

  SUBCASE("ties break toward false") {
    BeliefState belief(g.universe, 0.5);
    CHECK(discretize_map(belief).count() == 0);
  }

  SUBCASE("round trip from deterministic states") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      SymbolicState s(g.universe);
      for (AtomId id = 0; id < g.universe->size(); ++id) {
        if (rng.bernoulli(0.5)) s.set(id);
      }
      CHECK(discretize_map(BeliefState::from_symbolic(s)) == s);
    }
  }
}

TEST_CASE("rectify_blocksworld") {
  const auto g = blocks_grounded(3);
  const auto id = [&](const std::string& pred, std::vector<std::string> args) {
    return *g.universe->find(pred, args);
  };

  SUBCASE("supporting block loses clear") {
    SymbolicState state(g.universe);
    state.set(id("on", {"a", "b"}));
    state.set(id("clear", {"b"}));
    state.set(id("clear", {"a"}));
    state.set(id("ontable", {"b"}));
    state.set(id("handempty", {}));
    const SymbolicState fixed =
        rectify_blocksworld(state, BeliefState::from_symbolic(state));
    CHECK_FALSE(fixed.test(id("clear", {"b"})));
    CHECK(fixed.test(id("on", {"a", "b"})));
    CHECK(fixed.test(id("clear", {"a"})));
    CHECK(fixed.test(id("ontable", {"b"})));
    CHECK(fixed.test(id("handempty", {})));
    CHECK(satisfies_stacking_rules(fixed));
  }

  SUBCASE("already valid state unchanged") {
    SymbolicState state(g.universe);
    state.set(id("ontable", {"a"}));
    state.set(id("clear", {"a"}));
    state.set(id("ontable", {"b"}));
    state.set(id("clear", {"b"}));
    state.set(id("ontable", {"c"}));
    state.set(id("clear", {"c"}));
    state.set(id("handempty", {}));
    CHECK(rectify_blocksworld(state, BeliefState::from_symbolic(state)) == state);
  }

  SUBCASE("on-conflicts keep the higher-probability atom") {
    SymbolicState state(g.universe);
    state.set(id("on", {"a", "b"}));
    state.set(id("on", {"c", "b"}));
    BeliefState belief(g.universe);
    belief.set(id("on", {"a", "b"}), 0.8);
    belief.set(id("on", {"c", "b"}), 0.6);
    const SymbolicState fixed = rectify_blocksworld(state, belief);
    CHECK(fixed.test(id("on", {"a", "b"})));
    CHECK_FALSE(fixed.test(id("on", {"c", "b"})));
  }

  SUBCASE("holding conflicts resolved by probability") {
    SymbolicState state(g.universe);
    state.set(id("holding", {"a"}));
    state.set(id("holding", {"b"}));
    state.set(id("handempty", {}));
    BeliefState belief(g.universe);
    belief.set(id("holding", {"a"}), 0.9);
    belief.set(id("holding", {"b"}), 0.7);
    belief.set(id("handempty", {}), 0.6);
    const SymbolicState fixed = rectify_blocksworld(state, belief);
    CHECK(fixed.test(id("holding", {"a"})));
    CHECK_FALSE(fixed.test(id("holding", {"b"})));
    CHECK_FALSE(fixed.test(id("handempty", {})));
    CHECK(satisfies_stacking_rules(fixed));
  }

  SUBCASE("random beliefs rectify to rule-satisfying states") {
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
      BeliefState belief(g.universe);
      for (AtomId a = 0; a < g.universe->size(); ++a) belief.set(a, rng.uniform());
      const SymbolicState fixed = rectify_blocksworld(discretize_map(belief), belief);
      CHECK(satisfies_stacking_rules(fixed));
    }
  }
}

TEST_CASE("rectify_sorting") {
  const DomainDef domain = parse_domain(
      read_file(std::string(PROBPLAN_REPO_DIR) + "/domains/sorting.pddl"));
  const ProblemDef problem = parse_problem(
      "(define (problem s) (:domain sorting)"
      " (:objects o1 o2 - obj c1 c2 table - loc)"
      " (:init (at o1 table) (at o2 table))"
      " (:goal (and (at o1 c1))))",
      domain);
  const auto g = ground(domain, problem);
  const auto id = [&](std::vector<std::string> args) {
    return *g.universe->find("at", args);
  };

  SUBCASE("argmax per object") {
    BeliefState belief(g.universe);
    belief.set(id({"o1", "c1"}), 0.7);
    belief.set(id({"o1", "c2"}), 0.4);
    belief.set(id({"o2", "table"}), 0.9);
    const SymbolicState fixed = rectify_sorting(belief);
    CHECK(fixed.test(id({"o1", "c1"})));
    CHECK_FALSE(fixed.test(id({"o1", "c2"})));
    CHECK(fixed.test(id({"o2", "table"})));
    CHECK(fixed.count() == 2);
  }

  SUBCASE("uniform probabilities pick the first atom in order") {
    const BeliefState belief(g.universe, 0.2);
    const SymbolicState fixed = rectify_sorting(belief);
    CHECK(fixed.count() == 2);  // one location per object
    CHECK(fixed.test(id({"o1", "c1"})));
    CHECK(fixed.test(id({"o2", "c1"})));
    CHECK(satisfies_sorting_rules(fixed));
  }

  SUBCASE("random beliefs satisfy mutual exclusion") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      BeliefState belief(g.universe);
      for (AtomId a = 0; a < g.universe->size(); ++a) belief.set(a, rng.uniform());
      CHECK(satisfies_sorting_rules(rectify_sorting(belief)));
    }
  }

  SUBCASE("wrong universe raises") {
    const auto blocks = blocks_grounded(2);
    CHECK_THROWS_AS(rectify_sorting(BeliefState(blocks.universe)), DomainMismatchError);
  }
}
