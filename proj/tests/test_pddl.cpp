#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "probplan/pddl/ground.hpp"
#include "probplan/pddl/parser.hpp"
#include "probplan/pddl/printer.hpp"
#include "probplan/pddl/state.hpp"
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

std::string repo_path(const std::string& rel) {
  return std::string(PROBPLAN_REPO_DIR) + "/" + rel;
}

ProblemDef blocks_problem(const DomainDef& domain, int n) {
  std::ostringstream os;
  os << "(define (problem blocks-" << n << ") (:domain blocksworld) (:objects";
  for (int i = 0; i < n; ++i) os << ' ' << static_cast<char>('a' + i);
  os << ") (:init (handempty)";
  for (int i = 0; i < n; ++i) {
    os << " (ontable " << static_cast<char>('a' + i) << ") (clear "
       << static_cast<char>('a' + i) << ")";
  }
  os << ") (:goal (and (on a b))))";
  return parse_problem(os.str(), domain);
}

}  // namespace

TEST_CASE("empty domain parses") {
  const DomainDef domain = parse_domain("(define (domain empty))");
  CHECK(domain.name == "empty");
  CHECK(domain.predicates.empty());
  CHECK(domain.operators.empty());
}

TEST_CASE("bundled blocksworld domain") {
  const DomainDef domain = parse_domain(read_file(repo_path("domains/blocksworld.pddl")));
  CHECK(domain.name == "blocksworld");
  REQUIRE(domain.predicates.size() == 5);
  CHECK(domain.find_predicate("on") != nullptr);
  CHECK(domain.find_predicate("ontable") != nullptr);
  CHECK(domain.find_predicate("clear") != nullptr);
  CHECK(domain.find_predicate("holding") != nullptr);
  CHECK(domain.find_predicate("handempty") != nullptr);
  REQUIRE(domain.operators.size() == 4);
  CHECK(domain.operators[0].name == "pick-up");
  CHECK(domain.operators[1].name == "put-down");
  CHECK(domain.operators[2].name == "stack");
  CHECK(domain.operators[3].name == "unstack");
}

TEST_CASE("unsupported features are named") {
  const char* negative =
      "(define (domain bad) (:predicates (clear ?x)) (:action a :parameters (?x)"
      " :precondition (not (clear ?x)) :effect (and (clear ?x))))";
  CHECK_THROWS_AS(parse_domain(negative), UnsupportedFeatureError);
  CHECK_THROWS_WITH_AS(parse_domain(negative),
                       doctest::Contains("negative preconditions"),
                       UnsupportedFeatureError);

  const char* conditional =
      "(define (domain bad) (:predicates (p ?x)) (:action a :parameters (?x)"
      " :precondition (and (p ?x)) :effect (when (p ?x) (p ?x))))";
  CHECK_THROWS_WITH_AS(parse_domain(conditional),
                       doctest::Contains("conditional effects"),
                       UnsupportedFeatureError);

  const char* disjunctive =
      "(define (domain bad) (:predicates (p ?x)) (:action a :parameters (?x)"
      " :precondition (or (p ?x)) :effect (and (p ?x))))";
  CHECK_THROWS_WITH_AS(parse_domain(disjunctive),
                       doctest::Contains("disjunctive"),
                       UnsupportedFeatureError);

  CHECK_THROWS_WITH_AS(
      parse_domain("(define (domain bad) (:functions (total-cost)))"),
      doctest::Contains("numeric fluents"), UnsupportedFeatureError);
}

TEST_CASE("syntax errors carry positions") {
  try {
    parse_domain("(define (domain x)\n  (:action");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("duplicate names rejected") {
  CHECK_THROWS_AS(
      parse_domain("(define (domain d) (:predicates (p ?x) (p ?x ?y)))"),
      ValidationError);
  CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (p ?x))"
                               " (:action a :parameters (?x) :effect (and (p ?x)))"
                               " (:action a :parameters (?x) :effect (and (p ?x))))"),
                  ValidationError);
}

TEST_CASE("minimal problem parses and validates") {
  const DomainDef domain = parse_domain(read_file(repo_path("domains/blocksworld.pddl")));
  const ProblemDef problem = parse_problem(
      "(define (problem p) (:domain blocksworld) (:objects a b)"
      " (:init (ontable a) (ontable b) (clear a) (clear b) (handempty))"
      " (:goal (and (on a b))))",
      domain);
  CHECK(problem.initial_state.size() == 5);
  CHECK(problem.goal.size() == 1);

  SUBCASE("undeclared object") {
    CHECK_THROWS_WITH_AS(
        parse_problem("(define (problem p) (:domain blocksworld) (:objects a b)"
                      " (:init (ontable c)) (:goal (and (on a b))))",
                      domain),
        doctest::Contains("undeclared object"), ValidationError);
  }
  SUBCASE("arity mismatch") {
    CHECK_THROWS_WITH_AS(
        parse_problem("(define (problem p) (:domain blocksworld) (:objects a b)"
                      " (:init (ontable a)) (:goal (and (on a))))",
                      domain),
        doctest::Contains("arity mismatch"), ValidationError);
  }
}

TEST_CASE("round trip: parse, print, parse") {
  for (const char* file : {"domains/blocksworld.pddl", "domains/sorting.pddl"}) {
    const DomainDef domain = parse_domain(read_file(repo_path(file)));
    const DomainDef reparsed = parse_domain(print_domain(domain));
    CHECK(domain == reparsed);
  }
  const DomainDef domain = parse_domain(read_file(repo_path("domains/blocksworld.pddl")));
  const ProblemDef problem =
      parse_problem(read_file(repo_path("domains/blocksworld-two-blocks.pddl")), domain);
  const ProblemDef reparsed = parse_problem(print_problem(problem, domain.name), domain);
  CHECK(problem == reparsed);
}

TEST_CASE("grounding counts") {
  const DomainDef domain = parse_domain(read_file(repo_path("domains/blocksworld.pddl")));

  SUBCASE("two blocks give nine atoms") {
    const auto grounded = ground(domain, blocks_problem(domain, 2));
    CHECK(grounded.universe->size() == 9);
    // 2 on + 2 ontable + 2 clear + 2 holding + 1 handempty
    CHECK(grounded.universe->find("on", {"a", "b"}).has_value());
    CHECK(grounded.universe->find("on", {"b", "a"}).has_value());
    CHECK_FALSE(grounded.universe->find("on", {"a", "a"}).has_value());
    // 2 pick-up + 2 put-down + 2 stack + 2 unstack
    CHECK(grounded.actions.size() == 8);
  }

  SUBCASE("eight blocks give 56 on atoms") {
    const auto grounded = ground(domain, blocks_problem(domain, 8));
    const auto on = grounded.universe->predicate_index("on");
    REQUIRE(on.has_value());
    int on_atoms = 0;
    for (AtomId id = 0; id < grounded.universe->size(); ++id) {
      if (grounded.universe->atom(id).predicate == *on) ++on_atoms;
    }
    CHECK(on_atoms == 56);
    CHECK(grounded.universe->size() == 56 + 8 + 8 + 8 + 1);
  }

  SUBCASE("grounding is deterministic") {
    const auto a = ground(domain, blocks_problem(domain, 4));
    const auto b = ground(domain, blocks_problem(domain, 4));
    REQUIRE(a.universe->size() == b.universe->size());
    for (AtomId id = 0; id < a.universe->size(); ++id) {
      CHECK(a.universe->text(id) == b.universe->text(id));
    }
    CHECK(a.actions == b.actions);
  }
}

TEST_CASE("structural assumptions enforced at grounding") {
  // delete outside the precondition
  const DomainDef bad_del = parse_domain(
      "(define (domain d) (:predicates (p ?x) (q ?x))"
      " (:action a :parameters (?x) :precondition (and (p ?x))"
      "  :effect (and (not (q ?x)))))");
  const ProblemDef prob = parse_problem(
      "(define (problem x) (:domain d) (:objects o) (:init (p o)) (:goal (and (p o))))",
      bad_del);
  CHECK_THROWS_WITH_AS(ground(bad_del, prob), doctest::Contains("a"), StructuralError);

  // add already in the precondition
  const DomainDef bad_add = parse_domain(
      "(define (domain d) (:predicates (p ?x))"
      " (:action a :parameters (?x) :precondition (and (p ?x))"
      "  :effect (and (p ?x))))");
  CHECK_THROWS_AS(ground(bad_add, prob), StructuralError);

  // grounded actions satisfy del ⊆ pre, add ∩ pre = ∅, add ∩ del = ∅
  const DomainDef blocks =
      parse_domain(read_file(repo_path("domains/blocksworld.pddl")));
  const auto grounded = ground(blocks, blocks_problem(blocks, 4));
  for (const Action& action : grounded.actions) {
    CHECK(std::includes(action.pre.begin(), action.pre.end(), action.del.begin(),
                        action.del.end()));
    for (AtomId id : action.add) {
      CHECK_FALSE(std::binary_search(action.pre.begin(), action.pre.end(), id));
      CHECK_FALSE(std::binary_search(action.del.begin(), action.del.end(), id));
    }
  }
}

TEST_CASE("apply_discrete") {
  const DomainDef domain = parse_domain(read_file(repo_path("domains/blocksworld.pddl")));
  const auto grounded = ground(domain, blocks_problem(domain, 2));
  const auto& universe = grounded.universe;

  SymbolicState state(universe);
  state.set(*universe->find("ontable", {"a"}));
  state.set(*universe->find("clear", {"a"}));
  state.set(*universe->find("handempty", {}));

  const Action* pick_up_a = nullptr;
  for (const Action& a : grounded.actions) {
    if (a.to_string() == "pick-up(a)") pick_up_a = &a;
  }
  REQUIRE(pick_up_a != nullptr);

  SUBCASE("pick-up leaves only holding") {
    const SymbolicState next = apply_discrete(state, *pick_up_a);
    CHECK(next.count() == 1);
    CHECK(next.test(*universe->find("holding", {"a"})));
  }

  SUBCASE("unsatisfied precondition throws") {
    SymbolicState empty(universe);
    CHECK_THROWS_AS(apply_discrete(empty, *pick_up_a), PreconditionError);
  }

  SUBCASE("empty effects are the identity") {
    Action noop;
    noop.name = "noop";
    const SymbolicState next = apply_discrete(state, noop);
    CHECK(next == state);
  }

  SUBCASE("never leaves the universe") {
    Rng rng(7);
    SymbolicState s = state;
    for (int step = 0; step < 200; ++step) {
      std::vector<const Action*> applicable;
      for (const Action& a : grounded.actions) {
        if (s.contains_all(a.pre)) applicable.push_back(&a);
      }
      REQUIRE_FALSE(applicable.empty());
      s = apply_discrete(s, *applicable[rng.below(applicable.size())]);
      for (AtomId id : s.atom_ids()) CHECK(id < universe->size());
    }
  }
}

TEST_CASE("goal atom with repeated object is rejected by the universe") {
  const DomainDef domain = parse_domain(read_file(repo_path("domains/blocksworld.pddl")));
  const auto grounded = ground(domain, blocks_problem(domain, 2));
  CHECK_THROWS_AS(
      make_state(grounded.universe, {AtomTemplate{"on", {"a", "a"}}}),
      ValidationError);
}
