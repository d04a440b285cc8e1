#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <json.hpp>
#include <queue>
#include <span>
#include <unordered_map>
#include <vector>

#include "probplan/belief/belief.hpp"

namespace probplan {

struct SearchConfig {
  int max_depth = 40;
  int node_budget = 20000;           // total nodes stored, root included
  double applicability_floor = 0.1;  // ε: prune near-inapplicable actions
  double goal_tolerance = -1.0;      // δ; negative means auto (see below)
  bool weighted_goal = false;
  int expansion_width = 24;  // belief search: children kept per expansion,
                             // ranked by applicability
  // Belief-search step cost: step_cost - surprise_weight·log(applicability).
  double step_cost = 1.0;
  double surprise_weight = 1.0;

  void validate() const {
    if (max_depth < 1 || node_budget < 1 || expansion_width < 1) {
      throw std::invalid_argument("search budgets must be at least 1");
    }
    if (applicability_floor < 0.0 || applicability_floor > 1.0) {
      throw std::invalid_argument("applicability floor must lie in [0,1]");
    }
    if (surprise_weight < 0.0 || step_cost < 0.0) {
      throw std::invalid_argument("step costs must be non-negative");
    }
  }
};

enum class PlanStatus { matched, budget_exhausted, no_improvement };

inline const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::matched: return "matched";
    case PlanStatus::budget_exhausted: return "budget_exhausted";
    case PlanStatus::no_improvement: return "no_improvement";
  }
  return "?";
}

struct PlanResult {
  std::vector<Action> plan;
  double final_belief_distance = 0.0;
  PlanStatus status = PlanStatus::no_improvement;
  int nodes_generated = 0;
};

inline nlohmann::json plan_to_json(const PlanResult& result) {
  nlohmann::json actions = nlohmann::json::array();
  for (const Action& a : result.plan) actions.push_back(a.to_string());
  return {{"status", to_string(result.status)},
          {"final_distance", result.final_belief_distance},
          {"plan", actions}};
}

// Default δ: one percent per goal-asserted atom. For deterministic goals
// this is far below the smallest possible nonzero distance, so "matched"
// coincides with exact attainment.
inline double auto_goal_tolerance(const BeliefState& goal) {
  std::size_t asserted = 0;
  for (AtomId id = 0; id < goal.size(); ++id) {
    if (goal[id] > 0.5) ++asserted;
  }
  return 0.01 * static_cast<double>(std::max<std::size_t>(asserted, 1));
}

namespace detail {

struct SearchNode {
  int parent = -1;
  int action = -1;  // index into the action list
  int depth = 0;
  double g = 0.0;     // accumulated step cost along the path
  double dist = 0.0;  // search distance to the goal
  double attempt_dist = 0.0;  // attempt-semantics distance (reported)
};

// The belief reached by conditioning the attempt mixture on success: the
// precondition held (its atoms were true), then the effects applied.
inline BeliefState condition_on_success(const BeliefState& belief,
                                        const Action& action) {
  BeliefState next = belief;
  for (AtomId id : action.pre) next.set(id, 1.0);
  for (AtomId id : action.del) next.set(id, 0.0);
  for (AtomId id : action.add) next.set(id, 1.0);
  return next;
}

struct QueueEntry {
  double f;  // depth + distance; pure distance stalls on mixture plateaus
  double dist;
  std::uint64_t seq;
  int node;

  bool operator>(const QueueEntry& other) const {
    if (f != other.f) return f > other.f;
    if (dist != other.dist) return dist > other.dist;
    return seq > other.seq;
  }
};

using MinQueue =
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

// Key for duplicate detection in belief space: marginals rounded to six
// decimals, so revisits that differ only by float noise merge.
inline std::vector<std::int64_t> rounded_key(const BeliefState& belief) {
  std::vector<std::int64_t> key(belief.size());
  for (AtomId id = 0; id < belief.size(); ++id) {
    key[id] = std::llround(belief[id] * 1e6);
  }
  return key;
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::int64_t v : key) hash_combine(h, static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

template <typename NodePayload>
std::vector<Action> extract_plan(const std::vector<SearchNode>& nodes,
                                 const std::vector<NodePayload>&,
                                 std::span<const Action> actions, int leaf) {
  std::vector<Action> plan;
  for (int n = leaf; nodes[n].parent >= 0; n = nodes[n].parent) {
    plan.push_back(actions[nodes[n].action]);
  }
  std::reverse(plan.begin(), plan.end());
  return plan;
}

}  // namespace detail

// Forward best-first search over factored beliefs. A plan is a success
// trajectory of attempts, so the search expands success-conditioned
// children (the failure branch of each attempt is the parent belief, which
// the tree already holds) and charges each step its improbability,
// step_cost - surprise_weight·log(applicability); guidance is accumulated
// cost plus distance to the goal distribution. Children come from every
// action whose applicability clears ε, generated in descending
// applicability order. All *reported* quantities stay in attempt
// semantics: alongside the conditioned belief each node carries the belief
// obtained by applying the same actions with apply_attempt, and the
// incumbent minimizes that attempt-semantics distance (plan length breaks
// ties). The search stops when the incumbent distance drops to δ, the node
// budget is exhausted, or the frontier empties. On deterministic beliefs
// conditioning coincides with apply_attempt and the search reduces to the
// classical one.
inline PlanResult continuous_plan(const BeliefState& init, const BeliefState& goal,
                                  std::span<const Action> actions,
                                  const SearchConfig& cfg = {},
                                  std::span<const std::size_t> excluded_first = {}) {
  cfg.validate();
  if (!init.same_universe(goal)) throw UniverseMismatchError();
  const double delta =
      cfg.goal_tolerance >= 0.0 ? cfg.goal_tolerance : auto_goal_tolerance(goal);
  std::vector<bool> root_excluded(actions.size(), false);
  for (std::size_t idx : excluded_first) {
    if (idx < actions.size()) root_excluded[idx] = true;
  }

  std::vector<detail::SearchNode> nodes;
  std::vector<BeliefState> search_beliefs;   // success-conditioned
  std::vector<BeliefState> attempt_beliefs;  // attempt-semantics mixture
  std::unordered_map<std::vector<std::int64_t>, int, detail::KeyHash> seen;
  detail::MinQueue open;

  const double init_dist = goal_distance(init, goal, cfg.weighted_goal);
  nodes.push_back({-1, -1, 0, 0.0, init_dist, init_dist});
  search_beliefs.push_back(init);
  attempt_beliefs.push_back(init);
  seen.emplace(detail::rounded_key(init), 0);

  int incumbent = 0;
  // Best node so far: smallest conditioned distance (the complete fictional
  // solution), then smallest attempt-semantics distance, then the shortest
  // plan. Only nodes that do not regress in attempt semantics relative to
  // the start qualify, which keeps the reported distance monotone.
  auto better = [&](int a, int b) {
    if (nodes[a].attempt_dist > init_dist) return false;
    if (nodes[a].dist != nodes[b].dist) return nodes[a].dist < nodes[b].dist;
    if (nodes[a].attempt_dist != nodes[b].attempt_dist) {
      return nodes[a].attempt_dist < nodes[b].attempt_dist;
    }
    return nodes[a].depth < nodes[b].depth;
  };

  PlanStatus status = PlanStatus::no_improvement;
  std::uint64_t seq = 0;
  if (init_dist <= delta) {
    status = PlanStatus::matched;
  } else {
    open.push({init_dist, init_dist, seq++, 0});

    struct Child {
      double app;
      int action;
    };
    std::vector<Child> children;

    bool done = false;
    while (!open.empty() && !done) {
      const int current = open.top().node;
      open.pop();
      if (nodes[current].depth >= cfg.max_depth) continue;

      children.clear();
      for (int ai = 0; ai < static_cast<int>(actions.size()); ++ai) {
        if (current == 0 && root_excluded[ai]) continue;
        const double app = applicability(search_beliefs[current], actions[ai]);
        if (app > cfg.applicability_floor) children.push_back({app, ai});
      }
      std::stable_sort(children.begin(), children.end(),
                       [](const Child& a, const Child& b) { return a.app > b.app; });
      // Trim the low-applicability tail, but never drop an action that is
      // more likely applicable than not.
      while (static_cast<int>(children.size()) > cfg.expansion_width &&
             children.back().app < 0.5) {
        children.pop_back();
      }

      for (const Child& child : children) {
        if (static_cast<int>(nodes.size()) >= cfg.node_budget) {
          status = PlanStatus::budget_exhausted;
          done = true;
          break;
        }
        BeliefState next =
            detail::condition_on_success(search_beliefs[current], actions[child.action]);
        auto key = detail::rounded_key(next);
        if (seen.contains(key)) continue;

        const double dist = goal_distance(next, goal, cfg.weighted_goal);
        BeliefState attempt =
            apply_attempt(attempt_beliefs[current], actions[child.action]);
        const double attempt_dist = goal_distance(attempt, goal, cfg.weighted_goal);
        const double g = nodes[current].g + cfg.step_cost -
                         cfg.surprise_weight * std::log(child.app);
        const int depth = nodes[current].depth + 1;
        const int id = static_cast<int>(nodes.size());
        nodes.push_back({current, child.action, depth, g, dist, attempt_dist});
        search_beliefs.push_back(std::move(next));
        attempt_beliefs.push_back(std::move(attempt));
        seen.emplace(std::move(key), id);
        if (better(id, incumbent)) incumbent = id;
        if (nodes[id].attempt_dist <= delta) {
          incumbent = id;
          status = PlanStatus::matched;
          done = true;
          break;
        }
        open.push({g + dist, dist, seq++, id});
      }
    }
  }

  PlanResult result;
  result.status = status;
  result.nodes_generated = static_cast<int>(nodes.size());
  result.plan = detail::extract_plan(nodes, search_beliefs, actions, incumbent);
  result.final_belief_distance = nodes[incumbent].attempt_dist;
  return result;
}

// Classical forward best-first search ordered by plan length plus the
// goal-count heuristic (number of unsatisfied goal atoms), with the exact
// goal test goal ⊆ state.
inline PlanResult symbolic_plan(const SymbolicState& init, const SymbolicState& goal,
                                std::span<const Action> actions,
                                const SearchConfig& cfg = {},
                                std::span<const std::size_t> excluded_first = {}) {
  cfg.validate();
  if (init.universe()->size() != goal.universe()->size()) {
    throw UniverseMismatchError();
  }
  std::vector<bool> root_excluded(actions.size(), false);
  for (std::size_t idx : excluded_first) {
    if (idx < actions.size()) root_excluded[idx] = true;
  }

  const std::vector<AtomId> goal_ids = goal.atom_ids();
  auto heuristic = [&](const SymbolicState& state) {
    double count = 0.0;
    for (AtomId id : goal_ids) {
      if (!state.test(id)) count += 1.0;
    }
    return count;
  };

  std::vector<detail::SearchNode> nodes;
  std::vector<SymbolicState> states;
  std::unordered_map<std::uint64_t, std::vector<int>> seen;
  detail::MinQueue open;

  auto visited = [&](const SymbolicState& s) {
    auto it = seen.find(s.hash());
    if (it == seen.end()) return false;
    for (int idx : it->second) {
      if (states[idx] == s) return true;
    }
    return false;
  };

  nodes.push_back({-1, -1, 0, 0.0, heuristic(init), heuristic(init)});
  states.push_back(init);
  seen[init.hash()].push_back(0);

  int incumbent = 0;
  auto better = [&](int a, int b) {
    if (nodes[a].dist != nodes[b].dist) return nodes[a].dist < nodes[b].dist;
    return nodes[a].depth < nodes[b].depth;
  };

  PlanStatus status = PlanStatus::no_improvement;
  std::uint64_t seq = 0;
  if (init.satisfies(goal)) {
    status = PlanStatus::matched;
  } else {
    open.push({nodes[0].dist, nodes[0].dist, seq++, 0});
    bool done = false;
    while (!open.empty() && !done) {
      const int current = open.top().node;
      open.pop();
      if (nodes[current].depth >= cfg.max_depth) continue;

      for (int ai = 0; ai < static_cast<int>(actions.size()) && !done; ++ai) {
        if (current == 0 && root_excluded[ai]) continue;
        if (!states[current].contains_all(actions[ai].pre)) continue;
        if (static_cast<int>(nodes.size()) >= cfg.node_budget) {
          status = PlanStatus::budget_exhausted;
          done = true;
          break;
        }
        SymbolicState next = apply_discrete(states[current], actions[ai]);
        if (visited(next)) continue;

        const double h = heuristic(next);
        const int depth = nodes[current].depth + 1;
        const int id = static_cast<int>(nodes.size());
        nodes.push_back({current, ai, depth, static_cast<double>(depth), h, h});
        seen[next.hash()].push_back(id);
        const bool reached = next.satisfies(goal);
        states.push_back(std::move(next));
        if (better(id, incumbent)) incumbent = id;
        if (reached) {
          status = PlanStatus::matched;
          incumbent = id;
          done = true;
          break;
        }
        open.push({static_cast<double>(depth) + h, h, seq++, id});
      }
    }
  }

  PlanResult result;
  result.status = status;
  result.nodes_generated = static_cast<int>(nodes.size());
  result.plan = detail::extract_plan(nodes, states, actions, incumbent);
  result.final_belief_distance = nodes[incumbent].dist;
  return result;
}

}  // namespace probplan
