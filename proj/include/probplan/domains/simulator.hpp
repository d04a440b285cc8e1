#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "probplan/domains/geometry.hpp"
#include "probplan/grounding/continuous_state.hpp"
#include "probplan/pddl/parser.hpp"
#include "probplan/search/planner.hpp"
#include "probplan/util/rng.hpp"

namespace probplan {

// Ground-truth world: the symbolic state, the poses derived from it, and
// the table-slot assignment that pins down where free-standing objects sit.
struct WorldState {
  SymbolicState symbolic;
  ContinuousState poses;
  std::vector<int> slots;        // per object; -1 when not directly on the table
  bool attempt_failed = false;   // last execute() attempt had a false precondition
};

struct TaskSpec {
  std::string id;
  std::string domain;  // simulator tag
  WorldState initial;
  SymbolicState goal;
  std::uint64_t seed = 0;
  // Sorting only: per-object category and the category -> container map.
  std::vector<int> categories;
  std::vector<int> category_bins;
};

// Continuous-state trajectory with action annotations. Replaying the
// actions from the first frame's symbolic state reaches the task goal.
struct Demonstration {
  std::string task_id;
  std::vector<ContinuousState> frames;
  std::vector<Action> actions;

  void validate() const {
    if (frames.size() != actions.size() + 1) {
      throw std::invalid_argument("demonstration needs |frames| == |actions| + 1");
    }
  }
};

class UnknownActionError : public std::runtime_error {
 public:
  explicit UnknownActionError(const std::string& action)
      : std::runtime_error("unknown action: " + action) {}
};

// Deterministic pose-level simulator over a grounded domain. Subclasses
// supply the domain-specific layout, symbolic<->pose reconstruction, state
// validity, and task generation.
class Simulator {
 public:
  virtual ~Simulator() = default;

  const std::string& tag() const { return tag_; }
  const pddl::DomainDef& domain() const { return domain_; }
  const std::shared_ptr<const AtomUniverse>& universe() const { return universe_; }
  const std::vector<Action>& actions() const { return actions_; }

  const Action* find_action(const std::string& text) const {
    auto it = action_index_.find(text);
    return it == action_index_.end() ? nullptr : &actions_[it->second];
  }

  WorldState make_world(const SymbolicState& symbolic, std::vector<int> slots) const {
    WorldState world;
    world.symbolic = symbolic;
    world.slots = std::move(slots);
    world.poses = layout(world.symbolic, world.slots);
    return world;
  }

  // Attempt semantics: a false precondition leaves the world unchanged and
  // only sets the failure flag.
  WorldState execute(const WorldState& world, const Action& action) const {
    if (action_index_.find(action.to_string()) == action_index_.end()) {
      throw UnknownActionError(action.to_string());
    }
    if (!world.symbolic.contains_all(action.pre)) {
      WorldState unchanged = world;
      unchanged.attempt_failed = true;
      return unchanged;
    }
    WorldState next;
    next.symbolic = apply_discrete(world.symbolic, action);
    next.slots = update_slots(world, next.symbolic);
    next.poses = layout(next.symbolic, next.slots);
    next.attempt_failed = false;
    return next;
  }

  virtual SymbolicState reconstruct(const ContinuousState& poses) const = 0;
  virtual bool is_valid(const SymbolicState& state) const = 0;
  virtual WorldState sample_world(Rng& rng) const = 0;
  virtual TaskSpec gen_task(std::uint64_t seed) const = 0;

  // A sibling instance of the same goal family, suitable as the source of
  // the demonstration for this task.
  virtual TaskSpec demo_instance(const TaskSpec& task, std::uint64_t seed) const = 0;

 protected:
  Simulator(std::string tag, pddl::DomainDef domain, pddl::ProblemDef problem)
      : tag_(std::move(tag)), domain_(std::move(domain)) {
    auto grounded = pddl::ground(domain_, problem);
    universe_ = grounded.universe;
    actions_ = std::move(grounded.actions);
    for (std::size_t i = 0; i < actions_.size(); ++i) {
      action_index_.emplace(actions_[i].to_string(), i);
    }
  }

  virtual ContinuousState layout(const SymbolicState& symbolic,
                                 const std::vector<int>& slots) const = 0;

  // New slot assignment after a symbolic transition: keep slots of objects
  // still directly on the table, give newly-tabled objects the lowest free
  // slot, clear the rest.
  std::vector<int> update_slots(const WorldState& world,
                                const SymbolicState& next) const {
    const std::size_t n = universe_->objects().size();
    std::vector<int> slots(n, -1);
    std::vector<bool> used(geom::kTableSlots, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (needs_slot(next, static_cast<std::uint16_t>(i)) && world.slots[i] >= 0) {
        slots[i] = world.slots[i];
        used[world.slots[i]] = true;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!needs_slot(next, static_cast<std::uint16_t>(i)) || slots[i] >= 0) continue;
      for (int s = 0; s < geom::kTableSlots; ++s) {
        if (!used[s]) {
          slots[i] = s;
          used[s] = true;
          break;
        }
      }
      if (slots[i] < 0) throw std::runtime_error("table grid exhausted");
    }
    return slots;
  }

  virtual bool needs_slot(const SymbolicState& state, std::uint16_t object) const = 0;

  std::string tag_;
  pddl::DomainDef domain_;
  std::shared_ptr<const AtomUniverse> universe_;
  std::vector<Action> actions_;
  std::unordered_map<std::string, std::size_t> action_index_;
};

inline bool check_success(const WorldState& world, const SymbolicState& goal) {
  return world.symbolic.satisfies(goal);
}

// Solves the task on ground truth, executes the plan, and records the
// trajectory. Retries with a larger node budget if the search runs out.
inline Demonstration gen_demo(const Simulator& sim, const TaskSpec& task,
                              SearchConfig cfg = {}) {
  PlanResult plan;
  for (int attempt = 0; attempt < 4; ++attempt) {
    plan = symbolic_plan(task.initial.symbolic, task.goal, sim.actions(), cfg);
    if (plan.status == PlanStatus::matched) break;
    cfg.node_budget *= 4;
  }
  if (plan.status != PlanStatus::matched) {
    throw std::runtime_error("demonstration planning exhausted its budget for task " +
                             task.id);
  }

  Demonstration demo;
  demo.task_id = task.id;
  WorldState world = task.initial;
  demo.frames.push_back(world.poses);
  for (const Action& action : plan.plan) {
    world = sim.execute(world, action);
    if (world.attempt_failed) {
      throw std::runtime_error("generated plan failed to execute for task " + task.id);
    }
    demo.actions.push_back(action);
    demo.frames.push_back(world.poses);
  }
  return demo;
}

// Replays the action annotations from the first frame's symbolic state and
// returns one symbolic state per frame: the SGN training labels.
inline std::vector<SymbolicState> aligned_symbolic_states(const Simulator& sim,
                                                          const Demonstration& demo) {
  demo.validate();
  std::vector<SymbolicState> states;
  states.reserve(demo.frames.size());
  states.push_back(sim.reconstruct(demo.frames.front()));
  for (const Action& action : demo.actions) {
    states.push_back(apply_discrete(states.back(), action));  // throws if corrupt
  }
  return states;
}

}  // namespace probplan
