#pragma once

#include <algorithm>
#include <map>
#include <set>

#include "probplan/domains/simulator.hpp"

namespace probplan {

inline constexpr std::string_view kBlocksworldPddl = R"((define (domain blocksworld)
  (:requirements :strips)
  (:predicates
    (on ?x ?y)
    (ontable ?x)
    (clear ?x)
    (holding ?x)
    (handempty)
  )
  (:action pick-up
    :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x)
                 (not (ontable ?x)) (not (clear ?x)) (not (handempty)))
  )
  (:action put-down
    :parameters (?x)
    :precondition (and (holding ?x))
    :effect (and (ontable ?x) (clear ?x) (handempty)
                 (not (holding ?x)))
  )
  (:action stack
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty)
                 (not (holding ?x)) (not (clear ?y)))
  )
  (:action unstack
    :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y)
                 (not (on ?x ?y)) (not (clear ?x)) (not (handempty)))
  )
))";

class StackingSim : public Simulator {
 public:
  explicit StackingSim(int n_blocks)
      : Simulator("stacking", pddl::parse_domain(kBlocksworldPddl),
                  make_problem(n_blocks)),
        n_blocks_(n_blocks) {
    on_ = *universe_->predicate_index("on");
    ontable_ = *universe_->predicate_index("ontable");
    clear_ = *universe_->predicate_index("clear");
    holding_ = *universe_->predicate_index("holding");
    handempty_atom_ = *universe_->find("handempty", {});
  }

  int n_blocks() const { return n_blocks_; }

  SymbolicState reconstruct(const ContinuousState& poses) const override {
    SymbolicState state(universe_);
    bool any_held = false;
    // columns keyed by the rounded (x, y) footprint
    std::map<std::pair<long, long>, std::vector<std::pair<double, int>>> columns;
    for (int i = 0; i < n_blocks_; ++i) {
      const auto& p = poses.positions[i];
      if (poses.is_held(i) || geom::near(p, geom::kHandPose, 1e-9)) {
        state.set(*universe_->find("holding", {block(i)}));
        any_held = true;
        continue;
      }
      columns[{std::lround(p[0] * 1e6), std::lround(p[1] * 1e6)}].push_back(
          {p[2], i});
    }
    for (auto& [key, column] : columns) {
      std::sort(column.begin(), column.end());
      state.set(*universe_->find("ontable", {block(column.front().second)}));
      for (std::size_t k = 1; k < column.size(); ++k) {
        state.set(*universe_->find(
            "on", {block(column[k].second), block(column[k - 1].second)}));
      }
      state.set(*universe_->find("clear", {block(column.back().second)}));
    }
    if (!any_held) state.set(handempty_atom_);
    return state;
  }

  // Full physical consistency, not just the manual-heuristics rules: every
  // block is held, on the table, or on exactly one block; towers are
  // acyclic; clear and handempty are exactly the derived atoms.
  bool is_valid(const SymbolicState& state) const override {
    std::vector<int> below(n_blocks_, -1);   // below[x] = y when on(x,y)
    std::vector<int> above(n_blocks_, -1);   // above[y] = x when on(x,y)
    std::vector<bool> held(n_blocks_, false);
    std::vector<bool> table(n_blocks_, false);
    std::vector<bool> clear(n_blocks_, false);
    int held_count = 0;

    for (AtomId id = 0; id < universe_->size(); ++id) {
      if (!state.test(id)) continue;
      const auto& atom = universe_->atom(id);
      if (atom.predicate == on_) {
        const int x = atom.args[0];
        const int y = atom.args[1];
        if (below[x] != -1 || above[y] != -1) return false;
        below[x] = y;
        above[y] = x;
      } else if (atom.predicate == ontable_) {
        table[atom.args[0]] = true;
      } else if (atom.predicate == holding_) {
        if (held[atom.args[0]]) return false;
        held[atom.args[0]] = true;
        ++held_count;
      } else if (atom.predicate == clear_) {
        clear[atom.args[0]] = true;
      }
    }

    if (held_count > 1) return false;
    if (state.test(handempty_atom_) != (held_count == 0)) return false;

    std::vector<bool> supported(n_blocks_, false);
    for (int i = 0; i < n_blocks_; ++i) {
      if (held[i]) {
        if (table[i] || below[i] != -1 || above[i] != -1 || clear[i]) return false;
        supported[i] = true;
      } else if (table[i] == (below[i] != -1)) {
        return false;  // exactly one support
      }
      if (!held[i] && clear[i] != (above[i] == -1)) return false;
    }
    // every tower is anchored at the table
    for (int i = 0; i < n_blocks_; ++i) {
      if (!table[i]) continue;
      int cur = i;
      while (cur != -1) {
        if (supported[cur]) return false;
        supported[cur] = true;
        cur = above[cur];
      }
    }
    for (int i = 0; i < n_blocks_; ++i) {
      if (!supported[i]) return false;
    }
    return true;
  }

  WorldState sample_world(Rng& rng) const override {
    const SymbolicState symbolic = sample_config(rng);
    return make_world(symbolic, sample_slots(symbolic, rng));
  }

  TaskSpec gen_task(std::uint64_t seed) const override {
    Rng rng(mix_seed(seed, "stacking-task"));
    TaskSpec task;
    task.seed = seed;
    task.domain = tag_;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "stacking-%016llx",
                  static_cast<unsigned long long>(seed));
    task.id = buf;
    const SymbolicState init = sample_config(rng);
    task.initial = make_world(init, sample_slots(init, rng));
    task.goal = support_atoms(sample_config(rng));
    return task;
  }

  TaskSpec demo_instance(const TaskSpec& task, std::uint64_t seed) const override {
    Rng rng(mix_seed(seed, "stacking-demo"));
    TaskSpec demo = task;
    demo.id = task.id + "+demo";
    demo.seed = seed;
    const SymbolicState init = sample_config(rng);
    demo.initial = make_world(init, sample_slots(init, rng));
    return demo;  // same goal family: identical target configuration
  }

  // Completes a support-only goal (on/ontable atoms placing every block)
  // with the implied clear and handempty atoms.
  SymbolicState complete_config(const SymbolicState& support) const {
    SymbolicState full = support;
    std::vector<bool> placed(n_blocks_, false);
    std::vector<bool> covered(n_blocks_, false);
    for (AtomId id = 0; id < universe_->size(); ++id) {
      if (!support.test(id)) continue;
      const auto& atom = universe_->atom(id);
      if (atom.predicate == on_) {
        placed[atom.args[0]] = true;
        covered[atom.args[1]] = true;
      } else if (atom.predicate == ontable_) {
        placed[atom.args[0]] = true;
      }
    }
    for (int i = 0; i < n_blocks_; ++i) {
      if (!placed[i]) {
        throw std::invalid_argument("support atoms do not place every block");
      }
      if (!covered[i]) full.set(*universe_->find("clear", {block(i)}));
    }
    full.set(handempty_atom_);
    return full;
  }

 protected:
  ContinuousState layout(const SymbolicState& symbolic,
                         const std::vector<int>& slots) const override {
    ContinuousState poses;
    poses.positions.assign(n_blocks_, {0.0, 0.0, 0.0});
    poses.held.assign(n_blocks_, 0);
    std::vector<int> above(n_blocks_, -1);
    std::vector<bool> done(n_blocks_, false);
    std::vector<int> bases;
    for (AtomId id = 0; id < universe_->size(); ++id) {
      if (!symbolic.test(id)) continue;
      const auto& atom = universe_->atom(id);
      if (atom.predicate == on_) {
        above[atom.args[1]] = atom.args[0];
      } else if (atom.predicate == ontable_) {
        bases.push_back(atom.args[0]);
      } else if (atom.predicate == holding_) {
        poses.positions[atom.args[0]] = geom::kHandPose;
        poses.held[atom.args[0]] = 1;
        done[atom.args[0]] = true;
      }
    }
    for (int base : bases) {
      if (slots[base] < 0) throw std::invalid_argument("table block without a slot");
      poses.positions[base] = geom::table_slot_pose(slots[base]);
      done[base] = true;
      int cur = base;
      while (above[cur] != -1) {
        const int next = above[cur];
        poses.positions[next] = poses.positions[cur];
        poses.positions[next][2] += geom::kBlockSize;
        done[next] = true;
        cur = next;
      }
    }
    for (int i = 0; i < n_blocks_; ++i) {
      if (!done[i]) {
        throw std::invalid_argument("state does not place block " + block(i));
      }
    }
    return poses;
  }

  bool needs_slot(const SymbolicState& state, std::uint16_t object) const override {
    return state.test(*universe_->find("ontable", {block(object)}));
  }

 private:
  static pddl::ProblemDef make_problem(int n_blocks) {
    if (n_blocks < 2 || n_blocks > 26) {
      throw std::invalid_argument("block count must lie in [2, 26]");
    }
    pddl::ProblemDef problem;
    problem.name = "stacking";
    problem.domain_name = "blocksworld";
    for (int i = 0; i < n_blocks; ++i) {
      problem.objects.push_back({std::string(1, static_cast<char>('a' + i))});
    }
    return problem;
  }

  std::string block(int i) const { return universe_->objects()[i].name; }

  // Random partition of the blocks into towers, bottom-up.
  SymbolicState sample_config(Rng& rng) const {
    std::vector<int> order(n_blocks_);
    for (int i = 0; i < n_blocks_; ++i) order[i] = i;
    rng.shuffle(order);

    SymbolicState state(universe_);
    state.set(handempty_atom_);
    std::size_t i = 0;
    while (i < order.size()) {
      const std::size_t height = 1 + rng.below(order.size() - i);
      state.set(*universe_->find("ontable", {block(order[i])}));
      for (std::size_t k = 1; k < height; ++k) {
        state.set(*universe_->find("on", {block(order[i + k]), block(order[i + k - 1])}));
      }
      state.set(*universe_->find("clear", {block(order[i + height - 1])}));
      i += height;
    }
    return state;
  }

  std::vector<int> sample_slots(const SymbolicState& symbolic, Rng& rng) const {
    std::vector<int> cells(geom::kTableSlots);
    for (int i = 0; i < geom::kTableSlots; ++i) cells[i] = i;
    rng.shuffle(cells);
    std::vector<int> slots(n_blocks_, -1);
    int next = 0;
    for (int i = 0; i < n_blocks_; ++i) {
      if (symbolic.test(*universe_->find("ontable", {block(i)}))) {
        slots[i] = cells[next++];
      }
    }
    return slots;
  }

  SymbolicState support_atoms(const SymbolicState& full) const {
    SymbolicState goal(universe_);
    for (AtomId id = 0; id < universe_->size(); ++id) {
      if (!full.test(id)) continue;
      const auto pred = universe_->atom(id).predicate;
      if (pred == on_ || pred == ontable_) goal.set(id);
    }
    return goal;
  }

  int n_blocks_;
  std::uint32_t on_, ontable_, clear_, holding_;
  AtomId handempty_atom_;
};

inline std::shared_ptr<StackingSim> make_stacking_sim(int n_blocks) {
  return std::make_shared<StackingSim>(n_blocks);
}

inline TaskSpec gen_stacking_task(int n_blocks, std::uint64_t seed) {
  return StackingSim(n_blocks).gen_task(seed);
}

}  // namespace probplan
