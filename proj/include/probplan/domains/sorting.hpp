#pragma once

#include <algorithm>
#include <set>

#include "probplan/domains/simulator.hpp"

namespace probplan {

inline constexpr std::string_view kSortingPddl = R"((define (domain sorting)
  (:requirements :strips :typing)
  (:types obj loc)
  (:predicates
    (at ?o - obj ?l - loc)
  )
  (:action move
    :parameters (?o - obj ?from - loc ?to - loc)
    :precondition (and (at ?o ?from))
    :effect (and (at ?o ?to) (not (at ?o ?from)))
  )
))";

// Object sorting: items scattered on the table or already in one of four
// category containers; the goal puts every item into its category's
// container. Tasks in one goal family share the item categories and the
// category -> container assignment and differ in which items start
// displaced, so a demonstration's literal action sequence does not
// transfer.
class SortingSim : public Simulator {
 public:
  explicit SortingSim(int n_objects, int n_categories = 4)
      : Simulator("sorting", pddl::parse_domain(kSortingPddl),
                  make_problem(n_objects)),
        n_objects_(n_objects),
        n_categories_(n_categories) {
    if (n_categories_ < 1 || n_categories_ > geom::kContainerCount) {
      throw std::invalid_argument("category count must lie in [1, 4]");
    }
    at_ = *universe_->predicate_index("at");
    for (std::uint16_t i = 0; i < universe_->objects().size(); ++i) {
      const auto& obj = universe_->objects()[i];
      if (obj.type == "obj") {
        items_.push_back(i);
      } else if (obj.name == "table") {
        table_ = i;
      } else {
        bins_.push_back(i);
      }
    }
  }

  int n_objects() const { return n_objects_; }
  int n_categories() const { return n_categories_; }
  const std::vector<std::uint16_t>& items() const { return items_; }

  SymbolicState reconstruct(const ContinuousState& poses) const override {
    SymbolicState state(universe_);
    for (std::size_t k = 0; k < items_.size(); ++k) {
      const auto item = items_[k];
      const int bin = geom::container_of(poses.positions[item]);
      const std::uint16_t loc = bin >= 0 ? bins_[bin] : table_;
      state.set(*universe_->find(
          "at", {universe_->object_name(item), universe_->object_name(loc)}));
    }
    return state;
  }

  bool is_valid(const SymbolicState& state) const override {
    std::vector<int> count(universe_->objects().size(), 0);
    for (AtomId id = 0; id < universe_->size(); ++id) {
      if (state.test(id) && universe_->atom(id).predicate == at_) {
        ++count[universe_->atom(id).args[0]];
      }
    }
    for (auto item : items_) {
      if (count[item] != 1) return false;
    }
    return true;
  }

  WorldState sample_world(Rng& rng) const override {
    SymbolicState state(universe_);
    for (auto item : items_) {
      const bool on_table = rng.bernoulli(0.5);
      const std::uint16_t loc =
          on_table ? table_ : bins_[rng.below(geom::kContainerCount)];
      state.set(*universe_->find(
          "at", {universe_->object_name(item), universe_->object_name(loc)}));
    }
    return make_world(state, sample_slots(state, rng));
  }

  TaskSpec gen_task(std::uint64_t seed) const override {
    Rng rng(mix_seed(seed, "sorting-task"));
    TaskSpec task;
    task.seed = seed;
    task.domain = tag_;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sorting-%016llx",
                  static_cast<unsigned long long>(seed));
    task.id = buf;

    task.categories.resize(n_objects_);
    for (int& c : task.categories) c = static_cast<int>(rng.below(n_categories_));
    std::vector<int> bins(geom::kContainerCount);
    for (int i = 0; i < geom::kContainerCount; ++i) bins[i] = i;
    rng.shuffle(bins);
    task.category_bins.assign(bins.begin(), bins.begin() + n_categories_);

    const std::vector<bool> displaced = sample_displaced(rng);
    task.initial = build_world(task, displaced, rng);
    task.goal = goal_state(task);
    return task;
  }

  // Same categories and container assignment; a different displaced subset
  // including at least one item the task also displaces is excluded, so the
  // demonstration's literal action sequence cannot solve the task.
  TaskSpec demo_instance(const TaskSpec& task, std::uint64_t seed) const override {
    Rng rng(mix_seed(seed, "sorting-demo"));
    TaskSpec demo = task;
    demo.id = task.id + "+demo";
    demo.seed = seed;

    std::vector<bool> task_displaced(n_objects_, false);
    for (int k = 0; k < n_objects_; ++k) {
      task_displaced[k] = task.initial.symbolic.test(table_atom(k));
    }
    std::vector<bool> displaced;
    for (int attempt = 0; attempt < 100; ++attempt) {
      displaced = sample_displaced(rng);
      bool leaves_one = false;
      for (int k = 0; k < n_objects_; ++k) {
        leaves_one |= (task_displaced[k] && !displaced[k]);
      }
      if (leaves_one) break;
      if (attempt == 99) break;  // degenerate family (e.g. a single object)
    }
    demo.initial = build_world(demo, displaced, rng);
    return demo;
  }

 protected:
  ContinuousState layout(const SymbolicState& symbolic,
                         const std::vector<int>& slots) const override {
    ContinuousState poses;
    poses.positions.assign(universe_->objects().size(), {0.0, 0.0, 0.0});
    for (int b = 0; b < geom::kContainerCount; ++b) {
      poses.positions[bins_[b]] = geom::container_pose(b);
    }
    poses.positions[table_] = {0.5, 0.5, 0.0};
    for (std::size_t k = 0; k < items_.size(); ++k) {
      const auto item = items_[k];
      bool placed = false;
      for (int b = 0; b < geom::kContainerCount; ++b) {
        if (symbolic.test(*universe_->find(
                "at", {universe_->object_name(item), universe_->object_name(bins_[b])}))) {
          poses.positions[item] = geom::container_item_pose(b, static_cast<int>(k));
          placed = true;
          break;
        }
      }
      if (!placed) {
        if (!symbolic.test(table_atom(static_cast<int>(k))) || slots[item] < 0) {
          throw std::invalid_argument("state does not place item " +
                                      universe_->object_name(item));
        }
        poses.positions[item] = geom::table_slot_pose(slots[item]);
      }
    }
    return poses;
  }

  bool needs_slot(const SymbolicState& state, std::uint16_t object) const override {
    const auto& obj = universe_->objects()[object];
    if (obj.type != "obj") return false;
    return state.test(*universe_->find("at", {obj.name, "table"}));
  }

 private:
  static pddl::ProblemDef make_problem(int n_objects) {
    if (n_objects < 1 || n_objects > 40) {
      throw std::invalid_argument("object count must lie in [1, 40]");
    }
    pddl::ProblemDef problem;
    problem.name = "sorting";
    problem.domain_name = "sorting";
    for (int i = 0; i < geom::kContainerCount; ++i) {
      problem.objects.push_back({"bin" + std::to_string(i + 1), "loc"});
    }
    problem.objects.push_back({"table", "loc"});
    for (int i = 0; i < n_objects; ++i) {
      problem.objects.push_back({"o" + std::to_string(i + 1), "obj"});
    }
    std::sort(problem.objects.begin(), problem.objects.end());
    return problem;
  }

  AtomId table_atom(int item_index) const {
    return *universe_->find("at", {universe_->object_name(items_[item_index]), "table"});
  }

  std::vector<bool> sample_displaced(Rng& rng) const {
    std::vector<bool> displaced(n_objects_, false);
    for (int attempt = 0; attempt < 100; ++attempt) {
      bool any = false;
      for (int k = 0; k < n_objects_; ++k) {
        displaced[k] = rng.bernoulli(0.5);
        any |= displaced[k];
      }
      if (any) return displaced;
    }
    displaced[0] = true;
    return displaced;
  }

  WorldState build_world(const TaskSpec& task, const std::vector<bool>& displaced,
                         Rng& rng) const {
    SymbolicState state(universe_);
    for (int k = 0; k < n_objects_; ++k) {
      if (displaced[k]) {
        state.set(table_atom(k));
      } else {
        const int bin = task.category_bins[task.categories[k]];
        state.set(*universe_->find("at", {universe_->object_name(items_[k]),
                                          universe_->object_name(bins_[bin])}));
      }
    }
    return make_world(state, sample_slots(state, rng));
  }

  std::vector<int> sample_slots(const SymbolicState& state, Rng& rng) const {
    std::vector<int> cells(geom::kTableSlots);
    for (int i = 0; i < geom::kTableSlots; ++i) cells[i] = i;
    rng.shuffle(cells);
    std::vector<int> slots(universe_->objects().size(), -1);
    int next = 0;
    for (int k = 0; k < n_objects_; ++k) {
      if (state.test(table_atom(k))) slots[items_[k]] = cells[next++];
    }
    return slots;
  }

  SymbolicState goal_state(const TaskSpec& task) const {
    SymbolicState goal(universe_);
    for (int k = 0; k < n_objects_; ++k) {
      const int bin = task.category_bins[task.categories[k]];
      goal.set(*universe_->find("at", {universe_->object_name(items_[k]),
                                       universe_->object_name(bins_[bin])}));
    }
    return goal;
  }

  int n_objects_;
  int n_categories_;
  std::uint32_t at_ = 0;
  std::vector<std::uint16_t> items_;
  std::vector<std::uint16_t> bins_;
  std::uint16_t table_ = 0;
};

inline std::shared_ptr<SortingSim> make_sorting_sim(int n_objects,
                                                    int n_categories = 4) {
  return std::make_shared<SortingSim>(n_objects, n_categories);
}

inline TaskSpec gen_sorting_task(int n_objects, int n_categories, std::uint64_t seed) {
  return SortingSim(n_objects, n_categories).gen_task(seed);
}

}  // namespace probplan
