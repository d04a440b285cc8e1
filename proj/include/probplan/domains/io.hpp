#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <span>
#include <utility>

#include "probplan/domains/sorting.hpp"
#include "probplan/domains/stacking.hpp"

namespace probplan {

namespace detail {

inline nlohmann::json atoms_to_json(const SymbolicState& state) {
  nlohmann::json out = nlohmann::json::array();
  for (AtomId id : state.atom_ids()) out.push_back(state.universe()->text(id));
  return out;
}

inline SymbolicState atoms_from_json(const nlohmann::json& j,
                                     const std::shared_ptr<const AtomUniverse>& universe) {
  SymbolicState state(universe);
  for (const auto& item : j) {
    const auto id = universe->find(item.get<std::string>());
    if (!id) {
      throw std::invalid_argument("unknown atom: " + item.get<std::string>());
    }
    state.set(*id);
  }
  return state;
}

inline nlohmann::json continuous_to_json(const ContinuousState& state) {
  nlohmann::json frame;
  frame["positions"] = state.positions;
  if (!state.held.empty()) frame["held"] = state.held;
  return frame;
}

inline ContinuousState continuous_from_json(const nlohmann::json& j,
                                            std::size_t n_objects) {
  ContinuousState state;
  state.positions = j.at("positions").get<std::vector<std::array<double, 3>>>();
  if (j.contains("held")) state.held = j.at("held").get<std::vector<std::uint8_t>>();
  if (state.positions.size() != n_objects) {
    throw std::invalid_argument("frame object count does not match the universe");
  }
  state.validate();
  return state;
}

}  // namespace detail

// The file also records the simulator parameters, so a loader can rebuild
// the right simulator from the file alone.
inline nlohmann::json task_to_json(const TaskSpec& task) {
  nlohmann::json j;
  j["id"] = task.id;
  j["domain"] = task.domain;
  j["seed"] = task.seed;
  if (task.categories.empty()) {
    j["n_objects"] = static_cast<int>(task.initial.slots.size());
  } else {
    j["n_objects"] = static_cast<int>(task.categories.size());
    j["n_categories"] = static_cast<int>(task.category_bins.size());
    j["categories"] = task.categories;
    j["category_bins"] = task.category_bins;
  }
  j["initial"] = {{"atoms", detail::atoms_to_json(task.initial.symbolic)},
                  {"slots", task.initial.slots}};
  j["goal"] = detail::atoms_to_json(task.goal);
  return j;
}

inline TaskSpec task_from_json(const nlohmann::json& j, const Simulator& sim) {
  TaskSpec task;
  task.id = j.at("id").get<std::string>();
  task.domain = j.at("domain").get<std::string>();
  if (task.domain != sim.tag()) {
    throw std::invalid_argument("task domain " + task.domain +
                                " does not match simulator " + sim.tag());
  }
  task.seed = j.at("seed").get<std::uint64_t>();
  const SymbolicState symbolic =
      detail::atoms_from_json(j.at("initial").at("atoms"), sim.universe());
  task.initial =
      sim.make_world(symbolic, j.at("initial").at("slots").get<std::vector<int>>());
  task.goal = detail::atoms_from_json(j.at("goal"), sim.universe());
  if (j.contains("categories")) {
    task.categories = j.at("categories").get<std::vector<int>>();
    task.category_bins = j.at("category_bins").get<std::vector<int>>();
  }
  return task;
}

inline nlohmann::json demo_to_json(const Demonstration& demo) {
  nlohmann::json j;
  j["task_id"] = demo.task_id;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& frame : demo.frames) frames.push_back(detail::continuous_to_json(frame));
  j["frames"] = frames;
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& action : demo.actions) actions.push_back(action.to_string());
  j["actions"] = actions;
  return j;
}

// Builds the simulator a serialized task belongs to.
inline std::shared_ptr<Simulator> simulator_for_task(const nlohmann::json& task_json) {
  const std::string domain = task_json.at("domain").get<std::string>();
  const int n_objects = task_json.at("n_objects").get<int>();
  if (domain == "stacking") return make_stacking_sim(n_objects);
  if (domain == "sorting") {
    return make_sorting_sim(n_objects, task_json.value("n_categories", 4));
  }
  throw std::invalid_argument("unknown task domain: " + domain);
}

inline Demonstration demo_from_json(const nlohmann::json& j, const Simulator& sim) {
  Demonstration demo;
  demo.task_id = j.at("task_id").get<std::string>();
  for (const auto& frame : j.at("frames")) {
    demo.frames.push_back(
        detail::continuous_from_json(frame, sim.universe()->objects().size()));
  }
  for (const auto& text : j.at("actions")) {
    const Action* action = sim.find_action(text.get<std::string>());
    if (action == nullptr) throw UnknownActionError(text.get<std::string>());
    demo.actions.push_back(*action);
  }
  demo.validate();
  return demo;
}

// Labeled grounding datasets are JSON lines: one {"positions", "held",
// "atoms"} object per state.
inline void save_dataset(const std::filesystem::path& path,
                         std::span<const std::pair<ContinuousState, SymbolicState>> data) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [state, symbols] : data) {
    nlohmann::json line = detail::continuous_to_json(state);
    line["atoms"] = detail::atoms_to_json(symbols);
    out << line.dump() << '\n';
  }
}

inline std::vector<std::pair<ContinuousState, SymbolicState>> load_dataset(
    const std::filesystem::path& path, const Simulator& sim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::pair<ContinuousState, SymbolicState>> data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    data.push_back(
        {detail::continuous_from_json(j, sim.universe()->objects().size()),
         detail::atoms_from_json(j.at("atoms"), sim.universe())});
  }
  return data;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

// Dataset-on-disk layout: <root>/tasks/<domain>/<split>/<id>.json
inline std::filesystem::path task_path(const std::filesystem::path& root,
                                       const std::string& domain,
                                       const std::string& split, const std::string& id) {
  return root / "tasks" / domain / split / (id + ".json");
}

inline std::filesystem::path demo_path(const std::filesystem::path& root,
                                       const std::string& domain,
                                       const std::string& split, const std::string& id) {
  return root / "demos" / domain / split / (id + ".json");
}

}  // namespace probplan
