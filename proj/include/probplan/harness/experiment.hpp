#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <set>

#include "probplan/domains/io.hpp"
#include "probplan/domains/sorting.hpp"
#include "probplan/domains/stacking.hpp"
#include "probplan/grounding/models.hpp"
#include "probplan/grounding/train.hpp"
#include "probplan/harness/report.hpp"
#include "probplan/search/rectify.hpp"

namespace probplan {

enum class Method { cp, sp, sp_rectify };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::cp: return "cp";
    case Method::sp: return "sp";
    case Method::sp_rectify: return "sp_rectify";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "cp") return Method::cp;
  if (s == "sp") return Method::sp;
  if (s == "sp_rectify") return Method::sp_rectify;
  throw std::invalid_argument("unknown method: " + s);
}

struct GroundingConfig {
  enum class Kind { oracle, noisy, sgn };
  Kind kind = Kind::oracle;
  NoisyOracleConfig noise;  // kind == noisy (seed is derived from the experiment)
  TrainConfig train;        // kind == sgn
  SgnConfig arch;           // kind == sgn
  int goal_smoothing = 1;   // frames averaged when grounding the demo goal
};

struct ExperimentConfig {
  std::string domain = "stacking";  // "stacking" | "sorting"
  int n_objects = 8;
  int n_categories = 4;  // sorting only
  int n_train_tasks = 8;
  int n_test_tasks = 100;
  int demos_per_train_task = 1;
  GroundingConfig grounding;
  SearchConfig planner;
  int max_replans = 5;  // α in the episode loop
  std::uint64_t seed = 0;
  std::vector<Method> methods = {Method::cp, Method::sp, Method::sp_rectify};
  std::vector<int> train_task_sweep;  // optional learning-curve points (sgn)

  void validate() const {
    if (domain != "stacking" && domain != "sorting") {
      throw std::invalid_argument("unknown domain: " + domain);
    }
    if (max_replans < 1) throw std::invalid_argument("max_replans must be >= 1");
    if (n_train_tasks < 1 || n_test_tasks < 1 || demos_per_train_task < 1) {
      throw std::invalid_argument("task counts must be >= 1");
    }
    if (methods.empty()) throw std::invalid_argument("no methods selected");
    planner.validate();
    if (grounding.kind == GroundingConfig::Kind::noisy) grounding.noise.validate();
    if (grounding.kind == GroundingConfig::Kind::sgn) grounding.train.validate();
  }
};

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json g;
  switch (cfg.grounding.kind) {
    case GroundingConfig::Kind::oracle: g["kind"] = "oracle"; break;
    case GroundingConfig::Kind::noisy: g["kind"] = "noisy"; break;
    case GroundingConfig::Kind::sgn: g["kind"] = "sgn"; break;
  }
  g["mode"] = cfg.grounding.noise.mode == NoisyOracleConfig::Mode::flip ? "flip" : "logit";
  g["flip_prob"] = cfg.grounding.noise.flip_prob;
  g["logit_sigma"] = cfg.grounding.noise.logit_sigma;
  g["goal_smoothing"] = cfg.grounding.goal_smoothing;
  g["train"] = {{"learning_rate", cfg.grounding.train.learning_rate},
                {"batch_size", cfg.grounding.train.batch_size},
                {"epochs", cfg.grounding.train.epochs}};
  g["arch"] = {{"hidden", cfg.grounding.arch.hidden},
               {"embedding", cfg.grounding.arch.embedding}};

  nlohmann::json methods = nlohmann::json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));

  return {{"domain", cfg.domain},
          {"n_objects", cfg.n_objects},
          {"n_categories", cfg.n_categories},
          {"n_train_tasks", cfg.n_train_tasks},
          {"n_test_tasks", cfg.n_test_tasks},
          {"demos_per_train_task", cfg.demos_per_train_task},
          {"grounding", g},
          {"planner",
           {{"max_depth", cfg.planner.max_depth},
            {"node_budget", cfg.planner.node_budget},
            {"applicability_floor", cfg.planner.applicability_floor},
            {"goal_tolerance", cfg.planner.goal_tolerance},
            {"weighted_goal", cfg.planner.weighted_goal}}},
          {"max_replans", cfg.max_replans},
          {"seed", cfg.seed},
          {"methods", methods},
          {"train_task_sweep", cfg.train_task_sweep}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.domain = j.value("domain", cfg.domain);
  cfg.n_objects = j.value("n_objects", cfg.n_objects);
  cfg.n_categories = j.value("n_categories", cfg.n_categories);
  cfg.n_train_tasks = j.value("n_train_tasks", cfg.n_train_tasks);
  cfg.n_test_tasks = j.value("n_test_tasks", cfg.n_test_tasks);
  cfg.demos_per_train_task = j.value("demos_per_train_task", cfg.demos_per_train_task);
  if (j.contains("grounding")) {
    const auto& g = j.at("grounding");
    const std::string kind = g.value("kind", "oracle");
    if (kind == "oracle") {
      cfg.grounding.kind = GroundingConfig::Kind::oracle;
    } else if (kind == "noisy") {
      cfg.grounding.kind = GroundingConfig::Kind::noisy;
    } else if (kind == "sgn") {
      cfg.grounding.kind = GroundingConfig::Kind::sgn;
    } else {
      throw std::invalid_argument("unknown grounding kind: " + kind);
    }
    const std::string mode = g.value("mode", "flip");
    cfg.grounding.noise.mode = mode == "flip" ? NoisyOracleConfig::Mode::flip
                                              : NoisyOracleConfig::Mode::logit;
    cfg.grounding.noise.flip_prob = g.value("flip_prob", cfg.grounding.noise.flip_prob);
    cfg.grounding.noise.logit_sigma =
        g.value("logit_sigma", cfg.grounding.noise.logit_sigma);
    cfg.grounding.goal_smoothing = g.value("goal_smoothing", 1);
    if (g.contains("train")) {
      const auto& t = g.at("train");
      cfg.grounding.train.learning_rate =
          t.value("learning_rate", cfg.grounding.train.learning_rate);
      cfg.grounding.train.batch_size = t.value("batch_size", cfg.grounding.train.batch_size);
      cfg.grounding.train.epochs = t.value("epochs", cfg.grounding.train.epochs);
    }
    if (g.contains("arch")) {
      const auto& a = g.at("arch");
      cfg.grounding.arch.hidden = a.value("hidden", cfg.grounding.arch.hidden);
      cfg.grounding.arch.embedding = a.value("embedding", cfg.grounding.arch.embedding);
    }
  }
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    cfg.planner.max_depth = p.value("max_depth", cfg.planner.max_depth);
    cfg.planner.node_budget = p.value("node_budget", cfg.planner.node_budget);
    cfg.planner.applicability_floor =
        p.value("applicability_floor", cfg.planner.applicability_floor);
    cfg.planner.goal_tolerance = p.value("goal_tolerance", cfg.planner.goal_tolerance);
    cfg.planner.weighted_goal = p.value("weighted_goal", cfg.planner.weighted_goal);
  }
  cfg.max_replans = j.value("max_replans", cfg.max_replans);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods")) {
      cfg.methods.push_back(method_from_string(m.get<std::string>()));
    }
  }
  if (j.contains("train_task_sweep")) {
    cfg.train_task_sweep = j.at("train_task_sweep").get<std::vector<int>>();
  }
  cfg.validate();
  return cfg;
}

// PROBPLAN_SEED, when set, overrides the config seed.
inline void apply_env_seed(ExperimentConfig& cfg) {
  if (const char* env = std::getenv("PROBPLAN_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
  }
}

inline std::shared_ptr<Simulator> make_simulator(const ExperimentConfig& cfg) {
  if (cfg.domain == "stacking") return make_stacking_sim(cfg.n_objects);
  return make_sorting_sim(cfg.n_objects, cfg.n_categories);
}

struct EpisodeRecord {
  std::string task_id;
  Method method = Method::cp;
  bool success = false;
  int steps = 0;         // actions attempted in the simulator
  int replans = 0;       // planning rounds used
  double final_distance = 0.0;
};

struct MethodReport {
  Method method = Method::cp;
  int n = 0;
  int successes = 0;
  double success_rate = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
};

struct CurvePoint {
  int n_train = 0;
  MethodReport report;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EpisodeRecord> rows;  // sorted by (task_id, method)
  std::vector<MethodReport> methods;
  std::vector<CurvePoint> curves;
};

struct TrainingOutput {
  std::shared_ptr<const GroundingModel> model;  // oracle or trained SGN; null for noisy
  std::vector<double> train_loss;               // sgn only
  std::vector<double> val_loss;
  std::vector<LabeledState> dataset;  // the (frame, aligned state) pairs used

  std::size_t dataset_size() const { return dataset.size(); }
};

// Builds the meta-training dataset (frames labeled by replayed symbolic
// states, Alg.-1 style) and trains the SGN. Oracle and noisy groundings
// need no data; checkpoint persistence is the caller's job.
inline TrainingOutput run_training(const ExperimentConfig& cfg,
                                   const std::shared_ptr<const Simulator>& sim,
                                   int n_train_override = -1) {
  TrainingOutput out;
  if (cfg.grounding.kind == GroundingConfig::Kind::oracle) {
    out.model = std::make_shared<OracleGrounding>(sim);
    return out;
  }
  if (cfg.grounding.kind == GroundingConfig::Kind::noisy) {
    return out;  // per-episode models carry the pairing salt
  }

  const int n_train = n_train_override > 0 ? n_train_override : cfg.n_train_tasks;
  for (int k = 0; k < n_train; ++k) {
    TaskSpec task = sim->gen_task(mix_seed(cfg.seed, "train-task", k));
    char id[32];
    std::snprintf(id, sizeof(id), "train-%03d", k);
    task.id = id;
    for (int j = 0; j < cfg.demos_per_train_task; ++j) {
      const TaskSpec instance =
          j == 0 ? task
                 : sim->demo_instance(task, mix_seed(cfg.seed, "train-demo",
                                                     1000ull * k + j));
      const Demonstration demo = gen_demo(*sim, instance, cfg.planner);
      const auto states = aligned_symbolic_states(*sim, demo);
      for (std::size_t t = 0; t < demo.frames.size(); ++t) {
        out.dataset.push_back({demo.frames[t], states[t]});
      }
    }
  }

  TrainConfig train = cfg.grounding.train;
  train.seed = mix_seed(cfg.seed, "sgn-train");
  TrainResult result = train_sgn(out.dataset, train, {}, cfg.grounding.arch);
  out.model = std::make_shared<ModularSgn>(std::move(result.model));
  out.train_loss = std::move(result.train_loss);
  out.val_loss = std::move(result.val_loss);
  return out;
}

// The grounding model one episode sees. All methods of one episode share
// the salt, so their grounding outputs are identical (paired comparison).
inline std::shared_ptr<const GroundingModel> make_grounder(
    const ExperimentConfig& cfg, const std::shared_ptr<const Simulator>& sim,
    const std::shared_ptr<const GroundingModel>& base, std::uint64_t episode_salt) {
  if (cfg.grounding.kind != GroundingConfig::Kind::noisy) return base;
  NoisyOracleConfig noise = cfg.grounding.noise;
  noise.seed = mix_seed(cfg.seed, "grounding-noise");
  return std::make_shared<NoisyOracleGrounding>(sim, noise, episode_salt);
}

namespace detail {

inline SymbolicState rectified_state(const Simulator& sim, const BeliefState& belief) {
  if (sim.tag() == "stacking") {
    return rectify_blocksworld(discretize_map(belief), belief);
  }
  if (sim.tag() == "sorting") return rectify_sorting(belief);
  throw DomainMismatchError("no manual heuristics for domain " + sim.tag());
}

}  // namespace detail

// One closed-loop episode: ground the world, plan toward the grounded demo
// goal, execute, and repeat up to α times. Execution follows the plan as a
// sequence of attempts; once an attempt has succeeded, the next failure
// triggers an early re-plan (the world changed, so re-grounding brings new
// information). Failures before any progress are skipped instead. A failed
// attempt proves the action is inapplicable in the state where it was
// tried, so it is excluded as an *opening* action whenever that exact
// state recurs; deeper uses inside a plan stay legal. The episode ends
// early when a round would repeat an already-seen (state, evidence) pair:
// grounding is deterministic, so the loop would replay verbatim. Success
// is always the ground-truth simulator check, never the model's own
// belief.
inline EpisodeRecord run_episode(const GroundingModel& model, const Simulator& sim,
                                 const TaskSpec& task, const Demonstration& demo,
                                 const SearchConfig& planner_cfg, int max_replans,
                                 Method method, int goal_smoothing = 1) {
  EpisodeRecord rec;
  rec.task_id = task.id;
  rec.method = method;

  const BeliefState goal_belief = ground_demo_goal(model, demo, goal_smoothing);
  SymbolicState discrete_goal;
  if (method == Method::sp) {
    discrete_goal = discretize_map(goal_belief);
  } else if (method == Method::sp_rectify) {
    discrete_goal = detail::rectified_state(sim, goal_belief);
  }

  std::unordered_map<std::string, std::size_t> action_index;
  for (std::size_t i = 0; i < sim.actions().size(); ++i) {
    action_index.emplace(sim.actions()[i].to_string(), i);
  }

  WorldState world = task.initial;
  rec.success = check_success(world, task.goal);
  std::map<std::uint64_t, std::set<std::size_t>> failed_in_state;
  std::set<std::pair<std::uint64_t, std::size_t>> round_starts;
  std::vector<std::size_t> excluded;
  while (!rec.success && rec.replans < max_replans) {
    const std::uint64_t state_hash = world.symbolic.hash();
    auto& failed_here = failed_in_state[state_hash];
    if (!round_starts.insert({state_hash, failed_here.size()}).second) break;
    ++rec.replans;
    excluded.assign(failed_here.begin(), failed_here.end());

    // Condition the grounded belief on the attempts that failed here:
    // evidence that some precondition atom of each is false.
    BeliefState belief = model.ground(world.poses);
    for (std::size_t idx : excluded) {
      belief = condition_on_failure(belief, sim.actions()[idx]);
    }
    PlanResult plan;
    switch (method) {
      case Method::cp:
        plan = continuous_plan(belief, goal_belief, sim.actions(), planner_cfg,
                               excluded);
        break;
      case Method::sp:
        plan = symbolic_plan(discretize_map(belief), discrete_goal, sim.actions(),
                             planner_cfg, excluded);
        break;
      case Method::sp_rectify:
        plan = symbolic_plan(detail::rectified_state(sim, belief), discrete_goal,
                             sim.actions(), planner_cfg, excluded);
        break;
    }
    // An empty plan carries no information; probe the action the belief is
    // most confident about instead. Either it executes (real progress) or
    // its failure is fresh evidence for the next conditioning round.
    std::vector<Action> to_execute = std::move(plan.plan);
    if (to_execute.empty()) {
      int best = -1;
      double best_app = 0.0;
      for (std::size_t ai = 0; ai < sim.actions().size(); ++ai) {
        if (failed_here.contains(ai)) continue;
        const double app = applicability(belief, sim.actions()[ai]);
        if (app > best_app) {
          best_app = app;
          best = static_cast<int>(ai);
        }
      }
      if (best >= 0) to_execute.push_back(sim.actions()[best]);
    }

    bool progressed = false;
    for (const Action& action : to_execute) {
      const std::uint64_t here = world.symbolic.hash();
      world = sim.execute(world, action);
      ++rec.steps;
      if (world.attempt_failed) {
        failed_in_state[here].insert(action_index.at(action.to_string()));
        if (progressed) break;
      } else {
        progressed = true;
        if (check_success(world, task.goal)) break;
      }
    }
    rec.success = check_success(world, task.goal);
  }
  rec.final_distance = l1_distance(model.ground(world.poses), goal_belief);
  return rec;
}

namespace detail {

inline MethodReport aggregate(Method method, const std::vector<EpisodeRecord>& rows) {
  MethodReport report;
  report.method = method;
  for (const EpisodeRecord& r : rows) {
    if (r.method != method) continue;
    ++report.n;
    report.successes += r.success ? 1 : 0;
  }
  report.success_rate =
      report.n > 0 ? static_cast<double>(report.successes) / report.n : 0.0;
  std::tie(report.wilson_lo, report.wilson_hi) =
      wilson_interval(report.successes, report.n);
  return report;
}

struct Episode {
  TaskSpec task;
  Demonstration demo;
  std::uint64_t salt;
};

inline std::vector<Episode> build_test_episodes(const ExperimentConfig& cfg,
                                                const Simulator& sim) {
  std::vector<Episode> episodes;
  episodes.reserve(cfg.n_test_tasks);
  for (int k = 0; k < cfg.n_test_tasks; ++k) {
    Episode ep;
    ep.task = sim.gen_task(mix_seed(cfg.seed, "test-task", k));
    char id[32];
    std::snprintf(id, sizeof(id), "test-%03d", k);
    ep.task.id = id;
    // The demonstration comes from a sibling instance of the same goal
    // family, never from the evaluation instance itself.
    const TaskSpec sibling = sim.demo_instance(ep.task, mix_seed(cfg.seed, "test-demo", k));
    ep.demo = gen_demo(sim, sibling, cfg.planner);
    ep.salt = mix_seed(cfg.seed, "episode", k);
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

inline std::vector<EpisodeRecord> evaluate(const ExperimentConfig& cfg,
                                           const std::shared_ptr<const Simulator>& sim,
                                           const std::vector<Episode>& episodes,
                                           const std::shared_ptr<const GroundingModel>& base) {
  std::vector<EpisodeRecord> rows;
  rows.reserve(episodes.size() * cfg.methods.size());
  for (const Episode& ep : episodes) {
    const auto grounder = make_grounder(cfg, sim, base, ep.salt);
    for (Method method : cfg.methods) {
      rows.push_back(run_episode(*grounder, *sim, ep.task, ep.demo, cfg.planner,
                                 cfg.max_replans, method,
                                 cfg.grounding.goal_smoothing));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const EpisodeRecord& a, const EpisodeRecord& b) {
    if (a.task_id != b.task_id) return a.task_id < b.task_id;
    return std::string(to_string(a.method)) < to_string(b.method);
  });
  return rows;
}

}  // namespace detail

// Paired evaluation of every selected method on a shared set of test tasks,
// demonstrations, and grounding outputs. With a train_task_sweep and SGN
// grounding, additional models are trained per sweep point to produce the
// learning curve.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;

  const std::shared_ptr<Simulator> sim = make_simulator(cfg);
  const auto episodes = detail::build_test_episodes(cfg, *sim);
  const TrainingOutput trained = run_training(cfg, sim);

  result.rows = detail::evaluate(cfg, sim, episodes, trained.model);
  for (Method method : cfg.methods) {
    result.methods.push_back(detail::aggregate(method, result.rows));
  }

  if (cfg.grounding.kind == GroundingConfig::Kind::sgn && !cfg.train_task_sweep.empty()) {
    for (int n_train : cfg.train_task_sweep) {
      const TrainingOutput swept = run_training(cfg, sim, n_train);
      const auto rows = detail::evaluate(cfg, sim, episodes, swept.model);
      for (Method method : cfg.methods) {
        result.curves.push_back({n_train, detail::aggregate(method, rows)});
      }
    }
  } else {
    for (const MethodReport& report : result.methods) {
      result.curves.push_back({cfg.n_train_tasks, report});
    }
  }
  return result;
}

inline std::string results_csv(const ExperimentResult& result) {
  std::string out = "task_id,method,success,steps,replans,final_distance\n";
  for (const EpisodeRecord& r : result.rows) {
    out += r.task_id;
    out += ',';
    out += to_string(r.method);
    out += ',';
    out += r.success ? '1' : '0';
    out += ',' + std::to_string(r.steps) + ',' + std::to_string(r.replans) + ',' +
           format_fixed(r.final_distance) + '\n';
  }
  return out;
}

inline std::string curves_csv(const ExperimentResult& result) {
  std::string out = "n_train_tasks,method,successes,n,success_rate,wilson_lo,wilson_hi\n";
  for (const CurvePoint& point : result.curves) {
    out += std::to_string(point.n_train);
    out += ',';
    out += to_string(point.report.method);
    out += ',' + std::to_string(point.report.successes) + ',' +
           std::to_string(point.report.n) + ',' +
           format_fixed(point.report.success_rate) + ',' +
           format_fixed(point.report.wilson_lo) + ',' +
           format_fixed(point.report.wilson_hi) + '\n';
  }
  return out;
}

inline nlohmann::json report_json(const ExperimentResult& result) {
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodReport& m : result.methods) {
    methods.push_back({{"method", to_string(m.method)},
                       {"n", m.n},
                       {"successes", m.successes},
                       {"success_rate", m.success_rate},
                       {"wilson_lo", m.wilson_lo},
                       {"wilson_hi", m.wilson_hi}});
  }
  nlohmann::json tasks = nlohmann::json::array();
  for (const EpisodeRecord& r : result.rows) {
    tasks.push_back({{"task_id", r.task_id},
                     {"method", to_string(r.method)},
                     {"success", r.success},
                     {"steps", r.steps},
                     {"replans", r.replans},
                     {"final_distance", r.final_distance}});
  }
  return {{"config", experiment_config_to_json(result.config)},
          {"methods", methods},
          {"tasks", tasks}};
}

inline void write_experiment_outputs(const ExperimentResult& result,
                                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& contents) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file " + std::string(name));
    out << contents;
  };
  write("results.csv", results_csv(result));
  write("curves.csv", curves_csv(result));
  write("report.json", report_json(result).dump(2) + "\n");
}

}  // namespace probplan
