// probplan command-line tool: PDDL checking, discrete and continuous
// planning, dataset generation, SGN training, experiment evaluation, and
// the belief-update oracle check.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "probplan/belief/io.hpp"
#include "probplan/belief/oracle.hpp"
#include "probplan/domains/io.hpp"
#include "probplan/harness/experiment.hpp"
#include "probplan/pddl/printer.hpp"

namespace fs = std::filesystem;
using namespace probplan;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig load_experiment_config(const GlobalOpts& opts) {
  if (opts.config_path.empty()) {
    throw std::invalid_argument("this subcommand needs --config <file>");
  }
  ExperimentConfig cfg =
      experiment_config_from_json(nlohmann::json::parse(read_file(opts.config_path)));
  if (opts.seed_set) cfg.seed = opts.seed;
  apply_env_seed(cfg);  // PROBPLAN_SEED wins over the file and the flag
  return cfg;
}

int cmd_parse(const std::string& domain_path, const std::string& problem_path) {
  const pddl::DomainDef domain = pddl::parse_domain(read_file(domain_path));
  std::cout << "domain " << domain.name << ": " << domain.predicates.size()
            << " predicates, " << domain.operators.size() << " operators";
  if (domain.typed()) std::cout << ", " << domain.types.size() << " types";
  std::cout << "\n";
  for (const auto& p : domain.predicates) {
    std::cout << "  predicate " << p.name << "/" << p.arity() << "\n";
  }
  for (const auto& op : domain.operators) {
    std::cout << "  operator " << op.name << "/" << op.parameters.size() << ": "
              << op.precondition.size() << " pre, " << op.add_effects.size()
              << " add, " << op.delete_effects.size() << " del\n";
  }
  if (!problem_path.empty()) {
    const pddl::ProblemDef problem = pddl::parse_problem(read_file(problem_path), domain);
    const auto grounded = pddl::ground(domain, problem);
    std::cout << "problem " << problem.name << ": " << problem.objects.size()
              << " objects, " << problem.initial_state.size() << " init atoms, "
              << problem.goal.size() << " goal atoms\n";
    std::cout << "ground universe: " << grounded.universe->size() << " atoms, "
              << grounded.actions.size() << " actions\n";
  }
  return 0;
}

SearchConfig planner_flags(CLI::App* cmd) {
  static SearchConfig cfg;  // one subcommand runs per process
  cfg = SearchConfig{};
  cmd->add_option("--max-depth", cfg.max_depth, "search depth limit");
  cmd->add_option("--node-budget", cfg.node_budget, "stored-node budget");
  cmd->add_option("--epsilon", cfg.applicability_floor,
                  "applicability floor for expanding actions");
  cmd->add_option("--delta", cfg.goal_tolerance,
                  "goal distance tolerance (negative = auto)");
  cmd->add_flag("--weighted-goal", cfg.weighted_goal,
                "weight goal distance by goal confidence");
  return cfg;
}

int cmd_plan(const std::string& domain_path, const std::string& problem_path,
             const SearchConfig& cfg) {
  const pddl::DomainDef domain = pddl::parse_domain(read_file(domain_path));
  const pddl::ProblemDef problem = pddl::parse_problem(read_file(problem_path), domain);
  const auto grounded = pddl::ground(domain, problem);
  const SymbolicState init = pddl::make_state(grounded.universe, problem.initial_state);
  const SymbolicState goal = pddl::make_state(grounded.universe, problem.goal);
  const PlanResult result = symbolic_plan(init, goal, grounded.actions, cfg);
  std::cout << plan_to_json(result).dump(2) << "\n";
  return 0;
}

int cmd_cplan(const std::string& domain_path, const std::string& problem_path,
              const std::string& init_path, const std::string& goal_path,
              const SearchConfig& cfg) {
  const pddl::DomainDef domain = pddl::parse_domain(read_file(domain_path));
  const pddl::ProblemDef problem = pddl::parse_problem(read_file(problem_path), domain);
  const auto grounded = pddl::ground(domain, problem);
  const BeliefState init =
      belief_from_json(nlohmann::json::parse(read_file(init_path)), grounded.universe);
  const BeliefState goal =
      belief_from_json(nlohmann::json::parse(read_file(goal_path)), grounded.universe);
  const PlanResult result = continuous_plan(init, goal, grounded.actions, cfg);
  std::cout << plan_to_json(result).dump(2) << "\n";
  return 0;
}

int cmd_gen_tasks(const GlobalOpts& opts, const std::string& domain, int count,
                  int objects, int categories, const std::string& split) {
  std::uint64_t seed = opts.seed;
  if (const char* env = std::getenv("PROBPLAN_SEED")) {
    seed = std::strtoull(env, nullptr, 10);
  }
  std::shared_ptr<Simulator> sim;
  if (domain == "stacking") {
    sim = make_stacking_sim(objects);
  } else if (domain == "sorting") {
    sim = make_sorting_sim(objects, categories);
  } else {
    throw std::invalid_argument("unknown domain: " + domain);
  }
  for (int k = 0; k < count; ++k) {
    TaskSpec task = sim->gen_task(mix_seed(seed, split, k));
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%03d", split.c_str(), k);
    task.id = id;
    write_json_file(task_path(opts.out_dir, domain, split, task.id), task_to_json(task));
  }
  std::cout << "wrote " << count << " tasks under "
            << (fs::path(opts.out_dir) / "tasks" / domain / split).string() << "\n";
  return 0;
}

int cmd_gen_demos(const GlobalOpts& opts, const std::string& tasks_dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(tasks_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::invalid_argument("no task files in " + tasks_dir);

  std::shared_ptr<Simulator> sim;
  int written = 0;
  for (const fs::path& file : files) {
    const auto j = read_json_file(file);
    if (!sim || sim->tag() != j.at("domain").get<std::string>() ||
        sim->universe()->objects().size() !=
            j.at("initial").at("slots").get<std::vector<int>>().size()) {
      sim = simulator_for_task(j);
    }
    const TaskSpec task = task_from_json(j, *sim);
    const Demonstration demo = gen_demo(*sim, task);
    write_json_file(fs::path(opts.out_dir) / file.filename(), demo_to_json(demo));
    ++written;
  }
  std::cout << "wrote " << written << " demos under " << opts.out_dir << "\n";
  return 0;
}

int cmd_train_sgn(const GlobalOpts& opts) {
  ExperimentConfig cfg = load_experiment_config(opts);
  if (cfg.grounding.kind != GroundingConfig::Kind::sgn) {
    throw std::invalid_argument("train-sgn needs grounding.kind == \"sgn\" in the config");
  }
  auto sim = make_simulator(cfg);
  const TrainingOutput trained = run_training(cfg, sim);
  fs::create_directories(opts.out_dir);
  const auto ckpt = fs::path(opts.out_dir) / "sgn.ckpt";
  std::static_pointer_cast<const ModularSgn>(trained.model)->save(ckpt.string());
  save_dataset(fs::path(opts.out_dir) / "dataset.jsonl", trained.dataset);

  nlohmann::json log;
  log["dataset_size"] = trained.dataset_size();
  log["train_loss"] = trained.train_loss;
  log["val_loss"] = trained.val_loss;
  write_json_file(fs::path(opts.out_dir) / "train_log.json", log);
  std::cout << "checkpoint: " << ckpt.string() << " (dataset "
            << trained.dataset_size() << " samples, final loss "
            << (trained.train_loss.empty() ? 0.0 : trained.train_loss.back()) << ")\n";
  return 0;
}

int cmd_eval(const GlobalOpts& opts) {
  const ExperimentConfig cfg = load_experiment_config(opts);
  const ExperimentResult result = run_experiment(cfg);
  write_experiment_outputs(result, opts.out_dir);
  std::cout << "method      successes/n  rate    95% Wilson\n";
  for (const MethodReport& m : result.methods) {
    std::printf("%-11s %3d/%-8d %.3f   [%.3f, %.3f]\n", to_string(m.method),
                m.successes, m.n, m.success_rate, m.wilson_lo, m.wilson_hi);
  }
  std::cout << "outputs in " << opts.out_dir << "\n";
  return 0;
}

// Random structurally-valid actions and beliefs over synthetic universes;
// compares the factored update with the exact-joint enumeration.
int cmd_oracle_check(int pairs, int max_atoms, std::uint64_t seed) {
  if (max_atoms < 1 || max_atoms > 20) {
    throw std::invalid_argument("--max-atoms must lie in [1, 20]");
  }
  std::vector<std::shared_ptr<const AtomUniverse>> universes;
  for (int n = 1; n <= max_atoms; ++n) {
    std::vector<pddl::PredicateSchema> predicates;
    std::vector<pddl::GroundAtom> atoms;
    for (int i = 0; i < n; ++i) {
      char name[16];
      std::snprintf(name, sizeof(name), "p%02d", i);
      predicates.push_back({name, {}});
      atoms.push_back({static_cast<std::uint32_t>(i), {}, static_cast<AtomId>(i)});
    }
    universes.push_back(std::make_shared<AtomUniverse>(
        "flat", std::move(predicates), std::vector<pddl::TypedName>{}, std::move(atoms)));
  }

  Rng rng(seed);
  double max_err = 0.0;
  for (int trial = 0; trial < pairs; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(max_atoms));
    const auto& universe = universes[n - 1];
    BeliefState belief(universe);
    for (AtomId id = 0; id < universe->size(); ++id) belief.set(id, rng.uniform());

    Action action;
    action.name = "act";
    std::vector<AtomId> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = static_cast<AtomId>(i);
    rng.shuffle(ids);
    const int n_pre = static_cast<int>(rng.below(n + 1));
    for (int i = 0; i < n_pre; ++i) action.pre.push_back(ids[i]);
    for (int i = 0; i < n_pre; ++i) {
      if (rng.bernoulli(0.4)) action.del.push_back(action.pre[i]);
    }
    for (int i = n_pre; i < n; ++i) {
      if (rng.bernoulli(0.3)) action.add.push_back(ids[i]);
    }
    std::sort(action.pre.begin(), action.pre.end());
    std::sort(action.add.begin(), action.add.end());
    std::sort(action.del.begin(), action.del.end());

    const BeliefState fast = apply_attempt(belief, action);
    const auto exact = brute_force_attempt(belief, action);
    for (AtomId id = 0; id < universe->size(); ++id) {
      max_err = std::max(max_err, std::abs(fast[id] - exact[id]));
    }
  }
  std::printf("%d pairs, universes up to %d atoms: max |factored - exact| = %.3e\n",
              pairs, max_atoms, max_err);
  if (max_err > 1e-12) {
    std::cerr << "oracle check FAILED (tolerance 1e-12)\n";
    return 1;
  }
  std::cout << "oracle check passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probplan: planning on probabilistic symbol groundings"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "experiment config JSON");
  app.add_option("--out", opts.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", opts.seed, "seed override");

  std::string domain_path, problem_path, init_path, goal_path;
  std::string gen_domain = "stacking", split = "train", tasks_dir;
  int count = 10, objects = 8, categories = 4;
  int pairs = 10000, max_atoms = 12;

  auto* parse_cmd = app.add_subcommand("parse", "validate PDDL files");
  parse_cmd->add_option("domain", domain_path, "domain file")->required();
  parse_cmd->add_option("problem", problem_path, "optional problem file");

  auto* plan_cmd = app.add_subcommand("plan", "classical planning on a problem file");
  plan_cmd->add_option("--domain", domain_path, "domain file")->required();
  plan_cmd->add_option("--problem", problem_path, "problem file")->required();
  const SearchConfig& plan_cfg = planner_flags(plan_cmd);

  auto* cplan_cmd =
      app.add_subcommand("cplan", "continuous planning on belief JSON files");
  cplan_cmd->add_option("--domain", domain_path, "domain file")->required();
  cplan_cmd->add_option("--problem", problem_path, "problem file (declares objects)")
      ->required();
  cplan_cmd->add_option("--init", init_path, "initial belief JSON")->required();
  cplan_cmd->add_option("--goal", goal_path, "goal belief JSON")->required();
  const SearchConfig& cplan_cfg = planner_flags(cplan_cmd);

  auto* gen_tasks_cmd = app.add_subcommand("gen-tasks", "generate task files");
  gen_tasks_cmd->add_option("--domain", gen_domain, "stacking | sorting");
  gen_tasks_cmd->add_option("--n", count, "number of tasks");
  gen_tasks_cmd->add_option("--objects", objects, "objects per task");
  gen_tasks_cmd->add_option("--categories", categories, "sorting categories");
  gen_tasks_cmd->add_option("--split", split, "dataset split name");

  auto* gen_demos_cmd =
      app.add_subcommand("gen-demos", "generate demonstrations for task files");
  gen_demos_cmd->add_option("--tasks", tasks_dir, "directory of task JSON files")
      ->required();

  app.add_subcommand("train-sgn", "train the symbol grounding network");
  app.add_subcommand("eval", "run a paired-method experiment");

  auto* oracle_cmd =
      app.add_subcommand("oracle-check", "belief update vs exact joint enumeration");
  oracle_cmd->add_option("--pairs", pairs, "number of random (belief, action) pairs");
  oracle_cmd->add_option("--max-atoms", max_atoms, "largest universe size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\nrun with --help for usage\n";
    return 1;
  }
  opts.seed_set = seed_opt->count() > 0;

  try {
    if (parse_cmd->parsed()) return cmd_parse(domain_path, problem_path);
    if (plan_cmd->parsed()) return cmd_plan(domain_path, problem_path, plan_cfg);
    if (cplan_cmd->parsed()) {
      return cmd_cplan(domain_path, problem_path, init_path, goal_path, cplan_cfg);
    }
    if (gen_tasks_cmd->parsed()) {
      return cmd_gen_tasks(opts, gen_domain, count, objects, categories, split);
    }
    if (gen_demos_cmd->parsed()) return cmd_gen_demos(opts, tasks_dir);
    if (app.get_subcommand("train-sgn")->parsed()) return cmd_train_sgn(opts);
    if (app.get_subcommand("eval")->parsed()) return cmd_eval(opts);
    if (oracle_cmd->parsed()) return cmd_oracle_check(pairs, max_atoms, opts.seed);
    std::cerr << "no subcommand given; run with --help\n";
    return 1;
  } catch (const pddl::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const pddl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
