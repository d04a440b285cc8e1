#pragma once

#include <array>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "probplan/grounding/mlp.hpp"
#include "probplan/grounding/model.hpp"

namespace probplan {

struct SgnConfig {
  int hidden = 128;     // hidden width of every module
  int embedding = 32;   // object embedding width
  std::array<double, 3> workspace{1.0, 1.0, 0.6};  // normalization extents

  void validate() const {
    if (hidden < 1 || embedding < 1) {
      throw std::invalid_argument("SGN module widths must be positive");
    }
  }
};

// Modular symbol grounding network. One object module per universe object
// maps the full (normalized) pose vector to an embedding; one predicate
// module per predicate maps the concatenated argument embeddings to a
// logit. Every ground atom of the same predicate shares that predicate's
// parameters, and every atom mentioning an object shares that object's
// module. Zero-arity predicates read a single shared "global" object
// module, a pseudo-object embedding of the whole scene.
class ModularSgn : public GroundingModel {
 public:
  struct AtomWiring {
    std::uint32_t predicate_module = 0;
    std::vector<std::uint32_t> object_modules;
  };

  ModularSgn() = default;

  ModularSgn(std::shared_ptr<const AtomUniverse> universe, SgnConfig cfg,
             std::uint64_t seed)
      : universe_(std::move(universe)), cfg_(cfg) {
    cfg_.validate();
    input_dim_ = static_cast<int>(3 * universe_->objects().size());

    bool needs_global = false;
    for (const auto& schema : universe_->predicates()) {
      if (schema.arity() == 0) needs_global = true;
    }
    const std::size_t n_objects = universe_->objects().size();
    object_modules_.reserve(n_objects + (needs_global ? 1 : 0));
    for (std::size_t i = 0; i < n_objects + (needs_global ? 1u : 0u); ++i) {
      object_modules_.emplace_back(
          std::vector<int>{input_dim_, cfg_.hidden, cfg_.embedding});
    }
    global_module_ = needs_global ? static_cast<int>(n_objects) : -1;

    predicate_modules_.reserve(universe_->predicates().size());
    for (const auto& schema : universe_->predicates()) {
      const int in = cfg_.embedding * std::max(schema.arity(), 1);
      predicate_modules_.emplace_back(std::vector<int>{in, cfg_.hidden, 1});
    }

    wiring_.reserve(universe_->size());
    for (AtomId id = 0; id < universe_->size(); ++id) {
      const auto& atom = universe_->atom(id);
      AtomWiring w;
      w.predicate_module = atom.predicate;
      if (atom.args.empty()) {
        w.object_modules.push_back(static_cast<std::uint32_t>(global_module_));
      } else {
        for (auto arg : atom.args) w.object_modules.push_back(arg);
      }
      wiring_.push_back(std::move(w));
    }

    Rng rng(mix_seed(seed, "sgn-init"));
    for (auto& m : object_modules_) m.init(rng);
    for (auto& m : predicate_modules_) m.init(rng);
  }

  const std::shared_ptr<const AtomUniverse>& universe() const { return universe_; }
  const SgnConfig& config() const { return cfg_; }
  int input_dim() const { return input_dim_; }
  const AtomWiring& wiring(AtomId id) const { return wiring_[id]; }

  std::vector<DenseNet>& object_modules() { return object_modules_; }
  const std::vector<DenseNet>& object_modules() const { return object_modules_; }
  std::vector<DenseNet>& predicate_modules() { return predicate_modules_; }
  const std::vector<DenseNet>& predicate_modules() const { return predicate_modules_; }
  int global_module() const { return global_module_; }

  // Independent of atom count: only the modules carry parameters.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& m : object_modules_) n += m.parameter_count();
    for (const auto& m : predicate_modules_) n += m.parameter_count();
    return n;
  }

  // Activations of one full forward pass, for backprop.
  struct Trace {
    std::vector<double> input;
    std::vector<DenseNet::Trace> object_traces;
    std::vector<std::vector<double>> embeddings;
    std::vector<DenseNet::Trace> atom_traces;  // per atom, predicate module
    std::vector<double> logits;                // per atom
  };

  std::vector<double> forward_logits(const ContinuousState& state,
                                     Trace* trace = nullptr) const {
    const std::vector<double> x = flatten_normalized(state, cfg_.workspace);
    if (static_cast<int>(x.size()) != input_dim_) {
      throw std::invalid_argument("continuous state does not match the universe");
    }

    // Each object module runs once per state; atoms reuse the embeddings.
    std::vector<std::vector<double>> embeddings(object_modules_.size());
    if (trace) {
      trace->input = x;
      trace->object_traces.assign(object_modules_.size(), {});
      trace->atom_traces.assign(universe_->size(), {});
    }
    for (std::size_t m = 0; m < object_modules_.size(); ++m) {
      embeddings[m] = object_modules_[m].forward(
          x, trace ? &trace->object_traces[m] : nullptr);
    }

    std::vector<double> logits(universe_->size());
    std::vector<double> concat;
    for (AtomId id = 0; id < universe_->size(); ++id) {
      const AtomWiring& w = wiring_[id];
      concat.clear();
      for (auto m : w.object_modules) {
        concat.insert(concat.end(), embeddings[m].begin(), embeddings[m].end());
      }
      const auto out = predicate_modules_[w.predicate_module].forward(
          concat, trace ? &trace->atom_traces[id] : nullptr);
      logits[id] = out[0];
    }
    if (trace) {
      trace->embeddings = std::move(embeddings);
      trace->logits = logits;
    }
    return logits;
  }

  BeliefState ground(const ContinuousState& state) const override {
    const auto logits = forward_logits(state);
    BeliefState belief(universe_);
    for (AtomId id = 0; id < universe_->size(); ++id) {
      belief.set(id, sigmoid(logits[id]));
    }
    return belief;
  }

  struct Gradients {
    std::vector<std::vector<double>> object_modules;
    std::vector<std::vector<double>> predicate_modules;

    void resize_like(const ModularSgn& sgn) {
      object_modules.resize(sgn.object_modules_.size());
      for (std::size_t i = 0; i < object_modules.size(); ++i) {
        object_modules[i].assign(sgn.object_modules_[i].parameter_count(), 0.0);
      }
      predicate_modules.resize(sgn.predicate_modules_.size());
      for (std::size_t i = 0; i < predicate_modules.size(); ++i) {
        predicate_modules[i].assign(sgn.predicate_modules_[i].parameter_count(), 0.0);
      }
    }

    void zero() {
      for (auto& g : object_modules) std::fill(g.begin(), g.end(), 0.0);
      for (auto& g : predicate_modules) std::fill(g.begin(), g.end(), 0.0);
    }
  };

  // Backpropagates per-atom logit gradients through the predicate modules
  // into the shared object modules, accumulating into grads.
  void backward(const Trace& trace, std::span<const double> dlogits,
                Gradients& grads) const {
    std::vector<std::vector<double>> demb(object_modules_.size());
    for (std::size_t m = 0; m < object_modules_.size(); ++m) {
      demb[m].assign(cfg_.embedding, 0.0);
    }

    for (AtomId id = 0; id < universe_->size(); ++id) {
      if (dlogits[id] == 0.0) continue;
      const AtomWiring& w = wiring_[id];
      const double d[1] = {dlogits[id]};
      const auto dconcat = predicate_modules_[w.predicate_module].backward(
          trace.atom_traces[id], d, grads.predicate_modules[w.predicate_module]);
      for (std::size_t slot = 0; slot < w.object_modules.size(); ++slot) {
        const auto m = w.object_modules[slot];
        for (int k = 0; k < cfg_.embedding; ++k) {
          demb[m][k] += dconcat[slot * cfg_.embedding + k];
        }
      }
    }

    for (std::size_t m = 0; m < object_modules_.size(); ++m) {
      bool nonzero = false;
      for (double v : demb[m]) nonzero |= (v != 0.0);
      if (!nonzero) continue;
      object_modules_[m].backward(trace.object_traces[m], demb[m],
                                  grads.object_modules[m]);
    }
  }

  void save(const std::string& path) const;
  static ModularSgn load(const std::string& path,
                         std::shared_ptr<const AtomUniverse> universe);

 private:
  std::shared_ptr<const AtomUniverse> universe_;
  SgnConfig cfg_;
  int input_dim_ = 0;
  int global_module_ = -1;
  std::vector<DenseNet> object_modules_;
  std::vector<DenseNet> predicate_modules_;
  std::vector<AtomWiring> wiring_;
};

// Checkpoint format: magic, length-prefixed architecture JSON, then the raw
// little-endian parameter array (object modules first, predicate modules
// after, in index order). Fully deterministic bytes for a given model.
inline void ModularSgn::save(const std::string& path) const {
  nlohmann::json arch;
  arch["version"] = 1;
  arch["hidden"] = cfg_.hidden;
  arch["embedding"] = cfg_.embedding;
  arch["workspace"] = cfg_.workspace;
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : universe_->objects()) objects.push_back(o.name);
  arch["objects"] = objects;
  nlohmann::json predicates = nlohmann::json::array();
  for (const auto& p : universe_->predicates()) {
    predicates.push_back({{"name", p.name}, {"arity", p.arity()}});
  }
  arch["predicates"] = predicates;
  arch["global_module"] = global_module_ >= 0;
  const std::string header = arch.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write("PPSGN001", 8);
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  auto dump_params = [&](const DenseNet& net) {
    out.write(reinterpret_cast<const char*>(net.params().data()),
              static_cast<std::streamsize>(net.params().size() * sizeof(double)));
  };
  for (const auto& m : object_modules_) dump_params(m);
  for (const auto& m : predicate_modules_) dump_params(m);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline ModularSgn ModularSgn::load(const std::string& path,
                                   std::shared_ptr<const AtomUniverse> universe) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "PPSGN001", 8) != 0) {
    throw std::runtime_error("not a model checkpoint: " + path);
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  const auto arch = nlohmann::json::parse(header);
  if (arch.at("version").get<int>() != 1) {
    throw std::runtime_error("unsupported checkpoint version");
  }

  SgnConfig cfg;
  cfg.hidden = arch.at("hidden").get<int>();
  cfg.embedding = arch.at("embedding").get<int>();
  cfg.workspace = arch.at("workspace").get<std::array<double, 3>>();

  // The checkpoint must describe the same universe it is loaded against.
  const auto objects = arch.at("objects");
  if (objects.size() != universe->objects().size()) {
    throw std::runtime_error("checkpoint object set does not match the universe");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].get<std::string>() != universe->objects()[i].name) {
      throw std::runtime_error("checkpoint object set does not match the universe");
    }
  }
  const auto predicates = arch.at("predicates");
  if (predicates.size() != universe->predicates().size()) {
    throw std::runtime_error("checkpoint predicates do not match the universe");
  }
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    if (predicates[i].at("name").get<std::string>() !=
            universe->predicates()[i].name ||
        predicates[i].at("arity").get<int>() != universe->predicates()[i].arity()) {
      throw std::runtime_error("checkpoint predicates do not match the universe");
    }
  }

  ModularSgn sgn(std::move(universe), cfg, 0);
  auto read_params = [&](DenseNet& net) {
    in.read(reinterpret_cast<char*>(net.params().data()),
            static_cast<std::streamsize>(net.params().size() * sizeof(double)));
  };
  for (auto& m : sgn.object_modules_) read_params(m);
  for (auto& m : sgn.predicate_modules_) read_params(m);
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return sgn;
}

}  // namespace probplan
