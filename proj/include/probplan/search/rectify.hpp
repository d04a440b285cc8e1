#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "probplan/belief/belief.hpp"

namespace probplan {

class DomainMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Most-probable joint state under conditional independence: per-atom
// threshold at 0.5, ties broken toward false.
inline SymbolicState discretize_map(const BeliefState& belief) {
  SymbolicState state(belief.universe());
  for (AtomId id = 0; id < belief.size(); ++id) {
    if (belief[id] > 0.5) state.set(id);
  }
  return state;
}

namespace detail {

struct BlocksworldIds {
  std::uint32_t on, ontable, clear, holding, handempty;
};

inline BlocksworldIds blocksworld_predicates(const AtomUniverse& universe) {
  const auto on = universe.predicate_index("on");
  const auto ontable = universe.predicate_index("ontable");
  const auto clear = universe.predicate_index("clear");
  const auto holding = universe.predicate_index("holding");
  const auto handempty = universe.predicate_index("handempty");
  if (!on || !ontable || !clear || !holding || !handempty) {
    throw DomainMismatchError("universe is not a blocksworld universe");
  }
  return {*on, *ontable, *clear, *holding, *handempty};
}

}  // namespace detail

// Manual-heuristics rules for block stacking, checked after rectification:
//   R1. if on(x,y) then not clear(y)
//   R2. each block has at most one block on top and sits on at most one block
//   R3. at most one block is held, and never together with handempty
inline bool satisfies_stacking_rules(const SymbolicState& state) {
  const auto& universe = *state.universe();
  const auto ids = detail::blocksworld_predicates(universe);
  std::map<std::uint16_t, int> above_count;  // y -> blocks on top of y
  std::map<std::uint16_t, int> below_count;  // x -> blocks x rests on
  int holding = 0;
  bool handempty = false;
  for (AtomId id = 0; id < universe.size(); ++id) {
    if (!state.test(id)) continue;
    const auto& atom = universe.atom(id);
    if (atom.predicate == ids.on) {
      above_count[atom.args[1]]++;
      below_count[atom.args[0]]++;
      const auto clear_below = universe.find("clear", {universe.object_name(atom.args[1])});
      if (clear_below && state.test(*clear_below)) return false;  // R1
    } else if (atom.predicate == ids.holding) {
      ++holding;
    } else if (atom.predicate == ids.handempty) {
      handempty = true;
    }
  }
  for (const auto& [block, n] : above_count) {
    if (n > 1) return false;  // R2
  }
  for (const auto& [block, n] : below_count) {
    if (n > 1) return false;  // R2
  }
  if (holding > 1) return false;             // R3
  if (holding >= 1 && handempty) return false;  // R3
  return true;
}

// Object sorting rule: an object is at one location at a time.
inline bool satisfies_sorting_rules(const SymbolicState& state) {
  const auto& universe = *state.universe();
  const auto at = universe.predicate_index("at");
  if (!at) throw DomainMismatchError("universe is not a sorting universe");
  std::map<std::uint16_t, int> locations;
  for (AtomId id = 0; id < universe.size(); ++id) {
    if (state.test(id) && universe.atom(id).predicate == *at) {
      if (++locations[universe.atom(id).args[0]] > 1) return false;
    }
  }
  return true;
}

// Repairs a discretized block-stacking state with the manual heuristics.
// Conflicts keep the atom with the higher marginal in the originating
// belief; remaining ties fall back to atom order.
inline SymbolicState rectify_blocksworld(const SymbolicState& state,
                                         const BeliefState& belief) {
  const auto& universe = *state.universe();
  const auto ids = detail::blocksworld_predicates(universe);

  SymbolicState out = state;

  // R2: keep at most one on-atom per supporting block and per supported
  // block, preferring higher probability (descending, index ascending).
  std::vector<AtomId> on_atoms;
  for (AtomId id = 0; id < universe.size(); ++id) {
    if (out.test(id) && universe.atom(id).predicate == ids.on) on_atoms.push_back(id);
  }
  std::stable_sort(on_atoms.begin(), on_atoms.end(), [&](AtomId a, AtomId b) {
    return belief[a] > belief[b];
  });
  std::map<std::uint16_t, bool> has_above, has_below;
  for (AtomId id : on_atoms) {
    const auto& atom = universe.atom(id);
    if (has_below[atom.args[0]] || has_above[atom.args[1]]) {
      out.reset(id);
    } else {
      has_below[atom.args[0]] = true;
      has_above[atom.args[1]] = true;
    }
  }

  // R1: a supporting block is not clear.
  for (AtomId id = 0; id < universe.size(); ++id) {
    if (!out.test(id) || universe.atom(id).predicate != ids.on) continue;
    const auto clear_below =
        universe.find("clear", {universe.object_name(universe.atom(id).args[1])});
    if (clear_below) out.reset(*clear_below);
  }

  // R3: single held block; handempty loses to a more probable holding atom.
  std::vector<AtomId> holding_atoms;
  for (AtomId id = 0; id < universe.size(); ++id) {
    if (out.test(id) && universe.atom(id).predicate == ids.holding) {
      holding_atoms.push_back(id);
    }
  }
  if (!holding_atoms.empty()) {
    const AtomId best = *std::max_element(
        holding_atoms.begin(), holding_atoms.end(),
        [&](AtomId a, AtomId b) { return belief[a] < belief[b]; });
    for (AtomId id : holding_atoms) {
      if (id != best) out.reset(id);
    }
    const auto handempty = universe.find("handempty", {});
    if (handempty && out.test(*handempty)) {
      if (belief[*handempty] > belief[best]) {
        out.reset(best);
      } else {
        out.reset(*handempty);
      }
    }
  }
  return out;
}

// Manual heuristics for object sorting: hard mutual exclusion on locations,
// keeping the argmax at(obj, loc) per object (first atom in id order wins
// ties). Operates on the belief directly.
inline SymbolicState rectify_sorting(const BeliefState& belief) {
  const auto& universe = *belief.universe();
  const auto at = universe.predicate_index("at");
  if (!at) throw DomainMismatchError("universe is not a sorting universe");

  std::map<std::uint16_t, AtomId> best;
  for (AtomId id = 0; id < universe.size(); ++id) {
    if (universe.atom(id).predicate != *at) continue;
    const auto obj = universe.atom(id).args[0];
    auto it = best.find(obj);
    if (it == best.end() || belief[id] > belief[it->second]) {
      best[obj] = id;
    }
  }
  SymbolicState out(belief.universe());
  for (const auto& [obj, id] : best) out.set(id);
  return out;
}

}  // namespace probplan
