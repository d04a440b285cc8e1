#pragma once

#include <sstream>
#include <string>

#include "probplan/pddl/ast.hpp"

namespace probplan::pddl {

namespace detail {

inline void print_atom(std::ostream& os, const AtomTemplate& atom) {
  os << '(' << atom.predicate;
  for (const std::string& arg : atom.args) os << ' ' << arg;
  os << ')';
}

inline void print_typed_names(std::ostream& os,
                              const std::vector<TypedName>& names) {
  bool first = true;
  for (const TypedName& n : names) {
    if (!first) os << ' ';
    first = false;
    os << n.name;
    if (n.type != kAnyType) os << " - " << n.type;
  }
}

inline void print_conjunction(std::ostream& os,
                              const std::vector<AtomTemplate>& atoms) {
  os << "(and";
  for (const AtomTemplate& atom : atoms) {
    os << ' ';
    print_atom(os, atom);
  }
  os << ')';
}

}  // namespace detail

// Canonical form: lowercase symbols, sorted sections, one schema per line.
// parse_domain(print_domain(d)) == d for every valid DomainDef.
inline std::string print_domain(const DomainDef& domain) {
  std::ostringstream os;
  os << "(define (domain " << domain.name << ")\n";
  os << "  (:requirements :strips";
  if (domain.typed()) os << " :typing";
  os << ")\n";
  if (domain.typed()) {
    os << "  (:types";
    for (const std::string& t : domain.types) os << ' ' << t;
    os << ")\n";
  }
  if (!domain.predicates.empty()) {
    os << "  (:predicates\n";
    for (const PredicateSchema& schema : domain.predicates) {
      os << "    (" << schema.name;
      for (int k = 0; k < schema.arity(); ++k) {
        os << " ?x" << k;
        if (schema.parameter_types[k] != kAnyType) {
          os << " - " << schema.parameter_types[k];
        }
      }
      os << ")\n";
    }
    os << "  )\n";
  }
  for (const OperatorSchema& op : domain.operators) {
    os << "  (:action " << op.name << "\n";
    os << "    :parameters (";
    detail::print_typed_names(os, op.parameters);
    os << ")\n";
    os << "    :precondition ";
    detail::print_conjunction(os, op.precondition);
    os << "\n    :effect (and";
    for (const AtomTemplate& atom : op.add_effects) {
      os << ' ';
      detail::print_atom(os, atom);
    }
    for (const AtomTemplate& atom : op.delete_effects) {
      os << " (not ";
      detail::print_atom(os, atom);
      os << ')';
    }
    os << ")\n  )\n";
  }
  os << ")\n";
  return os.str();
}

inline std::string print_problem(const ProblemDef& problem,
                                 const std::string& domain_name) {
  std::ostringstream os;
  os << "(define (problem " << problem.name << ")\n";
  os << "  (:domain " << domain_name << ")\n";
  os << "  (:objects ";
  detail::print_typed_names(os, problem.objects);
  os << ")\n  (:init";
  for (const AtomTemplate& atom : problem.initial_state) {
    os << ' ';
    detail::print_atom(os, atom);
  }
  os << ")\n  (:goal ";
  detail::print_conjunction(os, problem.goal);
  os << ")\n)\n";
  return os.str();
}

}  // namespace probplan::pddl
