#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "probplan/pddl/ast.hpp"

namespace probplan::pddl {

namespace detail {

// One node of the s-expression tree. Leaf nodes keep the (lowercased)
// symbol text; list nodes keep their children.
struct Sexp {
  bool is_list = false;
  std::string sym;
  std::vector<Sexp> items;
  SourcePos pos;

  const std::string& head() const {
    static const std::string empty;
    if (!is_list || items.empty() || items[0].is_list) return empty;
    return items[0].sym;
  }
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  struct Token {
    enum Kind { LParen, RParen, Symbol, End } kind;
    std::string text;
    SourcePos pos;
  };

  Token next() {
    skip_ws();
    Token tok;
    tok.pos = {line_, col_};
    if (i_ >= text_.size()) {
      tok.kind = Token::End;
      return tok;
    }
    const char c = text_[i_];
    if (c == '(') {
      advance();
      tok.kind = Token::LParen;
      return tok;
    }
    if (c == ')') {
      advance();
      tok.kind = Token::RParen;
      return tok;
    }
    tok.kind = Token::Symbol;
    while (i_ < text_.size() && !is_delim(text_[i_])) {
      // PDDL identifiers are case-insensitive; normalize once here.
      tok.text.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(text_[i_]))));
      advance();
    }
    return tok;
  }

 private:
  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == ';' ||
           std::isspace(static_cast<unsigned char>(c)) != 0;
  }

  void skip_ws() {
    while (i_ < text_.size()) {
      const char c = text_[i_];
      if (c == ';') {  // comment to end of line
        while (i_ < text_.size() && text_[i_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c)) != 0) {
        advance();
      } else {
        return;
      }
    }
  }

  void advance() {
    if (text_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  std::string_view text_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline Sexp read_sexp(Lexer& lex, const Lexer::Token& first) {
  Sexp node;
  node.pos = first.pos;
  if (first.kind == Lexer::Token::Symbol) {
    node.sym = first.text;
    return node;
  }
  if (first.kind != Lexer::Token::LParen) {
    throw ParseError("expected '(' or symbol", first.pos);
  }
  node.is_list = true;
  for (;;) {
    const auto tok = lex.next();
    if (tok.kind == Lexer::Token::RParen) return node;
    if (tok.kind == Lexer::Token::End) {
      throw ParseError("unexpected end of input, missing ')'", node.pos);
    }
    node.items.push_back(read_sexp(lex, tok));
  }
}

inline Sexp read_toplevel(std::string_view text) {
  Lexer lex(text);
  const auto first = lex.next();
  if (first.kind == Lexer::Token::End) {
    throw ParseError("empty input", first.pos);
  }
  Sexp node = read_sexp(lex, first);
  const auto trailing = lex.next();
  if (trailing.kind != Lexer::Token::End) {
    throw ParseError("trailing content after top-level form", trailing.pos);
  }
  return node;
}

// Parses a typed name list: "a b - block c d" => a,b typed block; c,d untyped.
inline std::vector<TypedName> read_typed_names(const Sexp& list,
                                               std::size_t begin = 0) {
  std::vector<TypedName> out;
  std::vector<std::size_t> pending;
  for (std::size_t i = begin; i < list.items.size(); ++i) {
    const Sexp& item = list.items[i];
    if (item.is_list) throw ParseError("expected name, found list", item.pos);
    if (item.sym == "-") {
      if (pending.empty()) throw ParseError("dangling '-' in typed list", item.pos);
      if (i + 1 >= list.items.size() || list.items[i + 1].is_list) {
        throw ParseError("missing type after '-'", item.pos);
      }
      const std::string& type = list.items[i + 1].sym;
      for (std::size_t j : pending) {
        out.push_back({list.items[j].sym, type});
      }
      pending.clear();
      ++i;
    } else {
      pending.push_back(i);
    }
  }
  for (std::size_t j : pending) out.push_back({list.items[j].sym, kAnyType});
  return out;
}

inline AtomTemplate read_atom(const Sexp& node) {
  if (!node.is_list || node.items.empty() || node.items[0].is_list) {
    throw ParseError("expected atom of the form (predicate args...)", node.pos);
  }
  AtomTemplate atom;
  atom.predicate = node.items[0].sym;
  for (std::size_t i = 1; i < node.items.size(); ++i) {
    if (node.items[i].is_list) {
      throw ParseError("atom arguments must be names", node.items[i].pos);
    }
    atom.args.push_back(node.items[i].sym);
  }
  return atom;
}

inline bool is_number(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  bool digit = false;
  for (; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i])) != 0) {
      digit = true;
    } else if (s[i] != '.') {
      return false;
    }
  }
  return digit;
}

// Flattens (and ...) and rejects everything outside the STRIPS subset with a
// diagnostic naming the feature.
inline void read_positive_conjunction(const Sexp& node,
                                      std::vector<AtomTemplate>& out) {
  if (!node.is_list) throw ParseError("expected condition", node.pos);
  if (node.items.empty()) return;  // () is an empty conjunction
  const std::string& head = node.head();
  if (head == "and") {
    for (std::size_t i = 1; i < node.items.size(); ++i) {
      read_positive_conjunction(node.items[i], out);
    }
    return;
  }
  if (head == "not") throw UnsupportedFeatureError("negative preconditions", node.pos);
  if (head == "or") throw UnsupportedFeatureError("disjunctive preconditions", node.pos);
  if (head == "forall" || head == "exists") {
    throw UnsupportedFeatureError("quantified conditions", node.pos);
  }
  if (head == "imply") throw UnsupportedFeatureError("implication conditions", node.pos);
  if (head == "when") throw UnsupportedFeatureError("conditional effects", node.pos);
  if (head == "=" || head == ">" || head == "<" || head == ">=" || head == "<=" ||
      is_number(head)) {
    throw UnsupportedFeatureError("numeric fluents", node.pos);
  }
  out.push_back(read_atom(node));
}

inline void read_effect(const Sexp& node, std::vector<AtomTemplate>& add,
                        std::vector<AtomTemplate>& del) {
  if (!node.is_list) throw ParseError("expected effect", node.pos);
  if (node.items.empty()) return;
  const std::string& head = node.head();
  if (head == "and") {
    for (std::size_t i = 1; i < node.items.size(); ++i) {
      read_effect(node.items[i], add, del);
    }
    return;
  }
  if (head == "not") {
    if (node.items.size() != 2) {
      throw ParseError("(not ...) takes exactly one atom", node.pos);
    }
    del.push_back(read_atom(node.items[1]));
    return;
  }
  if (head == "when") throw UnsupportedFeatureError("conditional effects", node.pos);
  if (head == "forall") throw UnsupportedFeatureError("universal effects", node.pos);
  if (head == "increase" || head == "decrease" || head == "assign" ||
      head == "scale-up" || head == "scale-down") {
    throw UnsupportedFeatureError("numeric fluents", node.pos);
  }
  add.push_back(read_atom(node));
}

inline void check_requirements(const Sexp& section) {
  for (std::size_t i = 1; i < section.items.size(); ++i) {
    const std::string& req = section.items[i].sym;
    if (req != ":strips" && req != ":typing") {
      throw UnsupportedFeatureError("requirement " + req, section.items[i].pos);
    }
  }
}

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace detail

inline DomainDef parse_domain(std::string_view text) {
  using detail::Sexp;
  const Sexp root = detail::read_toplevel(text);
  if (!root.is_list || root.head() != "define") {
    throw ParseError("expected (define (domain ...) ...)", root.pos);
  }
  if (root.items.size() < 2 || !root.items[1].is_list ||
      root.items[1].head() != "domain" || root.items[1].items.size() != 2) {
    throw ParseError("expected (domain <name>)", root.pos);
  }

  DomainDef domain;
  domain.name = root.items[1].items[1].sym;

  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const Sexp& section = root.items[i];
    if (!section.is_list || section.items.empty()) {
      throw ParseError("expected domain section", section.pos);
    }
    const std::string& head = section.head();
    if (head == ":requirements") {
      detail::check_requirements(section);
    } else if (head == ":types") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        if (section.items[j].sym == "-") {
          throw UnsupportedFeatureError("type hierarchy", section.items[j].pos);
        }
        domain.types.push_back(section.items[j].sym);
      }
    } else if (head == ":predicates") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        const Sexp& decl = section.items[j];
        const AtomTemplate proto = detail::read_atom(decl);
        PredicateSchema schema;
        schema.name = proto.predicate;
        for (const TypedName& param : detail::read_typed_names(decl, 1)) {
          if (param.name.empty() || param.name[0] != '?') {
            throw ParseError("predicate parameters must be variables", decl.pos);
          }
          schema.parameter_types.push_back(param.type);
        }
        domain.predicates.push_back(std::move(schema));
      }
    } else if (head == ":action") {
      if (section.items.size() < 2 || section.items[1].is_list) {
        throw ParseError("expected action name", section.pos);
      }
      OperatorSchema op;
      op.name = section.items[1].sym;
      for (std::size_t j = 2; j + 1 < section.items.size(); j += 2) {
        const std::string& key = section.items[j].sym;
        const Sexp& value = section.items[j + 1];
        if (key == ":parameters") {
          if (!value.is_list) throw ParseError("expected parameter list", value.pos);
          op.parameters = detail::read_typed_names(value);
          for (const TypedName& p : op.parameters) {
            if (p.name.empty() || p.name[0] != '?') {
              throw ParseError("parameters must be variables", value.pos);
            }
          }
        } else if (key == ":precondition") {
          detail::read_positive_conjunction(value, op.precondition);
        } else if (key == ":effect") {
          detail::read_effect(value, op.add_effects, op.delete_effects);
        } else {
          throw ParseError("unknown action keyword " + key, section.items[j].pos);
        }
      }
      detail::sort_unique(op.precondition);
      detail::sort_unique(op.add_effects);
      detail::sort_unique(op.delete_effects);
      domain.operators.push_back(std::move(op));
    } else if (head == ":functions") {
      throw UnsupportedFeatureError("numeric fluents", section.pos);
    } else if (head == ":constants") {
      throw UnsupportedFeatureError("domain constants", section.pos);
    } else {
      throw UnsupportedFeatureError("section " + head, section.pos);
    }
  }

  detail::sort_unique(domain.types);

  std::sort(domain.predicates.begin(), domain.predicates.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < domain.predicates.size(); ++i) {
    if (domain.predicates[i].name == domain.predicates[i - 1].name) {
      throw ValidationError("duplicate predicate name: " + domain.predicates[i].name);
    }
  }
  std::sort(domain.operators.begin(), domain.operators.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < domain.operators.size(); ++i) {
    if (domain.operators[i].name == domain.operators[i - 1].name) {
      throw ValidationError("duplicate operator name: " + domain.operators[i].name);
    }
  }

  // Semantic checks per operator: declared predicates, arity, variable scope,
  // non-overlapping add/delete sets.
  const std::set<std::string> known_types(domain.types.begin(), domain.types.end());
  for (const OperatorSchema& op : domain.operators) {
    std::set<std::string> params;
    for (const TypedName& p : op.parameters) {
      if (!params.insert(p.name).second) {
        throw ValidationError("duplicate parameter " + p.name + " in operator " +
                              op.name);
      }
      if (p.type != kAnyType && known_types.count(p.type) == 0) {
        throw ValidationError("undeclared type " + p.type + " in operator " + op.name);
      }
    }
    auto check_atoms = [&](const std::vector<AtomTemplate>& atoms) {
      for (const AtomTemplate& atom : atoms) {
        const PredicateSchema* schema = domain.find_predicate(atom.predicate);
        if (schema == nullptr) {
          throw ValidationError("undeclared predicate " + atom.predicate +
                                " in operator " + op.name);
        }
        if (static_cast<int>(atom.args.size()) != schema->arity()) {
          throw ValidationError("arity mismatch for " + atom.predicate +
                                " in operator " + op.name);
        }
        for (const std::string& arg : atom.args) {
          if (!arg.empty() && arg[0] == '?' && params.count(arg) == 0) {
            throw ValidationError("unbound variable " + arg + " in operator " +
                                  op.name);
          }
        }
      }
    };
    check_atoms(op.precondition);
    check_atoms(op.add_effects);
    check_atoms(op.delete_effects);
    for (const AtomTemplate& atom : op.add_effects) {
      if (std::binary_search(op.delete_effects.begin(), op.delete_effects.end(),
                             atom)) {
        throw ValidationError("operator " + op.name + " both adds and deletes " +
                              atom.predicate);
      }
    }
  }
  for (const PredicateSchema& schema : domain.predicates) {
    for (const std::string& type : schema.parameter_types) {
      if (type != kAnyType && known_types.count(type) == 0) {
        throw ValidationError("undeclared type " + type + " in predicate " +
                              schema.name);
      }
    }
  }
  return domain;
}

inline ProblemDef parse_problem(std::string_view text, const DomainDef& domain) {
  using detail::Sexp;
  const Sexp root = detail::read_toplevel(text);
  if (!root.is_list || root.head() != "define") {
    throw ParseError("expected (define (problem ...) ...)", root.pos);
  }
  if (root.items.size() < 2 || !root.items[1].is_list ||
      root.items[1].head() != "problem" || root.items[1].items.size() != 2) {
    throw ParseError("expected (problem <name>)", root.pos);
  }

  ProblemDef problem;
  problem.name = root.items[1].items[1].sym;

  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const Sexp& section = root.items[i];
    if (!section.is_list || section.items.empty()) {
      throw ParseError("expected problem section", section.pos);
    }
    const std::string& head = section.head();
    if (head == ":domain") {
      if (section.items.size() != 2) throw ParseError("expected domain name", section.pos);
      problem.domain_name = section.items[1].sym;
    } else if (head == ":requirements") {
      detail::check_requirements(section);
    } else if (head == ":objects") {
      problem.objects = detail::read_typed_names(section, 1);
    } else if (head == ":init") {
      for (std::size_t j = 1; j < section.items.size(); ++j) {
        if (section.items[j].head() == "not") {
          throw UnsupportedFeatureError("negative initial literals",
                                        section.items[j].pos);
        }
        if (section.items[j].head() == "=") {
          throw UnsupportedFeatureError("numeric fluents", section.items[j].pos);
        }
        problem.initial_state.push_back(detail::read_atom(section.items[j]));
      }
    } else if (head == ":goal") {
      if (section.items.size() != 2) throw ParseError("expected goal condition", section.pos);
      detail::read_positive_conjunction(section.items[1], problem.goal);
    } else if (head == ":metric") {
      throw UnsupportedFeatureError("optimization metrics", section.pos);
    } else {
      throw UnsupportedFeatureError("section " + head, section.pos);
    }
  }

  if (!problem.domain_name.empty() && problem.domain_name != domain.name) {
    throw ValidationError("problem references domain " + problem.domain_name +
                          " but was parsed against " + domain.name);
  }

  std::sort(problem.objects.begin(), problem.objects.end());
  for (std::size_t i = 1; i < problem.objects.size(); ++i) {
    if (problem.objects[i].name == problem.objects[i - 1].name) {
      throw ValidationError("duplicate object name: " + problem.objects[i].name);
    }
  }
  const std::set<std::string> known_types(domain.types.begin(), domain.types.end());
  for (const TypedName& obj : problem.objects) {
    if (obj.type != kAnyType && known_types.count(obj.type) == 0) {
      throw ValidationError("undeclared type " + obj.type + " for object " + obj.name);
    }
  }

  auto validate_ground_atom = [&](const AtomTemplate& atom) {
    const PredicateSchema* schema = domain.find_predicate(atom.predicate);
    if (schema == nullptr) {
      throw ValidationError("undeclared predicate: " + atom.predicate);
    }
    if (static_cast<int>(atom.args.size()) != schema->arity()) {
      throw ValidationError("arity mismatch for " + atom.predicate + ": expected " +
                            std::to_string(schema->arity()) + " arguments, got " +
                            std::to_string(atom.args.size()));
    }
    for (std::size_t k = 0; k < atom.args.size(); ++k) {
      const TypedName* obj = problem.find_object(atom.args[k]);
      if (obj == nullptr) {
        throw ValidationError("undeclared object: " + atom.args[k]);
      }
      const std::string& want = schema->parameter_types[k];
      if (want != kAnyType && obj->type != want) {
        throw ValidationError("object " + obj->name + " has type " + obj->type +
                              " but " + atom.predicate + " expects " + want);
      }
    }
  };
  for (const AtomTemplate& atom : problem.initial_state) validate_ground_atom(atom);
  for (const AtomTemplate& atom : problem.goal) validate_ground_atom(atom);

  detail::sort_unique(problem.initial_state);
  detail::sort_unique(problem.goal);
  return problem;
}

}  // namespace probplan::pddl
