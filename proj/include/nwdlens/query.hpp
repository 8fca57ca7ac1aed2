#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "nwdlens/errors.hpp"

namespace nwdlens {

// Boolean query over exact-phrase atoms. Immutable value type; copies
// share subtrees. The AST is semantics-free: what a phrase *matches* is
// the corpus's concern.
class Query {
 public:
  enum class Kind { Phrase, And, Or };

  // Throws std::invalid_argument: phrases must be non-empty and must not
  // contain a double quote (the grammar has no escape syntax).
  static Query phrase(std::string text);
  static Query and_of(Query left, Query right);
  static Query or_of(Query left, Query right);

  Kind kind() const { return node_->kind; }
  const std::string& text() const { return node_->text; }  // Phrase only
  Query left() const { return Query(node_->left); }
  Query right() const { return Query(node_->right); }

  bool operator==(const Query& other) const;
  bool operator!=(const Query& other) const { return !(*this == other); }

 private:
  struct Node {
    Kind kind;
    std::string text;
    std::shared_ptr<const Node> left, right;
  };

  explicit Query(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Grammar:   query  := or_expr
//            or_expr := and_expr ("OR" and_expr)*
//            and_expr := primary ("AND" primary)*
//            primary := '"' phrase '"' | '(' or_expr ')'
// Operators are left-associative, AND binds tighter than OR, keywords are
// case-sensitive uppercase, whitespace between tokens is free.
// Throws QueryParseError.
Query parse_query(std::string_view input);

// Canonical form: each phrase double-quoted, single spaces around
// operators, parentheses only where precedence requires them. This exact
// string keys the measurement store and provider caches;
// parse_query(render_query(q)) == q for every valid tree.
std::string render_query(const Query& q);

}  // namespace nwdlens
