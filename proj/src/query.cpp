#include "nwdlens/query.hpp"

#include <cctype>
#include <utility>
#include <vector>

namespace nwdlens {

Query Query::phrase(std::string text) {
  if (text.empty()) throw std::invalid_argument("phrase must be non-empty");
  if (text.find('"') != std::string::npos) {
    throw std::invalid_argument("phrase must not contain a double quote");
  }
  auto node = std::make_shared<Node>();
  node->kind = Kind::Phrase;
  node->text = std::move(text);
  return Query(std::move(node));
}

Query Query::and_of(Query left, Query right) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::And;
  node->left = std::move(left.node_);
  node->right = std::move(right.node_);
  return Query(std::move(node));
}

Query Query::or_of(Query left, Query right) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Or;
  node->left = std::move(left.node_);
  node->right = std::move(right.node_);
  return Query(std::move(node));
}

bool Query::operator==(const Query& other) const {
  if (node_ == other.node_) return true;
  if (node_->kind != other.node_->kind) return false;
  if (node_->kind == Kind::Phrase) return node_->text == other.node_->text;
  return left() == other.left() && right() == other.right();
}

namespace {

struct Token {
  enum class Type { Phrase, And, Or, LParen, RParen, End };
  Type type;
  std::string text;
  std::size_t pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view input) : input_(input) {}

  Token next() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= input_.size()) return {Token::Type::End, "", start};
    const char c = input_[pos_];
    if (c == '(') {
      ++pos_;
      return {Token::Type::LParen, "(", start};
    }
    if (c == ')') {
      ++pos_;
      return {Token::Type::RParen, ")", start};
    }
    if (c == '"') return lex_phrase(start);
    if (std::isalpha(static_cast<unsigned char>(c))) return lex_word(start);
    throw QueryParseError(
        "unexpected character '" + std::string(1, c) +
            "' (terms must be double-quoted exact phrases)",
        start);
  }

 private:
  void skip_ws() {
    while (pos_ < input_.size() &&
           std::isspace(static_cast<unsigned char>(input_[pos_]))) {
      ++pos_;
    }
  }

  Token lex_phrase(std::size_t start) {
    ++pos_;  // opening quote
    const std::size_t body = pos_;
    while (pos_ < input_.size() && input_[pos_] != '"') ++pos_;
    if (pos_ >= input_.size()) {
      throw QueryParseError("unbalanced quotes: phrase opened at position " +
                                std::to_string(start) + " is never closed",
                            start);
    }
    std::string text(input_.substr(body, pos_ - body));
    ++pos_;  // closing quote
    if (text.empty()) throw QueryParseError("empty phrase", start);
    return {Token::Type::Phrase, std::move(text), start};
  }

  Token lex_word(std::size_t start) {
    while (pos_ < input_.size() &&
           std::isalpha(static_cast<unsigned char>(input_[pos_]))) {
      ++pos_;
    }
    std::string word(input_.substr(start, pos_ - start));
    if (word == "AND") return {Token::Type::And, std::move(word), start};
    if (word == "OR") return {Token::Type::Or, std::move(word), start};
    std::string lowered;
    for (char c : word) {
      lowered.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (lowered == "and" || lowered == "or") {
      throw QueryParseError("operator \"" + word +
                                "\" must be uppercase: use " +
                                (lowered == "and" ? "AND" : "OR"),
                            start);
    }
    throw QueryParseError("bare word \"" + word +
                              "\" (terms must be double-quoted exact phrases)",
                          start);
  }

  std::string_view input_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view input) : lexer_(input) { advance(); }

  Query parse() {
    Query q = parse_or();
    if (current_.type != Token::Type::End) {
      throw QueryParseError("trailing input after query: \"" + current_.text +
                                "\"",
                            current_.pos);
    }
    return q;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  Query parse_or() {
    Query left = parse_and();
    while (current_.type == Token::Type::Or) {
      const std::size_t op_pos = current_.pos;
      advance();
      left = Query::or_of(std::move(left), parse_and_or_fail("OR", op_pos));
    }
    return left;
  }

  Query parse_and() {
    Query left = parse_primary();
    while (current_.type == Token::Type::And) {
      const std::size_t op_pos = current_.pos;
      advance();
      left = Query::and_of(std::move(left),
                           parse_primary_or_fail("AND", op_pos));
    }
    return left;
  }

  Query parse_and_or_fail(const char* op, std::size_t op_pos) {
    if (current_.type == Token::Type::End) {
      throw QueryParseError(std::string("dangling operator ") + op, op_pos);
    }
    return parse_and();
  }

  Query parse_primary_or_fail(const char* op, std::size_t op_pos) {
    if (current_.type == Token::Type::End) {
      throw QueryParseError(std::string("dangling operator ") + op, op_pos);
    }
    return parse_primary();
  }

  Query parse_primary() {
    switch (current_.type) {
      case Token::Type::Phrase: {
        Query q = Query::phrase(current_.text);
        advance();
        return q;
      }
      case Token::Type::LParen: {
        advance();
        Query q = parse_or();
        if (current_.type != Token::Type::RParen) {
          throw QueryParseError("expected ')'", current_.pos);
        }
        advance();
        return q;
      }
      case Token::Type::End:
        throw QueryParseError("empty query", current_.pos);
      default:
        throw QueryParseError("expected a quoted phrase, got \"" +
                                  current_.text + "\"",
                              current_.pos);
    }
  }

  Lexer lexer_;
  Token current_{Token::Type::End, "", 0};
};

// Parentheses are required exactly where re-parsing (left-associative,
// AND over OR) would otherwise regroup the tree.
void render_into(const Query& q, std::string& out) {
  switch (q.kind()) {
    case Query::Kind::Phrase:
      out.push_back('"');
      out += q.text();
      out.push_back('"');
      return;
    case Query::Kind::And: {
      const Query l = q.left(), r = q.right();
      const bool lp = l.kind() == Query::Kind::Or;
      const bool rp = r.kind() != Query::Kind::Phrase;
      if (lp) out.push_back('(');
      render_into(l, out);
      if (lp) out.push_back(')');
      out += " AND ";
      if (rp) out.push_back('(');
      render_into(r, out);
      if (rp) out.push_back(')');
      return;
    }
    case Query::Kind::Or: {
      const Query l = q.left(), r = q.right();
      const bool rp = r.kind() == Query::Kind::Or;
      render_into(l, out);
      out += " OR ";
      if (rp) out.push_back('(');
      render_into(r, out);
      if (rp) out.push_back(')');
      return;
    }
  }
}

}  // namespace

Query parse_query(std::string_view input) { return Parser(input).parse(); }

std::string render_query(const Query& q) {
  std::string out;
  render_into(q, out);
  return out;
}

}  // namespace nwdlens
