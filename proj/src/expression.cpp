#include "mbip/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace mbip {

struct Expression::Node {
  enum class Kind { number, variable, negate, add, sub, mul, div, pow, call } kind;
  double value = 0.0;
  int variable = 0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(std::span<const double> c) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::variable: return c[static_cast<std::size_t>(variable)];
      case Kind::negate: return -lhs->eval(c);
      case Kind::add: return lhs->eval(c) + rhs->eval(c);
      case Kind::sub: return lhs->eval(c) - rhs->eval(c);
      case Kind::mul: return lhs->eval(c) * rhs->eval(c);
      case Kind::div: return lhs->eval(c) / rhs->eval(c);
      case Kind::pow: return std::pow(lhs->eval(c), rhs->eval(c));
      case Kind::call: return fn(lhs->eval(c));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

double fn_sin(double v) { return std::sin(v); }
double fn_cos(double v) { return std::cos(v); }
double fn_tan(double v) { return std::tan(v); }
double fn_exp(double v) { return std::exp(v); }
double fn_log(double v) { return std::log(v); }
double fn_sqrt(double v) { return std::sqrt(v); }
double fn_abs(double v) { return std::abs(v); }

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) throw ExpressionError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return n;
  }

  int arity = 0;

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = make(Kind::add, n, term());
      else if (eat('-')) n = make(Kind::sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = make(Kind::mul, n, unary());
      else if (eat('/')) n = make(Kind::div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Kind::negate, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(Kind::pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const std::size_t start = pos_;
    const char c = s_[pos_];
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) throw ExpressionError("expected ')'", pos_);
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ExpressionError("malformed number", start);
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::number;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      return identifier(name, start);
    }
    throw ExpressionError("unexpected '" + std::string(1, c) + "'", start);
  }

  NodePtr identifier(const std::string& name, std::size_t at) {
    auto n = std::make_shared<Expression::Node>();
    if (name == "pi" || name == "e") {
      n->kind = Kind::number;
      n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
      return n;
    }
    if (name == "alpha" || name == "x" || name == "beta") {
      n->kind = Kind::variable;
      n->variable = name == "beta" ? 1 : 0;
      arity = std::max(arity, n->variable + 1);
      return n;
    }
    static const std::vector<std::pair<std::string, double (*)(double)>> functions = {
        {"sin", fn_sin}, {"cos", fn_cos}, {"tan", fn_tan}, {"exp", fn_exp},
        {"log", fn_log}, {"sqrt", fn_sqrt}, {"abs", fn_abs}};
    for (const auto& [fname, f] : functions) {
      if (fname != name) continue;
      if (!eat('(')) throw ExpressionError("expected '(' after " + name, pos_);
      n->kind = Kind::call;
      n->fn = f;
      n->lhs = expr();
      if (!eat(')')) throw ExpressionError("expected ')'", pos_);
      return n;
    }
    throw ExpressionError("unknown identifier '" + name + "'", at);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& source) : source_(source) {
  Parser p(source_);
  root_ = p.parse();
  arity_ = p.arity;
}

double Expression::operator()(std::span<const double> coords) const {
  if (static_cast<int>(coords.size()) < arity_)
    throw std::invalid_argument("expression '" + source_ + "' needs " + std::to_string(arity_) + " coordinates");
  return root_->eval(coords);
}

}  // namespace mbip
