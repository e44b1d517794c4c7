#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace mbip {

class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& what, std::size_t position)
      : std::invalid_argument(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Scalar field of intrinsic coordinates, e.g. "2 + cos(3*alpha)".
/// Grammar: + - * / ^ (right associative), unary minus, parentheses,
/// sin cos tan exp log sqrt abs, constants pi and e, numbers, and the
/// variables alpha (or x) for the first coordinate and beta for the second.
class Expression {
 public:
  explicit Expression(const std::string& source);

  double operator()(std::span<const double> coords) const;
  const std::string& source() const { return source_; }
  /// Highest coordinate index referenced plus one.
  int arity() const { return arity_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
  int arity_ = 0;
};

}  // namespace mbip
