#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "destab/numeric.hpp"

namespace destab {

// Grammar:
//   expr  := term (("+" | "-") term)*
//   term  := unary (("*" | "/") unary)*
//   unary := "-" unary | power
//   power := atom ("^" unary)?          right-associative, binds tighter than "-"
//   atom  := number | x<k> | w<k> | func "(" expr ")" | "(" expr ")"
// so "-2^2" is -(2^2) and "2^3^2" is 2^(3^2). Variables are 1-based.

enum class Function { kSin, kCos, kTan, kExp, kLog, kSqrt, kAbs, kTanh };

struct ExprNode {
  enum class Kind { kNumber, kState, kInput, kNegate, kAdd, kSub, kMul, kDiv, kPow, kCall };

  Kind kind = Kind::kNumber;
  double value = 0.0;             // kNumber
  std::size_t index = 0;          // kState / kInput, 0-based
  Function function = Function::kSin;
  int lhs = -1;                   // operand for kNegate / kCall
  int rhs = -1;
};

inline constexpr std::size_t kMaxExprDepth = 64;

/// Immutable expression tree; nodes live in a flat arena addressed by index.
class Expr {
 public:
  double evaluate(std::span<const double> x, std::span<const double> w) const;

  /// Fully parenthesised text that parses back to an identical tree.
  std::string to_string() const;

  bool references_input() const;
  std::size_t depth() const;

  const std::vector<ExprNode>& nodes() const { return nodes_; }
  int root() const { return root_; }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  friend class ExprParser;

  std::vector<ExprNode> nodes_;
  int root_ = -1;
};

/// Parses one expression over x1..x<state_dim> and w1..w<input_dim>.
/// Errors report `line` and the 1-based column of the offending character.
Expr parse_expression(std::string_view src, std::size_t state_dim, std::size_t input_dim,
                      std::size_t line = 1);

/// x' = f(x, w), r = g(x, w) with one expression per state and per output.
struct FieldSpec {
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  std::vector<Expr> equations;
  std::vector<Expr> outputs;

  bool output_depends_on_input() const;
};

/// Parses the equations then the outputs; equation k is reported as line k,
/// output k as line state_dim + k. Rejects fields with |f(0, 0)| > 1e-12.
FieldSpec parse_field(std::size_t state_dim, std::size_t input_dim,
                      const std::vector<std::string>& equations,
                      const std::vector<std::string>& outputs);

struct FieldValue {
  RealVector dx;
  RealVector r;
};

/// IEEE evaluation; non-finite results are returned, not thrown.
FieldValue evaluate(const FieldSpec& spec, const RealVector& x, const RealVector& w);

}  // namespace destab
