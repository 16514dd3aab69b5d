#include "destab/dynexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>

namespace destab {
namespace {

struct FunctionName {
  const char* name;
  Function function;
};

constexpr FunctionName kFunctions[] = {
    {"sin", Function::kSin},   {"cos", Function::kCos}, {"tan", Function::kTan},
    {"exp", Function::kExp},   {"log", Function::kLog}, {"sqrt", Function::kSqrt},
    {"abs", Function::kAbs},   {"tanh", Function::kTanh},
};

const char* function_name(Function f) {
  for (const auto& entry : kFunctions) {
    if (entry.function == f) return entry.name;
  }
  return "?";
}

std::optional<Function> lookup_function(std::string_view name) {
  for (const auto& entry : kFunctions) {
    if (name == entry.name) return entry.function;
  }
  return std::nullopt;
}

double apply(Function f, double v) {
  switch (f) {
    case Function::kSin:
      return std::sin(v);
    case Function::kCos:
      return std::cos(v);
    case Function::kTan:
      return std::tan(v);
    case Function::kExp:
      return std::exp(v);
    case Function::kLog:
      return std::log(v);
    case Function::kSqrt:
      return std::sqrt(v);
    case Function::kAbs:
      return std::abs(v);
    case Function::kTanh:
      return std::tanh(v);
  }
  return std::nan("");
}

double eval_node(const std::vector<ExprNode>& nodes, int i, std::span<const double> x,
                 std::span<const double> w) {
  const ExprNode& n = nodes[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case ExprNode::Kind::kNumber:
      return n.value;
    case ExprNode::Kind::kState:
      return x[n.index];
    case ExprNode::Kind::kInput:
      return w[n.index];
    case ExprNode::Kind::kNegate:
      return -eval_node(nodes, n.lhs, x, w);
    case ExprNode::Kind::kAdd:
      return eval_node(nodes, n.lhs, x, w) + eval_node(nodes, n.rhs, x, w);
    case ExprNode::Kind::kSub:
      return eval_node(nodes, n.lhs, x, w) - eval_node(nodes, n.rhs, x, w);
    case ExprNode::Kind::kMul:
      return eval_node(nodes, n.lhs, x, w) * eval_node(nodes, n.rhs, x, w);
    case ExprNode::Kind::kDiv:
      return eval_node(nodes, n.lhs, x, w) / eval_node(nodes, n.rhs, x, w);
    case ExprNode::Kind::kPow:
      return std::pow(eval_node(nodes, n.lhs, x, w), eval_node(nodes, n.rhs, x, w));
    case ExprNode::Kind::kCall:
      return apply(n.function, eval_node(nodes, n.lhs, x, w));
  }
  return std::nan("");
}

std::size_t node_depth(const std::vector<ExprNode>& nodes, int i) {
  const ExprNode& n = nodes[static_cast<std::size_t>(i)];
  std::size_t below = 0;
  if (n.lhs >= 0) below = node_depth(nodes, n.lhs);
  if (n.rhs >= 0) below = std::max(below, node_depth(nodes, n.rhs));
  return below + 1;
}

const char* binary_symbol(ExprNode::Kind kind) {
  switch (kind) {
    case ExprNode::Kind::kAdd:
      return " + ";
    case ExprNode::Kind::kSub:
      return " - ";
    case ExprNode::Kind::kMul:
      return " * ";
    case ExprNode::Kind::kDiv:
      return " / ";
    case ExprNode::Kind::kPow:
      return " ^ ";
    default:
      return " ? ";
  }
}

void print_node(const std::vector<ExprNode>& nodes, int i, std::string& out) {
  const ExprNode& n = nodes[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case ExprNode::Kind::kNumber: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case ExprNode::Kind::kState:
      out += "x" + std::to_string(n.index + 1);
      return;
    case ExprNode::Kind::kInput:
      out += "w" + std::to_string(n.index + 1);
      return;
    case ExprNode::Kind::kNegate:
      out += "(-";
      print_node(nodes, n.lhs, out);
      out += ")";
      return;
    case ExprNode::Kind::kCall:
      out += function_name(n.function);
      out += "(";
      print_node(nodes, n.lhs, out);
      out += ")";
      return;
    default:
      out += "(";
      print_node(nodes, n.lhs, out);
      out += binary_symbol(n.kind);
      print_node(nodes, n.rhs, out);
      out += ")";
      return;
  }
}

bool same_tree(const Expr& a, int i, const Expr& b, int j) {
  if ((i < 0) != (j < 0)) return false;
  if (i < 0) return true;
  const ExprNode& x = a.nodes()[static_cast<std::size_t>(i)];
  const ExprNode& y = b.nodes()[static_cast<std::size_t>(j)];
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case ExprNode::Kind::kNumber:
      if (x.value != y.value) return false;
      break;
    case ExprNode::Kind::kState:
    case ExprNode::Kind::kInput:
      if (x.index != y.index) return false;
      break;
    case ExprNode::Kind::kCall:
      if (x.function != y.function) return false;
      break;
    default:
      break;
  }
  return same_tree(a, x.lhs, b, y.lhs) && same_tree(a, x.rhs, b, y.rhs);
}

}  // namespace

class ExprParser {
 public:
  ExprParser(std::string_view src, std::size_t state_dim, std::size_t input_dim, std::size_t line)
      : src_(src), state_dim_(state_dim), input_dim_(input_dim), line_(line) {}

  Expr run() {
    skip_space();
    expr_.root_ = parse_expr();
    skip_space();
    if (pos_ < src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    if (node_depth(expr_.nodes_, expr_.root_) > kMaxExprDepth) {
      throw ParseError("expression nesting exceeds depth " + std::to_string(kMaxExprDepth), line_,
                       1);
    }
    return std::move(expr_);
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { fail_at(message, pos_); }
  [[noreturn]] void fail_at(const std::string& message, std::size_t pos) const {
    throw ParseError(message, line_, pos + 1);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(ExprNode node) {
    expr_.nodes_.push_back(node);
    return static_cast<int>(expr_.nodes_.size() - 1);
  }

  int binary(ExprNode::Kind kind, int lhs, int rhs) {
    ExprNode n;
    n.kind = kind;
    n.lhs = lhs;
    n.rhs = rhs;
    return add(n);
  }

  // Recursion guard; the tree-depth limit is enforced after parsing.
  struct Nest {
    explicit Nest(ExprParser& p) : parser(p) {
      if (++parser.nesting_ > 4 * kMaxExprDepth) {
        parser.fail("expression nesting exceeds depth " + std::to_string(kMaxExprDepth));
      }
    }
    ~Nest() { --parser.nesting_; }
    ExprParser& parser;
  };

  int parse_expr() {
    Nest guard(*this);
    int lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(ExprNode::Kind::kAdd, lhs, parse_term());
      } else if (accept('-')) {
        lhs = binary(ExprNode::Kind::kSub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(ExprNode::Kind::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(ExprNode::Kind::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    Nest guard(*this);
    if (accept('-')) {
      ExprNode n;
      n.kind = ExprNode::Kind::kNegate;
      n.lhs = parse_unary();
      return add(n);
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_atom();
    if (accept('^')) return binary(ExprNode::Kind::kPow, base, parse_unary());
    return base;
  }

  int parse_atom() {
    skip_space();
    if (pos_ >= src_.size()) fail("expected an expression");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  int parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t count = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++count;
      }
      return count;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail_at("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail("malformed exponent");
    }
    const std::string text(src_.substr(start, pos_ - start));
    const double value = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(value)) fail_at("number out of range", start);
    ExprNode n;
    n.kind = ExprNode::Kind::kNumber;
    n.value = value;
    return add(n);
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    if (const auto f = lookup_function(name)) {
      if (!accept('(')) fail("function '" + std::string(name) + "' takes one argument in parentheses");
      ExprNode n;
      n.kind = ExprNode::Kind::kCall;
      n.function = *f;
      n.lhs = parse_expr();
      skip_space();
      if (pos_ < src_.size() && src_[pos_] == ',') {
        fail("function '" + std::string(name) + "' takes exactly one argument");
      }
      if (!accept(')')) fail("expected ')'");
      return add(n);
    }

    const bool numbered = name.size() >= 2 && (name[0] == 'x' || name[0] == 'w') &&
                          name.find_first_not_of("0123456789", 1) == std::string_view::npos;
    if (!numbered) fail_at("unknown identifier '" + std::string(name) + "'", start);
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      fail("'" + std::string(name) + "' is a variable, not a function");
    }
    const unsigned long k = std::strtoul(std::string(name.substr(1)).c_str(), nullptr, 10);
    const std::size_t limit = name[0] == 'x' ? state_dim_ : input_dim_;
    if (k == 0 || k > limit) {
      std::ostringstream msg;
      msg << "variable '" << name << "' out of range (" << (name[0] == 'x' ? "state" : "input")
          << " dimension " << limit << ")";
      fail_at(msg.str(), start);
    }
    ExprNode n;
    n.kind = name[0] == 'x' ? ExprNode::Kind::kState : ExprNode::Kind::kInput;
    n.index = k - 1;
    return add(n);
  }

  std::string_view src_;
  std::size_t state_dim_;
  std::size_t input_dim_;
  std::size_t line_;
  std::size_t pos_ = 0;
  std::size_t nesting_ = 0;
  Expr expr_;
};

double Expr::evaluate(std::span<const double> x, std::span<const double> w) const {
  return eval_node(nodes_, root_, x, w);
}

std::string Expr::to_string() const {
  std::string out;
  print_node(nodes_, root_, out);
  return out;
}

bool Expr::references_input() const {
  for (const auto& n : nodes_) {
    if (n.kind == ExprNode::Kind::kInput) return true;
  }
  return false;
}

std::size_t Expr::depth() const { return node_depth(nodes_, root_); }

bool operator==(const Expr& a, const Expr& b) { return same_tree(a, a.root_, b, b.root_); }

Expr parse_expression(std::string_view src, std::size_t state_dim, std::size_t input_dim,
                      std::size_t line) {
  return ExprParser(src, state_dim, input_dim, line).run();
}

bool FieldSpec::output_depends_on_input() const {
  for (const auto& e : outputs) {
    if (e.references_input()) return true;
  }
  return false;
}

FieldSpec parse_field(std::size_t state_dim, std::size_t input_dim,
                      const std::vector<std::string>& equations,
                      const std::vector<std::string>& outputs) {
  if (equations.size() != state_dim) {
    std::ostringstream msg;
    msg << "parse_field: " << equations.size() << " equations for state dimension " << state_dim;
    throw DimensionError(msg.str());
  }
  FieldSpec spec;
  spec.state_dim = state_dim;
  spec.input_dim = input_dim;
  std::size_t line = 1;
  for (const auto& src : equations) {
    spec.equations.push_back(parse_expression(src, state_dim, input_dim, line++));
  }
  for (const auto& src : outputs) {
    spec.outputs.push_back(parse_expression(src, state_dim, input_dim, line++));
  }

  const RealVector zx = RealVector::Zero(static_cast<Eigen::Index>(state_dim));
  const RealVector zw = RealVector::Zero(static_cast<Eigen::Index>(input_dim));
  const FieldValue at_origin = evaluate(spec, zx, zw);
  for (Eigen::Index i = 0; i < at_origin.dx.size(); ++i) {
    if (!(std::abs(at_origin.dx(i)) <= 1e-12)) {
      std::ostringstream msg;
      msg << "the origin is not an equilibrium: equation " << i + 1 << " evaluates to "
          << at_origin.dx(i) << " at x = 0, w = 0";
      throw PreconditionError(msg.str());
    }
  }
  return spec;
}

FieldValue evaluate(const FieldSpec& spec, const RealVector& x, const RealVector& w) {
  if (static_cast<std::size_t>(x.size()) != spec.state_dim ||
      static_cast<std::size_t>(w.size()) != spec.input_dim) {
    std::ostringstream msg;
    msg << "evaluate: expected x of size " << spec.state_dim << " and w of size "
        << spec.input_dim << ", got " << x.size() << " and " << w.size();
    throw DimensionError(msg.str());
  }
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  const std::span<const double> ws(w.data(), static_cast<std::size_t>(w.size()));
  FieldValue out{RealVector(static_cast<Eigen::Index>(spec.equations.size())),
                 RealVector(static_cast<Eigen::Index>(spec.outputs.size()))};
  for (std::size_t i = 0; i < spec.equations.size(); ++i) {
    out.dx(static_cast<Eigen::Index>(i)) = spec.equations[i].evaluate(xs, ws);
  }
  for (std::size_t i = 0; i < spec.outputs.size(); ++i) {
    out.r(static_cast<Eigen::Index>(i)) = spec.outputs[i].evaluate(xs, ws);
  }
  return out;
}

}  // namespace destab
