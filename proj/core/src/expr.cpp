#include "klyap/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "klyap/error.hpp"

namespace klyap {

struct Expr::Node {
  Op op = Op::kConstant;
  double value = 0.0;  // kConstant
  int index = 0;       // kVariable: 0-based; kPow: exponent
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Op = Expr::Op;

NodePtr make_constant(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kConstant;
  n->value = v;
  return n;
}

NodePtr make_variable(int index) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kVariable;
  n->index = index;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::kConstant && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::kConstant; }

NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr, int index = 0) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->index = index;
  return n;
}

double eval_node(const Expr::Node& n, std::span<const double> x);

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::kNeg:
      return -a;
    case Op::kSin:
      return std::sin(a);
    case Op::kCos:
      return std::cos(a);
    case Op::kExp:
      return std::exp(a);
    case Op::kTanh:
      return std::tanh(a);
    default:
      return std::numeric_limits<double>::quiet_NaN();
  }
}

double int_pow(double base, int exponent) {
  double result = 1.0;
  for (int e = exponent; e > 0; e >>= 1) {
    if (e & 1) result *= base;
    base *= base;
  }
  return result;
}

double eval_node(const Expr::Node& n, std::span<const double> x) {
  switch (n.op) {
    case Op::kConstant:
      return n.value;
    case Op::kVariable:
      return x[static_cast<std::size_t>(n.index)];
    case Op::kAdd:
      return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case Op::kSub:
      return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case Op::kMul:
      return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case Op::kPow:
      return int_pow(eval_node(*n.lhs, x), n.index);
    default:
      return apply_unary(n.op, eval_node(*n.lhs, x));
  }
}

// Smart constructors: constant folding plus the 0/1 identities, nothing else.
NodePtr neg(NodePtr a) {
  if (is_const(a)) return make_constant(-a->value);
  if (a->op == Op::kNeg) return a->lhs;
  return make_node(Op::kNeg, std::move(a));
}

NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_node(Op::kAdd, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_constant(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return make_node(Op::kSub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make_node(Op::kMul, std::move(a), std::move(b));
}

NodePtr power(NodePtr base, int exponent) {
  if (exponent == 0) return make_constant(1.0);
  if (exponent == 1) return base;
  if (is_const(base)) return make_constant(int_pow(base->value, exponent));
  return make_node(Op::kPow, std::move(base), nullptr, exponent);
}

NodePtr unary(Op op, NodePtr a) {
  if (is_const(a)) return make_constant(apply_unary(op, a->value));
  return make_node(op, std::move(a));
}

NodePtr differentiate(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::kConstant:
      return make_constant(0.0);
    case Op::kVariable:
      return make_constant(n->index == var ? 1.0 : 0.0);
    case Op::kNeg:
      return neg(differentiate(n->lhs, var));
    case Op::kAdd:
      return add(differentiate(n->lhs, var), differentiate(n->rhs, var));
    case Op::kSub:
      return sub(differentiate(n->lhs, var), differentiate(n->rhs, var));
    case Op::kMul:
      return add(mul(differentiate(n->lhs, var), n->rhs),
                 mul(n->lhs, differentiate(n->rhs, var)));
    case Op::kPow: {
      auto outer = mul(make_constant(static_cast<double>(n->index)),
                       power(n->lhs, n->index - 1));
      return mul(std::move(outer), differentiate(n->lhs, var));
    }
    case Op::kSin:
      return mul(unary(Op::kCos, n->lhs), differentiate(n->lhs, var));
    case Op::kCos:
      return mul(neg(unary(Op::kSin, n->lhs)), differentiate(n->lhs, var));
    case Op::kExp:
      return mul(n, differentiate(n->lhs, var));
    case Op::kTanh: {
      // 1 - tanh(u)^2
      auto outer = sub(make_constant(1.0), power(n, 2));
      return mul(std::move(outer), differentiate(n->lhs, var));
    }
  }
  return make_constant(0.0);
}

std::string print(const Expr::Node& n) {
  switch (n.op) {
    case Op::kConstant:
      if (n.value < 0.0) return fmt::format("(-{:.17g})", -n.value);
      return fmt::format("{:.17g}", n.value);
    case Op::kVariable:
      return fmt::format("x{}", n.index + 1);
    case Op::kNeg:
      return fmt::format("(-{})", print(*n.lhs));
    case Op::kAdd:
      return fmt::format("({} + {})", print(*n.lhs), print(*n.rhs));
    case Op::kSub:
      return fmt::format("({} - {})", print(*n.lhs), print(*n.rhs));
    case Op::kMul:
      return fmt::format("({} * {})", print(*n.lhs), print(*n.rhs));
    case Op::kPow:
      return fmt::format("({})^{}", print(*n.lhs), n.index);
    case Op::kSin:
      return fmt::format("sin({})", print(*n.lhs));
    case Op::kCos:
      return fmt::format("cos({})", print(*n.lhs));
    case Op::kExp:
      return fmt::format("exp({})", print(*n.lhs));
    case Op::kTanh:
      return fmt::format("tanh({})", print(*n.lhs));
  }
  return "?";
}

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError(pos_, "empty expression");
    auto root = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) {
      throw ParseError(pos_, fmt::format("unexpected '{}'", text_[pos_]));
    }
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail_expected(std::string_view what) {
    if (pos_ >= text_.size()) {
      throw ParseError(pos_, fmt::format("expected {} but reached end of input", what));
    }
    throw ParseError(pos_, fmt::format("expected {} but found '{}'", what, text_[pos_]));
  }

  NodePtr parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = add(std::move(lhs), parse_term());
      } else if (accept('-')) {
        lhs = sub(std::move(lhs), parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    auto lhs = parse_unary();
    while (accept('*')) lhs = mul(std::move(lhs), parse_unary());
    return lhs;
  }

  NodePtr parse_unary() {
    if (accept('-')) return neg(parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail_expected("a non-negative integer exponent");
    int exponent = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, exponent);
    if (ec != std::errc{}) throw ParseError(start, "exponent out of range");
    if (pos_ < text_.size() && text_[pos_] == '.') {
      throw ParseError(pos_, "exponent must be an integer");
    }
    return power(std::move(base), exponent);
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail_expected("an operand");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_expr();
      if (!accept(')')) fail_expected("')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError(pos_, fmt::format("unexpected '{}'", c));
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value,
                                     std::chars_format::general);
    if (ec != std::errc{}) throw ParseError(start, "malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return make_constant(value);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);

    static constexpr std::pair<std::string_view, Op> kFunctions[] = {
        {"sin", Op::kSin}, {"cos", Op::kCos}, {"exp", Op::kExp}, {"tanh", Op::kTanh}};
    for (const auto& [fname, op] : kFunctions) {
      if (name == fname) {
        if (!accept('(')) fail_expected("'(' after " + std::string(fname));
        auto arg = parse_expr();
        if (!accept(')')) fail_expected("')'");
        return unary(op, std::move(arg));
      }
    }

    if (name.size() >= 2 && name[0] == 'x') {
      int index = 0;
      auto digits = name.substr(1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      if (ec == std::errc{} && ptr == digits.data() + digits.size() && digits[0] != '0') {
        if (index < 1 || index > dim_) {
          throw ParseError(start, fmt::format("variable '{}' out of range for dimension {}",
                                              name, dim_));
        }
        return make_variable(index - 1);
      }
    }
    throw ParseError(start, fmt::format("unknown identifier '{}'", name));
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::parse(std::string_view text, int dim) {
  if (dim < 1) throw ValidationError("expr", "dimension must be at least 1");
  return Expr(Parser(text, dim).parse(), dim);
}

Expr Expr::constant(double value, int dim) { return Expr(make_constant(value), dim); }

Expr Expr::variable(int index, int dim) {
  if (index < 0 || index >= dim) {
    throw ValidationError("expr", fmt::format("variable index {} out of range", index));
  }
  return Expr(make_variable(index), dim);
}

Expr::Op Expr::op() const noexcept { return root_->op; }

double Expr::constant_value() const noexcept { return root_->value; }

double Expr::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) {
    throw ValidationError("expr", fmt::format("expected a point of dimension {}, got {}", dim_,
                                              x.size()));
  }
  return eval_node(*root_, x);
}

Expr Expr::derivative(int var) const {
  if (var < 0 || var >= dim_) {
    throw ValidationError("expr", fmt::format("derivative variable {} out of range", var));
  }
  return Expr(differentiate(root_, var), dim_);
}

std::string Expr::to_string() const { return print(*root_); }

Expr operator+(const Expr& a, const Expr& b) { return Expr(add(a.root_, b.root_), a.dim_); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(sub(a.root_, b.root_), a.dim_); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(mul(a.root_, b.root_), a.dim_); }
Expr operator-(const Expr& a) { return Expr(neg(a.root_), a.dim_); }
Expr pow(const Expr& base, int exponent) {
  if (exponent < 0) throw ValidationError("expr", "negative exponents are not supported");
  return Expr(power(base.root_, exponent), base.dim_);
}
Expr sin(const Expr& a) { return Expr(unary(Op::kSin, a.root_), a.dim_); }
Expr cos(const Expr& a) { return Expr(unary(Op::kCos, a.root_), a.dim_); }
Expr exp(const Expr& a) { return Expr(unary(Op::kExp, a.root_), a.dim_); }
Expr tanh(const Expr& a) { return Expr(unary(Op::kTanh, a.root_), a.dim_); }

VectorField::VectorField(std::vector<Expr> components) : components_(std::move(components)) {
  const int d = dim();
  if (d < 1) throw ValidationError("expr", "vector field needs at least one component");
  for (const auto& c : components_) {
    if (c.dim() != d) {
      throw ValidationError("expr", fmt::format("component over {} variables in a {}-dimensional "
                                                "field",
                                                c.dim(), d));
    }
  }
  partials_.reserve(static_cast<std::size_t>(d * d));
  for (const auto& c : components_) {
    for (int r = 0; r < d; ++r) partials_.push_back(c.derivative(r));
  }
}

VectorField VectorField::parse(std::span<const std::string> components) {
  const int d = static_cast<int>(components.size());
  std::vector<Expr> exprs;
  exprs.reserve(components.size());
  for (const auto& text : components) exprs.push_back(Expr::parse(text, d));
  return VectorField(std::move(exprs));
}

void VectorField::evaluate(std::span<const double> x, std::span<double> out) const {
  for (std::size_t j = 0; j < components_.size(); ++j) out[j] = components_[j].eval(x);
}

Eigen::VectorXd VectorField::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(dim());
  evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
           std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Eigen::MatrixXd VectorField::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int d = dim();
  Eigen::MatrixXd jac(d, d);
  for (int j = 0; j < d; ++j) {
    for (int r = 0; r < d; ++r) jac(j, r) = partial(j, r).eval(x);
  }
  return jac;
}

}  // namespace klyap
