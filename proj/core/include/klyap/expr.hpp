#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace klyap {

/// Immutable scalar expression over the state variables x1..xd.
///
/// Grammar (whitespace ignored):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary ('*' unary)*
///     unary   := ('-' | '+') unary | power
///     power   := primary ('^' UINT)?
///     primary := NUMBER | 'x' INDEX | FUNC '(' expr ')' | '(' expr ')'
///     FUNC    := sin | cos | exp | tanh
///
/// Division and logarithms are deliberately absent so that evaluation is
/// total on finite inputs. Variables are addressed 0-based in the C++ API and
/// 1-based (x1, x2, ...) in text.
///
/// Copies share the node graph; all member functions are safe to call
/// concurrently.
class Expr {
 public:
  enum class Op {
    kConstant,
    kVariable,
    kNeg,
    kAdd,
    kSub,
    kMul,
    kPow,
    kSin,
    kCos,
    kExp,
    kTanh,
  };

  /// Throws ParseError on malformed input, unknown identifiers and variable
  /// indices outside [1, dim].
  static Expr parse(std::string_view text, int dim);

  static Expr constant(double value, int dim);
  static Expr variable(int index, int dim);

  int dim() const noexcept { return dim_; }
  Op op() const noexcept;

  bool is_constant() const noexcept { return op() == Op::kConstant; }
  /// Value of a constant node; only meaningful when is_constant().
  double constant_value() const noexcept;

  double eval(std::span<const double> x) const;
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  /// Exact structural derivative with respect to variable `var` (0-based).
  /// Constant subtrees are folded, nothing else is simplified.
  Expr derivative(int var) const;

  /// Fully parenthesised text that parses back to an equivalent expression.
  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, int exponent);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr tanh(const Expr& a);

  struct Node;

 private:
  Expr(std::shared_ptr<const Node> root, int dim) : root_(std::move(root)), dim_(dim) {}

  std::shared_ptr<const Node> root_;
  int dim_ = 0;
};

/// The right-hand side f of x' = f(x): d component expressions over d states.
class VectorField {
 public:
  explicit VectorField(std::vector<Expr> components);

  /// Parses one expression per component; dim is the number of components.
  static VectorField parse(std::span<const std::string> components);

  int dim() const noexcept { return static_cast<int>(components_.size()); }
  const Expr& component(int j) const { return components_.at(static_cast<std::size_t>(j)); }

  /// Symbolic first partial d f_j / d x_r.
  const Expr& partial(int j, int r) const {
    return partials_.at(static_cast<std::size_t>(j * dim() + r));
  }

  void evaluate(std::span<const double> x, std::span<double> out) const;
  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Df(x) from the symbolic partials.
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  std::vector<Expr> components_;
  std::vector<Expr> partials_;
};

}  // namespace klyap
