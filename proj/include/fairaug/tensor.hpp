#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "fairaug/types.hpp"

// Minimal tape-based reverse-mode differentiation over dense Eigen matrices.
//
// Every op evaluates eagerly and records a backward rule on the tape that owns
// its inputs. Nodes whose inputs are all constants are themselves constants and
// record nothing, so frozen model weights cost no backward work.
namespace fairaug::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  // Accumulated d(loss)/d(this); empty for constants.
  const Matrix& grad() const;
  double scalar() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Adjoint buffer passed to backward rules during Tape::backward.
class Adjoints {
 public:
  bool wants(const Var& v) const { return v.requires_grad(); }
  // Zero-initialised on first access; constants must not be requested.
  Matrix& at(const Var& v);

  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
    if (!wants(v)) return;
    at(v) += g;
  }

 private:
  friend class Tape;
  explicit Adjoints(std::size_t n) : adj_(n) {}
  std::vector<Matrix> adj_;
};

using BackwardRule = std::function<void(const Matrix& upstream, Adjoints& adj)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf that receives gradients.
  Var variable(Matrix value);
  Var constant(Matrix value);
  // Records an op result. If no parent requires a gradient the rule is dropped.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardRule rule);

  /// Populates grad() on every node that requires it with d(loss)/d(node).
  /// Repeated calls accumulate; zero_grad() resets.
  void backward(const Var& loss);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardRule rule;
  };
  std::deque<Node> nodes_;
};

// Undirected weighted edge list acting as a symmetric size × size operator:
// entry e contributes value[e] at (first[e], second[e]) and (second[e], first[e]).
struct SymmetricPattern {
  Index size = 0;
  std::vector<Index> first;
  std::vector<Index> second;

  Index entries() const { return static_cast<Index>(first.size()); }
};

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var subtract(const Var& a, const Var& b);
Var multiply(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double c);
Var elementwise_sigmoid(const Var& a);
Var log_sigmoid(const Var& a);
Var elementwise_square(const Var& a);
// x^(-1/2) for x > 0 and 0 for x == 0 (isolated nodes); negative input throws.
Var rsqrt(const Var& a);
// |x| / (1 + |x|), a bounded squashing function.
Var abs_ratio(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
Var row_sum(const Var& a);
Var select_rows(const Var& a, std::span<const Index> rows);
Var scatter_add_rows(const Var& a, std::span<const Index> rows, Index out_rows);
// pattern(values) · dense, values is an entries() × 1 column.
Var symmetric_spmm(const SymmetricPattern& pattern, const Var& values, const Var& dense);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return subtract(a, b); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

using ScalarFunction = std::function<Var(Tape&, const Var&)>;

/// Max over `coords` (all coordinates when empty) of
/// |analytic - central difference| / max(1, |central difference|).
double finite_difference_check(const ScalarFunction& f, const Vector& x, double eps,
                               std::span<const Index> coords = {});

}  // namespace fairaug::ad
