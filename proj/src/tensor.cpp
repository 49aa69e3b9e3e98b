#include "fairaug/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "fairaug/errors.hpp"

namespace fairaug::ad {
namespace {

std::string shape(const Var& v) {
  std::ostringstream os;
  os << v.rows() << "x" << v.cols();
  return os.str();
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

double logistic(double x) {
  // Split on sign to avoid overflow of exp.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix one_by_one(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

const Matrix& Var::value() const { return tape_->nodes_[id_].value; }
const Matrix& Var::grad() const { return tape_->nodes_[id_].grad; }
bool Var::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("scalar(): value is " + shape(*this));
  return value()(0, 0);
}

Matrix& Adjoints::at(const Var& v) {
  Matrix& m = adj_[v.id()];
  if (m.size() == 0) m.setZero(v.rows(), v.cols());
  return m;
}

Var Tape::variable(Matrix value) {
  Node node;
  node.grad.setZero(value.rows(), value.cols());
  node.value = std::move(value);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardRule rule) {
  const bool any = std::any_of(parents.begin(), parents.end(), [this](const Var& p) {
    if (&p.tape() != this) throw ContractError("operands belong to different tapes");
    return p.requires_grad();
  });
  if (!any) return constant(std::move(value));
  Node node;
  node.grad.setZero(value.rows(), value.cols());
  node.value = std::move(value);
  node.requires_grad = true;
  node.rule = std::move(rule);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be scalar, got " + shape(loss));
  }
  if (!loss.requires_grad()) return;

  Adjoints adj(loss.id() + 1);
  adj.at(loss)(0, 0) = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || adj.adj_[id].size() == 0) continue;
    if (node.rule) node.rule(adj.adj_[id], adj);
  }
  for (std::size_t id = 0; id <= loss.id(); ++id) {
    if (adj.adj_[id].size() != 0) nodes_[id].grad += adj.adj_[id];
  }
}

void Tape::zero_grad() {
  for (auto& node : nodes_) {
    if (node.requires_grad) node.grad.setZero();
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape(a) + " vs " + shape(b));
  }
  return a.tape().record(a.value() * b.value(), {a, b}, [a, b](const Matrix& g, Adjoints& adj) {
    if (adj.wants(a)) adj.at(a).noalias() += g * b.value().transpose();
    if (adj.wants(b)) adj.at(b).noalias() += a.value().transpose() * g;
  });
}

Var transpose(const Var& a) {
  return a.tape().record(a.value().transpose(), {a},
                         [a](const Matrix& g, Adjoints& adj) { adj.accumulate(a, g.transpose()); });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](const Matrix& g, Adjoints& adj) {
    adj.accumulate(a, g);
    adj.accumulate(b, g);
  });
}

Var subtract(const Var& a, const Var& b) {
  require_same_shape("subtract", a, b);
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](const Matrix& g, Adjoints& adj) {
    adj.accumulate(a, g);
    adj.accumulate(b, -g);
  });
}

Var multiply(const Var& a, const Var& b) {
  require_same_shape("multiply", a, b);
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b},
                         [a, b](const Matrix& g, Adjoints& adj) {
                           adj.accumulate(a, g.cwiseProduct(b.value()));
                           adj.accumulate(b, g.cwiseProduct(a.value()));
                         });
}

Var scale(const Var& a, double c) {
  return a.tape().record(c * a.value(), {a},
                         [a, c](const Matrix& g, Adjoints& adj) { adj.accumulate(a, c * g); });
}

Var elementwise_sigmoid(const Var& a) {
  Matrix s = a.value().unaryExpr([](double x) { return logistic(x); });
  Matrix ds = s.array() * (1.0 - s.array());
  return a.tape().record(std::move(s), {a}, [a, ds = std::move(ds)](const Matrix& g, Adjoints& adj) {
    adj.accumulate(a, g.cwiseProduct(ds));
  });
}

Var log_sigmoid(const Var& a) {
  // log σ(x) = min(x, 0) - log1p(exp(-|x|))
  Matrix v = a.value().unaryExpr(
      [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); });
  return a.tape().record(std::move(v), {a}, [a](const Matrix& g, Adjoints& adj) {
    adj.accumulate(a, g.cwiseProduct(a.value().unaryExpr([](double x) { return logistic(-x); })));
  });
}

Var elementwise_square(const Var& a) {
  return a.tape().record(a.value().cwiseAbs2(), {a}, [a](const Matrix& g, Adjoints& adj) {
    adj.accumulate(a, 2.0 * g.cwiseProduct(a.value()));
  });
}

Var rsqrt(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) {
    if (x < 0) throw NumericError("rsqrt: negative input " + std::to_string(x));
    return x == 0 ? 0.0 : 1.0 / std::sqrt(x);
  });
  Matrix dv = a.value().unaryExpr([](double x) { return x == 0 ? 0.0 : -0.5 / (x * std::sqrt(x)); });
  return a.tape().record(std::move(v), {a}, [a, dv = std::move(dv)](const Matrix& g, Adjoints& adj) {
    adj.accumulate(a, g.cwiseProduct(dv));
  });
}

Var abs_ratio(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) { return std::abs(x) / (1.0 + std::abs(x)); });
  return a.tape().record(std::move(v), {a}, [a](const Matrix& g, Adjoints& adj) {
    adj.accumulate(a, g.cwiseProduct(a.value().unaryExpr([](double x) {
      const double d = 1.0 + std::abs(x);
      return (x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0) / (d * d);
    })));
  });
}

Var sum(const Var& a) {
  return a.tape().record(one_by_one(a.value().sum()), {a}, [a](const Matrix& g, Adjoints& adj) {
    adj.at(a).array() += g(0, 0);
  });
}

Var mean(const Var& a) {
  if (a.value().size() == 0) throw ShapeError("mean: empty operand");
  const double n = static_cast<double>(a.value().size());
  return a.tape().record(one_by_one(a.value().sum() / n), {a}, [a, n](const Matrix& g, Adjoints& adj) {
    adj.at(a).array() += g(0, 0) / n;
  });
}

Var row_sum(const Var& a) {
  return a.tape().record(a.value().rowwise().sum(), {a}, [a](const Matrix& g, Adjoints& adj) {
    adj.at(a).colwise() += g.col(0);
  });
}

Var select_rows(const Var& a, std::span<const Index> rows) {
  std::vector<Index> idx(rows.begin(), rows.end());
  Matrix v(static_cast<Index>(idx.size()), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= a.rows()) {
      throw ShapeError("select_rows: row " + std::to_string(idx[r]) + " out of range for " + shape(a));
    }
    v.row(static_cast<Index>(r)) = a.value().row(idx[r]);
  }
  return a.tape().record(std::move(v), {a}, [a, idx = std::move(idx)](const Matrix& g, Adjoints& adj) {
    Matrix& out = adj.at(a);
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(idx[r]) += g.row(static_cast<Index>(r));
  });
}

Var scatter_add_rows(const Var& a, std::span<const Index> rows, Index out_rows) {
  if (static_cast<Index>(rows.size()) != a.rows()) {
    throw ShapeError("scatter_add_rows: " + std::to_string(rows.size()) + " indices for " + shape(a));
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  Matrix v = Matrix::Zero(out_rows, a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= out_rows) {
      throw ShapeError("scatter_add_rows: target row " + std::to_string(idx[r]) + " out of range");
    }
    v.row(idx[r]) += a.value().row(static_cast<Index>(r));
  }
  return a.tape().record(std::move(v), {a}, [a, idx = std::move(idx)](const Matrix& g, Adjoints& adj) {
    Matrix& out = adj.at(a);
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) += g.row(idx[r]);
  });
}

Var symmetric_spmm(const SymmetricPattern& pattern, const Var& values, const Var& dense) {
  const Index m = pattern.entries();
  if (values.rows() != m || values.cols() != 1) {
    throw ShapeError("symmetric_spmm: values " + shape(values) + " for " + std::to_string(m) + " entries");
  }
  if (dense.rows() != pattern.size) {
    throw ShapeError("symmetric_spmm: operator size " + std::to_string(pattern.size) + " vs dense " +
                     shape(dense));
  }
  const Matrix& x = dense.value();
  const auto& w = values.value();
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index e = 0; e < m; ++e) {
    const Index a = pattern.first[static_cast<std::size_t>(e)];
    const Index b = pattern.second[static_cast<std::size_t>(e)];
    out.row(a) += w(e, 0) * x.row(b);
    out.row(b) += w(e, 0) * x.row(a);
  }
  auto p = std::make_shared<const SymmetricPattern>(pattern);
  return values.tape().record(std::move(out), {values, dense}, [p, values, dense](const Matrix& g, Adjoints& adj) {
    const Index m = p->entries();
    const Matrix& x = dense.value();
    if (adj.wants(values)) {
      Matrix& gv = adj.at(values);
      for (Index e = 0; e < m; ++e) {
        const Index a = p->first[static_cast<std::size_t>(e)];
        const Index b = p->second[static_cast<std::size_t>(e)];
        gv(e, 0) += g.row(a).dot(x.row(b)) + g.row(b).dot(x.row(a));
      }
    }
    if (adj.wants(dense)) {
      const auto& w = values.value();
      Matrix& gx = adj.at(dense);
      for (Index e = 0; e < m; ++e) {
        const Index a = p->first[static_cast<std::size_t>(e)];
        const Index b = p->second[static_cast<std::size_t>(e)];
        gx.row(b) += w(e, 0) * g.row(a);
        gx.row(a) += w(e, 0) * g.row(b);
      }
    }
  });
}

double finite_difference_check(const ScalarFunction& f, const Vector& x, double eps,
                               std::span<const Index> coords) {
  if (!(eps > 0)) throw ContractError("finite_difference_check: eps must be positive");
  Vector analytic;
  {
    Tape tape;
    const Var input = tape.variable(x);
    const Var out = f(tape, input);
    tape.backward(out);
    analytic = input.grad().col(0);
  }
  const auto eval = [&](const Vector& at) {
    Tape tape;
    return f(tape, tape.constant(at)).scalar();
  };
  std::vector<Index> all;
  if (coords.empty()) {
    all.resize(static_cast<std::size_t>(x.size()));
    for (Index k = 0; k < x.size(); ++k) all[static_cast<std::size_t>(k)] = k;
    coords = all;
  }
  double worst = 0.0;
  for (const Index k : coords) {
    Vector plus = x;
    Vector minus = x;
    plus(k) += eps;
    minus(k) -= eps;
    const double numeric = (eval(plus) - eval(minus)) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic(k) - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace fairaug::ad
