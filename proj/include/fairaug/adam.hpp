#pragma once

#include <cmath>

#include "fairaug/types.hpp"

namespace fairaug::ad {

// First-order update with bias-corrected moment estimates.
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam(Index rows, Index cols, Options options)
      : options_(options), m_(Matrix::Zero(rows, cols)), v_(Matrix::Zero(rows, cols)) {}

  // params -= lr * m_hat / (sqrt(v_hat) + eps)
  template <typename Derived>
  void step(Eigen::MatrixBase<Derived>& params, const Matrix& grad) {
    ++t_;
    m_ = options_.beta1 * m_ + (1.0 - options_.beta1) * grad;
    v_ = options_.beta2 * v_ + (1.0 - options_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    params.array() -= options_.learning_rate * (m_.array() / c1) /
                      ((v_.array() / c2).sqrt() + options_.epsilon);
  }

  long steps() const { return t_; }

 private:
  Options options_;
  Matrix m_;
  Matrix v_;
  long t_ = 0;
};

}  // namespace fairaug::ad
