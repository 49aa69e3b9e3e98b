#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace fairaug {

using Index = std::int64_t;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

// Per-user sorted item lists (train sets, ground truth, recommendations).
using ItemLists = std::vector<std::vector<Index>>;

struct UserItem {
  Index user = 0;
  Index item = 0;
  friend bool operator==(const UserItem&, const UserItem&) = default;
  friend auto operator<=>(const UserItem&, const UserItem&) = default;
};

}  // namespace fairaug
