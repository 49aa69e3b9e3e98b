#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairaug/dataset.hpp"
#include "fairaug/tensor.hpp"
#include "fairaug/types.hpp"

namespace fairaug {

/// DCG of the ideal ranking with min(k, num_relevant) hits.
double ideal_dcg(std::size_t num_relevant, int k);

/// Binary-relevance NDCG@k; `relevant` must be sorted. Zero when nothing is relevant.
double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> relevant, int k);

struct ApproxNdcgOptions {
  double temperature = 0.1;
  // Soft top-k cutoff; no cutoff when empty.
  std::optional<int> k = 10;
};

namespace detail {

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline bool contains(std::span<const Index> sorted, Index v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

}  // namespace detail

/// Smoothed NDCG of one score row. Rank of item i is
/// 1 + sum_{j != i} sigmoid((s_j - s_i) / T) over the non-excluded items, and
/// each relevant term is weighted by sigmoid((k + 0.5 - rank) / T).
template <typename Derived>
double approx_ndcg(const Eigen::MatrixBase<Derived>& scores, std::span<const Index> relevant,
                   const ApproxNdcgOptions& options, std::span<const Index> excluded = {}) {
  if (relevant.empty()) return 0.0;
  const double t = options.temperature;
  const Index n = scores.size();
  double value = 0.0;
  for (const Index i : relevant) {
    if (detail::contains(excluded, i)) continue;
    const double si = static_cast<double>(scores(i));
    double rank = 1.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i || detail::contains(excluded, j)) continue;
      rank += detail::logistic((static_cast<double>(scores(j)) - si) / t);
    }
    double term = 1.0 / std::log2(1.0 + rank);
    if (options.k) term *= detail::logistic((*options.k + 0.5 - rank) / t);
    value += term;
  }
  const int cutoff = options.k ? *options.k : static_cast<int>(relevant.size());
  return value / ideal_dcg(relevant.size(), cutoff);
}

/// Differentiable approx_ndcg of every row of `scores`; returns rows × 1.
/// `relevant` and `excluded` (empty, or one list per row) hold sorted item ids.
ad::Var approx_ndcg_rows(const ad::Var& scores, const ItemLists& relevant, const ItemLists& excluded,
                         const ApproxNdcgOptions& options);

using PerUserNdcg = std::map<Index, double>;

/// NDCG@k of users[r] given recommendations lists[r]; users without ground
/// truth are skipped.
PerUserNdcg per_user_ndcg(const ItemLists& lists, std::span<const Index> users,
                          const ItemLists& ground_truth, int k);

struct GroupUtility {
  PerUserNdcg per_user_ndcg;
  std::string disadvantaged;
  std::string advantaged;
  std::vector<Index> disadvantaged_users;  // every member of the group
  std::vector<Index> advantaged_users;
  double disadvantaged_mean = 0.0;
  double advantaged_mean = 0.0;
  std::optional<std::string> warning;
};

double group_mean(const PerUserNdcg& values, std::span<const Index> members);

/// mean NDCG over U_D minus mean over U_A, each over members present in `values`.
double delta_ndcg(const PerUserNdcg& values, std::span<const Index> disadvantaged,
                  std::span<const Index> advantaged);

/// The group with the lower mean NDCG on the perturbation set is disadvantaged;
/// a tie picks the first label and sets `warning`.
GroupUtility designate_groups(const PerUserNdcg& perturbation_ndcg, const GroupPartition& partition);

/// Mean squared pairwise difference of group utilities.
ad::Var fairness_loss(std::span<const ad::Var> group_utilities);
double fairness_loss(std::span<const double> group_utilities);

/// beta / 2 * s(sum w^2) with s(x) = |x| / (1 + |x|).
ad::Var dist_loss(const ad::Var& weights, double beta);

template <typename Derived>
double dist_loss(const Eigen::MatrixBase<Derived>& weights, double beta) {
  const double x = static_cast<double>(weights.squaredNorm());
  return beta * 0.5 * (std::abs(x) / (1.0 + std::abs(x)));
}

enum class RelativeKind {
  kAbsolute,  // (|after| - |before|) / |before|, used for ΔNDCG
  kSigned,    // (after - before) / before, used for NDCG
};

/// Percentage change; empty ("n/a") when before is zero.
std::optional<double> relative_difference(double before, double after,
                                          RelativeKind kind = RelativeKind::kAbsolute);

}  // namespace fairaug
