#include "fairaug/metrics.hpp"

#include <memory>
#include <numbers>

#include "fairaug/errors.hpp"

namespace fairaug {

double ideal_dcg(std::size_t num_relevant, int k) {
  const std::size_t hits = std::min(num_relevant, static_cast<std::size_t>(std::max(k, 0)));
  double idcg = 0.0;
  for (std::size_t r = 1; r <= hits; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  return idcg;
}

double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> relevant, int k) {
  if (k < 1) throw ContractError("ndcg_at_k: k must be >= 1");
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  const std::size_t depth = std::min(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < depth; ++r) {
    if (detail::contains(relevant, ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return dcg / ideal_dcg(relevant.size(), k);
}

ad::Var approx_ndcg_rows(const ad::Var& scores, const ItemLists& relevant, const ItemLists& excluded,
                         const ApproxNdcgOptions& options) {
  const Index rows = scores.rows();
  const Index n = scores.cols();
  if (static_cast<Index>(relevant.size()) != rows) {
    throw ShapeError("approx_ndcg_rows: " + std::to_string(relevant.size()) + " relevance lists for " +
                     std::to_string(rows) + " rows");
  }
  if (!excluded.empty() && static_cast<Index>(excluded.size()) != rows) {
    throw ShapeError("approx_ndcg_rows: exclusion lists do not match rows");
  }
  if (!(options.temperature > 0)) throw ContractError("approx_ndcg: temperature must be positive");

  const double t = options.temperature;
  const Matrix& s = scores.value();
  Matrix value = Matrix::Zero(rows, 1);
  // d value(r) / d scores(r, :), kept for the backward pass.
  auto jacobian = std::make_shared<Matrix>(Matrix::Zero(rows, n));

  std::vector<double> sig;
  for (Index r = 0; r < rows; ++r) {
    const auto& rel = relevant[static_cast<std::size_t>(r)];
    if (rel.empty()) continue;
    const std::span<const Index> skip =
        excluded.empty() ? std::span<const Index>{} : std::span<const Index>(excluded[static_cast<std::size_t>(r)]);
    const int cutoff = options.k ? *options.k : static_cast<int>(rel.size());
    const double inv_idcg = 1.0 / ideal_dcg(rel.size(), cutoff);
    sig.assign(static_cast<std::size_t>(n), 0.0);

    for (const Index i : rel) {
      if (detail::contains(skip, i)) continue;
      const double si = s(r, i);
      double rank = 1.0;
      for (Index j = 0; j < n; ++j) {
        if (j == i || detail::contains(skip, j)) {
          sig[static_cast<std::size_t>(j)] = -1.0;
          continue;
        }
        const double p = detail::logistic((s(r, j) - si) / t);
        sig[static_cast<std::size_t>(j)] = p;
        rank += p;
      }
      const double lg = std::log(1.0 + rank);
      const double gain = std::numbers::ln2 / lg;
      const double dgain = -std::numbers::ln2 / (lg * lg * (1.0 + rank));
      double cut = 1.0;
      double dcut = 0.0;
      if (options.k) {
        cut = detail::logistic((*options.k + 0.5 - rank) / t);
        dcut = -cut * (1.0 - cut) / t;
      }
      value(r, 0) += inv_idcg * cut * gain;
      const double d_rank = inv_idcg * (dcut * gain + cut * dgain);
      // rank depends on s_j through sigmoid((s_j - s_i) / t).
      for (Index j = 0; j < n; ++j) {
        const double p = sig[static_cast<std::size_t>(j)];
        if (p < 0) continue;
        const double dp = p * (1.0 - p) / t;
        (*jacobian)(r, j) += d_rank * dp;
        (*jacobian)(r, i) -= d_rank * dp;
      }
    }
  }

  return scores.tape().record(std::move(value), {scores}, [scores, jacobian](const Matrix& g, ad::Adjoints& adj) {
    adj.at(scores) += (jacobian->array().colwise() * g.col(0).array()).matrix();
  });
}

PerUserNdcg per_user_ndcg(const ItemLists& lists, std::span<const Index> users,
                          const ItemLists& ground_truth, int k) {
  if (lists.size() != users.size()) throw ShapeError("per_user_ndcg: lists and users differ in length");
  PerUserNdcg out;
  for (std::size_t r = 0; r < users.size(); ++r) {
    const auto& truth = ground_truth[static_cast<std::size_t>(users[r])];
    if (truth.empty()) continue;
    out[users[r]] = ndcg_at_k(lists[r], truth, k);
  }
  return out;
}

double group_mean(const PerUserNdcg& values, std::span<const Index> members) {
  double total = 0.0;
  std::size_t count = 0;
  for (const Index u : members) {
    const auto it = values.find(u);
    if (it == values.end()) continue;
    total += it->second;
    ++count;
  }
  if (count == 0) throw DataError("group has no evaluable users");
  return total / static_cast<double>(count);
}

double delta_ndcg(const PerUserNdcg& values, std::span<const Index> disadvantaged,
                  std::span<const Index> advantaged) {
  return group_mean(values, disadvantaged) - group_mean(values, advantaged);
}

GroupUtility designate_groups(const PerUserNdcg& perturbation_ndcg, const GroupPartition& partition) {
  const auto& g0 = partition.groups[0];
  const auto& g1 = partition.groups[1];
  const double m0 = group_mean(perturbation_ndcg, g0.users);
  const double m1 = group_mean(perturbation_ndcg, g1.users);

  GroupUtility out;
  out.per_user_ndcg = perturbation_ndcg;
  const bool first_disadvantaged = m0 <= m1;
  if (m0 == m1) {
    out.warning = "groups " + g0.label + " and " + g1.label +
                  " have equal perturbation NDCG; " + g0.label + " designated disadvantaged";
  }
  const auto& d = first_disadvantaged ? g0 : g1;
  const auto& a = first_disadvantaged ? g1 : g0;
  out.disadvantaged = d.label;
  out.advantaged = a.label;
  out.disadvantaged_users = d.users;
  out.advantaged_users = a.users;
  out.disadvantaged_mean = first_disadvantaged ? m0 : m1;
  out.advantaged_mean = first_disadvantaged ? m1 : m0;
  return out;
}

ad::Var fairness_loss(std::span<const ad::Var> group_utilities) {
  const std::size_t g = group_utilities.size();
  if (g < 2) throw ContractError("fairness_loss: needs at least two groups");
  const double pairs = static_cast<double>(g * (g - 1) / 2);
  ad::Var total;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) {
      ad::Var term = ad::elementwise_square(group_utilities[i] - group_utilities[j]);
      total = total.valid() ? total + term : term;
    }
  }
  return ad::scale(total, 1.0 / pairs);
}

double fairness_loss(std::span<const double> group_utilities) {
  const std::size_t g = group_utilities.size();
  if (g < 2) throw ContractError("fairness_loss: needs at least two groups");
  double total = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) {
      const double d = group_utilities[i] - group_utilities[j];
      total += d * d;
    }
  }
  return total / static_cast<double>(g * (g - 1) / 2);
}

ad::Var dist_loss(const ad::Var& weights, double beta) {
  return ad::scale(ad::abs_ratio(ad::sum(ad::elementwise_square(weights))), beta * 0.5);
}

std::optional<double> relative_difference(double before, double after, RelativeKind kind) {
  if (kind == RelativeKind::kAbsolute) {
    before = std::abs(before);
    after = std::abs(after);
  }
  if (before == 0.0) return std::nullopt;
  return (after - before) / std::abs(before) * 100.0;
}

}  // namespace fairaug
