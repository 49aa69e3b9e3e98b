// Independent reference implementations used by the tests. Everything here
// is written from the definitions, densely and slowly, without reusing the
// library code paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "fairaug/graph.hpp"
#include "fairaug/types.hpp"

namespace oracle {

using fairaug::Index;
using fairaug::Matrix;
using fairaug::Vector;

inline double sigma(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double dcg(const std::vector<Index>& ranked, const std::set<Index>& relevant, int k) {
  double total = 0.0;
  for (std::size_t r = 0; r < ranked.size() && static_cast<int>(r) < k; ++r) {
    if (relevant.contains(ranked[r])) total += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return total;
}

// IDCG as the best DCG over every ordering of `universe` (which holds the
// relevant items), then NDCG = DCG / IDCG.
inline double brute_ndcg(const std::vector<Index>& ranked, const std::set<Index>& relevant, int k,
                         std::vector<Index> universe) {
  std::sort(universe.begin(), universe.end());
  double best = 0.0;
  do {
    best = std::max(best, dcg(universe, relevant, k));
  } while (std::next_permutation(universe.begin(), universe.end()));
  return best == 0.0 ? 0.0 : dcg(ranked, relevant, k) / best;
}

// Smoothed NDCG evaluated term by term.
inline double approx_ndcg(const std::vector<double>& scores, const std::set<Index>& relevant, double t,
                          std::optional<int> k) {
  if (relevant.empty()) return 0.0;
  double value = 0.0;
  for (const Index i : relevant) {
    double rank = 1.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (static_cast<Index>(j) != i) rank += sigma((scores[j] - scores[static_cast<std::size_t>(i)]) / t);
    }
    double term = 1.0 / std::log2(1.0 + rank);
    if (k) term *= sigma((*k + 0.5 - rank) / t);
    value += term;
  }
  const int cut = k ? std::min<int>(*k, static_cast<int>(relevant.size())) : static_cast<int>(relevant.size());
  double ideal = 0.0;
  for (int r = 0; r < cut; ++r) ideal += 1.0 / std::log2(r + 2.0);
  return value / ideal;
}

struct WeightedEdge {
  Index user;
  Index item;
  double weight;
};

// Dense D^-1/2 A D^-1/2 over U + I nodes; zero rows for isolated nodes.
inline Matrix dense_normalized(Index users, Index items, const std::vector<WeightedEdge>& edges) {
  const Index n = users + items;
  Matrix a = Matrix::Zero(n, n);
  for (const auto& e : edges) {
    a(e.user, users + e.item) += e.weight;
    a(users + e.item, e.user) += e.weight;
  }
  Vector deg = a.rowwise().sum();
  Matrix out = Matrix::Zero(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      if (a(r, c) != 0.0) out(r, c) = a(r, c) / std::sqrt(deg(r) * deg(c));
    }
  }
  return out;
}

inline std::vector<WeightedEdge> unit_edges(const fairaug::BipartiteGraph& g) {
  std::vector<WeightedEdge> out;
  for (const auto& e : g.edges) out.push_back({e.user, e.item, 1.0});
  return out;
}

// Mean of E, AE, ..., A^K E.
inline Matrix dense_propagate(const Matrix& a, const Matrix& ego, int layers) {
  Matrix layer = ego;
  Matrix total = ego;
  for (int l = 0; l < layers; ++l) {
    layer = a * layer;
    total += layer;
  }
  return total / static_cast<double>(layers + 1);
}

inline double central_difference(const std::function<double(const Vector&)>& f, Vector x, Index i, double h) {
  const double x0 = x(i);
  x(i) = x0 + h;
  const double up = f(x);
  x(i) = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Random bipartite train graph where every user and item has an edge.
inline std::vector<fairaug::UserItem> random_edges(Index users, Index items, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(density);
  std::set<fairaug::UserItem> edges;
  for (Index u = 0; u < users; ++u) {
    for (Index i = 0; i < items; ++i) {
      if (coin(rng)) edges.insert({u, i});
    }
  }
  std::uniform_int_distribution<Index> any_item(0, items - 1);
  std::uniform_int_distribution<Index> any_user(0, users - 1);
  for (Index u = 0; u < users; ++u) edges.insert({u, any_item(rng)});
  for (Index i = 0; i < items; ++i) edges.insert({any_user(rng), i});
  return {edges.begin(), edges.end()};
}

}  // namespace oracle
