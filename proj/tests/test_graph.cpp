#include <doctest.h>

#include <cmath>
#include <random>

#include "fairaug/errors.hpp"
#include "fairaug/graph.hpp"
#include "oracles.hpp"

using namespace fairaug;

namespace {

// Operator entry (r, c) from the edge list, or 0.
double entry(const NormalizedOperator& op, Index r, Index c) {
  for (Index e = 0; e < op.pattern.entries(); ++e) {
    const auto a = op.pattern.first[static_cast<std::size_t>(e)];
    const auto b = op.pattern.second[static_cast<std::size_t>(e)];
    if ((a == r && b == c) || (a == c && b == r)) return op.values(e);
  }
  return 0.0;
}

}  // namespace

TEST_CASE("degrees of a small graph") {
  const std::vector<UserItem> pairs{{0, 0}, {0, 1}, {1, 0}};
  const auto g = build_graph(pairs, 2, 2);
  CHECK(g.user_degree == std::vector<Index>{2, 1});
  CHECK(g.item_degree == std::vector<Index>{2, 1});
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(1, 1));
}

TEST_CASE("single edge and duplicates") {
  const std::vector<UserItem> one{{0, 0}};
  const auto g = build_graph(one, 1, 1);
  CHECK(g.user_degree[0] == 1);
  CHECK(g.item_degree[0] == 1);
  const std::vector<UserItem> dup{{0, 0}, {0, 0}};
  CHECK(build_graph(dup, 1, 1).edges.size() == 1);
}

TEST_CASE("out-of-range ids are rejected") {
  const std::vector<UserItem> bad{{0, 3}};
  CHECK_THROWS_AS(build_graph(bad, 1, 3), ContractError);
  const std::vector<UserItem> neg{{-1, 0}};
  CHECK_THROWS_AS(build_graph(neg, 1, 3), ContractError);
}

TEST_CASE("normalized entries") {
  SUBCASE("lone edge") {
    const std::vector<UserItem> p{{0, 0}};
    const auto op = normalized_adjacency(build_graph(p, 1, 1));
    CHECK(entry(op, 0, 1) == doctest::Approx(1.0));
  }
  SUBCASE("degree 4 against degree 1") {
    const std::vector<UserItem> p{{0, 0}, {0, 1}, {0, 2}, {0, 3}};
    const auto op = normalized_adjacency(build_graph(p, 1, 4));
    CHECK(entry(op, 0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("extra unit edge") {
    const std::vector<UserItem> p{{0, 0}};
    const auto g = build_graph(p, 1, 2);
    const std::vector<WeightedPair> extra{{{0, 1}, 1.0}};
    const auto op = normalized_adjacency(g, extra);
    CHECK(entry(op, 0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(entry(op, 0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
}

TEST_CASE("operator matches the dense oracle with fractional extras") {
  std::mt19937_64 rng(11);
  const auto pairs = oracle::random_edges(6, 9, 0.25, rng);
  const auto g = build_graph(pairs, 6, 9);
  std::vector<WeightedPair> extra;
  std::vector<oracle::WeightedEdge> all = oracle::unit_edges(g);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (Index u = 0; u < 6; ++u) {
    for (Index i = 0; i < 9; ++i) {
      if (g.has_edge(u, i) || (u + i) % 3 != 0) continue;
      const double x = w(rng);
      extra.push_back({{u, i}, x});
      all.push_back({u, i, x});
    }
  }
  const Matrix dense = to_dense(normalized_adjacency(g, extra));
  const Matrix expected = oracle::dense_normalized(6, 9, all);
  CHECK((dense - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero-weight extras leave the operator unchanged") {
  std::mt19937_64 rng(2);
  const auto g = build_graph(oracle::random_edges(5, 7, 0.3, rng), 5, 7);
  std::vector<WeightedPair> extra;
  for (Index u = 0; u < 5; ++u) {
    for (Index i = 0; i < 7; ++i) {
      if (!g.has_edge(u, i)) extra.push_back({{u, i}, 0.0});
    }
  }
  const auto plain = normalized_adjacency(g);
  const auto zero = normalized_adjacency(g, extra);
  CHECK(plain.values == zero.values);
  CHECK(plain.pattern.first == zero.pattern.first);
  CHECK(plain.pattern.second == zero.pattern.second);
}

TEST_CASE("isolated nodes get empty rows") {
  const std::vector<UserItem> p{{0, 0}};
  const auto dense = to_dense(normalized_adjacency(build_graph(p, 2, 2)));
  CHECK(dense.row(1).isZero());
  CHECK(dense.row(3).isZero());
}

TEST_CASE("invalid extras") {
  const std::vector<UserItem> p{{0, 0}};
  const auto g = build_graph(p, 1, 2);
  const std::vector<WeightedPair> dup{{{0, 0}, 0.5}};
  CHECK_THROWS_AS(normalized_adjacency(g, dup), ContractError);
  const std::vector<WeightedPair> heavy{{{0, 1}, 1.5}};
  CHECK_THROWS_AS(normalized_adjacency(g, heavy), ContractError);
}

TEST_CASE("apply agrees with the dense operator") {
  std::mt19937_64 rng(5);
  const auto g = build_graph(oracle::random_edges(4, 6, 0.4, rng), 4, 6);
  const auto op = normalized_adjacency(g);
  const Matrix x = Matrix::Random(10, 3);
  CHECK((apply(op, x) - to_dense(op) * x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("candidate space enumeration") {
  const std::vector<Index> users{3, 7};
  const std::vector<Index> items{5, 9};
  const std::vector<UserItem> none{{0, 0}};
  const auto g = build_graph(none, 8, 10);
  const auto space = build_candidate_space(g, users, items);
  CHECK(space.size() == 4);
  CHECK(space.pairs() == std::vector<UserItem>{{3, 5}, {3, 9}, {7, 5}, {7, 9}});
  CHECK(space.index_of(7, 5) == 2);
  CHECK(space.pair_at(0) == UserItem{3, 5});
  CHECK_THROWS_AS(space.index_of(1, 1), ContractError);

  const std::vector<UserItem> with{{3, 9}};
  const auto g2 = build_graph(with, 8, 10);
  const auto s2 = build_candidate_space(g2, users, items);
  CHECK(s2.size() == 3);
  CHECK(s2.pairs() == std::vector<UserItem>{{3, 5}, {7, 5}, {7, 9}});
}

TEST_CASE("candidate users must be disadvantaged") {
  const std::vector<UserItem> p{{0, 0}};
  const auto g = build_graph(p, 4, 2);
  const std::vector<Index> advantaged{2, 3};
  const std::vector<Index> disadvantaged{0, 1};
  const std::vector<Index> items{0, 1};
  CHECK_THROWS_AS(build_candidate_space(g, advantaged, items, disadvantaged), ContractError);
}

TEST_CASE("empty candidate space") {
  const std::vector<UserItem> p{{0, 0}};
  const auto g = build_graph(p, 1, 1);
  const std::vector<Index> users{0};
  const std::vector<Index> items{0};
  CHECK_THROWS_AS(build_candidate_space(g, users, items), EmptySelectionError);
}

TEST_CASE("h is a bijection on random spaces") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = build_graph(oracle::random_edges(9, 12, 0.2, rng), 9, 12);
    std::vector<Index> users;
    std::vector<Index> items;
    for (Index u = 0; u < 9; ++u) {
      if (rng() % 2) users.push_back(u);
    }
    for (Index i = 0; i < 12; ++i) {
      if (rng() % 2) items.push_back(i);
    }
    if (users.empty() || items.empty()) continue;
    try {
      const auto space = build_candidate_space(g, users, items);
      for (std::size_t j = 0; j < space.size(); ++j) {
        const auto [u, i] = space.pair_at(j);
        CHECK(space.index_of(u, i) == j);
        CHECK_FALSE(g.has_edge(u, i));
      }
    } catch (const EmptySelectionError&) {
    }
  }
}

TEST_CASE("shortest paths") {
  // users 0,1 share item 0; user 2 only touches item 2.
  const std::vector<UserItem> p{{0, 0}, {1, 0}, {0, 1}, {2, 2}};
  const auto g = build_graph(p, 3, 3);
  const auto d = shortest_path_lengths(g, 0);
  CHECK(d[1] == 2);
  CHECK(d[static_cast<std::size_t>(g.item_node(1))] == 1);
  CHECK(d[2] == kUnreachable);
  CHECK(d[0] == 0);
}
