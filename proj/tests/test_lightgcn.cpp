#include <doctest.h>

#include <cmath>
#include <random>

#include "fairaug/errors.hpp"
#include "fairaug/lightgcn.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fairaug;

namespace {

ModelParams random_params(Index users, Index items, Index dim, int layers, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ModelParams p;
  p.num_layers = layers;
  p.user_embeddings = Matrix::NullaryExpr(users, dim, [&] { return n(rng); });
  p.item_embeddings = Matrix::NullaryExpr(items, dim, [&] { return n(rng); });
  return p;
}

NormalizedOperator empty_operator(Index users, Index items) {
  NormalizedOperator op;
  op.num_users = users;
  op.num_items = items;
  op.pattern.size = users + items;
  op.values = Vector::Zero(0);
  return op;
}

// Two blocks of four users and four items; every user holds out one item of
// its own block for validation.
struct Cliques {
  BipartiteGraph graph;
  ItemLists validation;
};

Cliques two_cliques() {
  std::vector<UserItem> pairs;
  ItemLists validation(8);
  for (Index u = 0; u < 8; ++u) {
    const Index base = u < 4 ? 0 : 4;
    for (Index i = base; i < base + 4; ++i) {
      if (i == u) {
        validation[static_cast<std::size_t>(u)].push_back(i);
      } else {
        pairs.push_back({u, i});
      }
    }
  }
  return {build_graph(pairs, 8, 8), validation};
}

}  // namespace

TEST_CASE("zero layers return the ego embeddings") {
  std::mt19937_64 rng(1);
  auto p = random_params(3, 4, 5, 0, rng);
  const std::vector<UserItem> pairs{{0, 0}, {1, 2}, {2, 3}};
  CHECK(propagate(p, normalized_adjacency(build_graph(pairs, 3, 4))) == p.stacked());
}

TEST_CASE("an all-zero operator averages the ego layer with zeros") {
  std::mt19937_64 rng(2);
  auto p = random_params(2, 3, 4, 2, rng);
  const Matrix out = propagate(p, empty_operator(2, 3));
  CHECK((out - p.stacked() / 3.0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("one layer over a single edge") {
  ModelParams p;
  p.num_layers = 1;
  p.user_embeddings = Matrix::Constant(1, 2, 1.0);
  p.item_embeddings.resize(1, 2);
  p.item_embeddings << 3.0, -1.0;
  const std::vector<UserItem> pairs{{0, 0}};
  const Matrix out = propagate(p, normalized_adjacency(build_graph(pairs, 1, 1)));
  // Operator entry is 1, so each node averages itself with its neighbour.
  CHECK(out(0, 0) == doctest::Approx(2.0));
  CHECK(out(0, 1) == doctest::Approx(0.0));
  CHECK(out(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("propagation matches the dense oracle and is linear") {
  std::mt19937_64 rng(3);
  const auto g = build_graph(oracle::random_edges(7, 11, 0.3, rng), 7, 11);
  const auto op = normalized_adjacency(g);
  const Matrix dense = oracle::dense_normalized(7, 11, oracle::unit_edges(g));
  for (int layers : {0, 1, 2, 3}) {
    auto p = random_params(7, 11, 6, layers, rng);
    const Matrix expected = oracle::dense_propagate(dense, p.stacked(), layers);
    CHECK((propagate(p, op) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  auto a = random_params(7, 11, 4, 2, rng);
  auto b = random_params(7, 11, 4, 2, rng);
  ModelParams mix = a;
  mix.user_embeddings = 2.0 * a.user_embeddings - 0.5 * b.user_embeddings;
  mix.item_embeddings = 2.0 * a.item_embeddings - 0.5 * b.item_embeddings;
  const Matrix lhs = propagate(mix, op);
  const Matrix rhs = 2.0 * propagate(a, op) - 0.5 * propagate(b, op);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tape propagation equals the plain one") {
  std::mt19937_64 rng(4);
  const auto g = build_graph(oracle::random_edges(5, 6, 0.4, rng), 5, 6);
  const auto op = normalized_adjacency(g);
  auto p = random_params(5, 6, 3, 2, rng);
  ad::Tape tape;
  const OperatorTerm term{&op.pattern, tape.constant(op.values)};
  const auto out = propagate(tape.constant(p.stacked()), std::span<const OperatorTerm>(&term, 1), 2);
  CHECK((out.value() - propagate(p, op)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("propagate rejects a mismatched operator") {
  std::mt19937_64 rng(5);
  auto p = random_params(2, 3, 2, 1, rng);
  CHECK_THROWS_AS(propagate(p, empty_operator(3, 3)), ShapeError);
}

TEST_CASE("scores are inner products") {
  Matrix e(4, 2);
  e << 1, 0,   // user 0
      0.6, 0.8,  // user 1
      0, 1,      // item 0
      0.6, 0.8;  // item 1
  const Matrix s = predict_scores(e, 2);
  CHECK(s(0, 0) == 0.0);
  CHECK(s(1, 1) == doctest::Approx(1.0));
  CHECK(s(0, 1) == doctest::Approx(0.6));
  const std::vector<Index> only{1};
  const Matrix s1 = predict_scores(e, 2, only);
  CHECK(s1.rows() == 1);
  CHECK(s1(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("topk ordering, exclusion and ties") {
  Matrix s(1, 3);
  s << 3, 1, 2;
  CHECK(topk(s, 2)[0] == std::vector<Index>{0, 2});
  CHECK(topk(s, 2, {{0}})[0] == std::vector<Index>{2, 1});
  CHECK(topk(s, 5, {{0, 1, 2}})[0].empty());
  CHECK(topk(s, 10)[0].size() == 3);
  CHECK_THROWS_AS(topk(s, 0), ContractError);
  Matrix tie(1, 4);
  tie << 1, 2, 2, 1;
  CHECK(topk(tie, 3)[0] == std::vector<Index>{1, 2, 0});
  CHECK_THROWS_AS(topk(s, 1, {{}, {}}), ShapeError);
}

TEST_CASE("topk never returns an excluded item") {
  std::mt19937_64 rng(6);
  const Matrix s = Matrix::Random(20, 15);
  ItemLists exclude(20);
  for (auto& row : exclude) {
    for (Index i = 0; i < 15; ++i) {
      if (rng() % 3 == 0) row.push_back(i);
    }
  }
  const auto lists = topk(s, 5, exclude);
  for (std::size_t r = 0; r < lists.size(); ++r) {
    for (const Index i : lists[r]) CHECK_FALSE(std::binary_search(exclude[r].begin(), exclude[r].end(), i));
  }
}

TEST_CASE("bpr loss at zero margin is ln 2") {
  ad::Tape t;
  const auto loss = ad::scale(ad::mean(ad::log_sigmoid(t.constant(Matrix::Zero(4, 1)))), -1.0);
  CHECK(loss.scalar() == doctest::Approx(std::log(2.0)));
}

TEST_CASE("training separates two disjoint cliques") {
  const auto c = two_cliques();
  TrainConfig config;
  config.dim = 8;
  config.seed = 7;
  config.epochs = 200;
  config.k = 3;
  const auto result = train_bpr(c.graph, c.validation, config);
  CHECK(result.validation_ndcg.size() == 201);
  CHECK(result.best_validation_ndcg == result.validation_ndcg[static_cast<std::size_t>(result.best_epoch)]);

  const Matrix s = predict_scores(propagate(result.params, normalized_adjacency(c.graph)), 8);
  double within = 0.0;
  double across = 0.0;
  for (Index u = 0; u < 8; ++u) {
    for (Index i = 0; i < 8; ++i) ((u < 4) == (i < 4) ? within : across) += s(u, i);
  }
  CHECK(within / 32.0 > across / 32.0);

  const auto again = train_bpr(c.graph, c.validation, config);
  CHECK(again.params.user_embeddings == result.params.user_embeddings);
  CHECK(again.params.item_embeddings == result.params.item_embeddings);
  CHECK(again.validation_ndcg == result.validation_ndcg);
}

TEST_CASE("training needs positives") {
  BipartiteGraph g;
  g.num_users = 2;
  g.num_items = 2;
  g.user_items.resize(2);
  g.user_degree = {0, 0};
  g.item_degree = {0, 0};
  CHECK_THROWS_AS(train_bpr(g, ItemLists(2), TrainConfig{}), DataError);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  std::mt19937_64 rng(8);
  auto p = random_params(4, 5, 3, 2, rng);
  p.user_embeddings(0, 0) = 1.0 / 3.0;
  save_model(dir.path() / "m.txt", p);
  const auto back = load_model(dir.path() / "m.txt");
  CHECK(back.num_layers == 2);
  CHECK(back.user_embeddings == p.user_embeddings);
  CHECK(back.item_embeddings == p.item_embeddings);
  save_model(dir.path() / "m2.txt", back);
  CHECK(slurp(dir.path() / "m.txt") == slurp(dir.path() / "m2.txt"));

  CHECK_THROWS_WITH_AS(load_model(dir.path() / "none.txt"), doctest::Contains("run train first"), DataError);
  CHECK_THROWS_AS(load_model(dir.write("bad.txt", "something else\n")), DataError);
  CHECK_THROWS_AS(load_model(dir.write("short.txt", "fairaug-model 1\ndim 2 layers 1 users 1 items 1\n0.5\n")),
                  DataError);
}

TEST_CASE("zero-weight augmentation leaves final embeddings bit-identical") {
  std::mt19937_64 rng(9);
  const auto g = build_graph(oracle::random_edges(6, 8, 0.25, rng), 6, 8);
  auto p = random_params(6, 8, 4, 2, rng);
  std::vector<WeightedPair> extra;
  for (Index u = 0; u < 6; ++u) {
    for (Index i = 0; i < 8; ++i) {
      if (!g.has_edge(u, i)) extra.push_back({{u, i}, 0.0});
    }
  }
  CHECK(propagate(p, normalized_adjacency(g, extra)) == propagate(p, normalized_adjacency(g)));
}
