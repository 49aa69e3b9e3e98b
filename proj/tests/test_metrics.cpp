#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "fairaug/errors.hpp"
#include "fairaug/metrics.hpp"
#include "oracles.hpp"

using namespace fairaug;

namespace {

Vector row(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (const double x : v) out(i++) = x;
  return out;
}

GroupPartition two_groups(std::vector<Index> first, std::vector<Index> second) {
  GroupPartition p;
  p.groups[0].label = "F";
  p.groups[0].users = std::move(first);
  p.groups[1].label = "M";
  p.groups[1].users = std::move(second);
  return p;
}

}  // namespace

TEST_CASE("exact ndcg examples") {
  const std::vector<Index> abc{0, 1, 2};
  CHECK(ndcg_at_k(abc, abc, 3) == doctest::Approx(1.0));
  const std::vector<Index> xay{5, 0, 6};
  const std::vector<Index> a{0};
  CHECK(ndcg_at_k(xay, a, 3) == doctest::Approx(1.0 / std::log2(3.0)));
  CHECK(ndcg_at_k(xay, a, 3) == doctest::Approx(0.6309).epsilon(1e-4));
  CHECK(ndcg_at_k(abc, {}, 3) == 0.0);
  // Relevant item beyond the cutoff does not count.
  CHECK(ndcg_at_k(xay, a, 1) == 0.0);
}

TEST_CASE("exact ndcg agrees with the brute-force oracle") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 5);
    std::vector<Index> ranked(static_cast<std::size_t>(n));
    std::iota(ranked.begin(), ranked.end(), Index{0});
    std::shuffle(ranked.begin(), ranked.end(), rng);
    std::set<Index> rel;
    for (Index i = 0; i < n; ++i) {
      if (rng() % 2) rel.insert(i);
    }
    const std::vector<Index> rel_sorted(rel.begin(), rel.end());
    for (int k = 1; k <= 3; ++k) {
      CHECK(ndcg_at_k(ranked, rel_sorted, k) == doctest::Approx(oracle::brute_ndcg(ranked, rel, k, ranked)));
    }
  }
}

TEST_CASE("approx ndcg examples") {
  const Vector s = row({2, 1});
  const std::vector<Index> first{0};
  CHECK(std::abs(approx_ndcg(s, first, {.temperature = 1e-3, .k = 2}) - 1.0) < 1e-3);
  const double expected = 1.0 / std::log2(1.0 + (1.0 + oracle::sigma(-1.0)));
  CHECK(approx_ndcg(s, first, {.temperature = 1.0, .k = std::nullopt}) == doctest::Approx(expected));
  CHECK(expected == doctest::Approx(0.846).epsilon(1e-3));
  CHECK(approx_ndcg(s, {}, {}) == 0.0);
}

TEST_CASE("approx ndcg with no relevance has zero gradient") {
  ad::Tape t;
  const auto scores = t.variable(Matrix::Random(2, 5));
  const auto v = approx_ndcg_rows(scores, ItemLists(2), {}, {});
  CHECK(v.value().isZero());
  t.backward(ad::sum(v));
  CHECK(scores.grad().isZero());
}

TEST_CASE("approx_ndcg_rows matches the oracle and central differences") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> d(-1, 1);
  const Index rows = 3;
  const Index n = 7;
  const Matrix s = Matrix::NullaryExpr(rows, n, [&] { return d(rng); });
  const ItemLists rel{{1, 4}, {0}, {2, 3, 6}};
  for (const std::optional<int> k : {std::optional<int>{3}, std::optional<int>{}}) {
    const ApproxNdcgOptions opt{.temperature = 0.3, .k = k};
    ad::Tape t;
    const auto x = t.variable(s);
    const auto v = approx_ndcg_rows(x, rel, {}, opt);
    for (Index r = 0; r < rows; ++r) {
      std::vector<double> sr;
      for (Index j = 0; j < n; ++j) sr.push_back(s(r, j));
      const auto& rr = rel[static_cast<std::size_t>(r)];
      const double want = oracle::approx_ndcg(sr, {rr.begin(), rr.end()}, opt.temperature, k);
      CHECK(v.value()(r, 0) == doctest::Approx(want).epsilon(1e-12));
      CHECK(approx_ndcg(s.row(r), rr, opt) == doctest::Approx(want).epsilon(1e-12));
    }
    // weighted sum of rows so each row's gradient is distinct
    Matrix w(rows, 1);
    w << 1.0, -2.0, 0.5;
    t.backward(ad::sum(ad::multiply(v, t.constant(w))));
    const Matrix g = x.grad();
    const double h = 1e-6;
    for (Index r = 0; r < rows; ++r) {
      for (Index j = 0; j < n; ++j) {
        auto eval = [&](double delta) {
          Matrix m = s;
          m(r, j) += delta;
          ad::Tape tt;
          return (approx_ndcg_rows(tt.constant(m), rel, {}, opt).value().array() * w.array()).sum();
        };
        const double numeric = (eval(h) - eval(-h)) / (2 * h);
        CHECK(std::abs(g(r, j) - numeric) / std::max(1.0, std::abs(numeric)) < 1e-4);
      }
    }
  }
}

TEST_CASE("excluded items leave the smoothed rank") {
  const Vector s = row({5, 2, 1});
  const std::vector<Index> rel{1};
  const std::vector<Index> skip{0};
  const ApproxNdcgOptions opt{.temperature = 1e-3, .k = 1};
  CHECK(approx_ndcg(s, rel, opt, skip) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(approx_ndcg(s, rel, opt) < 1e-3);
}

TEST_CASE("approx ndcg rejects a non-positive temperature") {
  ad::Tape t;
  CHECK_THROWS_AS(approx_ndcg_rows(t.constant(Matrix::Zero(1, 2)), {{0}}, {}, {.temperature = 0.0}), ContractError);
  CHECK_THROWS_AS(approx_ndcg_rows(t.constant(Matrix::Zero(1, 2)), {{0}, {1}}, {}, {}), ShapeError);
}

TEST_CASE("delta ndcg") {
  const PerUserNdcg v{{0, 0.2}, {1, 0.2}, {2, 0.5}, {3, 0.5}};
  const std::vector<Index> d{0, 1};
  const std::vector<Index> a{2, 3};
  CHECK(delta_ndcg(v, d, a) == doctest::Approx(-0.3));
  CHECK(delta_ndcg(v, d, d) == 0.0);
  const PerUserNdcg ext{{0, 1.0}, {1, 0.0}};
  const std::vector<Index> u0{0};
  const std::vector<Index> u1{1};
  CHECK(delta_ndcg(ext, u0, u1) == 1.0);
  CHECK(delta_ndcg(ext, u1, u0) == -1.0);
  const std::vector<Index> none;
  CHECK_THROWS_AS(delta_ndcg(v, none, a), DataError);
}

TEST_CASE("fairness loss") {
  const std::array<double, 2> pair{0.2, 0.5};
  CHECK(fairness_loss(pair) == doctest::Approx(0.09));
  const std::array<double, 3> equal{0.3, 0.3, 0.3};
  CHECK(fairness_loss(equal) == 0.0);
  const std::array<double, 2> same{0.4, 0.4};
  CHECK(fairness_loss(same) == 0.0);
  const std::array<double, 3> three{0.0, 0.3, 0.6};
  CHECK(fairness_loss(three) == doctest::Approx((0.09 + 0.36 + 0.09) / 3.0));
  const std::array<double, 1> one{0.1};
  CHECK_THROWS_AS(fairness_loss(one), ContractError);

  ad::Tape t;
  const std::array<ad::Var, 2> vars{t.variable(Matrix::Constant(1, 1, 0.2)), t.variable(Matrix::Constant(1, 1, 0.5))};
  const auto loss = fairness_loss(vars);
  CHECK(loss.scalar() == doctest::Approx(0.09));
  t.backward(loss);
  CHECK(vars[0].grad()(0, 0) == doctest::Approx(-0.6));
  CHECK(vars[1].grad()(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("distance loss") {
  CHECK(dist_loss(Vector::Zero(4), 0.5) == 0.0);
  const Vector half = Vector::Constant(3, 0.5);
  CHECK(dist_loss(half, 0.5) == doctest::Approx(0.5 * 0.5 * (0.75 / 1.75)));
  CHECK(dist_loss(half, 0.5) == doctest::Approx(0.1071).epsilon(1e-3));
  CHECK(dist_loss(Vector::Ones(100000), 0.5) < 0.25);
  CHECK(dist_loss(Vector::Ones(100000), 0.5) > 0.2499);

  ad::Tape t;
  const auto w = t.variable(half);
  const auto loss = dist_loss(w, 0.5);
  CHECK(loss.scalar() == doctest::Approx(dist_loss(half, 0.5)));
  t.backward(loss);
  // d/dw = beta/2 * 2w / (1 + x)^2 with x = 0.75
  CHECK(w.grad()(0, 0) == doctest::Approx(0.25 * 1.0 / (1.75 * 1.75)));
}

TEST_CASE("relative difference") {
  CHECK(*relative_difference(0.05, 0.0) == doctest::Approx(-100.0));
  CHECK(*relative_difference(0.05, 0.05) == 0.0);
  CHECK(*relative_difference(0.04, 0.06) == doctest::Approx(50.0));
  CHECK(*relative_difference(-0.05, 0.02) == doctest::Approx(-60.0));
  CHECK_FALSE(relative_difference(0.0, 0.1).has_value());
  CHECK(*relative_difference(0.2, 0.1, RelativeKind::kSigned) == doctest::Approx(-50.0));
  CHECK(*relative_difference(-0.2, -0.1, RelativeKind::kSigned) == doctest::Approx(50.0));
}

TEST_CASE("designate groups") {
  const auto p = two_groups({0, 1}, {2, 3});
  SUBCASE("first lower") {
    const auto g = designate_groups({{0, 0.1}, {1, 0.1}, {2, 0.4}, {3, 0.4}}, p);
    CHECK(g.disadvantaged == "F");
    CHECK(g.disadvantaged_mean == doctest::Approx(0.1));
    CHECK(g.advantaged_users == std::vector<Index>{2, 3});
    CHECK_FALSE(g.warning);
  }
  SUBCASE("second lower") {
    const auto g = designate_groups({{0, 0.4}, {1, 0.4}, {2, 0.1}, {3, 0.1}}, p);
    CHECK(g.disadvantaged == "M");
    CHECK(g.advantaged == "F");
  }
  SUBCASE("tie") {
    const auto g = designate_groups({{0, 0.3}, {1, 0.3}, {2, 0.3}, {3, 0.3}}, p);
    CHECK(g.disadvantaged == "F");
    REQUIRE(g.warning);
    CHECK(g.warning->find("equal") != std::string::npos);
  }
  SUBCASE("group without evaluable users") {
    CHECK_THROWS_AS(designate_groups({{0, 0.3}, {1, 0.3}}, p), DataError);
  }
}
