#include <doctest.h>

#include <cmath>
#include <random>

#include "fairaug/errors.hpp"
#include "fairaug/policies.hpp"
#include "oracles.hpp"

using namespace fairaug;

namespace {

std::vector<Index> range(Index lo, Index hi) {
  std::vector<Index> out;
  for (Index i = lo; i < hi; ++i) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("policy names") {
  CHECK(parse_policy("bm").user == UserPolicy::kNone);
  CHECK(parse_policy("bm").item == ItemPolicy::kNone);
  CHECK(parse_policy("ip").item == ItemPolicy::kItemPreference);
  const auto combo = parse_policy("fr+ip");
  CHECK(combo.user == UserPolicy::kFurthest);
  CHECK(combo.item == ItemPolicy::kItemPreference);
  for (const std::string_view name : {"bm", "zn", "ld", "sp", "fr", "ip", "zn+ip", "ld+ip", "sp+ip", "fr+ip"}) {
    CHECK(parse_policy(name).name() == name);
  }
  CHECK_THROWS_WITH_AS(parse_policy("ld+ld"), doctest::Contains("same type"), ContractError);
  CHECK_THROWS_WITH_AS(parse_policy("ld+sp"), doctest::Contains("same type"), ContractError);
  CHECK_THROWS_AS(parse_policy("ip+ip"), ContractError);
  CHECK_THROWS_AS(parse_policy("xx"), ContractError);
  CHECK_THROWS_AS(parse_policy("ip+ld"), ContractError);
  CHECK_THROWS_AS(parse_policy("bm+ip"), ContractError);
}

TEST_CASE("sample size is a ceiling") {
  CHECK(sample_size(0.35, 10) == 4);
  CHECK(sample_size(0.35, 3) == 2);
  CHECK(sample_size(0.2, 20) == 4);
  CHECK(sample_size(0.35, 20) == 7);
  CHECK(sample_size(1.0, 9) == 9);
  CHECK(sample_size(0.34, 3) == 2);
  CHECK(sample_size(0.1, 30) == 3);
}

TEST_CASE("zero-ndcg users") {
  const std::vector<Index> d{1, 3, 4};
  ItemLists truth(5);
  truth[1] = {7};
  truth[3] = {2};
  truth[4] = {9};
  const ItemLists lists{{0, 1, 2}, {2, 5, 6}, {0, 1, 9}};
  CHECK(sample_zn(lists, d, truth, 3) == std::vector<Index>{1});
  const ItemLists hits{{7}, {2}, {9}};
  CHECK_THROWS_AS(sample_zn(hits, d, truth, 3), EmptySelectionError);
}

TEST_CASE("lowest degree") {
  // users 0..9 with degree u + 1, except users 2 and 5 swapped
  std::vector<UserItem> pairs;
  for (Index u = 0; u < 10; ++u) {
    const Index deg = u == 2 ? 6 : u == 5 ? 3 : u + 1;
    for (Index i = 0; i < deg; ++i) pairs.push_back({u, i});
  }
  const auto g = build_graph(pairs, 10, 12);
  const auto d = range(0, 10);
  CHECK(sample_ld(g, d, 0.35) == std::vector<Index>{0, 1, 3, 5});
  CHECK(sample_ld(g, d, 1.0) == d);

  const std::vector<UserItem> tie{{0, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}, {2, 3}, {2, 4}};
  const auto tg = build_graph(tie, 3, 5);
  CHECK(sample_ld(tg, range(0, 3), 0.3) == std::vector<Index>{0});
  // ceil(0.34 * 3) = 2 takes both degree-1 users
  CHECK(sample_ld(tg, range(0, 3), 0.34) == std::vector<Index>{0, 1});
}

TEST_CASE("sparse users by mean item popularity") {
  // item 0 degree 1, item 1 degree 2, item 2 degree 4
  const std::vector<UserItem> pairs{{0, 0}, {1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 2}, {4, 2}};
  const auto g = build_graph(pairs, 5, 3);
  CHECK(user_density(g, 0) == 1.0);
  CHECK(user_density(g, 1) == 3.0);
  CHECK(user_density(g, 3) == 4.0);
  const std::vector<Index> d{1, 2, 3};
  // users 1 and 2 tie at 3: the lower id wins
  CHECK(sample_sp(g, d, 0.2) == std::vector<Index>{1});
  CHECK(sample_sp(g, range(0, 5), 0.35) == std::vector<Index>{0, 1});
}

TEST_CASE("furthest users") {
  // users 0,1 advantaged on item 0; user 2 shares item 0; user 3 reaches via
  // user 2 and item 1; user 4 is in its own component.
  const std::vector<UserItem> pairs{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {3, 1}, {4, 2}};
  const auto g = build_graph(pairs, 5, 3);
  const std::vector<Index> a{0, 1};
  CHECK(mean_distance(g, 2, a) == 2.0);
  CHECK(mean_distance(g, 3, a) == 4.0);
  CHECK(mean_distance(g, 4, a) == static_cast<double>(5 + 3 + 1));
  const std::vector<Index> d{2, 3, 4};
  const auto picked = sample_fr(g, d, a, 0.35);
  CHECK(picked == std::vector<Index>{3, 4});
  CHECK(sample_fr(g, d, a, 0.1) == std::vector<Index>{4});
  CHECK_THROWS_AS(mean_distance(g, 2, {}), ContractError);
}

TEST_CASE("item preference") {
  std::vector<UserItem> pairs;
  // 10 disadvantaged users 0..9, 3 of them touch item 0; item 1 only by user 10.
  for (Index u = 0; u < 3; ++u) pairs.push_back({u, 0});
  for (Index u = 0; u < 10; ++u) pairs.push_back({u, 2 + (u % 18)});
  pairs.push_back({10, 1});
  const auto g = build_graph(pairs, 11, 20);
  const auto d = range(0, 10);
  CHECK(item_preference(g, 0, d) == doctest::Approx(0.3));
  CHECK(item_preference(g, 1, d) == 0.0);
  const auto items = sample_ip(g, d, 0.2);
  REQUIRE(items.size() == 4);
  CHECK(items[0] == 0);
  CHECK(std::find(items.begin(), items.end(), 1) == items.end());
  // after item 0 every item with one U_D user ties at 0.1: lowest ids win
  CHECK(items == std::vector<Index>{0, 2, 3, 4});
}

TEST_CASE("apply_policy combinations") {
  std::mt19937_64 rng(10);
  const auto g = build_graph(oracle::random_edges(12, 15, 0.2, rng), 12, 15);
  const auto d = range(0, 6);
  const auto a = range(6, 12);
  ItemLists truth(12);
  for (Index u = 0; u < 12; ++u) truth[static_cast<std::size_t>(u)] = {u % 15};
  ItemLists lists;
  for (const Index u : d) lists.push_back(u % 2 ? std::vector<Index>{u % 15} : std::vector<Index>{14});
  PolicyContext ctx{&g, d, a, &lists, &truth, 1};

  const auto bm = apply_policy(parse_policy("bm"), ctx);
  CHECK(bm.users == d);
  CHECK(bm.items == range(0, 15));

  auto spec = parse_policy("zn+ip");
  const auto zi = apply_policy(spec, ctx);
  CHECK(zi.users == std::vector<Index>{0, 2, 4});
  CHECK(zi.items == sample_ip(g, d, spec.psi_i));
  CHECK(zi.items.size() == 3);

  const auto ip = apply_policy(parse_policy("ip"), ctx);
  CHECK(ip.users == d);

  const auto ld = apply_policy(parse_policy("ld"), ctx);
  CHECK(ld.users.size() == 3);
  CHECK(ld.items.size() == 15);

  PolicyContext bare{&g, d, a, nullptr, nullptr, 1};
  CHECK_THROWS_AS(apply_policy(parse_policy("zn"), bare), ContractError);
}

TEST_CASE("cardinalities on random partitions") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    const Index users = 10 + static_cast<Index>(rng() % 30);
    const Index items = 10 + static_cast<Index>(rng() % 30);
    const auto g = build_graph(oracle::random_edges(users, items, 0.1, rng), users, items);
    std::vector<Index> d;
    std::vector<Index> a;
    for (Index u = 0; u < users; ++u) (rng() % 3 == 0 ? d : a).push_back(u);
    if (d.empty() || a.empty()) continue;
    const auto want = static_cast<std::size_t>(std::ceil(0.35 * static_cast<double>(d.size()) - 1e-9));
    for (const auto& picked : {sample_ld(g, d, 0.35), sample_sp(g, d, 0.35), sample_fr(g, d, a, 0.35)}) {
      CHECK(picked.size() == want);
      CHECK(std::is_sorted(picked.begin(), picked.end()));
      for (const Index u : picked) CHECK(std::binary_search(d.begin(), d.end(), u));
    }
    CHECK(sample_ip(g, d, 0.2).size() == static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(items) - 1e-9)));
    CHECK(sample_fr(g, d, a, 0.35) == sample_fr(g, d, a, 0.35));
  }
}
