#include "fairaug/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairaug/errors.hpp"

namespace fairaug {
namespace {

std::optional<UserPolicy> user_policy_of(std::string_view s) {
  if (s == "zn") return UserPolicy::kZeroNdcg;
  if (s == "ld") return UserPolicy::kLowDegree;
  if (s == "sp") return UserPolicy::kSparse;
  if (s == "fr") return UserPolicy::kFurthest;
  return std::nullopt;
}

std::string_view user_policy_name(UserPolicy p) {
  switch (p) {
    case UserPolicy::kZeroNdcg: return "zn";
    case UserPolicy::kLowDegree: return "ld";
    case UserPolicy::kSparse: return "sp";
    case UserPolicy::kFurthest: return "fr";
    case UserPolicy::kNone: break;
  }
  return "";
}

// The `count` users with the smallest key (largest when `descending`), ties by id.
std::vector<Index> pick(std::span<const Index> users, const std::vector<double>& key, std::size_t count,
                        bool descending) {
  std::vector<std::size_t> order(users.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return descending ? key[a] > key[b] : key[a] < key[b];
    return users[a] < users[b];
  });
  std::vector<Index> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count && r < order.size(); ++r) out.push_back(users[order[r]]);
  std::sort(out.begin(), out.end());
  return out;
}

void check_psi(double psi) {
  if (!(psi > 0.0 && psi <= 1.0)) throw ContractError("sampling fraction must be in (0, 1]");
}

}  // namespace

std::string PolicySpec::name() const {
  std::string out;
  if (user != UserPolicy::kNone) out = user_policy_name(user);
  if (item == ItemPolicy::kItemPreference) out += out.empty() ? "ip" : "+ip";
  return out.empty() ? "bm" : out;
}

PolicySpec parse_policy(std::string_view name) {
  PolicySpec spec;
  if (name == "bm") return spec;
  if (name == "ip") {
    spec.item = ItemPolicy::kItemPreference;
    return spec;
  }
  const auto plus = name.find('+');
  if (plus == std::string_view::npos) {
    if (const auto u = user_policy_of(name)) {
      spec.user = *u;
      return spec;
    }
    throw ContractError("unknown policy '" + std::string(name) + "'; expected one of " +
                        std::string(kAllPolicies));
  }
  const auto lhs = name.substr(0, plus);
  const auto rhs = name.substr(plus + 1);
  const bool lhs_user = user_policy_of(lhs).has_value();
  const bool rhs_user = user_policy_of(rhs).has_value();
  if ((lhs_user && rhs_user) || (lhs == "ip" && rhs == "ip")) {
    throw ContractError("policy '" + std::string(name) +
                        "' combines two policies of the same type; only U+I combinations are allowed");
  }
  if (lhs_user && rhs == "ip") {
    spec.user = *user_policy_of(lhs);
    spec.item = ItemPolicy::kItemPreference;
    return spec;
  }
  throw ContractError("unknown policy '" + std::string(name) + "'; expected one of " +
                      std::string(kAllPolicies));
}

std::size_t sample_size(double psi, std::size_t n) {
  check_psi(psi);
  const double raw = psi * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

std::vector<Index> sample_zn(const ItemLists& lists, std::span<const Index> disadvantaged,
                             const ItemLists& perturbation, int k) {
  if (lists.size() != disadvantaged.size()) throw ShapeError("sample_zn: one list per user expected");
  std::vector<Index> out;
  for (std::size_t r = 0; r < disadvantaged.size(); ++r) {
    const auto& truth = perturbation[static_cast<std::size_t>(disadvantaged[r])];
    if (truth.empty()) continue;
    if (ndcg_at_k(lists[r], truth, k) == 0.0) out.push_back(disadvantaged[r]);
  }
  if (out.empty()) {
    throw EmptySelectionError("ZN: every disadvantaged user has a relevant item in the top-" +
                              std::to_string(k));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> sample_ld(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             double psi_u) {
  std::vector<double> key;
  for (const Index u : disadvantaged) {
    key.push_back(static_cast<double>(graph.user_degree[static_cast<std::size_t>(u)]));
  }
  return pick(disadvantaged, key, sample_size(psi_u, disadvantaged.size()), false);
}

double user_density(const BipartiteGraph& graph, Index user) {
  const auto& items = graph.user_items[static_cast<std::size_t>(user)];
  if (items.empty()) return 0.0;
  double total = 0.0;
  for (const Index i : items) total += static_cast<double>(graph.item_degree[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(items.size());
}

std::vector<Index> sample_sp(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             double psi_u) {
  std::vector<double> key;
  for (const Index u : disadvantaged) key.push_back(user_density(graph, u));
  return pick(disadvantaged, key, sample_size(psi_u, disadvantaged.size()), false);
}

double mean_distance(const BipartiteGraph& graph, Index user, std::span<const Index> advantaged) {
  if (advantaged.empty()) throw ContractError("FR: advantaged group is empty");
  const auto dist = shortest_path_lengths(graph, user);
  const double sentinel = static_cast<double>(graph.num_users + graph.num_items + 1);
  double total = 0.0;
  for (const Index a : advantaged) {
    const Index d = dist[static_cast<std::size_t>(a)];
    total += d == kUnreachable ? sentinel : static_cast<double>(d);
  }
  return total / static_cast<double>(advantaged.size());
}

std::vector<Index> sample_fr(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             std::span<const Index> advantaged, double psi_u) {
  std::vector<double> key;
  for (const Index u : disadvantaged) key.push_back(mean_distance(graph, u, advantaged));
  return pick(disadvantaged, key, sample_size(psi_u, disadvantaged.size()), true);
}

double item_preference(const BipartiteGraph& graph, Index item, std::span<const Index> disadvantaged) {
  if (disadvantaged.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Index u : disadvantaged) hits += graph.has_edge(u, item) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(disadvantaged.size());
}

std::vector<Index> sample_ip(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             double psi_i) {
  std::vector<Index> items(static_cast<std::size_t>(graph.num_items));
  std::iota(items.begin(), items.end(), Index{0});
  std::vector<double> counts(items.size(), 0.0);
  for (const Index u : disadvantaged) {
    for (const Index i : graph.user_items[static_cast<std::size_t>(u)]) counts[static_cast<std::size_t>(i)] += 1.0;
  }
  const double n = std::max<double>(1.0, static_cast<double>(disadvantaged.size()));
  for (auto& c : counts) c /= n;
  return pick(items, counts, sample_size(psi_i, items.size()), true);
}

Selection apply_policy(const PolicySpec& spec, const PolicyContext& context) {
  if (context.graph == nullptr) throw ContractError("apply_policy: missing graph");
  const auto& graph = *context.graph;
  Selection out;
  switch (spec.user) {
    case UserPolicy::kNone:
      out.users.assign(context.disadvantaged.begin(), context.disadvantaged.end());
      std::sort(out.users.begin(), out.users.end());
      break;
    case UserPolicy::kZeroNdcg:
      if (!context.baseline_lists || !context.perturbation) {
        throw ContractError("ZN needs baseline top-k lists and perturbation relevance");
      }
      out.users = sample_zn(*context.baseline_lists, context.disadvantaged, *context.perturbation, context.k);
      break;
    case UserPolicy::kLowDegree:
      out.users = sample_ld(graph, context.disadvantaged, spec.psi_u);
      break;
    case UserPolicy::kSparse:
      out.users = sample_sp(graph, context.disadvantaged, spec.psi_u);
      break;
    case UserPolicy::kFurthest:
      out.users = sample_fr(graph, context.disadvantaged, context.advantaged, spec.psi_u);
      break;
  }
  if (spec.item == ItemPolicy::kItemPreference) {
    out.items = sample_ip(graph, context.disadvantaged, spec.psi_i);
  } else {
    out.items.resize(static_cast<std::size_t>(graph.num_items));
    std::iota(out.items.begin(), out.items.end(), Index{0});
  }
  return out;
}

}  // namespace fairaug
