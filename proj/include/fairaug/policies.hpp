#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairaug/graph.hpp"
#include "fairaug/metrics.hpp"

namespace fairaug {

enum class UserPolicy { kNone, kZeroNdcg, kLowDegree, kSparse, kFurthest };
enum class ItemPolicy { kNone, kItemPreference };

// BM is {kNone, kNone}.
struct PolicySpec {
  UserPolicy user = UserPolicy::kNone;
  ItemPolicy item = ItemPolicy::kNone;
  double psi_u = 0.35;
  double psi_i = 0.20;

  std::string name() const;
};

/// Accepts bm, zn, ld, sp, fr, ip and the U+I combinations zn+ip, ld+ip,
/// sp+ip, fr+ip.
PolicySpec parse_policy(std::string_view name);

inline constexpr std::string_view kAllPolicies = "bm,zn,ld,sp,fr,ip,zn+ip,ld+ip,sp+ip,fr+ip";

// ceil(psi * n), robust to representation error in psi.
std::size_t sample_size(double psi, std::size_t n);

/// U_D users whose NDCG@k on the perturbation set is zero. `lists` are the
/// baseline top-k lists of `disadvantaged` (same order).
std::vector<Index> sample_zn(const ItemLists& lists, std::span<const Index> disadvantaged,
                             const ItemLists& perturbation, int k);
std::vector<Index> sample_ld(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             double psi_u);
std::vector<Index> sample_sp(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             double psi_u);
std::vector<Index> sample_fr(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             std::span<const Index> advantaged, double psi_u);
std::vector<Index> sample_ip(const BipartiteGraph& graph, std::span<const Index> disadvantaged,
                             double psi_i);

// Density used by SP: mean train degree of the user's items.
double user_density(const BipartiteGraph& graph, Index user);
// Distance used by FR: mean hop distance to the advantaged users.
double mean_distance(const BipartiteGraph& graph, Index user, std::span<const Index> advantaged);
// Share of U_D users that interacted with the item in train.
double item_preference(const BipartiteGraph& graph, Index item, std::span<const Index> disadvantaged);

struct PolicyContext {
  const BipartiteGraph* graph = nullptr;
  std::span<const Index> disadvantaged;
  std::span<const Index> advantaged;
  // Baseline top-k lists of `disadvantaged` (only needed by ZN).
  const ItemLists* baseline_lists = nullptr;
  const ItemLists* perturbation = nullptr;
  int k = 10;
};

struct Selection {
  std::vector<Index> users;  // ascending, subset of U_D
  std::vector<Index> items;  // ascending
};

Selection apply_policy(const PolicySpec& spec, const PolicyContext& context);

}  // namespace fairaug
