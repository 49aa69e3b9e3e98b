#include "fairaug/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "fairaug/errors.hpp"

namespace fairaug {

InteractionDataset make_synthetic(const SyntheticConfig& config) {
  if (config.users < 2 || config.items < config.clusters || config.clusters < 1 ||
      config.min_interactions < 3 || config.max_interactions < config.min_interactions ||
      config.max_interactions > config.items || config.clusters < 2 * (config.group_affinity > 0.0) ||
      !(config.group_affinity >= 0.0 && config.group_affinity <= 1.0)) {
    throw ContractError("make_synthetic: invalid configuration");
  }
  std::mt19937_64 rng(config.seed);
  const Index cluster_size = config.items / config.clusters;

  // Popularity inside a cluster decays with rank: weight 1 / (rank + 1).
  std::vector<double> rank_weight(static_cast<std::size_t>(cluster_size));
  for (Index r = 0; r < cluster_size; ++r) rank_weight[static_cast<std::size_t>(r)] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<Index> in_cluster_pick(rank_weight.begin(), rank_weight.end());
  std::uniform_int_distribution<int> cluster_pick(0, config.clusters - 1);
  std::uniform_int_distribution<Index> any_item(0, config.items - 1);
  std::uniform_int_distribution<int> length(config.min_interactions, config.max_interactions);
  std::uniform_int_distribution<int> gap(1, 3600);
  std::bernoulli_distribution stay(config.in_cluster);
  std::bernoulli_distribution keep(config.first_group_keep);
  std::bernoulli_distribution own_half(config.group_affinity);
  const int half = config.clusters / 2;
  std::uniform_int_distribution<int> first_half(0, std::max(half, 1) - 1);
  std::uniform_int_distribution<int> second_half(half, config.clusters - 1);

  InteractionDataset ds;
  auto& info = ds.info;
  info.num_users = config.users;
  info.num_items = config.items;
  for (Index u = 0; u < config.users; ++u) {
    info.user_names.push_back(std::to_string(u));
    info.group_of.push_back(config.labels[static_cast<std::size_t>(u % 2)]);
  }
  for (Index i = 0; i < config.items; ++i) info.item_names.push_back(std::to_string(i));

  for (Index u = 0; u < config.users; ++u) {
    int home = cluster_pick(rng);
    if (config.group_affinity > 0.0 && own_half(rng)) home = u % 2 == 0 ? first_half(rng) : second_half(rng);
    const int n = length(rng);
    std::set<Index> seen;
    std::int64_t t = 1'000'000 + u;
    std::vector<Interaction> rows;
    while (static_cast<int>(seen.size()) < n) {
      const Index item = stay(rng) ? home * cluster_size + in_cluster_pick(rng) : any_item(rng);
      if (!seen.insert(item).second) continue;
      t += gap(rng);
      rows.push_back({u, item, t});
    }
    if (u % 2 == 0 && config.first_group_keep < 1.0) {
      std::vector<Interaction> kept;
      for (const auto& x : rows) {
        if (keep(rng)) kept.push_back(x);
      }
      // Never thin below the three interactions a split needs.
      for (std::size_t r = 0; kept.size() < 5 && r < rows.size(); ++r) {
        if (std::find(kept.begin(), kept.end(), rows[r]) == kept.end()) kept.push_back(rows[r]);
      }
      std::sort(kept.begin(), kept.end(), [](const Interaction& a, const Interaction& b) {
        return a.timestamp < b.timestamp;
      });
      rows = std::move(kept);
    }
    ds.interactions.insert(ds.interactions.end(), rows.begin(), rows.end());
  }
  return ds;
}

SplitDataset subsample_train(const SplitDataset& split, const std::string& label, double keep,
                             std::uint64_t seed) {
  if (!(keep > 0.0 && keep <= 1.0)) throw ContractError("subsample_train: keep must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<Interaction>> per_user(static_cast<std::size_t>(split.info.num_users));
  for (const auto& x : split.train) per_user[static_cast<std::size_t>(x.user)].push_back(x);

  SplitDataset out = split;
  out.train.clear();
  for (Index u = 0; u < split.info.num_users; ++u) {
    auto rows = per_user[static_cast<std::size_t>(u)];
    if (split.info.group_of[static_cast<std::size_t>(u)] == label && !rows.empty()) {
      const auto target = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(keep * static_cast<double>(rows.size()))));
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(std::min(target, rows.size()));
      std::sort(rows.begin(), rows.end(), [](const Interaction& a, const Interaction& b) {
        return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.item < b.item;
      });
    }
    out.train.insert(out.train.end(), rows.begin(), rows.end());
  }
  return out;
}

void write_dataset(const std::filesystem::path& interactions, const std::filesystem::path& attributes,
                   const InteractionDataset& ds) {
  write_interactions(interactions, ds.info, ds.interactions);
  std::ofstream out(attributes);
  if (!out) throw DataError("cannot write " + attributes.string());
  for (Index u = 0; u < ds.info.num_users; ++u) {
    out << ds.info.user_names[static_cast<std::size_t>(u)] << '\t'
        << ds.info.group_of[static_cast<std::size_t>(u)] << '\n';
  }
}

}  // namespace fairaug
