#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "fairaug/dataset.hpp"

namespace fairaug {

// Clustered implicit-feedback data with a binary user attribute. Each user
// draws most interactions from one preferred item cluster, with a
// popularity skew inside clusters; timestamps increase per user.
struct SyntheticConfig {
  Index users = 200;
  Index items = 300;
  int clusters = 10;
  int min_interactions = 20;
  int max_interactions = 40;
  double in_cluster = 0.8;
  // Probability that a user's preferred cluster comes from the half of the
  // clusters owned by its group (labels[0] owns the first half).
  double group_affinity = 0.0;
  std::array<std::string, 2> labels{"A", "B"};
  // Fraction of interactions kept for users labelled labels[0]; 1 keeps all.
  double first_group_keep = 1.0;
  std::uint64_t seed = 13;
};

InteractionDataset make_synthetic(const SyntheticConfig& config);

/// Keeps round(keep * n) (at least one) random train interactions of every
/// user with the given label; other splits are untouched.
SplitDataset subsample_train(const SplitDataset& split, const std::string& label, double keep,
                             std::uint64_t seed);

void write_dataset(const std::filesystem::path& interactions, const std::filesystem::path& attributes,
                   const InteractionDataset& ds);

}  // namespace fairaug
