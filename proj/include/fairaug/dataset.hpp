#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairaug/types.hpp"

namespace fairaug {

struct Interaction {
  Index user = 0;
  Index item = 0;
  std::int64_t timestamp = 0;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Entity tables shared by a dataset and every split derived from it. Dense
// ids index into the name tables; names are the ids found in the input files.
struct DatasetInfo {
  Index num_users = 0;
  Index num_items = 0;
  std::vector<std::string> user_names;
  std::vector<std::string> item_names;
  std::vector<std::string> group_of;  // per dense user id
};

struct InteractionDataset {
  DatasetInfo info;
  // Sorted by (user, timestamp, item); (user, item) pairs are unique.
  std::vector<Interaction> interactions;
};

// The validation split doubles as the perturbation set of the augmentation.
struct SplitDataset {
  DatasetInfo info;
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::vector<std::string> warnings;

  const std::vector<Interaction>& perturbation() const { return validation; }
};

struct Group {
  std::string label;
  std::vector<Index> users;  // ascending
};

// Exactly two groups, ordered by label.
struct GroupPartition {
  std::array<Group, 2> groups;
  std::vector<int> slot_of;  // per user: 0 or 1
};

/// Reads an interactions TSV (`user<TAB>item<TAB>timestamp`) and an attributes
/// TSV (`user<TAB>label`). Ids are remapped to dense indices in canonical
/// order (numeric ids by value, then other ids lexicographically). Repeated
/// (user, item) pairs keep the latest timestamp.
InteractionDataset load_interactions(const std::filesystem::path& path,
                                     const std::filesystem::path& attr_path);

/// Per user, ascending by (timestamp, item): the first floor(0.7n) go to train,
/// up to floor(0.8n) to validation, the rest to test. Users with fewer than
/// three interactions are dropped (one warning each) and the remaining users
/// and items are re-indexed in canonical order.
SplitDataset temporal_split(const InteractionDataset& ds);

GroupPartition group_partition(const DatasetInfo& info);

/// Writes train.tsv, validation.tsv, test.tsv and attributes.tsv with the
/// original ids.
void write_split(const std::filesystem::path& dir, const SplitDataset& split);

/// Reads a directory written by write_split.
SplitDataset load_split(const std::filesystem::path& dir);

void write_interactions(const std::filesystem::path& path, const DatasetInfo& info,
                        const std::vector<Interaction>& rows);

// Per-user sorted item lists of an interaction collection.
ItemLists items_by_user(Index num_users, const std::vector<Interaction>& rows);

}  // namespace fairaug
