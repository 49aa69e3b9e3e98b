#pragma once

#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "fairaug/dataset.hpp"
#include "fairaug/tensor.hpp"
#include "fairaug/types.hpp"

namespace fairaug {

// Train interaction graph. Node ids: users [0, U), items [U, U + I).
struct BipartiteGraph {
  Index num_users = 0;
  Index num_items = 0;
  std::vector<UserItem> edges;  // sorted, unique
  std::vector<Index> user_degree;
  std::vector<Index> item_degree;
  ItemLists user_items;                  // sorted per user
  std::vector<std::vector<Index>> item_users;  // sorted per item

  Index num_nodes() const { return num_users + num_items; }
  Index item_node(Index item) const { return num_users + item; }
  bool has_edge(Index user, Index item) const;
};

BipartiteGraph build_graph(std::span<const UserItem> pairs, Index num_users, Index num_items);
BipartiteGraph build_graph(std::span<const Interaction> train, Index num_users, Index num_items);

struct WeightedPair {
  UserItem pair;
  double weight = 1.0;
};

// D^-1/2 Ã D^-1/2 stored as a symmetric edge list over graph nodes.
struct NormalizedOperator {
  Index num_users = 0;
  Index num_items = 0;
  ad::SymmetricPattern pattern;
  Vector values;
};

/// Entry for (u, i) with weight w is w / sqrt(deg(u) deg(i)), degrees counting
/// fractional extra weights. Extras with weight exactly 0 are omitted, so an
/// all-zero extra set reproduces the plain operator exactly.
NormalizedOperator normalized_adjacency(const BipartiteGraph& graph,
                                        std::span<const WeightedPair> extra = {});

// operator · x for an (U + I) × d matrix.
Matrix apply(const NormalizedOperator& op, const Matrix& x);
Matrix to_dense(const NormalizedOperator& op);

class CandidateEdgeSpace {
 public:
  CandidateEdgeSpace() = default;

  std::size_t size() const { return pairs_.size(); }
  const std::vector<UserItem>& pairs() const { return pairs_; }
  const std::vector<Index>& user_subset() const { return users_; }
  const std::vector<Index>& item_subset() const { return items_; }

  // h(u, i); throws ContractError when the pair is not a candidate.
  std::size_t index_of(Index user, Index item) const;
  // h^-1(index)
  UserItem pair_at(std::size_t index) const;

 private:
  friend CandidateEdgeSpace build_candidate_space(const BipartiteGraph&, std::span<const Index>,
                                                  std::span<const Index>, std::span<const Index>);
  std::vector<Index> users_;
  std::vector<Index> items_;
  std::vector<UserItem> pairs_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Row-major enumeration of users × items minus existing edges. When
/// `allowed_users` is non-empty every user must belong to it.
CandidateEdgeSpace build_candidate_space(const BipartiteGraph& graph, std::span<const Index> users,
                                         std::span<const Index> items,
                                         std::span<const Index> allowed_users = {});

inline constexpr Index kUnreachable = std::numeric_limits<Index>::max();

/// BFS hop counts from a user node to every node; kUnreachable when disconnected.
std::vector<Index> shortest_path_lengths(const BipartiteGraph& graph, Index source_user);

}  // namespace fairaug
