#include "fairaug/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "fairaug/errors.hpp"

namespace fairaug {
namespace {

std::uint64_t pair_key(Index user, Index item) {
  return (static_cast<std::uint64_t>(user) << 32) | static_cast<std::uint64_t>(item);
}

std::string pair_text(Index user, Index item) {
  return "(" + std::to_string(user) + ", " + std::to_string(item) + ")";
}

}  // namespace

bool BipartiteGraph::has_edge(Index user, Index item) const {
  if (user < 0 || user >= num_users) return false;
  const auto& items = user_items[static_cast<std::size_t>(user)];
  return std::binary_search(items.begin(), items.end(), item);
}

BipartiteGraph build_graph(std::span<const UserItem> pairs, Index num_users, Index num_items) {
  BipartiteGraph g;
  g.num_users = num_users;
  g.num_items = num_items;
  g.edges.assign(pairs.begin(), pairs.end());
  for (const auto& e : g.edges) {
    if (e.user < 0 || e.user >= num_users || e.item < 0 || e.item >= num_items) {
      throw ContractError("build_graph: edge " + pair_text(e.user, e.item) + " out of range for " +
                          std::to_string(num_users) + " users, " + std::to_string(num_items) +
                          " items");
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

  g.user_degree.assign(static_cast<std::size_t>(num_users), 0);
  g.item_degree.assign(static_cast<std::size_t>(num_items), 0);
  g.user_items.assign(static_cast<std::size_t>(num_users), {});
  g.item_users.assign(static_cast<std::size_t>(num_items), {});
  for (const auto& e : g.edges) {
    ++g.user_degree[static_cast<std::size_t>(e.user)];
    ++g.item_degree[static_cast<std::size_t>(e.item)];
    g.user_items[static_cast<std::size_t>(e.user)].push_back(e.item);
    g.item_users[static_cast<std::size_t>(e.item)].push_back(e.user);
  }
  return g;
}

BipartiteGraph build_graph(std::span<const Interaction> train, Index num_users, Index num_items) {
  std::vector<UserItem> pairs;
  pairs.reserve(train.size());
  for (const auto& x : train) pairs.push_back({x.user, x.item});
  return build_graph(pairs, num_users, num_items);
}

NormalizedOperator normalized_adjacency(const BipartiteGraph& graph,
                                        std::span<const WeightedPair> extra) {
  const Index n = graph.num_nodes();
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  for (Index u = 0; u < graph.num_users; ++u) {
    degree[static_cast<std::size_t>(u)] = static_cast<double>(graph.user_degree[static_cast<std::size_t>(u)]);
  }
  for (Index i = 0; i < graph.num_items; ++i) {
    degree[static_cast<std::size_t>(graph.item_node(i))] =
        static_cast<double>(graph.item_degree[static_cast<std::size_t>(i)]);
  }

  std::size_t kept = 0;
  for (const auto& x : extra) {
    if (!(x.weight >= 0.0 && x.weight <= 1.0)) {
      throw ContractError("normalized_adjacency: extra weight " + std::to_string(x.weight) +
                          " outside [0, 1]");
    }
    if (graph.has_edge(x.pair.user, x.pair.item)) {
      throw ContractError("normalized_adjacency: extra pair " + pair_text(x.pair.user, x.pair.item) +
                          " duplicates an edge");
    }
    if (x.pair.user < 0 || x.pair.user >= graph.num_users || x.pair.item < 0 ||
        x.pair.item >= graph.num_items) {
      throw ContractError("normalized_adjacency: extra pair out of range");
    }
    if (x.weight == 0.0) continue;
    degree[static_cast<std::size_t>(x.pair.user)] += x.weight;
    degree[static_cast<std::size_t>(graph.item_node(x.pair.item))] += x.weight;
    ++kept;
  }

  NormalizedOperator op;
  op.num_users = graph.num_users;
  op.num_items = graph.num_items;
  op.pattern.size = n;
  op.pattern.first.reserve(graph.edges.size() + kept);
  op.pattern.second.reserve(graph.edges.size() + kept);
  op.values.resize(static_cast<Index>(graph.edges.size() + kept));

  Index e = 0;
  const auto push = [&](Index user, Index item, double w) {
    const Index a = user;
    const Index b = graph.item_node(item);
    const double da = degree[static_cast<std::size_t>(a)];
    const double db = degree[static_cast<std::size_t>(b)];
    op.pattern.first.push_back(a);
    op.pattern.second.push_back(b);
    op.values(e++) = (da > 0 && db > 0) ? w / std::sqrt(da * db) : 0.0;
  };
  for (const auto& edge : graph.edges) push(edge.user, edge.item, 1.0);
  for (const auto& x : extra) {
    if (x.weight != 0.0) push(x.pair.user, x.pair.item, x.weight);
  }
  return op;
}

Matrix apply(const NormalizedOperator& op, const Matrix& x) {
  if (x.rows() != op.pattern.size) {
    throw ShapeError("apply: operator size " + std::to_string(op.pattern.size) + " vs " +
                     std::to_string(x.rows()) + " rows");
  }
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index e = 0; e < op.pattern.entries(); ++e) {
    const Index a = op.pattern.first[static_cast<std::size_t>(e)];
    const Index b = op.pattern.second[static_cast<std::size_t>(e)];
    out.row(a) += op.values(e) * x.row(b);
    out.row(b) += op.values(e) * x.row(a);
  }
  return out;
}

Matrix to_dense(const NormalizedOperator& op) {
  Matrix m = Matrix::Zero(op.pattern.size, op.pattern.size);
  for (Index e = 0; e < op.pattern.entries(); ++e) {
    const Index a = op.pattern.first[static_cast<std::size_t>(e)];
    const Index b = op.pattern.second[static_cast<std::size_t>(e)];
    m(a, b) += op.values(e);
    m(b, a) += op.values(e);
  }
  return m;
}

std::size_t CandidateEdgeSpace::index_of(Index user, Index item) const {
  const auto it = index_.find(pair_key(user, item));
  if (it == index_.end()) {
    throw ContractError("candidate space has no pair " + pair_text(user, item));
  }
  return it->second;
}

UserItem CandidateEdgeSpace::pair_at(std::size_t index) const {
  if (index >= pairs_.size()) {
    throw ContractError("candidate index " + std::to_string(index) + " >= B = " +
                        std::to_string(pairs_.size()));
  }
  return pairs_[index];
}

CandidateEdgeSpace build_candidate_space(const BipartiteGraph& graph, std::span<const Index> users,
                                         std::span<const Index> items,
                                         std::span<const Index> allowed_users) {
  if (!allowed_users.empty()) {
    std::vector<Index> allowed(allowed_users.begin(), allowed_users.end());
    std::sort(allowed.begin(), allowed.end());
    for (const Index u : users) {
      if (!std::binary_search(allowed.begin(), allowed.end(), u)) {
        throw ContractError("candidate user " + std::to_string(u) +
                            " is outside the disadvantaged group");
      }
    }
  }
  CandidateEdgeSpace space;
  space.users_.assign(users.begin(), users.end());
  space.items_.assign(items.begin(), items.end());
  for (const Index u : users) {
    if (u < 0 || u >= graph.num_users) throw ContractError("candidate user out of range");
    for (const Index i : items) {
      if (i < 0 || i >= graph.num_items) throw ContractError("candidate item out of range");
      if (graph.has_edge(u, i)) continue;
      const auto [it, inserted] = space.index_.emplace(pair_key(u, i), space.pairs_.size());
      if (inserted) space.pairs_.push_back({u, i});
    }
  }
  if (space.pairs_.empty()) throw EmptySelectionError("empty candidate space");
  return space;
}

std::vector<Index> shortest_path_lengths(const BipartiteGraph& graph, Index source_user) {
  std::vector<Index> dist(static_cast<std::size_t>(graph.num_nodes()), kUnreachable);
  std::queue<Index> frontier;
  dist[static_cast<std::size_t>(source_user)] = 0;
  frontier.push(source_user);
  while (!frontier.empty()) {
    const Index node = frontier.front();
    frontier.pop();
    const Index next = dist[static_cast<std::size_t>(node)] + 1;
    const auto visit = [&](Index other) {
      if (dist[static_cast<std::size_t>(other)] == kUnreachable) {
        dist[static_cast<std::size_t>(other)] = next;
        frontier.push(other);
      }
    };
    if (node < graph.num_users) {
      for (const Index i : graph.user_items[static_cast<std::size_t>(node)]) visit(graph.item_node(i));
    } else {
      for (const Index u : graph.item_users[static_cast<std::size_t>(node - graph.num_users)]) visit(u);
    }
  }
  return dist;
}

}  // namespace fairaug
