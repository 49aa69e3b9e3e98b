#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fairaug/graph.hpp"
#include "fairaug/tensor.hpp"
#include "fairaug/types.hpp"

namespace fairaug {

// Ego embeddings W of the recommender; frozen while the graph is augmented.
struct ModelParams {
  Matrix user_embeddings;  // U × d
  Matrix item_embeddings;  // I × d
  int num_layers = 2;

  Index dim() const { return user_embeddings.cols(); }
  Index num_users() const { return user_embeddings.rows(); }
  Index num_items() const { return item_embeddings.rows(); }
  // (U + I) × d, users first.
  Matrix stacked() const;
};

struct TrainConfig {
  int dim = 64;
  int layers = 2;
  double learning_rate = 1e-3;
  int epochs = 200;
  double reg = 1e-4;
  int batch_size = 1024;
  int k = 10;
  std::uint64_t seed = 42;
};

struct TrainResult {
  ModelParams params;
  int best_epoch = 0;
  double best_validation_ndcg = 0.0;
  std::vector<double> validation_ndcg;  // per epoch, index 0 = initial weights
};

// Weighted symmetric operator term for the differentiable propagation.
struct OperatorTerm {
  const ad::SymmetricPattern* pattern = nullptr;
  ad::Var values;
};

/// Mean of E(0..K) with E(l+1) = op · E(l).
Matrix propagate(const ModelParams& params, const NormalizedOperator& op);
ad::Var propagate(const ad::Var& ego, std::span<const OperatorTerm> op, int num_layers);

/// scores(u, i) = <final user row u, final item row i> for the given users.
Matrix predict_scores(const Matrix& final_embeddings, Index num_users,
                      std::span<const Index> users);
Matrix predict_scores(const Matrix& final_embeddings, Index num_users);

/// Per row, the k best items not excluded; ties by item id. `exclude` is
/// empty or has one sorted list per score row.
ItemLists topk(const Matrix& scores, int k, const ItemLists& exclude = {});

/// BPR with uniform negative sampling, returning the epoch with the best
/// validation NDCG@k.
TrainResult train_bpr(const BipartiteGraph& graph, const ItemLists& validation,
                      const TrainConfig& config);

// Mean NDCG@k over users with a non-empty ground truth, scored on `graph`.
double mean_ndcg(const ModelParams& params, const BipartiteGraph& graph,
                 const ItemLists& ground_truth, int k);

// Plain-text checkpoint; see README for the layout.
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace fairaug
