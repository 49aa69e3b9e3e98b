#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairaug/dataset.hpp"
#include "fairaug/graph.hpp"
#include "fairaug/lightgcn.hpp"
#include "fairaug/metrics.hpp"
#include "fairaug/tensor.hpp"

namespace fairaug {

// Logit every candidate starts from: sigmoid(-5) ~ 0.0067 rounds to 0, so the
// initial augmented graph equals the original one.
inline constexpr double kInitialLogit = -5.0;

struct AugmentConfig {
  double learning_rate = 0.1;
  int max_epochs = 100;
  double beta = 0.5;
  double temperature = 0.1;
  int k = 10;
  // Weight ApproxNDCG terms by the smoothed top-k cutoff.
  bool soft_cutoff = true;
  // The distance term is scored on the rounded edge set and only the
  // fairness term drives p̂. Set to differentiate the continuous distance.
  bool distance_gradient = false;
  // The advantaged utility enters the fairness loss as a constant, so the
  // gradient can only lift the disadvantaged group.
  bool advantaged_gradient = false;
  // Stop as soon as the discrete perturbation |ΔNDCG| reaches this value.
  std::optional<double> fairness_target;
};

struct TraceRow {
  int epoch = 0;
  double loss = 0.0;
  double fair_loss = 0.0;
  double dist_loss = 0.0;
  double delta_ndcg = 0.0;  // signed, U_D minus U_A
  double abs_delta_ndcg = 0.0;
  double ndcg_disadvantaged = 0.0;
  double ndcg_advantaged = 0.0;
  std::size_t num_edges = 0;
};

struct PerturbationMetrics {
  double ndcg_disadvantaged = 0.0;
  double ndcg_advantaged = 0.0;
  double delta_ndcg = 0.0;
};

struct AugmentationResult {
  std::vector<UserItem> added_edges;
  std::vector<TraceRow> trace;
  int best_epoch = 0;
  PerturbationMetrics before;  // epoch 0, i.e. the original graph
  PerturbationMetrics after;   // best checkpoint
  std::size_t num_candidates = 0;
};

Vector continuous_weights(const Vector& p_hat);
ad::Var continuous_weights(const ad::Var& p_hat);

/// p_j = 1 iff sigmoid(p_hat_j) >= 0.5, i.e. iff p_hat_j >= 0.
Vector discretize(const Vector& p_hat);

/// Original edges keep weight 1, candidate h(u, i) takes weights[h(u, i)].
NormalizedOperator build_augmented(const BipartiteGraph& graph, const CandidateEdgeSpace& space,
                                   const Vector& weights);

// Same operator with the normalization expressed on the tape, so gradients
// reach the candidate weights through both the entries and the degrees.
class DifferentiableOperator {
 public:
  DifferentiableOperator(const BipartiteGraph& graph, const CandidateEdgeSpace& space,
                         const ad::Var& weights);
  DifferentiableOperator(const DifferentiableOperator&) = delete;
  DifferentiableOperator& operator=(const DifferentiableOperator&) = delete;

  std::array<OperatorTerm, 2> terms() const {
    return {OperatorTerm{&edges_, edge_values_}, OperatorTerm{&candidates_, candidate_values_}};
  }
  const ad::Var& edge_values() const { return edge_values_; }
  const ad::Var& candidate_values() const { return candidate_values_; }

 private:
  ad::SymmetricPattern edges_;
  ad::SymmetricPattern candidates_;
  ad::Var edge_values_;
  ad::Var candidate_values_;
};

// Everything the optimization reads; all of it stays constant during a run.
struct AugmentProblem {
  const ModelParams* model = nullptr;
  const BipartiteGraph* graph = nullptr;
  const CandidateEdgeSpace* space = nullptr;
  const GroupUtility* groups = nullptr;
  const ItemLists* perturbation = nullptr;
};

// Differentiable fairness + distance loss at the given logits.
struct LossTerms {
  ad::Var total;
  ad::Var fair;
  ad::Var dist;
};
LossTerms augmentation_loss(ad::Tape& tape, const ad::Var& p_hat, const AugmentProblem& problem,
                            const AugmentConfig& config);

/// Learns the candidate logits by gradient descent on L_fair + L_dist, checking
/// the rounded graph after every epoch, and returns the best checkpoint.
AugmentationResult optimize(const AugmentProblem& problem, const AugmentConfig& config);

/// Moves added edges into train (timestamp one past the user's last train
/// interaction) and removes them from validation and test.
SplitDataset finalize(const std::vector<UserItem>& added_edges, const SplitDataset& splits);

void write_added_edges(const std::filesystem::path& path, const DatasetInfo& info,
                       const std::vector<UserItem>& edges);
std::vector<UserItem> read_added_edges(const std::filesystem::path& path, const DatasetInfo& info);
void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

}  // namespace fairaug
