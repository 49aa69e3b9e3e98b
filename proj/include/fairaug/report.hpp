#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairaug/dataset.hpp"
#include "fairaug/graph.hpp"
#include "fairaug/lightgcn.hpp"
#include "fairaug/metrics.hpp"

namespace fairaug {

enum class EvaluationMode {
  kFrozen,   // original weights, augmented graph at inference
  kRetrain,  // weights retrained on the augmented train set
};

std::string to_string(EvaluationMode mode);
EvaluationMode parse_evaluation_mode(const std::string& text);

struct SetMetrics {
  double ndcg = 0.0;
  double ndcg_disadvantaged = 0.0;
  double ndcg_advantaged = 0.0;
  double delta_ndcg = 0.0;
  std::size_t users = 0;
  friend bool operator==(const SetMetrics&, const SetMetrics&) = default;
};

struct BaselineMetrics {
  SetMetrics perturbation;
  SetMetrics test;
  friend bool operator==(const BaselineMetrics&, const BaselineMetrics&) = default;
};

struct EvaluationReport {
  std::string policy;
  std::string setting;
  EvaluationMode mode = EvaluationMode::kFrozen;
  std::size_t num_edges = 0;
  BaselineMetrics baseline;
  SetMetrics perturbation;
  SetMetrics test;

  // Signed relative change of overall NDCG, in percent.
  std::optional<double> rel_ndcg(bool test_set = true) const;
  // Relative change of |ΔNDCG|, in percent; -100 is full mitigation.
  std::optional<double> rel_delta(bool test_set = true) const;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// NDCG@k of every group member with ground truth, recommending from
/// `inference_graph` and excluding its train items.
SetMetrics measure(const ModelParams& model, const BipartiteGraph& inference_graph,
                   const ItemLists& ground_truth, const GroupUtility& groups, int k);

BaselineMetrics measure_baseline(const ModelParams& model, const SplitDataset& splits,
                                 const GroupUtility& groups, int k);

struct EvaluateOptions {
  EvaluationMode mode = EvaluationMode::kFrozen;
  int k = 10;
  // Used in retrain mode.
  TrainConfig train;
  std::string policy = "bm";
  std::string setting = "default";
};

/// Scores the finalized splits (augmented train graph for inference, test
/// ground truth) and attaches the baseline. A missing baseline is an error.
EvaluationReport evaluate(const ModelParams& model, const SplitDataset& finalized,
                          const GroupUtility& groups, const std::optional<BaselineMetrics>& baseline,
                          std::size_t num_edges, const EvaluateOptions& options);

std::string serialize_reports(const std::vector<EvaluationReport>& reports);
std::vector<EvaluationReport> parse_reports(const std::string& text);

/// Rows are policies, columns settings; cells hold the relative change of
/// test |ΔNDCG|, "*" marks mitigation and "n/a" missing or undefined values.
/// `expected_policies` come first, so runs that never finished keep a row.
std::string policy_table(const std::vector<EvaluationReport>& reports,
                         const std::vector<std::string>& expected_policies = {});

/// NDCG and ΔNDCG per run; best value per column wrapped in **, second best in _.
std::string tradeoff_table(const std::vector<EvaluationReport>& reports);

// Relative NDCG change vs relative |ΔNDCG| change, one row per report.
std::string scatter_tsv(const std::vector<EvaluationReport>& reports);

// Aligned human-readable rendering of full reports.
std::string render_reports(const std::vector<EvaluationReport>& reports);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fairaug
