#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairaug/augment.hpp"
#include "fairaug/config.hpp"
#include "fairaug/dataset.hpp"
#include "fairaug/policies.hpp"
#include "fairaug/report.hpp"

namespace fairaug {

// Output tree shared by all stages:
//   split/                 train, validation, test, attributes TSVs
//   model/                 model.txt, training.tsv, baseline.tsv
//   runs/<policy>/         added_edges.tsv, trace.tsv, result.json, config.ini,
//                          split/ (finalized), report.tsv, report.txt, scatter.tsv
//   sweep/                 report.tsv, report.txt, policy_table.txt,
//                          tradeoff_table.txt, scatter.tsv
struct Layout {
  std::filesystem::path root;

  std::filesystem::path split_dir() const { return root / "split"; }
  std::filesystem::path model_file() const { return root / "model" / "model.txt"; }
  std::filesystem::path training_log() const { return root / "model" / "training.tsv"; }
  std::filesystem::path baseline_file() const { return root / "model" / "baseline.tsv"; }
  std::filesystem::path run_dir(const std::string& policy) const { return root / "runs" / policy; }
  std::filesystem::path sweep_dir() const { return root / "sweep"; }
};

// Quantities every post-training stage derives from the original split and
// the trained model.
struct BaselineState {
  SplitDataset split;
  ModelParams model;
  BipartiteGraph graph;
  ItemLists validation;
  GroupPartition partition;
  GroupUtility groups;
  ItemLists disadvantaged_lists;  // baseline top-k, aligned with groups.disadvantaged_users
};

BaselineState baseline_state(SplitDataset split, ModelParams model, int k);

std::string sha256_file(const std::filesystem::path& path);

struct SplitOutcome {
  SplitDataset split;
};
SplitOutcome run_split(const RunConfig& config, std::ostream* log = nullptr);

struct TrainOutcome {
  TrainResult result;
  BaselineMetrics baseline;
};
TrainOutcome run_train(const RunConfig& config, std::ostream* log = nullptr);

struct AugmentOutcome {
  std::string policy;
  Selection selection;
  AugmentationResult result;
  double seconds = 0.0;
  std::filesystem::path dir;
};
AugmentOutcome run_augment(const RunConfig& config, const std::string& policy, std::ostream* log = nullptr);

EvaluationReport run_evaluate(const RunConfig& config, const std::string& policy,
                              std::ostream* log = nullptr);

struct SweepOutcome {
  std::vector<EvaluationReport> reports;
  std::vector<std::string> failures;  // "<policy>: <reason>"
};
// Augments and evaluates every configured policy, `jobs` at a time. A failing
// policy is reported and shows up as "n/a" in the tables.
SweepOutcome run_sweep(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace fairaug
