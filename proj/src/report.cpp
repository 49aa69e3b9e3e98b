#include "fairaug/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fairaug/errors.hpp"
#include "fairaug/format.hpp"

namespace fairaug {
namespace {

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << (*v > 0 ? "+" : "") << *v << "%";
  return os.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size(), ' ');
    }
    os << line << '\n';
  }
  return os.str();
}

const std::vector<std::string>& columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out{"policy", "setting", "mode", "num_edges"};
    for (const char* set : {"perturbation", "test"}) {
      for (const char* stage : {"baseline", "augmented"}) {
        for (const char* field : {"ndcg", "ndcg_disadvantaged", "ndcg_advantaged", "delta_ndcg", "users"}) {
          out.push_back(std::string(set) + "_" + stage + "_" + field);
        }
      }
      out.push_back(std::string(set) + "_rel_ndcg");
      out.push_back(std::string(set) + "_rel_delta");
    }
    return out;
  }();
  return names;
}

void push_metrics(std::vector<std::string>& row, const SetMetrics& m) {
  row.push_back(format_double(m.ndcg));
  row.push_back(format_double(m.ndcg_disadvantaged));
  row.push_back(format_double(m.ndcg_advantaged));
  row.push_back(format_double(m.delta_ndcg));
  row.push_back(std::to_string(m.users));
}

std::string opt_text(const std::optional<double>& v) { return v ? format_double(*v) : "n/a"; }

double need_double(const std::string& s) {
  const auto v = parse_double(s);
  if (!v) throw DataError("report: bad number '" + s + "'");
  return *v;
}

SetMetrics take_metrics(const std::vector<std::string>& f, std::size_t& at) {
  SetMetrics m;
  m.ndcg = need_double(f[at++]);
  m.ndcg_disadvantaged = need_double(f[at++]);
  m.ndcg_advantaged = need_double(f[at++]);
  m.delta_ndcg = need_double(f[at++]);
  m.users = static_cast<std::size_t>(std::stoull(f[at++]));
  return m;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

// Marks the best and second-best distinct values; ties share the mark.
std::vector<std::string> rank_marks(const std::vector<double>& values, bool higher_is_better) {
  std::set<double> distinct(values.begin(), values.end());
  std::vector<double> order(distinct.begin(), distinct.end());
  if (higher_is_better) std::reverse(order.begin(), order.end());
  std::vector<std::string> marks(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (!order.empty() && values[r] == order[0]) marks[r] = "best";
    else if (order.size() > 1 && values[r] == order[1]) marks[r] = "second";
  }
  return marks;
}

std::string decorate(const std::string& text, const std::string& mark) {
  if (mark == "best") return "**" + text + "**";
  if (mark == "second") return "_" + text + "_";
  return text;
}

}  // namespace

std::string to_string(EvaluationMode mode) {
  return mode == EvaluationMode::kFrozen ? "frozen" : "retrain";
}

EvaluationMode parse_evaluation_mode(const std::string& text) {
  if (text == "frozen") return EvaluationMode::kFrozen;
  if (text == "retrain") return EvaluationMode::kRetrain;
  throw ContractError("unknown evaluation mode '" + text + "' (frozen|retrain)");
}

std::optional<double> EvaluationReport::rel_ndcg(bool test_set) const {
  const auto& before = test_set ? baseline.test : baseline.perturbation;
  const auto& after = test_set ? test : perturbation;
  return relative_difference(before.ndcg, after.ndcg, RelativeKind::kSigned);
}

std::optional<double> EvaluationReport::rel_delta(bool test_set) const {
  const auto& before = test_set ? baseline.test : baseline.perturbation;
  const auto& after = test_set ? test : perturbation;
  return relative_difference(before.delta_ndcg, after.delta_ndcg, RelativeKind::kAbsolute);
}

SetMetrics measure(const ModelParams& model, const BipartiteGraph& inference_graph,
                   const ItemLists& ground_truth, const GroupUtility& groups, int k) {
  std::vector<Index> users;
  ItemLists exclude;
  for (const auto* members : {&groups.disadvantaged_users, &groups.advantaged_users}) {
    for (const Index u : *members) {
      if (ground_truth[static_cast<std::size_t>(u)].empty()) continue;
      users.push_back(u);
      exclude.push_back(inference_graph.user_items[static_cast<std::size_t>(u)]);
    }
  }
  const Matrix final = propagate(model, normalized_adjacency(inference_graph));
  const auto lists = topk(predict_scores(final, inference_graph.num_users, users), k, exclude);
  const PerUserNdcg ndcg = per_user_ndcg(lists, users, ground_truth, k);

  SetMetrics m;
  m.users = ndcg.size();
  double total = 0.0;
  for (const auto& [u, v] : ndcg) total += v;
  m.ndcg = m.users ? total / static_cast<double>(m.users) : 0.0;
  m.ndcg_disadvantaged = group_mean(ndcg, groups.disadvantaged_users);
  m.ndcg_advantaged = group_mean(ndcg, groups.advantaged_users);
  m.delta_ndcg = m.ndcg_disadvantaged - m.ndcg_advantaged;
  return m;
}

BaselineMetrics measure_baseline(const ModelParams& model, const SplitDataset& splits,
                                 const GroupUtility& groups, int k) {
  const auto graph = build_graph(splits.train, splits.info.num_users, splits.info.num_items);
  BaselineMetrics b;
  b.perturbation = measure(model, graph, items_by_user(splits.info.num_users, splits.validation), groups, k);
  b.test = measure(model, graph, items_by_user(splits.info.num_users, splits.test), groups, k);
  return b;
}

EvaluationReport evaluate(const ModelParams& model, const SplitDataset& finalized,
                          const GroupUtility& groups, const std::optional<BaselineMetrics>& baseline,
                          std::size_t num_edges, const EvaluateOptions& options) {
  if (!baseline) throw DataError("evaluate: missing baseline report");
  const auto graph = build_graph(finalized.train, finalized.info.num_users, finalized.info.num_items);
  const auto validation = items_by_user(finalized.info.num_users, finalized.validation);
  const auto test = items_by_user(finalized.info.num_users, finalized.test);

  ModelParams scoring = model;
  if (options.mode == EvaluationMode::kRetrain) {
    scoring = train_bpr(graph, validation, options.train).params;
  }
  EvaluationReport r;
  r.policy = options.policy;
  r.setting = options.setting;
  r.mode = options.mode;
  r.num_edges = num_edges;
  r.baseline = *baseline;
  r.perturbation = measure(scoring, graph, validation, groups, options.k);
  r.test = measure(scoring, graph, test, groups, options.k);
  return r;
}

std::string serialize_reports(const std::vector<EvaluationReport>& reports) {
  std::ostringstream os;
  const auto& cols = columns();
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "\t" : "") << cols[c];
  os << '\n';
  for (const auto& r : reports) {
    std::vector<std::string> row{r.policy, r.setting, to_string(r.mode), std::to_string(r.num_edges)};
    push_metrics(row, r.baseline.perturbation);
    push_metrics(row, r.perturbation);
    row.push_back(opt_text(r.rel_ndcg(false)));
    row.push_back(opt_text(r.rel_delta(false)));
    push_metrics(row, r.baseline.test);
    push_metrics(row, r.test);
    row.push_back(opt_text(r.rel_ndcg(true)));
    row.push_back(opt_text(r.rel_delta(true)));
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "\t" : "") << row[c];
    os << '\n';
  }
  return os.str();
}

std::vector<EvaluationReport> parse_reports(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_tabs(line) != columns()) {
    throw DataError("report: unexpected header");
  }
  std::vector<EvaluationReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != columns().size()) throw DataError("report: wrong number of fields");
    EvaluationReport r;
    r.policy = f[0];
    r.setting = f[1];
    r.mode = parse_evaluation_mode(f[2]);
    r.num_edges = static_cast<std::size_t>(std::stoull(f[3]));
    std::size_t at = 4;
    r.baseline.perturbation = take_metrics(f, at);
    r.perturbation = take_metrics(f, at);
    at += 2;  // derived relative differences
    r.baseline.test = take_metrics(f, at);
    r.test = take_metrics(f, at);
    out.push_back(std::move(r));
  }
  return out;
}

std::string policy_table(const std::vector<EvaluationReport>& reports,
                         const std::vector<std::string>& expected_policies) {
  std::vector<std::string> policies = expected_policies;
  std::vector<std::string> settings;
  std::map<std::pair<std::string, std::string>, std::optional<double>> cells;
  for (const auto& r : reports) {
    if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) policies.push_back(r.policy);
    if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) settings.push_back(r.setting);
    cells[{r.policy, r.setting}] = r.rel_delta(true);
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"policy"};
  header.insert(header.end(), settings.begin(), settings.end());
  rows.push_back(header);
  for (const auto& p : policies) {
    std::vector<std::string> row{p};
    for (const auto& s : settings) {
      const auto it = cells.find({p, s});
      if (it == cells.end() || !it->second) {
        row.push_back("n/a");
      } else {
        row.push_back(percent(it->second) + (*it->second < 0 ? " *" : ""));
      }
    }
    rows.push_back(std::move(row));
  }
  return align(rows) + "rel. diff. of test |dNDCG|; * = mitigated\n";
}

std::string tradeoff_table(const std::vector<EvaluationReport>& reports) {
  std::vector<double> ndcg;
  std::vector<double> gap;
  for (const auto& r : reports) {
    ndcg.push_back(r.test.ndcg);
    gap.push_back(std::abs(r.test.delta_ndcg));
  }
  const auto ndcg_marks = rank_marks(ndcg, true);
  const auto gap_marks = rank_marks(gap, false);
  std::vector<std::vector<std::string>> rows{{"run", "NDCG", "dNDCG", "rel. NDCG", "rel. |dNDCG|"}};
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& rep = reports[r];
    rows.push_back({rep.policy + " [" + rep.setting + "]", decorate(fixed(rep.test.ndcg), ndcg_marks[r]),
                    decorate(fixed(rep.test.delta_ndcg), gap_marks[r]), percent(rep.rel_ndcg(true)),
                    percent(rep.rel_delta(true))});
  }
  return align(rows) + "test set; **best**, _second best_ (dNDCG by absolute value)\n";
}

std::string scatter_tsv(const std::vector<EvaluationReport>& reports) {
  std::ostringstream os;
  os << "policy\tsetting\trel_diff_ndcg\trel_diff_delta_ndcg\n";
  for (const auto& r : reports) {
    os << r.policy << '\t' << r.setting << '\t' << opt_text(r.rel_ndcg(true)) << '\t'
       << opt_text(r.rel_delta(true)) << '\n';
  }
  return os.str();
}

std::string render_reports(const std::vector<EvaluationReport>& reports) {
  std::vector<std::vector<std::string>> rows{{"policy", "setting", "mode", "edges", "set", "NDCG", "NDCG(D)",
                                              "NDCG(A)", "dNDCG", "base dNDCG", "rel. NDCG", "rel. |dNDCG|"}};
  for (const auto& r : reports) {
    for (const bool test_set : {false, true}) {
      const auto& m = test_set ? r.test : r.perturbation;
      const auto& b = test_set ? r.baseline.test : r.baseline.perturbation;
      rows.push_back({r.policy, r.setting, to_string(r.mode), std::to_string(r.num_edges),
                      test_set ? "test" : "perturbation", fixed(m.ndcg), fixed(m.ndcg_disadvantaged),
                      fixed(m.ndcg_advantaged), fixed(m.delta_ndcg), fixed(b.delta_ndcg),
                      percent(r.rel_ndcg(test_set)), percent(r.rel_delta(test_set))});
    }
  }
  return align(rows);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace fairaug
