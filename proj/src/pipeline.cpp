#include "fairaug/pipeline.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "fairaug/format.hpp"

namespace fairaug {
namespace {

std::mutex log_mutex;

void say(std::ostream* log, const std::string& line) {
  if (log == nullptr) return;
  std::lock_guard lock(log_mutex);
  *log << line << '\n';
}

ModelParams load_checkpoint(const Layout& layout) {
  if (!std::filesystem::exists(layout.model_file())) {
    throw DataError("missing " + layout.model_file().string() + " (run train first)");
  }
  return load_model(layout.model_file());
}

std::optional<BaselineMetrics> load_baseline(const Layout& layout) {
  if (!std::filesystem::exists(layout.baseline_file())) return std::nullopt;
  const auto reports = parse_reports(read_text(layout.baseline_file()));
  if (reports.size() != 1) throw DataError("malformed baseline report " + layout.baseline_file().string());
  return reports.front().baseline;
}

PolicySpec policy_spec(const RunConfig& config, const std::string& name) {
  PolicySpec spec = parse_policy(name);
  spec.psi_u = config.psi_u;
  spec.psi_i = config.psi_i;
  return spec;
}

nlohmann::ordered_json metrics_json(const PerturbationMetrics& m) {
  return {{"ndcg_disadvantaged", m.ndcg_disadvantaged},
          {"ndcg_advantaged", m.ndcg_advantaged},
          {"delta_ndcg", m.delta_ndcg}};
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

BaselineState baseline_state(SplitDataset split, ModelParams model, int k) {
  BaselineState s;
  s.split = std::move(split);
  s.model = std::move(model);
  const auto& info = s.split.info;
  if (s.model.num_users() != info.num_users || s.model.num_items() != info.num_items) {
    throw DataError("model has " + std::to_string(s.model.num_users()) + " users and " +
                    std::to_string(s.model.num_items()) + " items but the split has " +
                    std::to_string(info.num_users) + " and " + std::to_string(info.num_items) +
                    " (run train again)");
  }
  s.graph = build_graph(s.split.train, info.num_users, info.num_items);
  s.validation = items_by_user(info.num_users, s.split.validation);
  s.partition = group_partition(info);

  std::vector<Index> users(static_cast<std::size_t>(info.num_users));
  std::iota(users.begin(), users.end(), Index{0});
  std::vector<Index> evaluable;
  ItemLists exclude;
  for (const Index u : users) {
    if (s.validation[static_cast<std::size_t>(u)].empty()) continue;
    evaluable.push_back(u);
    exclude.push_back(s.graph.user_items[static_cast<std::size_t>(u)]);
  }
  const Matrix final = propagate(s.model, normalized_adjacency(s.graph));
  const auto lists = topk(predict_scores(final, info.num_users, evaluable), k, exclude);
  s.groups = designate_groups(per_user_ndcg(lists, evaluable, s.validation, k), s.partition);

  // ZN reads the lists of every disadvantaged user; users without ground
  // truth get theirs too, the sampler skips them.
  ItemLists d_exclude;
  for (const Index u : s.groups.disadvantaged_users) d_exclude.push_back(s.graph.user_items[static_cast<std::size_t>(u)]);
  s.disadvantaged_lists = topk(predict_scores(final, info.num_users, s.groups.disadvantaged_users), k, d_exclude);
  return s;
}

SplitOutcome run_split(const RunConfig& config, std::ostream* log) {
  if (config.interactions.empty() || config.attributes.empty()) {
    throw ConfigError("split needs data.interactions and data.attributes");
  }
  const auto ds = load_interactions(config.interactions, config.attributes);
  SplitOutcome out{temporal_split(ds)};
  const Layout layout{config.out};
  write_split(layout.split_dir(), out.split);
  for (const auto& w : out.split.warnings) say(log, "warning: " + w);
  say(log, "split: " + std::to_string(out.split.info.num_users) + " users, " +
               std::to_string(out.split.info.num_items) + " items, " + std::to_string(out.split.train.size()) +
               "/" + std::to_string(out.split.validation.size()) + "/" + std::to_string(out.split.test.size()) +
               " train/validation/test -> " + layout.split_dir().string());
  return out;
}

TrainOutcome run_train(const RunConfig& config, std::ostream* log) {
  const Layout layout{config.out};
  SplitDataset split = load_split(layout.split_dir());
  const auto graph = build_graph(split.train, split.info.num_users, split.info.num_items);
  const auto validation = items_by_user(split.info.num_users, split.validation);

  TrainOutcome out;
  out.result = train_bpr(graph, validation, config.model);
  std::filesystem::create_directories(layout.model_file().parent_path());
  save_model(layout.model_file(), out.result.params);

  std::string history = "epoch\tvalidation_ndcg\n";
  for (std::size_t e = 0; e < out.result.validation_ndcg.size(); ++e) {
    history += std::to_string(e) + "\t" + format_double(out.result.validation_ndcg[e]) + "\n";
  }
  write_text(layout.training_log(), history);

  const auto state = baseline_state(std::move(split), out.result.params, config.k);
  if (state.groups.warning) say(log, "warning: " + *state.groups.warning);
  out.baseline = measure_baseline(state.model, state.split, state.groups, config.k);
  EvaluationReport base;
  base.policy = "baseline";
  base.setting = config.setting;
  base.baseline = out.baseline;
  base.perturbation = out.baseline.perturbation;
  base.test = out.baseline.test;
  write_text(layout.baseline_file(), serialize_reports({base}));

  say(log, "train: best epoch " + std::to_string(out.result.best_epoch) + ", validation NDCG@" +
               std::to_string(config.k) + " " + format_double(out.result.best_validation_ndcg));
  say(log, "groups: disadvantaged " + state.groups.disadvantaged + " (" +
               format_double(state.groups.disadvantaged_mean) + "), advantaged " + state.groups.advantaged +
               " (" + format_double(state.groups.advantaged_mean) + ")");
  return out;
}

AugmentOutcome run_augment(const RunConfig& config, const std::string& policy, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  const Layout layout{config.out};
  const PolicySpec spec = policy_spec(config, policy);
  const auto state = baseline_state(load_split(layout.split_dir()), load_checkpoint(layout), config.k);

  AugmentOutcome out;
  out.policy = spec.name();
  PolicyContext context{&state.graph, state.groups.disadvantaged_users, state.groups.advantaged_users,
                        &state.disadvantaged_lists, &state.validation, config.k};
  out.selection = apply_policy(spec, context);
  const auto space = build_candidate_space(state.graph, out.selection.users, out.selection.items,
                                           state.groups.disadvantaged_users);
  const AugmentProblem problem{&state.model, &state.graph, &space, &state.groups, &state.validation};
  out.result = optimize(problem, config.augment);
  const SplitDataset finalized = finalize(out.result.added_edges, state.split);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out.dir = layout.run_dir(out.policy);
  std::filesystem::create_directories(out.dir);
  write_added_edges(out.dir / "added_edges.tsv", state.split.info, out.result.added_edges);
  write_trace(out.dir / "trace.tsv", out.result.trace);
  write_split(out.dir / "split", finalized);
  write_text(out.dir / "config.ini", format_config(config));

  nlohmann::ordered_json inputs;
  for (const char* name : {"train.tsv", "validation.tsv", "test.tsv", "attributes.tsv"}) {
    inputs[std::string("split/") + name] = sha256_file(layout.split_dir() / name);
  }
  inputs["model/model.txt"] = sha256_file(layout.model_file());
  const auto& r = out.result;
  nlohmann::ordered_json summary{
      {"policy", out.policy},
      {"setting", config.setting},
      {"disadvantaged_group", state.groups.disadvantaged},
      {"advantaged_group", state.groups.advantaged},
      {"selected_users", out.selection.users.size()},
      {"selected_items", out.selection.items.size()},
      {"candidates", r.num_candidates},
      {"epochs_run", r.trace.empty() ? 0 : r.trace.back().epoch},
      {"best_epoch", r.best_epoch},
      {"added_edges", r.added_edges.size()},
      {"before", metrics_json(r.before)},
      {"after", metrics_json(r.after)},
      {"advantaged_ndcg_change", r.after.ndcg_advantaged - r.before.ndcg_advantaged},
      {"runtime_seconds", out.seconds},
      {"inputs_sha256", inputs},
  };
  if (state.groups.warning) summary["warning"] = *state.groups.warning;
  write_text(out.dir / "result.json", summary.dump(2) + "\n");

  say(log, "augment " + out.policy + ": " + std::to_string(out.selection.users.size()) + " users x " +
               std::to_string(out.selection.items.size()) + " items, " + std::to_string(r.num_candidates) +
               " candidates; best epoch " + std::to_string(r.best_epoch) + " adds " +
               std::to_string(r.added_edges.size()) + " edges, |dNDCG| " + format_double(std::abs(r.before.delta_ndcg)) +
               " -> " + format_double(std::abs(r.after.delta_ndcg)) + " -> " + out.dir.string());
  return out;
}

EvaluationReport run_evaluate(const RunConfig& config, const std::string& policy, std::ostream* log) {
  const Layout layout{config.out};
  const PolicySpec spec = policy_spec(config, policy);
  const auto dir = layout.run_dir(spec.name());
  if (!std::filesystem::exists(dir / "added_edges.tsv") || !std::filesystem::exists(dir / "split")) {
    throw DataError("missing run directory " + dir.string() + " (run augment --policy " + spec.name() + " first)");
  }
  const auto baseline = load_baseline(layout);
  if (!baseline) throw DataError("missing baseline report " + layout.baseline_file().string() + " (run train first)");

  const auto state = baseline_state(load_split(layout.split_dir()), load_checkpoint(layout), config.k);
  const auto edges = read_added_edges(dir / "added_edges.tsv", state.split.info);
  const SplitDataset finalized = finalize(edges, state.split);

  EvaluateOptions options;
  options.mode = config.mode;
  options.k = config.k;
  options.train = config.model;
  options.policy = spec.name();
  options.setting = config.setting;
  const auto report = evaluate(state.model, finalized, state.groups, baseline, edges.size(), options);

  write_text(dir / "report.tsv", serialize_reports({report}));
  write_text(dir / "report.txt", render_reports({report}));
  write_text(dir / "scatter.tsv", scatter_tsv({report}));
  say(log, "evaluate " + spec.name() + " (" + to_string(config.mode) + "): test dNDCG " +
               format_double(report.baseline.test.delta_ndcg) + " -> " + format_double(report.test.delta_ndcg) +
               ", NDCG " + format_double(report.baseline.test.ndcg) + " -> " + format_double(report.test.ndcg));
  return report;
}

SweepOutcome run_sweep(const RunConfig& config, std::ostream* log) {
  const Layout layout{config.out};
  // Fail early on missing prerequisites instead of once per policy.
  load_checkpoint(layout);
  if (!load_baseline(layout)) throw DataError("missing baseline report " + layout.baseline_file().string() + " (run train first)");

  const std::size_t n = config.policies.size();
  std::vector<std::optional<EvaluationReport>> reports(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        run_augment(config, config.policies[i], log);
        reports[i] = run_evaluate(config, config.policies[i], log);
      } catch (const Error& e) {
        errors[i] = config.policies[i] + ": " + e.what();
        say(log, "sweep: " + errors[i]);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), n);
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  SweepOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    if (reports[i]) out.reports.push_back(*reports[i]);
    if (!errors[i].empty()) out.failures.push_back(errors[i]);
  }
  const auto dir = layout.sweep_dir();
  std::filesystem::create_directories(dir);
  write_text(dir / "report.tsv", serialize_reports(out.reports));
  std::vector<std::string> names;
  for (const auto& p : config.policies) names.push_back(parse_policy(p).name());
  write_text(dir / "policy_table.txt", policy_table(out.reports, names));
  if (!out.reports.empty()) {
    write_text(dir / "tradeoff_table.txt", tradeoff_table(out.reports));
    write_text(dir / "report.txt", render_reports(out.reports));
  }
  write_text(dir / "scatter.tsv", scatter_tsv(out.reports));
  return out;
}

}  // namespace fairaug
