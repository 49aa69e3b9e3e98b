// fairaug: split, train, augment, evaluate and sweep from the command line.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "fairaug/pipeline.hpp"

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::optional<std::string> out;
  std::optional<std::string> interactions;
  std::optional<std::string> attributes;
  std::optional<std::string> policy;
  std::optional<std::string> policies;
  std::optional<int> max_epochs;
  std::optional<double> beta;
  std::optional<double> lr;
  std::optional<double> temperature;
  std::optional<double> fairness_target;
  std::optional<int> train_epochs;
  std::optional<int> jobs;
  std::optional<std::string> setting;
  bool retrain = false;
};

fairaug::RunConfig build_config(const Overrides& o) {
  fairaug::RunConfig c = o.config ? fairaug::load_config(*o.config) : fairaug::RunConfig{};
  if (o.seed) c.seed = *o.seed;
  if (o.k) c.k = *o.k;
  if (o.out) c.out = *o.out;
  if (o.interactions) c.interactions = *o.interactions;
  if (o.attributes) c.attributes = *o.attributes;
  if (o.policy) c.policy = *o.policy;
  if (o.policies) c.policies = CLI::detail::split(*o.policies, ',');
  if (o.max_epochs) c.augment.max_epochs = *o.max_epochs;
  if (o.beta) c.augment.beta = *o.beta;
  if (o.lr) c.augment.learning_rate = *o.lr;
  if (o.temperature) c.augment.temperature = *o.temperature;
  if (o.fairness_target) c.augment.fairness_target = *o.fairness_target;
  if (o.train_epochs) c.model.epochs = *o.train_epochs;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.setting) c.setting = *o.setting;
  if (o.retrain) c.mode = fairaug::EvaluationMode::kRetrain;
  fairaug::resolve(c);
  return c;
}

void common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--k", o.k, "recommendation list length");
  cmd->add_option("--out", o.out, "output directory");
}

void augment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--max-epochs", o.max_epochs, "augmentation epochs");
  cmd->add_option("--beta", o.beta, "distance loss weight");
  cmd->add_option("--lr", o.lr, "augmentation learning rate");
  cmd->add_option("--temperature", o.temperature, "ApproxNDCG temperature");
  cmd->add_option("--fairness-target", o.fairness_target, "stop once |dNDCG| is at most this");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learns user-item edges that narrow the utility gap between two user groups"};
  app.require_subcommand(1);
  Overrides o;

  auto* split = app.add_subcommand("split", "temporal 7:1:2 split of raw interactions");
  common_flags(split, o);
  split->add_option("--interactions", o.interactions, "user<TAB>item<TAB>timestamp file");
  split->add_option("--attributes", o.attributes, "user<TAB>label file");

  auto* train = app.add_subcommand("train", "train the recommender and record baseline metrics");
  common_flags(train, o);
  train->add_option("--epochs", o.train_epochs, "training epochs");

  auto* augment = app.add_subcommand("augment", "learn edges for one sampling policy");
  common_flags(augment, o);
  augment->add_option("--policy", o.policy, "bm, zn, ld, sp, fr, ip or <user>+ip");
  augment_flags(augment, o);

  auto* evaluate = app.add_subcommand("evaluate", "score an augmented run on the test set");
  common_flags(evaluate, o);
  evaluate->add_option("--policy", o.policy, "policy whose run to evaluate");
  evaluate->add_flag("--retrain", o.retrain, "retrain on the augmented train set instead of reusing the model");
  evaluate->add_option("--setting", o.setting, "column label in the tables");

  auto* sweep = app.add_subcommand("sweep", "augment and evaluate several policies");
  common_flags(sweep, o);
  sweep->add_option("--policies", o.policies, "comma-separated policy list");
  sweep->add_option("--jobs", o.jobs, "policies run in parallel");
  sweep->add_flag("--retrain", o.retrain, "retrain on each augmented train set");
  sweep->add_option("--setting", o.setting, "column label in the tables");
  augment_flags(sweep, o);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = build_config(o);
    if (split->parsed()) {
      fairaug::run_split(config, &std::cout);
    } else if (train->parsed()) {
      fairaug::run_train(config, &std::cout);
    } else if (augment->parsed()) {
      fairaug::run_augment(config, config.policy, &std::cout);
    } else if (evaluate->parsed()) {
      const auto report = fairaug::run_evaluate(config, config.policy, &std::cout);
      std::cout << fairaug::render_reports({report});
    } else if (sweep->parsed()) {
      const auto result = fairaug::run_sweep(config, &std::cout);
      std::cout << fairaug::read_text(fairaug::Layout{config.out}.sweep_dir() / "policy_table.txt");
      for (const auto& f : result.failures) std::cerr << "fairaug: warning: " << f << '\n';
      if (result.reports.empty()) {
        std::cerr << "fairaug: error: every policy failed\n";
        return 1;
      }
    }
  } catch (const fairaug::Error& e) {
    std::cerr << "fairaug: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fairaug: internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
