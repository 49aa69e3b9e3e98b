// fairaug-synth: clustered interaction data with a binary user attribute.
#include <CLI11.hpp>

#include <iostream>

#include "fairaug/errors.hpp"
#include "fairaug/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes a synthetic interactions.tsv / attributes.tsv pair"};
  fairaug::SyntheticConfig config;
  std::string out = "data";
  std::string split_out;
  std::string thin_label;
  double thin_keep = 1.0;

  app.add_option("--out", out, "directory for interactions.tsv and attributes.tsv");
  app.add_option("--users", config.users, "number of users")->capture_default_str();
  app.add_option("--items", config.items, "number of items")->capture_default_str();
  app.add_option("--clusters", config.clusters, "item clusters")->capture_default_str();
  app.add_option("--min-interactions", config.min_interactions)->capture_default_str();
  app.add_option("--max-interactions", config.max_interactions)->capture_default_str();
  app.add_option("--in-cluster", config.in_cluster, "share of interactions in the preferred cluster")
      ->capture_default_str();
  app.add_option("--affinity", config.group_affinity, "chance the preferred cluster belongs to the user's group")
      ->capture_default_str();
  app.add_option("--seed", config.seed)->capture_default_str();
  app.add_option("--split-out", split_out, "also write a temporal split to this directory");
  app.add_option("--thin-label", thin_label, "group whose train interactions are subsampled in the split");
  app.add_option("--thin-keep", thin_keep, "fraction of train interactions kept for --thin-label")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto ds = fairaug::make_synthetic(config);
    std::filesystem::create_directories(out);
    const std::filesystem::path dir(out);
    fairaug::write_dataset(dir / "interactions.tsv", dir / "attributes.tsv", ds);
    std::cout << "wrote " << ds.interactions.size() << " interactions to " << (dir / "interactions.tsv").string()
              << '\n';
    if (!split_out.empty()) {
      auto split = fairaug::temporal_split(ds);
      if (!thin_label.empty()) split = fairaug::subsample_train(split, thin_label, thin_keep, config.seed);
      fairaug::write_split(split_out, split);
      std::cout << "wrote split with " << split.train.size() << " train interactions to " << split_out << '\n';
    }
  } catch (const fairaug::Error& e) {
    std::cerr << "fairaug-synth: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
