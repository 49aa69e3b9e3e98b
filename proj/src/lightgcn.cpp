#include "fairaug/lightgcn.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "fairaug/adam.hpp"
#include "fairaug/errors.hpp"
#include "fairaug/metrics.hpp"

namespace fairaug {

Matrix ModelParams::stacked() const {
  Matrix e(num_users() + num_items(), dim());
  e.topRows(num_users()) = user_embeddings;
  e.bottomRows(num_items()) = item_embeddings;
  return e;
}

Matrix propagate(const ModelParams& params, const NormalizedOperator& op) {
  if (op.num_users != params.num_users() || op.num_items != params.num_items()) {
    throw ShapeError("propagate: operator is " + std::to_string(op.num_users) + "+" +
                     std::to_string(op.num_items) + " nodes, model has " +
                     std::to_string(params.num_users()) + "+" + std::to_string(params.num_items()));
  }
  Matrix layer = params.stacked();
  Matrix total = layer;
  for (int l = 0; l < params.num_layers; ++l) {
    layer = apply(op, layer);
    total += layer;
  }
  return total / static_cast<double>(params.num_layers + 1);
}

ad::Var propagate(const ad::Var& ego, std::span<const OperatorTerm> op, int num_layers) {
  ad::Var layer = ego;
  ad::Var total = ego;
  for (int l = 0; l < num_layers; ++l) {
    ad::Var next;
    for (const auto& term : op) {
      ad::Var part = ad::symmetric_spmm(*term.pattern, term.values, layer);
      next = next.valid() ? next + part : part;
    }
    if (!next.valid()) next = ad::scale(layer, 0.0);
    layer = next;
    total = total + layer;
  }
  return ad::scale(total, 1.0 / static_cast<double>(num_layers + 1));
}

Matrix predict_scores(const Matrix& final_embeddings, Index num_users, std::span<const Index> users) {
  const Index num_items = final_embeddings.rows() - num_users;
  Matrix user_rows(static_cast<Index>(users.size()), final_embeddings.cols());
  for (std::size_t r = 0; r < users.size(); ++r) {
    user_rows.row(static_cast<Index>(r)) = final_embeddings.row(users[r]);
  }
  return user_rows * final_embeddings.bottomRows(num_items).transpose();
}

Matrix predict_scores(const Matrix& final_embeddings, Index num_users) {
  return final_embeddings.topRows(num_users) *
         final_embeddings.bottomRows(final_embeddings.rows() - num_users).transpose();
}

ItemLists topk(const Matrix& scores, int k, const ItemLists& exclude) {
  if (k < 1) throw ContractError("topk: k must be >= 1");
  if (!exclude.empty() && static_cast<Index>(exclude.size()) != scores.rows()) {
    throw ShapeError("topk: exclusion lists do not match score rows");
  }
  ItemLists out(static_cast<std::size_t>(scores.rows()));
  std::vector<Index> candidates;
  for (Index r = 0; r < scores.rows(); ++r) {
    candidates.clear();
    const auto* skip = exclude.empty() ? nullptr : &exclude[static_cast<std::size_t>(r)];
    for (Index i = 0; i < scores.cols(); ++i) {
      if (skip && std::binary_search(skip->begin(), skip->end(), i)) continue;
      candidates.push_back(i);
    }
    const auto depth = std::min(candidates.size(), static_cast<std::size_t>(k));
    const auto better = [&](Index a, Index b) {
      const double sa = scores(r, a);
      const double sb = scores(r, b);
      return sa != sb ? sa > sb : a < b;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(depth),
                      candidates.end(), better);
    out[static_cast<std::size_t>(r)].assign(candidates.begin(),
                                            candidates.begin() + static_cast<std::ptrdiff_t>(depth));
  }
  return out;
}

double mean_ndcg(const ModelParams& params, const BipartiteGraph& graph, const ItemLists& ground_truth,
                 int k) {
  std::vector<Index> users;
  for (Index u = 0; u < graph.num_users; ++u) {
    if (!ground_truth[static_cast<std::size_t>(u)].empty()) users.push_back(u);
  }
  if (users.empty()) return 0.0;
  const Matrix final = propagate(params, normalized_adjacency(graph));
  const Matrix scores = predict_scores(final, graph.num_users, users);
  ItemLists exclude;
  exclude.reserve(users.size());
  for (const Index u : users) exclude.push_back(graph.user_items[static_cast<std::size_t>(u)]);
  const auto lists = topk(scores, k, exclude);
  double total = 0.0;
  for (std::size_t r = 0; r < users.size(); ++r) {
    total += ndcg_at_k(lists[r], ground_truth[static_cast<std::size_t>(users[r])], k);
  }
  return total / static_cast<double>(users.size());
}

TrainResult train_bpr(const BipartiteGraph& graph, const ItemLists& validation,
                      const TrainConfig& config) {
  if (graph.edges.empty()) throw DataError("train_bpr: no positive interactions");
  if (config.dim < 1 || config.layers < 0 || config.batch_size < 1 || config.epochs < 0) {
    throw ContractError("train_bpr: invalid configuration");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> init(0.0, 0.1);

  ModelParams params;
  params.num_layers = config.layers;
  params.user_embeddings = Matrix::NullaryExpr(graph.num_users, config.dim, [&] { return init(rng); });
  params.item_embeddings = Matrix::NullaryExpr(graph.num_items, config.dim, [&] { return init(rng); });

  const NormalizedOperator op = normalized_adjacency(graph);
  const OperatorTerm term{&op.pattern, {}};

  TrainResult result;
  result.params = params;
  result.best_validation_ndcg = mean_ndcg(params, graph, validation, config.k);
  result.validation_ndcg.push_back(result.best_validation_ndcg);

  Matrix ego = params.stacked();
  ad::Adam optimizer(ego.rows(), ego.cols(), {.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(graph.edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<Index> pick_item(0, graph.num_items - 1);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Index> users;
      std::vector<Index> positives;
      std::vector<Index> negatives;
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = graph.edges[order[b]];
        if (graph.user_degree[static_cast<std::size_t>(e.user)] >= graph.num_items) continue;
        Index neg = pick_item(rng);
        while (graph.has_edge(e.user, neg)) neg = pick_item(rng);
        users.push_back(e.user);
        positives.push_back(graph.item_node(e.item));
        negatives.push_back(graph.item_node(neg));
      }
      if (users.empty()) continue;

      ad::Tape tape;
      const ad::Var ego_var = tape.variable(ego);
      OperatorTerm t = term;
      t.values = tape.constant(op.values);
      const ad::Var final = propagate(ego_var, std::span<const OperatorTerm>(&t, 1), config.layers);
      const ad::Var fu = ad::select_rows(final, users);
      const ad::Var diff = ad::select_rows(final, positives) - ad::select_rows(final, negatives);
      const ad::Var margin = ad::row_sum(ad::multiply(fu, diff));
      const double batch = static_cast<double>(users.size());
      ad::Var loss = ad::scale(ad::mean(ad::log_sigmoid(margin)), -1.0);
      if (config.reg > 0) {
        const ad::Var reg = ad::sum(ad::elementwise_square(ad::select_rows(ego_var, users))) +
                            ad::sum(ad::elementwise_square(ad::select_rows(ego_var, positives))) +
                            ad::sum(ad::elementwise_square(ad::select_rows(ego_var, negatives)));
        loss = loss + ad::scale(reg, 0.5 * config.reg / batch);
      }
      tape.backward(loss);
      optimizer.step(ego, ego_var.grad());
    }

    ModelParams current;
    current.num_layers = config.layers;
    current.user_embeddings = ego.topRows(graph.num_users);
    current.item_embeddings = ego.bottomRows(graph.num_items);
    const double score = mean_ndcg(current, graph, validation, config.k);
    result.validation_ndcg.push_back(score);
    if (score > result.best_validation_ndcg) {
      result.best_validation_ndcg = score;
      result.best_epoch = epoch;
      result.params = std::move(current);
    }
  }
  return result;
}

namespace {

void write_double(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

void write_rows(std::ostream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      write_double(out, m(r, c));
    }
    out << '\n';
  }
}

void read_rows(std::istream& in, Matrix& m, const std::string& path) {
  std::string token;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!(in >> token)) throw DataError(path + ": truncated model checkpoint");
      double v = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw DataError(path + ": bad value '" + token + "'");
      }
      m(r, c) = v;
    }
  }
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "fairaug-model 1\n";
  out << "dim " << params.dim() << " layers " << params.num_layers << " users " << params.num_users()
      << " items " << params.num_items() << '\n';
  write_rows(out, params.user_embeddings);
  write_rows(out, params.item_embeddings);
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model checkpoint " + path.string() + " (run train first)");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "fairaug-model" || version != 1) {
    throw DataError(path.string() + ": not a fairaug-model v1 checkpoint");
  }
  std::string k1, k2, k3, k4;
  Index dim = 0, users = 0, items = 0;
  int layers = 0;
  in >> k1 >> dim >> k2 >> layers >> k3 >> users >> k4 >> items;
  if (!in || k1 != "dim" || k2 != "layers" || k3 != "users" || k4 != "items" || dim < 1 || layers < 0) {
    throw DataError(path.string() + ": malformed checkpoint header");
  }
  ModelParams params;
  params.num_layers = layers;
  params.user_embeddings.resize(users, dim);
  params.item_embeddings.resize(items, dim);
  read_rows(in, params.user_embeddings, path.string());
  read_rows(in, params.item_embeddings, path.string());
  return params;
}

}  // namespace fairaug
