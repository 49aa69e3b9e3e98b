#include "fairaug/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "fairaug/adam.hpp"
#include "fairaug/errors.hpp"
#include "fairaug/format.hpp"

namespace fairaug {

Vector continuous_weights(const Vector& p_hat) {
  return p_hat.unaryExpr([](double x) { return detail::logistic(x); });
}

ad::Var continuous_weights(const ad::Var& p_hat) { return ad::elementwise_sigmoid(p_hat); }

Vector discretize(const Vector& p_hat) {
  return p_hat.unaryExpr([](double x) { return x >= 0.0 ? 1.0 : 0.0; });
}

NormalizedOperator build_augmented(const BipartiteGraph& graph, const CandidateEdgeSpace& space,
                                   const Vector& weights) {
  if (static_cast<std::size_t>(weights.size()) != space.size()) {
    throw ContractError("build_augmented: " + std::to_string(weights.size()) + " weights for B = " +
                        std::to_string(space.size()));
  }
  std::vector<WeightedPair> extra;
  extra.reserve(space.size());
  for (std::size_t j = 0; j < space.size(); ++j) {
    extra.push_back({space.pairs()[j], weights(static_cast<Index>(j))});
  }
  return normalized_adjacency(graph, extra);
}

DifferentiableOperator::DifferentiableOperator(const BipartiteGraph& graph,
                                               const CandidateEdgeSpace& space,
                                               const ad::Var& weights) {
  if (static_cast<std::size_t>(weights.rows()) != space.size() || weights.cols() != 1) {
    throw ContractError("DifferentiableOperator: weights must be a B x 1 column");
  }
  ad::Tape& tape = weights.tape();
  const Index n = graph.num_nodes();

  Matrix base(n, 1);
  for (Index u = 0; u < graph.num_users; ++u) {
    base(u, 0) = static_cast<double>(graph.user_degree[static_cast<std::size_t>(u)]);
  }
  for (Index i = 0; i < graph.num_items; ++i) {
    base(graph.item_node(i), 0) = static_cast<double>(graph.item_degree[static_cast<std::size_t>(i)]);
  }

  edges_.size = n;
  for (const auto& e : graph.edges) {
    edges_.first.push_back(e.user);
    edges_.second.push_back(graph.item_node(e.item));
  }
  candidates_.size = n;
  for (const auto& p : space.pairs()) {
    candidates_.first.push_back(p.user);
    candidates_.second.push_back(graph.item_node(p.item));
  }

  const ad::Var degree = tape.constant(std::move(base)) +
                         ad::scatter_add_rows(weights, candidates_.first, n) +
                         ad::scatter_add_rows(weights, candidates_.second, n);
  const ad::Var inv_sqrt = ad::rsqrt(degree);
  edge_values_ = ad::multiply(ad::select_rows(inv_sqrt, edges_.first), ad::select_rows(inv_sqrt, edges_.second));
  candidate_values_ = ad::multiply(
      weights, ad::multiply(ad::select_rows(inv_sqrt, candidates_.first), ad::select_rows(inv_sqrt, candidates_.second)));
}

namespace {

struct EvalRows {
  std::vector<Index> users;  // U_D evaluable users, then U_A evaluable users
  std::size_t num_disadvantaged = 0;
  ItemLists relevant;
  ItemLists excluded;
};

EvalRows evaluation_rows(const AugmentProblem& problem) {
  EvalRows rows;
  const auto& truth = *problem.perturbation;
  const auto add = [&](const std::vector<Index>& members) {
    std::size_t count = 0;
    for (const Index u : members) {
      if (truth[static_cast<std::size_t>(u)].empty()) continue;
      rows.users.push_back(u);
      rows.relevant.push_back(truth[static_cast<std::size_t>(u)]);
      rows.excluded.push_back(problem.graph->user_items[static_cast<std::size_t>(u)]);
      ++count;
    }
    return count;
  };
  rows.num_disadvantaged = add(problem.groups->disadvantaged_users);
  if (rows.num_disadvantaged == 0) {
    throw DataError("optimization is degenerate: no disadvantaged user has perturbation-set interactions");
  }
  if (add(problem.groups->advantaged_users) == 0) {
    throw DataError("optimization is degenerate: no advantaged user has perturbation-set interactions");
  }
  return rows;
}

void check_problem(const AugmentProblem& problem) {
  if (!problem.model || !problem.graph || !problem.space || !problem.groups || !problem.perturbation) {
    throw ContractError("augment: incomplete problem");
  }
  if (problem.space->size() == 0) throw EmptySelectionError("augment: empty candidate space");
}

LossTerms loss_on_rows(const ad::Var& p_hat, const AugmentProblem& problem,
                       const AugmentConfig& config, const EvalRows& rows, const ad::Var& ego) {
  const auto& graph = *problem.graph;
  const ad::Var weights = continuous_weights(p_hat);
  const DifferentiableOperator op(graph, *problem.space, weights);
  const auto terms = op.terms();
  const ad::Var final = propagate(ego, terms, problem.model->num_layers);

  std::vector<Index> item_nodes(static_cast<std::size_t>(graph.num_items));
  std::iota(item_nodes.begin(), item_nodes.end(), graph.num_users);
  const ad::Var scores = ad::matmul(ad::select_rows(final, rows.users),
                                    ad::transpose(ad::select_rows(final, item_nodes)));
  const ad::Var per_user = approx_ndcg_rows(scores, rows.relevant, rows.excluded,
                                            {.temperature = config.temperature,
                                             .k = config.soft_cutoff ? std::optional<int>(config.k) : std::nullopt});

  std::vector<Index> d_rows(rows.num_disadvantaged);
  std::iota(d_rows.begin(), d_rows.end(), Index{0});
  std::vector<Index> a_rows(rows.users.size() - rows.num_disadvantaged);
  std::iota(a_rows.begin(), a_rows.end(), static_cast<Index>(rows.num_disadvantaged));
  std::array<ad::Var, 2> utilities{ad::mean(ad::select_rows(per_user, d_rows)),
                                   ad::mean(ad::select_rows(per_user, a_rows))};
  if (!config.advantaged_gradient) utilities[1] = p_hat.tape().constant(utilities[1].value());
  LossTerms out;
  out.fair = fairness_loss(utilities);
  if (config.distance_gradient) {
    out.dist = dist_loss(weights, config.beta);
  } else {
    const double rounded = dist_loss(discretize(p_hat.value().col(0)), config.beta);
    out.dist = p_hat.tape().constant(Matrix::Constant(1, 1, rounded));
  }
  out.total = out.fair + out.dist;
  return out;
}

}  // namespace

LossTerms augmentation_loss(ad::Tape& tape, const ad::Var& p_hat, const AugmentProblem& problem,
                            const AugmentConfig& config) {
  check_problem(problem);
  const EvalRows rows = evaluation_rows(problem);
  const ad::Var ego = tape.constant(problem.model->stacked());
  return loss_on_rows(p_hat, problem, config, rows, ego);
}

AugmentationResult optimize(const AugmentProblem& problem, const AugmentConfig& config) {
  check_problem(problem);
  if (!(config.learning_rate > 0) || config.max_epochs < 0 || !(config.temperature > 0) || config.k < 1 ||
      config.beta < 0) {
    throw ContractError("augment: invalid configuration");
  }
  const auto& graph = *problem.graph;
  const auto& space = *problem.space;
  const auto& model = *problem.model;
  const EvalRows rows = evaluation_rows(problem);
  const Matrix ego_value = model.stacked();

  const std::span<const Index> d_users(rows.users.data(), rows.num_disadvantaged);
  const std::span<const Index> a_users(rows.users.data() + rows.num_disadvantaged,
                                       rows.users.size() - rows.num_disadvantaged);

  Vector p_hat = Vector::Constant(static_cast<Index>(space.size()), kInitialLogit);
  ad::Adam optimizer(p_hat.rows(), 1, {.learning_rate = config.learning_rate});

  AugmentationResult result;
  result.num_candidates = space.size();
  for (int epoch = 0; epoch <= config.max_epochs; ++epoch) {
    ad::Tape tape;
    const ad::Var p = tape.variable(p_hat);
    const LossTerms loss = loss_on_rows(p, problem, config, rows, tape.constant(ego_value));
    TraceRow row;
    row.epoch = epoch;
    row.loss = loss.total.scalar();
    row.fair_loss = loss.fair.scalar();
    row.dist_loss = loss.dist.scalar();
    if (!std::isfinite(row.loss)) {
      throw NumericError("augment: non-finite loss at epoch " + std::to_string(epoch));
    }

    // Checkpoint on the rounded graph.
    const Vector p_discrete = discretize(p_hat);
    const Matrix final = propagate(model, build_augmented(graph, space, p_discrete));
    const auto lists = topk(predict_scores(final, graph.num_users, rows.users), config.k, rows.excluded);
    const PerUserNdcg ndcg = per_user_ndcg(lists, rows.users, *problem.perturbation, config.k);
    row.ndcg_disadvantaged = group_mean(ndcg, d_users);
    row.ndcg_advantaged = group_mean(ndcg, a_users);
    row.delta_ndcg = row.ndcg_disadvantaged - row.ndcg_advantaged;
    row.abs_delta_ndcg = std::abs(row.delta_ndcg);
    row.num_edges = static_cast<std::size_t>(p_discrete.sum());

    const PerturbationMetrics metrics{row.ndcg_disadvantaged, row.ndcg_advantaged, row.delta_ndcg};
    if (epoch == 0) result.before = metrics;
    const TraceRow* best = result.trace.empty() ? nullptr : &result.trace[static_cast<std::size_t>(result.best_epoch)];
    if (best == nullptr || row.abs_delta_ndcg < best->abs_delta_ndcg ||
        (row.abs_delta_ndcg == best->abs_delta_ndcg && row.num_edges < best->num_edges)) {
      result.best_epoch = epoch;
      result.after = metrics;
      result.added_edges.clear();
      for (std::size_t j = 0; j < space.size(); ++j) {
        if (p_discrete(static_cast<Index>(j)) == 1.0) result.added_edges.push_back(space.pairs()[j]);
      }
    }
    result.trace.push_back(row);

    if (config.fairness_target && row.abs_delta_ndcg <= *config.fairness_target) break;
    if (epoch == config.max_epochs) break;
    tape.backward(loss.total);
    optimizer.step(p_hat, p.grad());
  }
  return result;
}

SplitDataset finalize(const std::vector<UserItem>& added_edges, const SplitDataset& splits) {
  SplitDataset out = splits;
  if (added_edges.empty()) return out;
  std::vector<std::int64_t> last(static_cast<std::size_t>(splits.info.num_users),
                                 std::numeric_limits<std::int64_t>::min());
  for (const auto& x : splits.train) {
    auto& t = last[static_cast<std::size_t>(x.user)];
    t = std::max(t, x.timestamp);
  }
  std::vector<UserItem> sorted = added_edges;
  std::sort(sorted.begin(), sorted.end());
  const auto is_added = [&](const Interaction& x) {
    return std::binary_search(sorted.begin(), sorted.end(), UserItem{x.user, x.item});
  };
  std::erase_if(out.validation, is_added);
  std::erase_if(out.test, is_added);
  for (const auto& e : added_edges) {
    const auto t = last[static_cast<std::size_t>(e.user)];
    out.train.push_back({e.user, e.item, t == std::numeric_limits<std::int64_t>::min() ? 0 : t + 1});
  }
  std::stable_sort(out.train.begin(), out.train.end(), [](const Interaction& a, const Interaction& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.item < b.item;
  });
  return out;
}

void write_added_edges(const std::filesystem::path& path, const DatasetInfo& info,
                       const std::vector<UserItem>& edges) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# user\titem\tuser_id\titem_id\n";
  for (const auto& e : edges) {
    out << e.user << '\t' << e.item << '\t' << info.user_names[static_cast<std::size_t>(e.user)] << '\t'
        << info.item_names[static_cast<std::size_t>(e.item)] << '\n';
  }
}

std::vector<UserItem> read_added_edges(const std::filesystem::path& path, const DatasetInfo& info) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string() + " (run augment first)");
  std::unordered_map<std::string, Index> users;
  std::unordered_map<std::string, Index> items;
  for (Index u = 0; u < info.num_users; ++u) users.emplace(info.user_names[static_cast<std::size_t>(u)], u);
  for (Index i = 0; i < info.num_items; ++i) items.emplace(info.item_names[static_cast<std::size_t>(i)], i);

  std::vector<UserItem> edges;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string u, i, user_id, item_id;
    if (!std::getline(fields, u, '\t') || !std::getline(fields, i, '\t') ||
        !std::getline(fields, user_id, '\t') || !std::getline(fields, item_id)) {
      throw ParseError(path.string(), number, "expected 4 tab-separated fields");
    }
    const auto uit = users.find(user_id);
    const auto iit = items.find(item_id);
    if (uit == users.end() || iit == items.end()) {
      throw ParseError(path.string(), number, "unknown user or item id");
    }
    edges.push_back({uit->second, iit->second});
  }
  return edges;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch\tloss\tfair_loss\tdist_loss\tdelta_ndcg\tabs_delta_ndcg\tndcg_disadvantaged\t"
         "ndcg_advantaged\tnum_edges\n";
  for (const auto& r : trace) {
    out << r.epoch << '\t' << format_double(r.loss) << '\t' << format_double(r.fair_loss) << '\t'
        << format_double(r.dist_loss) << '\t' << format_double(r.delta_ndcg) << '\t'
        << format_double(r.abs_delta_ndcg) << '\t' << format_double(r.ndcg_disadvantaged) << '\t'
        << format_double(r.ndcg_advantaged) << '\t' << r.num_edges << '\n';
  }
}

}  // namespace fairaug
