#pragma once

// Gradient-boosted shift-reduce parsing. Step k is a fresh weak learner trained
// to minimise the loss of (frozen sum of steps 1..k-1) + (step k); prediction
// with prefix m sums the logits of steps 1..m.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gbdp/encoder.hpp"
#include "gbdp/error.hpp"
#include "gbdp/random.hpp"
#include "gbdp/transition.hpp"
#include "gbdp/treebank.hpp"
#include "gbdp/weak_learner.hpp"

namespace gbdp {

struct BoostConfig {
  int n_steps = 5;
  LearnerConfig learner;  // input_dim and n_relations are filled in from the data
  int epochs_max = 30;
  int patience = 3;
  double dev_fraction = 0.1;
  std::uint64_t seed = 1;
  int batch_size = 16;
  std::string shuffle_rule = "fisher_yates_per_epoch";
  // When the dev-selected learner would raise training loss, append it with
  // zeroed output heads instead (a zero-output step).
  bool reject_worse_step = true;

  friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

inline void check(const BoostConfig& cfg) {
  if (cfg.n_steps < 1) throw Error(ErrorKind::InvalidConfig, "n_steps must be >= 1");
  if (cfg.patience < 1) throw Error(ErrorKind::InvalidConfig, "patience must be >= 1");
  if (cfg.epochs_max < 1) throw Error(ErrorKind::InvalidConfig, "epochs_max must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  if (!(cfg.dev_fraction > 0.0 && cfg.dev_fraction < 1.0))
    throw Error(ErrorKind::InvalidConfig, "dev_fraction must lie in (0, 1)");
  if (cfg.shuffle_rule != "fisher_yates_per_epoch")
    throw Error(ErrorKind::InvalidConfig, "unknown shuffle_rule '" + cfg.shuffle_rule + "'");
}

struct BoostedEnsemble {
  EncoderConfig encoder;
  std::vector<std::string> relation_inventory;  // sorted
  BoostConfig boost_config;
  std::vector<WeakLearner> steps;
  std::string train_domain;

  int size() const { return static_cast<int>(steps.size()); }
  int n_relations() const { return static_cast<int>(relation_inventory.size()); }

  std::optional<int> relation_index(const std::string& relation) const {
    auto it = std::lower_bound(relation_inventory.begin(), relation_inventory.end(), relation);
    if (it == relation_inventory.end() || *it != relation) return std::nullopt;
    return static_cast<int>(it - relation_inventory.begin());
  }

  /// The learner configuration every step uses, with data-derived dimensions.
  LearnerConfig step_config() const {
    LearnerConfig cfg = boost_config.learner;
    cfg.input_dim = feature_width(encoder);
    cfg.n_relations = n_relations();
    return cfg;
  }
};

/// Ensemble with no steps yet, sized for the treebank's relation inventory.
inline BoostedEnsemble make_ensemble(const Treebank& tb, const BoostConfig& cfg,
                                     const EncoderConfig& enc) {
  check(cfg);
  check(enc);
  if (tb.relation_inventory.empty())
    throw Error(ErrorKind::InvalidConfig, "treebank has an empty relation inventory");
  BoostedEnsemble ensemble{enc, tb.relation_inventory, cfg, {}, tb.domain_tag};
  ensemble.boost_config.learner = ensemble.step_config();
  check(ensemble.boost_config.learner);
  return ensemble;
}

inline std::int64_t total_param_count(const BoostedEnsemble& ensemble) {
  std::int64_t total = 0;
  for (const auto& step : ensemble.steps) total += param_count(step);
  return total;
}

// ---------------------------------------------------------------------------
// Aggregation and decoding

inline void check_prefix(const BoostedEnsemble& ensemble, int m) {
  if (m < 1 || m > ensemble.size())
    throw Error(ErrorKind::InvalidPrefix, "prefix " + std::to_string(m) + " outside 1.." +
                                              std::to_string(ensemble.size()));
}

namespace detail {

// Sum of forward(step_i, x), i < m. m = 0 gives zero logits.
inline LogitPair aggregate_sparse(const BoostedEnsemble& ensemble, int m, const SparseFeatures& x) {
  LogitPair total = zero_logits(ensemble.n_relations());
  ForwardCache cache;
  for (int i = 0; i < m; ++i) {
    forward_sparse(ensemble.steps[static_cast<std::size_t>(i)], x, cache);
    total += cache.logits;
  }
  return total;
}

template <typename T>
std::size_t argmax_lowest(const T& values, const StructureMask* mask = nullptr) {
  std::size_t best = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    if (best == values.size() || values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace detail

inline LogitPair aggregate_logits(const BoostedEnsemble& ensemble, int m, std::span<const double> x) {
  check_prefix(ensemble, m);
  if (x.size() != static_cast<std::size_t>(feature_width(ensemble.encoder)))
    throw Error(ErrorKind::DimensionMismatch, "feature width does not match the ensemble encoder");
  return detail::aggregate_sparse(ensemble, m, sparsify(x));
}

/// Greedy choice under legality masking; ties go to the lowest class index.
inline Action predict_action(const BoostedEnsemble& ensemble, int m, const ParserState& state,
                             const Document& doc) {
  check_prefix(ensemble, m);
  LegalActions legal = legal_actions(state);
  if (!legal.any()) throw Error(ErrorKind::TerminalState, "no action is legal in a terminal state");
  LogitPair z = detail::aggregate_sparse(ensemble, m, sparsify(encode_state(state, doc, ensemble.encoder)));
  StructureMask mask = structure_mask(legal);
  int cls = static_cast<int>(detail::argmax_lowest(z.structure, &mask));
  if (cls == kShiftClass) return Action::shift();
  std::size_t rel = detail::argmax_lowest(z.relation);
  return Action::reduce(class_nuclearity(cls), ensemble.relation_inventory[rel]);
}

/// Greedy parse with the first m steps. `trace`, when given, receives every
/// action taken (2n-1 of them).
inline DiscourseTree parse(const BoostedEnsemble& ensemble, int m, const Document& doc,
                           ActionSequence* trace = nullptr) {
  check_prefix(ensemble, m);
  ParserState state = initial_state(static_cast<int>(doc.size()));
  while (!state.is_terminal()) {
    Action action = predict_action(ensemble, m, state, doc);
    state = apply(state, action);
    if (trace) trace->push_back(std::move(action));
  }
  return state.stack.front();
}

// ---------------------------------------------------------------------------
// Training

struct TrainingInstance {
  SparseFeatures x;
  int gold_structure = kShiftClass;
  std::optional<int> gold_relation;
  StructureMask mask{};
};

struct TrainingSplit {
  std::vector<std::size_t> train_docs;
  std::vector<std::size_t> dev_docs;
  std::vector<TrainingInstance> train;
  std::vector<TrainingInstance> dev;
};

/// Static-oracle instances: every gold state along oracle(tree).
inline std::vector<TrainingInstance> oracle_instances(const BoostedEnsemble& ensemble,
                                                      const TreebankEntry& entry) {
  std::vector<TrainingInstance> out;
  ParserState state = initial_state(static_cast<int>(entry.doc.size()));
  for (const Action& gold : oracle(entry.tree)) {
    TrainingInstance inst;
    inst.x = sparsify(encode_state(state, entry.doc, ensemble.encoder));
    inst.gold_structure = structure_class(gold);
    inst.mask = structure_mask(legal_actions(state));
    if (gold.is_reduce()) {
      inst.gold_relation = ensemble.relation_index(gold.relation);
      if (!inst.gold_relation)
        throw Error(ErrorKind::RelationInventoryMismatch,
                    "relation '" + gold.relation + "' is not in the model inventory");
    }
    out.push_back(std::move(inst));
    state = apply(state, gold);
  }
  return out;
}

/// Seeded document-level dev split. At least one dev document when the
/// treebank has two or more; a single-document treebank is its own dev set.
inline TrainingSplit build_training_split(const BoostedEnsemble& ensemble, const Treebank& tb) {
  if (tb.empty()) throw Error(ErrorKind::EmptyTreebank, "cannot train on an empty treebank");
  TrainingSplit split;
  std::vector<std::size_t> order(tb.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(ensemble.boost_config.seed, 0x5e11));
  shuffle(std::span<std::size_t>(order), rng);
  std::size_t n_dev = 0;
  if (tb.size() >= 2) {
    n_dev = static_cast<std::size_t>(std::llround(ensemble.boost_config.dev_fraction * static_cast<double>(tb.size())));
    n_dev = std::clamp<std::size_t>(n_dev, 1, tb.size() - 1);
  }
  split.dev_docs.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev));
  split.train_docs.assign(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
  std::sort(split.dev_docs.begin(), split.dev_docs.end());
  std::sort(split.train_docs.begin(), split.train_docs.end());
  for (std::size_t i : split.train_docs) {
    auto inst = oracle_instances(ensemble, tb.entries[i]);
    std::move(inst.begin(), inst.end(), std::back_inserter(split.train));
  }
  for (std::size_t i : split.dev_docs) {
    auto inst = oracle_instances(ensemble, tb.entries[i]);
    std::move(inst.begin(), inst.end(), std::back_inserter(split.dev));
  }
  if (split.dev.empty()) split.dev = split.train;
  return split;
}

/// Mean combined data loss (no l2) of prefix m over the instances; m = 0 is
/// the all-zero predictor.
inline double mean_combined_loss(const BoostedEnsemble& ensemble, int m,
                                 const std::vector<TrainingInstance>& instances) {
  if (instances.empty()) return 0.0;
  double total = 0.0;
  std::array<double, kStructureClasses> dzs{};
  std::vector<double> dzr(static_cast<std::size_t>(ensemble.n_relations()));
  for (const auto& inst : instances) {
    LogitPair z = detail::aggregate_sparse(ensemble, m, inst.x);
    total += detail::masked_cross_entropy(z.structure, inst.mask, inst.gold_structure, dzs);
    if (inst.gold_relation)
      total += detail::masked_cross_entropy(z.relation, {}, *inst.gold_relation, dzr);
  }
  return total / static_cast<double>(instances.size());
}

struct StepReport {
  double train_loss = 0.0;  // mean combined data loss of the appended learner
  std::vector<double> dev_losses;
  int epochs_run = 0;
  int best_epoch = 0;
  double seconds = 0.0;
  std::int64_t param_count = 0;
  bool rejected = false;  // appended with zeroed output heads
};

struct TrainReport {
  std::vector<StepReport> steps;
  std::vector<std::int64_t> cumulative_params;
  double total_seconds = 0.0;
};

namespace detail {

inline double mean_loss_with_frozen(const WeakLearner& w, const std::vector<TrainingInstance>& data,
                                    const std::vector<LogitPair>& frozen, ForwardCache& cache) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    LogitPair z = frozen[i];
    forward_sparse(w, data[i].x, cache);
    z += cache.logits;
    std::array<double, kStructureClasses> dzs{};
    total += masked_cross_entropy(z.structure, data[i].mask, data[i].gold_structure, dzs);
    if (data[i].gold_relation) {
      std::vector<double> dzr(z.relation.size());
      total += masked_cross_entropy(z.relation, {}, *data[i].gold_relation, dzr);
    }
  }
  return total / static_cast<double>(data.size());
}

inline void zero_output(WeakLearner& w) {
  for (auto* block : {&w.params.structure_weight, &w.params.structure_bias, &w.params.relation_weight,
                      &w.params.relation_bias})
    std::fill(block->begin(), block->end(), 0.0);
}

}  // namespace detail

/// Trains one new learner against the frozen ensemble and returns the
/// extended ensemble. Existing steps are copied unchanged.
inline std::pair<BoostedEnsemble, StepReport> train_step(const BoostedEnsemble& ensemble,
                                                         const TrainingSplit& split,
                                                         std::uint64_t seed) {
  if (split.train.empty()) throw Error(ErrorKind::EmptyTreebank, "no training instances");
  auto start = std::chrono::steady_clock::now();
  const BoostConfig& cfg = ensemble.boost_config;
  const LearnerConfig lcfg = ensemble.step_config();
  if (!ensemble.steps.empty() && ensemble.steps.front().config.input_dim != lcfg.input_dim)
    throw Error(ErrorKind::DimensionMismatch, "step dimensions disagree with the encoder");
  for (const auto& inst : split.train)
    if (inst.x.width != static_cast<std::size_t>(lcfg.input_dim))
      throw Error(ErrorKind::DimensionMismatch, "instance width disagrees with the encoder");

  const int k = ensemble.size();
  std::vector<LogitPair> frozen_train;
  std::vector<LogitPair> frozen_dev;
  frozen_train.reserve(split.train.size());
  frozen_dev.reserve(split.dev.size());
  for (const auto& inst : split.train) frozen_train.push_back(detail::aggregate_sparse(ensemble, k, inst.x));
  for (const auto& inst : split.dev) frozen_dev.push_back(detail::aggregate_sparse(ensemble, k, inst.x));

  WeakLearner learner = init_learner(lcfg, derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 2));
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Gradients grads = zero_gradients(lcfg);
  detail::ForwardCache cache;
  StepReport report;
  WeakLearner best = learner;
  double best_dev = std::numeric_limits<double>::infinity();
  int stale = 0;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const double lr = lcfg.learning_rate;
  const double l2 = lcfg.l2_penalty;

  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      std::size_t end = std::min(order.size(), begin + batch);
      double scale = 1.0 / static_cast<double>(end - begin);
      for (auto* block : grads.blocks()) std::fill(block->begin(), block->end(), 0.0);
      for (std::size_t b = begin; b < end; ++b) {
        const auto& inst = split.train[order[b]];
        detail::accumulate_data_gradient(learner, inst.x, frozen_train[order[b]], inst.gold_structure,
                                         inst.gold_relation, inst.mask, grads, scale, cache);
      }
      auto pb = learner.params.blocks();
      auto gb = grads.blocks();
      for (std::size_t bi = 0; bi < pb.size(); ++bi) {
        auto& p = *pb[bi];
        const auto& g = *gb[bi];
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * (g[i] + 2.0 * l2 * p[i]);
      }
    }
    double dev_loss = detail::mean_loss_with_frozen(learner, split.dev, frozen_dev, cache);
    report.dev_losses.push_back(dev_loss);
    report.epochs_run = epoch;
    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      best = learner;
      report.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  report.train_loss = detail::mean_loss_with_frozen(best, split.train, frozen_train, cache);
  if (cfg.reject_worse_step) {
    WeakLearner zero = best;
    detail::zero_output(zero);
    double baseline = detail::mean_loss_with_frozen(zero, split.train, frozen_train, cache);
    if (report.train_loss > baseline) {
      best = std::move(zero);
      report.train_loss = baseline;
      report.rejected = true;
    }
  }
  report.param_count = param_count(best);
  BoostedEnsemble next = ensemble;
  next.steps.push_back(std::move(best));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(next), std::move(report)};
}

inline std::pair<BoostedEnsemble, StepReport> train_step(const BoostedEnsemble& ensemble,
                                                         const Treebank& tb, std::uint64_t seed) {
  return train_step(ensemble, build_training_split(ensemble, tb), seed);
}

inline std::uint64_t step_seed(const BoostConfig& cfg, int step_index) {
  return derive_seed(cfg.seed, 0x57e9 + static_cast<std::uint64_t>(step_index));
}

/// Full staged procedure: one fixed dev split, then n_steps calls to
/// train_step, each against the frozen ensemble built so far.
inline std::pair<BoostedEnsemble, TrainReport> train(const Treebank& tb, const BoostConfig& cfg,
                                                     const EncoderConfig& enc) {
  if (tb.empty()) throw Error(ErrorKind::EmptyTreebank, "cannot train on an empty treebank");
  auto start = std::chrono::steady_clock::now();
  BoostedEnsemble ensemble = make_ensemble(tb, cfg, enc);
  TrainingSplit split = build_training_split(ensemble, tb);
  TrainReport report;
  std::int64_t cumulative = 0;
  for (int k = 0; k < cfg.n_steps; ++k) {
    auto [next, step] = train_step(ensemble, split, step_seed(cfg, k));
    ensemble = std::move(next);
    cumulative += step.param_count;
    report.cumulative_params.push_back(cumulative);
    report.steps.push_back(std::move(step));
  }
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(ensemble), std::move(report)};
}

/// Copy restricted to the first m steps.
inline BoostedEnsemble truncate_ensemble(const BoostedEnsemble& ensemble, int m) {
  check_prefix(ensemble, m);
  BoostedEnsemble out = ensemble;
  out.steps.resize(static_cast<std::size_t>(m));
  return out;
}

}  // namespace gbdp
