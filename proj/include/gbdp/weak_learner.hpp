#pragma once

// A small two-headed classifier: optional tanh hidden layer, a structure head
// (Shift, Reduce-NN, Reduce-NS, Reduce-SN) and a relation head. Trained
// against a frozen logit offset contributed by earlier boosting steps.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbdp/encoder.hpp"
#include "gbdp/error.hpp"
#include "gbdp/random.hpp"
#include "gbdp/transition.hpp"

namespace gbdp {

inline constexpr int kStructureClasses = 4;

enum StructureClass : int { kShiftClass = 0, kReduceNN = 1, kReduceNS = 2, kReduceSN = 3 };

inline int structure_class(const Action& action) {
  return action.is_shift() ? kShiftClass : 1 + static_cast<int>(action.nuclearity);
}

inline Nuclearity class_nuclearity(int structure_class) {
  return static_cast<Nuclearity>(structure_class - 1);
}

using StructureMask = std::array<bool, kStructureClasses>;

inline StructureMask structure_mask(const LegalActions& legal) {
  return {legal.shift, legal.reduce, legal.reduce, legal.reduce};
}

struct LearnerConfig {
  int input_dim = 0;
  int hidden_dim = 16;  // 0 = heads read the input directly
  int n_relations = 0;
  double learning_rate = 0.5;
  double l2_penalty = 1e-6;
  // Weights ~ U(-a, a), a = 1/sqrt(fan_in); biases zero.
  std::string init_rule = "uniform_inv_sqrt_fan_in";

  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

inline void check(const LearnerConfig& cfg) {
  if (cfg.input_dim < 1) throw Error(ErrorKind::InvalidConfig, "input_dim must be positive");
  if (cfg.hidden_dim < 0) throw Error(ErrorKind::InvalidConfig, "hidden_dim must be >= 0");
  if (cfg.n_relations < 1) throw Error(ErrorKind::InvalidConfig, "n_relations must be positive");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
    throw Error(ErrorKind::InvalidConfig, "learning_rate must be finite and >= 0");
  if (!(cfg.l2_penalty >= 0.0) || !std::isfinite(cfg.l2_penalty))
    throw Error(ErrorKind::InvalidConfig, "l2_penalty must be finite and >= 0");
  if (cfg.init_rule != "uniform_inv_sqrt_fan_in")
    throw Error(ErrorKind::InvalidConfig, "unknown init_rule '" + cfg.init_rule + "'");
}

/// Parameter blocks, all row-major. Also used as the gradient container.
struct LearnerParams {
  std::vector<double> hidden_weight;     // H x input_dim
  std::vector<double> hidden_bias;       // H
  std::vector<double> structure_weight;  // 4 x head_input
  std::vector<double> structure_bias;    // 4
  std::vector<double> relation_weight;   // R x head_input
  std::vector<double> relation_bias;     // R

  std::array<std::vector<double>*, 6> blocks() {
    return {&hidden_weight, &hidden_bias, &structure_weight,
            &structure_bias, &relation_weight, &relation_bias};
  }
  std::array<const std::vector<double>*, 6> blocks() const {
    return {&hidden_weight, &hidden_bias, &structure_weight,
            &structure_bias, &relation_weight, &relation_bias};
  }

  friend bool operator==(const LearnerParams&, const LearnerParams&) = default;
};

using Gradients = LearnerParams;

struct WeakLearner {
  LearnerConfig config;
  LearnerParams params;

  int head_input() const { return config.hidden_dim > 0 ? config.hidden_dim : config.input_dim; }

  friend bool operator==(const WeakLearner&, const WeakLearner&) = default;
};

struct LogitPair {
  std::array<double, kStructureClasses> structure{};
  std::vector<double> relation;

  LogitPair& operator+=(const LogitPair& other) {
    for (int c = 0; c < kStructureClasses; ++c) structure[c] += other.structure[c];
    if (relation.size() < other.relation.size()) relation.resize(other.relation.size(), 0.0);
    for (std::size_t r = 0; r < other.relation.size(); ++r) relation[r] += other.relation[r];
    return *this;
  }

  friend bool operator==(const LogitPair&, const LogitPair&) = default;
};

inline LogitPair zero_logits(int n_relations) {
  return LogitPair{{}, std::vector<double>(static_cast<std::size_t>(n_relations), 0.0)};
}

inline Gradients zero_gradients(const LearnerConfig& cfg) {
  std::size_t h = static_cast<std::size_t>(cfg.hidden_dim);
  std::size_t in = static_cast<std::size_t>(cfg.input_dim);
  std::size_t head_in = h > 0 ? h : in;
  std::size_t r = static_cast<std::size_t>(cfg.n_relations);
  Gradients g;
  g.hidden_weight.assign(h * in, 0.0);
  g.hidden_bias.assign(h, 0.0);
  g.structure_weight.assign(kStructureClasses * head_in, 0.0);
  g.structure_bias.assign(kStructureClasses, 0.0);
  g.relation_weight.assign(r * head_in, 0.0);
  g.relation_bias.assign(r, 0.0);
  return g;
}

inline std::int64_t param_count(const LearnerConfig& cfg) {
  std::int64_t in = cfg.input_dim;
  std::int64_t h = cfg.hidden_dim;
  std::int64_t r = cfg.n_relations;
  if (h > 0) return in * h + h + h * kStructureClasses + kStructureClasses + h * r + r;
  return in * (kStructureClasses + r) + kStructureClasses + r;
}

inline std::int64_t param_count(const WeakLearner& w) { return param_count(w.config); }

inline WeakLearner init_learner(const LearnerConfig& cfg, std::uint64_t seed) {
  check(cfg);
  WeakLearner w{cfg, zero_gradients(cfg)};
  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& weights, int fan_in) {
    double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : weights) v = uniform(rng, -a, a);
  };
  fill(w.params.hidden_weight, cfg.input_dim);
  fill(w.params.structure_weight, w.head_input());
  fill(w.params.relation_weight, w.head_input());
  return w;
}

namespace detail {

struct ForwardCache {
  std::vector<double> hidden;  // post-tanh activations, empty when H = 0
  LogitPair logits;
};

inline void check_width(const WeakLearner& w, std::size_t width) {
  if (width != static_cast<std::size_t>(w.config.input_dim))
    throw Error(ErrorKind::DimensionMismatch, "feature width " + std::to_string(width) +
                                                  " != learner input_dim " +
                                                  std::to_string(w.config.input_dim));
}

inline void forward_sparse(const WeakLearner& w, const SparseFeatures& x, ForwardCache& cache) {
  const auto& p = w.params;
  const std::size_t in = static_cast<std::size_t>(w.config.input_dim);
  const std::size_t h = static_cast<std::size_t>(w.config.hidden_dim);
  const std::size_t r = static_cast<std::size_t>(w.config.n_relations);
  const std::size_t nnz = x.index.size();
  LogitPair& out = cache.logits;
  out.relation.assign(r, 0.0);

  if (h > 0) {
    cache.hidden.assign(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      const double* row = p.hidden_weight.data() + j * in;
      double acc = p.hidden_bias[j];
      for (std::size_t k = 0; k < nnz; ++k) acc += row[x.index[k]] * x.value[k];
      cache.hidden[j] = std::tanh(acc);
    }
    for (int c = 0; c < kStructureClasses; ++c) {
      const double* row = p.structure_weight.data() + static_cast<std::size_t>(c) * h;
      double acc = p.structure_bias[c];
      for (std::size_t j = 0; j < h; ++j) acc += row[j] * cache.hidden[j];
      out.structure[c] = acc;
    }
    for (std::size_t q = 0; q < r; ++q) {
      const double* row = p.relation_weight.data() + q * h;
      double acc = p.relation_bias[q];
      for (std::size_t j = 0; j < h; ++j) acc += row[j] * cache.hidden[j];
      out.relation[q] = acc;
    }
    return;
  }

  cache.hidden.clear();
  for (int c = 0; c < kStructureClasses; ++c) {
    const double* row = p.structure_weight.data() + static_cast<std::size_t>(c) * in;
    double acc = p.structure_bias[c];
    for (std::size_t k = 0; k < nnz; ++k) acc += row[x.index[k]] * x.value[k];
    out.structure[c] = acc;
  }
  for (std::size_t q = 0; q < r; ++q) {
    const double* row = p.relation_weight.data() + q * in;
    double acc = p.relation_bias[q];
    for (std::size_t k = 0; k < nnz; ++k) acc += row[x.index[k]] * x.value[k];
    out.relation[q] = acc;
  }
}

// Cross-entropy of `gold` under softmax over the classes with mask[c] true
// (all classes when mask is empty). Writes d loss / d logits into `dz`;
// masked classes get zero.
inline double masked_cross_entropy(std::span<const double> z, std::span<const bool> mask, int gold,
                                   std::span<double> dz) {
  auto allowed = [&](std::size_t c) { return mask.empty() || mask[c]; };
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < z.size(); ++c)
    if (allowed(c)) peak = std::max(peak, z[c]);
  double sum = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c)
    if (allowed(c)) sum += std::exp(z[c] - peak);
  double log_norm = peak + std::log(sum);
  for (std::size_t c = 0; c < z.size(); ++c)
    dz[c] = allowed(c) ? std::exp(z[c] - log_norm) : 0.0;
  dz[static_cast<std::size_t>(gold)] -= 1.0;
  return log_norm - z[static_cast<std::size_t>(gold)];
}

inline void check_gold(const StructureMask& mask, int gold_structure, std::optional<int> gold_relation,
                       int n_relations) {
  if (gold_structure < 0 || gold_structure >= kStructureClasses)
    throw Error(ErrorKind::InvalidInput, "structure class out of range");
  if (!mask[static_cast<std::size_t>(gold_structure)])
    throw Error(ErrorKind::IllegalGold,
                "gold structure class " + std::to_string(gold_structure) + " is masked out");
  bool reduce = gold_structure != kShiftClass;
  if (reduce != gold_relation.has_value())
    throw Error(ErrorKind::InvalidInput, "gold relation must be given exactly for Reduce classes");
  if (gold_relation && (*gold_relation < 0 || *gold_relation >= n_relations))
    throw Error(ErrorKind::InvalidInput, "relation class out of range");
}

// Adds scale * d(data loss)/d(params) into `grads` and returns the unscaled
// data loss (no l2 term). Combined logits are frozen + forward(w, x).
inline double accumulate_data_gradient(const WeakLearner& w, const SparseFeatures& x,
                                       const LogitPair& frozen, int gold_structure,
                                       std::optional<int> gold_relation, const StructureMask& mask,
                                       Gradients& grads, double scale, ForwardCache& cache) {
  forward_sparse(w, x, cache);
  const auto& p = w.params;
  const std::size_t in = static_cast<std::size_t>(w.config.input_dim);
  const std::size_t h = static_cast<std::size_t>(w.config.hidden_dim);
  const std::size_t r = static_cast<std::size_t>(w.config.n_relations);
  const std::size_t nnz = x.index.size();

  std::array<double, kStructureClasses> zs{};
  for (int c = 0; c < kStructureClasses; ++c) zs[c] = frozen.structure[c] + cache.logits.structure[c];
  std::array<double, kStructureClasses> dzs{};
  double loss = masked_cross_entropy(zs, mask, gold_structure, dzs);
  for (double& v : dzs) v *= scale;

  std::vector<double> dzr;
  if (gold_relation) {
    std::vector<double> zr(r);
    for (std::size_t q = 0; q < r; ++q) zr[q] = frozen.relation[q] + cache.logits.relation[q];
    dzr.resize(r);
    loss += masked_cross_entropy(zr, {}, *gold_relation, dzr);
    for (double& v : dzr) v *= scale;
  }

  if (h > 0) {
    std::vector<double> dh(h, 0.0);
    for (int c = 0; c < kStructureClasses; ++c) {
      if (dzs[c] == 0.0) continue;
      double* grow = grads.structure_weight.data() + static_cast<std::size_t>(c) * h;
      const double* wrow = p.structure_weight.data() + static_cast<std::size_t>(c) * h;
      for (std::size_t j = 0; j < h; ++j) {
        grow[j] += dzs[c] * cache.hidden[j];
        dh[j] += wrow[j] * dzs[c];
      }
      grads.structure_bias[c] += dzs[c];
    }
    for (std::size_t q = 0; q < dzr.size(); ++q) {
      double* grow = grads.relation_weight.data() + q * h;
      const double* wrow = p.relation_weight.data() + q * h;
      for (std::size_t j = 0; j < h; ++j) {
        grow[j] += dzr[q] * cache.hidden[j];
        dh[j] += wrow[j] * dzr[q];
      }
      grads.relation_bias[q] += dzr[q];
    }
    for (std::size_t j = 0; j < h; ++j) {
      double da = dh[j] * (1.0 - cache.hidden[j] * cache.hidden[j]);
      if (da == 0.0) continue;
      double* grow = grads.hidden_weight.data() + j * in;
      for (std::size_t k = 0; k < nnz; ++k) grow[x.index[k]] += da * x.value[k];
      grads.hidden_bias[j] += da;
    }
    return loss;
  }

  for (int c = 0; c < kStructureClasses; ++c) {
    if (dzs[c] == 0.0) continue;
    double* grow = grads.structure_weight.data() + static_cast<std::size_t>(c) * in;
    for (std::size_t k = 0; k < nnz; ++k) grow[x.index[k]] += dzs[c] * x.value[k];
    grads.structure_bias[c] += dzs[c];
  }
  for (std::size_t q = 0; q < dzr.size(); ++q) {
    double* grow = grads.relation_weight.data() + q * in;
    for (std::size_t k = 0; k < nnz; ++k) grow[x.index[k]] += dzr[q] * x.value[k];
    grads.relation_bias[q] += dzr[q];
  }
  return loss;
}

inline double squared_norm(const LearnerParams& p) {
  double sum = 0.0;
  for (const auto* block : p.blocks())
    for (double v : *block) sum += v * v;
  return sum;
}

}  // namespace detail

inline LogitPair forward(const WeakLearner& w, std::span<const double> x) {
  detail::check_width(w, x.size());
  detail::ForwardCache cache;
  detail::forward_sparse(w, sparsify(x), cache);
  return std::move(cache.logits);
}

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

/// Loss of the combined prediction frozen + forward(w, x): masked structure
/// cross-entropy, plus relation cross-entropy on Reduce golds, plus
/// l2_penalty * ||w||^2. Gradients are with respect to w only.
inline LossAndGrad boosted_loss_and_grad(const WeakLearner& w, std::span<const double> x,
                                         const LogitPair& frozen, int gold_structure,
                                         std::optional<int> gold_relation, const StructureMask& legal_mask) {
  detail::check_width(w, x.size());
  if (frozen.relation.size() != static_cast<std::size_t>(w.config.n_relations))
    throw Error(ErrorKind::DimensionMismatch, "frozen relation logits have the wrong width");
  detail::check_gold(legal_mask, gold_structure, gold_relation, w.config.n_relations);
  LossAndGrad out{0.0, zero_gradients(w.config)};
  detail::ForwardCache cache;
  out.loss = detail::accumulate_data_gradient(w, sparsify(x), frozen, gold_structure, gold_relation,
                                              legal_mask, out.grads, 1.0, cache);
  double l2 = w.config.l2_penalty;
  if (l2 > 0.0) {
    out.loss += l2 * detail::squared_norm(w.params);
    auto gb = out.grads.blocks();
    auto pb = w.params.blocks();
    for (std::size_t b = 0; b < gb.size(); ++b)
      for (std::size_t i = 0; i < gb[b]->size(); ++i) (*gb[b])[i] += 2.0 * l2 * (*pb[b])[i];
  }
  return out;
}

inline WeakLearner sgd_step(const WeakLearner& w, const Gradients& grads, double lr) {
  WeakLearner next = w;
  auto pb = next.params.blocks();
  auto gb = grads.blocks();
  for (std::size_t b = 0; b < pb.size(); ++b) {
    if (pb[b]->size() != gb[b]->size())
      throw Error(ErrorKind::DimensionMismatch, "gradient block " + std::to_string(b) +
                                                    " has " + std::to_string(gb[b]->size()) +
                                                    " entries, parameters have " +
                                                    std::to_string(pb[b]->size()));
    for (std::size_t i = 0; i < pb[b]->size(); ++i) (*pb[b])[i] -= lr * (*gb[b])[i];
  }
  return next;
}

}  // namespace gbdp
