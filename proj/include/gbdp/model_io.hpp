#pragma once

// JSON model files. Parameters are stored as row-major flat arrays of doubles
// with their dimensions; nlohmann::json prints the shortest decimal that
// round-trips, so save/load is bit-exact.

#include <string>
#include <vector>

#include "json.hpp"

#include "gbdp/boosting.hpp"
#include "gbdp/encoder.hpp"
#include "gbdp/error.hpp"
#include "gbdp/metrics.hpp"
#include "gbdp/weak_learner.hpp"

namespace gbdp {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;

inline Json to_json(const EncoderConfig& cfg) {
  return Json{{"max_span_tokens", cfg.max_span_tokens},
              {"hash_dim", cfg.hash_dim},
              {"truncation_strategy", std::string(to_string(cfg.truncation))},
              {"hash_seed", cfg.hash_seed},
              {"hash_function", "fnv1a64-splitmix64"}};
}

inline Json to_json(const LearnerConfig& cfg) {
  return Json{{"input_dim", cfg.input_dim},         {"hidden_dim", cfg.hidden_dim},
              {"n_structure_classes", kStructureClasses}, {"n_relations", cfg.n_relations},
              {"learning_rate", cfg.learning_rate}, {"l2_penalty", cfg.l2_penalty},
              {"init_rule", cfg.init_rule}};
}

inline Json to_json(const BoostConfig& cfg) {
  return Json{{"n_steps", cfg.n_steps},       {"learner", to_json(cfg.learner)},
              {"epochs_max", cfg.epochs_max}, {"patience", cfg.patience},
              {"dev_fraction", cfg.dev_fraction}, {"seed", cfg.seed},
              {"batch_size", cfg.batch_size}, {"shuffle_rule", cfg.shuffle_rule},
              {"reject_worse_step", cfg.reject_worse_step}};
}

namespace detail {

inline Json matrix_json(const std::vector<double>& data, int rows, int cols) {
  return Json{{"rows", rows}, {"cols", cols}, {"data", data}};
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorKind::MalformedSyntax, std::string("model JSON is missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedSyntax, std::string("model JSON field '") + key + "': " + e.what());
  }
}

inline std::vector<double> matrix_from_json(const Json& j, const char* key, int rows, int cols) {
  const Json& m = j.contains(key) ? j.at(key) : Json();
  auto r = field<int>(m, "rows");
  auto c = field<int>(m, "cols");
  auto data = field<std::vector<double>>(m, "data");
  if (r != rows || c != cols || data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw Error(ErrorKind::DimensionMismatch, std::string("parameter block '") + key + "' has shape " +
                                                  std::to_string(r) + "x" + std::to_string(c) + " (" +
                                                  std::to_string(data.size()) + " values), expected " +
                                                  std::to_string(rows) + "x" + std::to_string(cols));
  return data;
}

}  // namespace detail

inline Json to_json(const WeakLearner& w) {
  const auto& c = w.config;
  const auto& p = w.params;
  int head_in = w.head_input();
  return Json{{"input_dim", c.input_dim},
              {"hidden_dim", c.hidden_dim},
              {"n_relations", c.n_relations},
              {"param_count", param_count(w)},
              {"hidden_weight", detail::matrix_json(p.hidden_weight, c.hidden_dim, c.input_dim)},
              {"hidden_bias", detail::matrix_json(p.hidden_bias, 1, c.hidden_dim)},
              {"structure_weight", detail::matrix_json(p.structure_weight, kStructureClasses, head_in)},
              {"structure_bias", detail::matrix_json(p.structure_bias, 1, kStructureClasses)},
              {"relation_weight", detail::matrix_json(p.relation_weight, c.n_relations, head_in)},
              {"relation_bias", detail::matrix_json(p.relation_bias, 1, c.n_relations)}};
}

inline EncoderConfig encoder_config_from_json(const Json& j) {
  EncoderConfig cfg;
  cfg.max_span_tokens = detail::field<int>(j, "max_span_tokens");
  cfg.hash_dim = detail::field<int>(j, "hash_dim");
  cfg.truncation = parse_truncation_strategy(detail::field<std::string>(j, "truncation_strategy"));
  cfg.hash_seed = detail::field<std::uint64_t>(j, "hash_seed");
  if (j.contains("hash_function") && j.at("hash_function") != "fnv1a64-splitmix64")
    throw Error(ErrorKind::InvalidConfig, "unsupported hash_function");
  check(cfg);
  return cfg;
}

inline LearnerConfig learner_config_from_json(const Json& j) {
  LearnerConfig cfg;
  cfg.input_dim = detail::field<int>(j, "input_dim");
  cfg.hidden_dim = detail::field<int>(j, "hidden_dim");
  cfg.n_relations = detail::field<int>(j, "n_relations");
  cfg.learning_rate = detail::field<double>(j, "learning_rate");
  cfg.l2_penalty = detail::field<double>(j, "l2_penalty");
  cfg.init_rule = detail::field<std::string>(j, "init_rule");
  return cfg;
}

inline BoostConfig boost_config_from_json(const Json& j) {
  BoostConfig cfg;
  cfg.n_steps = detail::field<int>(j, "n_steps");
  cfg.learner = learner_config_from_json(j.at("learner"));
  cfg.epochs_max = detail::field<int>(j, "epochs_max");
  cfg.patience = detail::field<int>(j, "patience");
  cfg.dev_fraction = detail::field<double>(j, "dev_fraction");
  cfg.seed = detail::field<std::uint64_t>(j, "seed");
  cfg.batch_size = detail::field<int>(j, "batch_size");
  cfg.shuffle_rule = detail::field<std::string>(j, "shuffle_rule");
  cfg.reject_worse_step = j.value("reject_worse_step", true);
  check(cfg);
  return cfg;
}

inline WeakLearner learner_from_json(const Json& j, const LearnerConfig& base) {
  WeakLearner w;
  w.config = base;
  w.config.input_dim = detail::field<int>(j, "input_dim");
  w.config.hidden_dim = detail::field<int>(j, "hidden_dim");
  w.config.n_relations = detail::field<int>(j, "n_relations");
  check(w.config);
  const auto& c = w.config;
  int head_in = w.head_input();
  w.params.hidden_weight = detail::matrix_from_json(j, "hidden_weight", c.hidden_dim, c.input_dim);
  w.params.hidden_bias = detail::matrix_from_json(j, "hidden_bias", 1, c.hidden_dim);
  w.params.structure_weight = detail::matrix_from_json(j, "structure_weight", kStructureClasses, head_in);
  w.params.structure_bias = detail::matrix_from_json(j, "structure_bias", 1, kStructureClasses);
  w.params.relation_weight = detail::matrix_from_json(j, "relation_weight", c.n_relations, head_in);
  w.params.relation_bias = detail::matrix_from_json(j, "relation_bias", 1, c.n_relations);
  return w;
}

inline Json to_json(const BoostedEnsemble& ensemble) {
  Json steps = Json::array();
  for (const auto& step : ensemble.steps) steps.push_back(to_json(step));
  return Json{{"format_version", kModelFormatVersion},
              {"encoder_config", to_json(ensemble.encoder)},
              {"relation_inventory", ensemble.relation_inventory},
              {"train_domain", ensemble.train_domain},
              {"boost_config", to_json(ensemble.boost_config)},
              {"steps", steps}};
}

inline BoostedEnsemble ensemble_from_json(const Json& j) {
  auto version = detail::field<int>(j, "format_version");
  if (version != kModelFormatVersion)
    throw Error(ErrorKind::MalformedSyntax, "unsupported model format_version " + std::to_string(version));
  BoostedEnsemble e;
  e.encoder = encoder_config_from_json(j.at("encoder_config"));
  e.relation_inventory = detail::field<std::vector<std::string>>(j, "relation_inventory");
  if (!std::is_sorted(e.relation_inventory.begin(), e.relation_inventory.end()))
    throw Error(ErrorKind::MalformedSyntax, "relation_inventory must be sorted");
  e.train_domain = j.value("train_domain", std::string());
  e.boost_config = boost_config_from_json(j.at("boost_config"));
  const LearnerConfig expected = e.step_config();
  for (const auto& sj : detail::field<Json>(j, "steps")) {
    WeakLearner step = learner_from_json(sj, e.boost_config.learner);
    if (step.config.input_dim != expected.input_dim || step.config.n_relations != expected.n_relations)
      throw Error(ErrorKind::DimensionMismatch, "model step dimensions disagree with encoder/inventory");
    e.steps.push_back(std::move(step));
  }
  return e;
}

inline std::string model_to_string(const BoostedEnsemble& ensemble) { return to_json(ensemble).dump() + "\n"; }

inline BoostedEnsemble model_from_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedSyntax, std::string("model file is not valid JSON: ") + e.what());
  }
  return ensemble_from_json(j);
}

inline void save_model(const BoostedEnsemble& ensemble, const std::string& path) {
  write_file(path, model_to_string(ensemble));
}

inline BoostedEnsemble load_model(const std::string& path) { return model_from_string(read_file(path)); }

inline Json to_json(const StepReport& r) {
  return Json{{"train_loss", r.train_loss}, {"dev_losses", r.dev_losses},
              {"epochs_run", r.epochs_run}, {"best_epoch", r.best_epoch},
              {"seconds", r.seconds},       {"param_count", r.param_count},
              {"rejected", r.rejected}};
}

inline Json to_json(const TrainReport& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  return Json{{"steps", steps}, {"cumulative_params", r.cumulative_params}, {"total_seconds", r.total_seconds}};
}

inline Json to_json(const ParsevalScores& s) {
  auto level = [](const LevelScore& l) { return Json{{"p", l.p}, {"r", l.r}, {"f1", l.f1}}; };
  return Json{{"span", level(s.span)},
              {"nuclearity", level(s.nuc)},
              {"relation", level(s.rel)},
              {"docs", s.docs},
              {"support", Json{{"gold", s.counts.gold}, {"pred", s.counts.pred}}}};
}

}  // namespace gbdp
