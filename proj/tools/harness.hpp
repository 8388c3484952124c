#pragma once

// Command implementations behind the gbdp CLI. Each command returns its primary
// result and writes a run manifest (<primary output>.manifest.json) recording
// the resolved configuration, seed, input/output digests and phase timings.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gbdp/boosting.hpp"
#include "gbdp/encoder.hpp"
#include "gbdp/error.hpp"
#include "gbdp/metrics.hpp"
#include "gbdp/model_io.hpp"
#include "gbdp/synth.hpp"
#include "gbdp/transition.hpp"
#include "gbdp/treebank.hpp"

namespace gbdp::harness {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct Context {
  std::uint64_t seed = 1;
  bool quiet = false;
  std::ostream* out = &std::cout;

  std::ostream& log() const {
    static std::ostream discard(nullptr);
    return quiet ? discard : *out;
  }
};

/// Exit status for a failed command: 1 usage/config, 2 data, 3 internal.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidPrefix:
    case ErrorKind::NoMatchingWidth:
      return 1;
    case ErrorKind::MalformedSyntax:
    case ErrorKind::InvalidTree:
    case ErrorKind::IoError:
    case ErrorKind::InvalidInput:
    case ErrorKind::EmptyTreebank:
    case ErrorKind::DocumentMismatch:
    case ErrorKind::RelationInventoryMismatch:
    case ErrorKind::DimensionMismatch:
      return 2;
    default:
      return 3;
  }
}

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Internal, "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run manifest

class Manifest {
 public:
  Manifest(std::string command, const Context& ctx) {
    json_["command"] = std::move(command);
    json_["toolkit"] = "gbdp";
    json_["version"] = kToolkitVersion;
    json_["seed"] = ctx.seed;
    json_["config"] = Json::object();
    json_["inputs"] = Json::array();
    json_["outputs"] = Json::array();
    json_["warnings"] = Json::array();
    json_["timings_seconds"] = Json::object();
  }

  Json& config() { return json_["config"]; }
  Json& results() { return json_["results"]; }

  void input(const std::string& path, std::string_view bytes) {
    json_["inputs"].push_back(Json{{"path", path}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  void output(const std::string& path, std::string_view bytes) {
    json_["outputs"].push_back(Json{{"path", path}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  void warning(const std::string& text) { json_["warnings"].push_back(text); }
  void timing(const std::string& phase, double seconds) { json_["timings_seconds"][phase] = seconds; }

  const Json& json() const { return json_; }
  void write(const std::string& path) const { write_file(path, json_.dump(2) + "\n"); }

 private:
  Json json_;
};

class Stopwatch {
 public:
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline std::string manifest_path(const std::string& primary) { return primary + ".manifest.json"; }

// Writes a file and records it in the manifest.
inline void emit(Manifest& manifest, const std::string& path, const std::string& content) {
  write_file(path, content);
  manifest.output(path, content);
}

// Reads a file and records its digest.
inline std::string ingest(Manifest& manifest, const std::string& path) {
  std::string bytes = read_file(path);
  manifest.input(path, bytes);
  return bytes;
}

// ---------------------------------------------------------------------------
// synth

struct ExperimentConfig {
  SynthConfig generator;  // n_docs is ignored; the three counts below apply
  int train_docs = 2000;
  int test_docs = 200;
  int ood_test_docs = 200;
  std::string ood_domain_tag = "beta";
};

inline Json to_json(const SynthConfig& c) {
  return Json{{"min_edus", c.min_edus},
              {"max_edus", c.max_edus},
              {"min_tokens", c.min_tokens},
              {"max_tokens", c.max_tokens},
              {"shared_vocab", c.shared_vocab},
              {"domain_vocab", c.domain_vocab},
              {"domain_tag", c.domain_tag},
              {"shared_relations", c.shared_relations},
              {"domain_relations", c.domain_relations},
              {"multinuclear_relations", c.multinuclear_relations},
              {"p_domain", c.p_domain},
              {"p_ns", c.p_ns},
              {"markers_per_relation", c.markers_per_relation}};
}

inline Json to_json(const ExperimentConfig& c) {
  return Json{{"train_docs", c.train_docs},
              {"test_docs", c.test_docs},
              {"ood_test_docs", c.ood_test_docs},
              {"ood_domain_tag", c.ood_domain_tag},
              {"generator", to_json(c.generator)}};
}

namespace detail {

template <typename T>
void read_opt(const Json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("config field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(ErrorKind::InvalidConfig, std::string("unknown field '") + key + "' in " + where);
  }
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "experiment config must be a JSON object");
  detail::reject_unknown(j, {"train_docs", "test_docs", "ood_test_docs", "ood_domain_tag", "generator"},
                         "experiment config");
  ExperimentConfig c;
  detail::read_opt(j, "train_docs", c.train_docs);
  detail::read_opt(j, "test_docs", c.test_docs);
  detail::read_opt(j, "ood_test_docs", c.ood_test_docs);
  detail::read_opt(j, "ood_domain_tag", c.ood_domain_tag);
  if (j.contains("generator")) {
    const Json& g = j.at("generator");
    if (!g.is_object()) throw Error(ErrorKind::InvalidConfig, "'generator' must be a JSON object");
    detail::reject_unknown(g,
                           {"min_edus", "max_edus", "min_tokens", "max_tokens", "shared_vocab", "domain_vocab",
                            "domain_tag", "shared_relations", "domain_relations", "multinuclear_relations",
                            "p_domain", "p_ns", "markers_per_relation"},
                           "generator");
    auto& s = c.generator;
    detail::read_opt(g, "min_edus", s.min_edus);
    detail::read_opt(g, "max_edus", s.max_edus);
    detail::read_opt(g, "min_tokens", s.min_tokens);
    detail::read_opt(g, "max_tokens", s.max_tokens);
    detail::read_opt(g, "shared_vocab", s.shared_vocab);
    detail::read_opt(g, "domain_vocab", s.domain_vocab);
    detail::read_opt(g, "domain_tag", s.domain_tag);
    detail::read_opt(g, "shared_relations", s.shared_relations);
    detail::read_opt(g, "domain_relations", s.domain_relations);
    detail::read_opt(g, "multinuclear_relations", s.multinuclear_relations);
    detail::read_opt(g, "p_domain", s.p_domain);
    detail::read_opt(g, "p_ns", s.p_ns);
    detail::read_opt(g, "markers_per_relation", s.markers_per_relation);
  }
  if (c.train_docs < 1 || c.test_docs < 0 || c.ood_test_docs < 0)
    throw Error(ErrorKind::InvalidConfig, "document counts must be >= 0 (train_docs >= 1)");
  if (c.ood_domain_tag == c.generator.domain_tag)
    throw Error(ErrorKind::InvalidConfig, "ood_domain_tag must differ from the generator's domain_tag");
  SynthConfig ood = c.generator;
  ood.domain_tag = c.ood_domain_tag;
  check(c.generator);
  check(ood);
  return c;
}

struct SynthOutputs {
  std::string train;
  std::string test;
  std::string ood_test;
  std::string manifest;
};

/// Writes <tag>_train.tb, <tag>_test.tb and <ood_tag>_test.tb into out_dir.
inline SynthOutputs cmd_synth(const Context& ctx, const std::optional<std::string>& config_path,
                              const std::string& out_dir) {
  Stopwatch clock;
  Manifest manifest("synth", ctx);
  ExperimentConfig cfg;
  if (config_path) {
    std::string text = ingest(manifest, *config_path);
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    cfg = experiment_config_from_json(j);
  } else {
    check(cfg.generator);
  }
  manifest.config() = to_json(cfg);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create directory '" + out_dir + "'");

  const std::string& tag = cfg.generator.domain_tag;
  SynthOutputs out;
  out.train = (std::filesystem::path(out_dir) / (tag + "_train.tb")).string();
  out.test = (std::filesystem::path(out_dir) / (tag + "_test.tb")).string();
  out.ood_test = (std::filesystem::path(out_dir) / (cfg.ood_domain_tag + "_test.tb")).string();
  out.manifest = (std::filesystem::path(out_dir) / "synth.manifest.json").string();

  SynthConfig a = cfg.generator;
  SynthConfig b = cfg.generator;
  b.domain_tag = cfg.ood_domain_tag;
  a.n_docs = cfg.train_docs;
  emit(manifest, out.train, treebank_to_string(synthesize_treebank(a, derive_seed(ctx.seed, 1))));
  a.n_docs = cfg.test_docs;
  emit(manifest, out.test, treebank_to_string(synthesize_treebank(a, derive_seed(ctx.seed, 2))));
  b.n_docs = cfg.ood_test_docs;
  emit(manifest, out.ood_test, treebank_to_string(synthesize_treebank(b, derive_seed(ctx.seed, 3))));
  manifest.timing("generate", clock.lap());
  manifest.write(out.manifest);

  ctx.log() << "wrote " << out.train << ", " << out.test << ", " << out.ood_test << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string treebank;
  std::string out;
  std::string report;  // defaults to <out>.report.json
  BoostConfig boost;
  EncoderConfig encoder;
};

inline Json resolved_config(const BoostConfig& boost, const EncoderConfig& enc) {
  return Json{{"boost_config", to_json(boost)}, {"encoder_config", to_json(enc)}};
}

struct TrainResult {
  BoostedEnsemble ensemble;
  TrainReport report;
  std::size_t model_bytes = 0;
};

inline TrainResult cmd_train(const Context& ctx, TrainOptions opt) {
  Stopwatch clock;
  Manifest manifest("train", ctx);
  opt.boost.seed = ctx.seed;
  if (opt.report.empty()) opt.report = opt.out + ".report.json";
  Treebank tb = treebank_from_string(ingest(manifest, opt.treebank), file_stem(opt.treebank));
  manifest.timing("load", clock.lap());
  if (tb.empty()) throw Error(ErrorKind::EmptyTreebank, "treebank '" + opt.treebank + "' has no documents");

  auto [ensemble, report] = train(tb, opt.boost, opt.encoder);
  manifest.timing("train", clock.lap());
  manifest.config() = resolved_config(ensemble.boost_config, ensemble.encoder);

  std::string model = model_to_string(ensemble);
  emit(manifest, opt.out, model);
  Json rj = to_json(report);
  rj["model_bytes"] = model.size();
  rj["total_params"] = total_param_count(ensemble);
  emit(manifest, opt.report, rj.dump(2) + "\n");
  manifest.timing("write", clock.lap());
  manifest.results() = Json{{"steps", ensemble.size()}, {"total_params", total_param_count(ensemble)},
                            {"model_bytes", model.size()}};
  manifest.write(manifest_path(opt.out));

  auto& log = ctx.log();
  for (std::size_t k = 0; k < report.steps.size(); ++k) {
    const auto& s = report.steps[k];
    log << "step " << k + 1 << ": train_loss " << s.train_loss << ", epochs " << s.epochs_run << " (best "
        << s.best_epoch << ")" << (s.rejected ? ", zero-output" : "") << ", " << s.seconds << " s\n";
  }
  log << "wrote " << opt.out << " (" << model.size() << " bytes, " << total_param_count(ensemble)
      << " parameters)\n";
  return {std::move(ensemble), std::move(report), model.size()};
}

// ---------------------------------------------------------------------------
// parse

enum class InputFormat { Auto, Treebank, Raw };

inline InputFormat parse_input_format(const std::string& s) {
  if (s == "auto") return InputFormat::Auto;
  if (s == "treebank") return InputFormat::Treebank;
  if (s == "raw") return InputFormat::Raw;
  throw Error(ErrorKind::Usage, "unknown input format '" + s + "' (expected auto, treebank or raw)");
}

/// Raw-EDU text: one EDU per line, documents separated by blank lines.
inline std::vector<Document> read_raw_documents(std::string_view text) {
  std::vector<Document> docs;
  std::vector<std::string> current;
  auto flush = [&] {
    if (current.empty()) return;
    char id[32];
    std::snprintf(id, sizeof id, "doc-%04zu", docs.size() + 1);
    docs.push_back(make_document(id, current));
    current.clear();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (tokenize(line).empty()) {
      flush();
    } else {
      current.push_back(line);
    }
  }
  flush();
  return docs;
}

inline bool looks_like_treebank(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    return line.rfind("#doc", 0) == 0 || line.rfind("#relations", 0) == 0;
  }
  return true;  // empty file: an empty treebank
}

struct ParseOptions {
  std::string model;
  std::string input;
  std::string out;
  std::optional<int> prefix;  // defaults to the full ensemble
  std::optional<std::string> trace;
  InputFormat format = InputFormat::Auto;
};

inline Treebank cmd_parse(const Context& ctx, const ParseOptions& opt) {
  if (opt.prefix && *opt.prefix < 1)
    throw Error(ErrorKind::Usage, "--prefix must be >= 1 (got " + std::to_string(*opt.prefix) + ")");
  Stopwatch clock;
  Manifest manifest("parse", ctx);
  BoostedEnsemble ensemble = model_from_string(ingest(manifest, opt.model));
  int m = opt.prefix.value_or(ensemble.size());
  check_prefix(ensemble, m);

  std::string text = ingest(manifest, opt.input);
  InputFormat format = opt.format;
  if (format == InputFormat::Auto) format = looks_like_treebank(text) ? InputFormat::Treebank : InputFormat::Raw;
  std::vector<Document> docs;
  std::string domain = "raw";
  if (format == InputFormat::Treebank) {
    Treebank input = treebank_from_string(text, file_stem(opt.input));
    if (!input.domain_tag.empty()) domain = input.domain_tag;
    for (auto& entry : input.entries) docs.push_back(std::move(entry.doc));
  } else {
    docs = read_raw_documents(text);
  }
  manifest.timing("load", clock.lap());

  Treebank pred;
  pred.name = file_stem(opt.out);
  pred.domain_tag = domain;
  pred.relation_inventory = ensemble.relation_inventory;
  std::string trace_text;
  for (const auto& doc : docs) {
    ActionSequence actions;
    DiscourseTree tree = parse(ensemble, m, doc, &actions);
    if (opt.trace) {
      if (!trace_text.empty()) trace_text += '\n';
      trace_text += "#doc " + doc.doc_id + '\n';
      for (const auto& a : actions) trace_text += to_trace_line(a) + '\n';
    }
    pred.entries.push_back({doc, std::move(tree)});
  }
  manifest.timing("parse", clock.lap());
  manifest.config() = Json{{"prefix", m},
                           {"input_format", format == InputFormat::Raw ? "raw" : "treebank"},
                           {"model_steps", ensemble.size()}};
  emit(manifest, opt.out, treebank_to_string(pred));
  if (opt.trace) emit(manifest, *opt.trace, trace_text);
  manifest.write(manifest_path(opt.out));
  ctx.log() << "parsed " << docs.size() << " documents with prefix " << m << " -> " << opt.out << "\n";
  return pred;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string gold;
  std::string pred;
  std::string out;  // CSV; empty prints to stdout only
};

/// Pairs documents by position; their ids and EDU counts must agree.
inline ParsevalScores evaluate_files(const Treebank& gold, const Treebank& pred) {
  if (gold.size() != pred.size())
    throw Error(ErrorKind::DocumentMismatch, "gold has " + std::to_string(gold.size()) +
                                                 " documents, prediction has " + std::to_string(pred.size()));
  if (gold.empty()) throw Error(ErrorKind::EmptyTreebank, "nothing to evaluate");
  ParsevalCounts total;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold.entries[i];
    const auto& p = pred.entries[i];
    if (g.doc.doc_id != p.doc.doc_id)
      throw Error(ErrorKind::DocumentMismatch, "document " + std::to_string(i + 1) + ": gold id '" +
                                                   g.doc.doc_id + "' vs predicted id '" + p.doc.doc_id + "'",
                  i + 1);
    total += match_counts(g.tree, p.tree);
  }
  return scores_from_counts(total, static_cast<std::int64_t>(gold.size()));
}

inline ParsevalScores cmd_eval(const Context& ctx, const EvalOptions& opt) {
  Stopwatch clock;
  Manifest manifest("eval", ctx);
  Treebank gold = treebank_from_string(ingest(manifest, opt.gold), file_stem(opt.gold));
  Treebank pred = treebank_from_string(ingest(manifest, opt.pred), file_stem(opt.pred));
  ParsevalScores s = evaluate_files(gold, pred);
  manifest.timing("eval", clock.lap());
  // Prediction files carry no prefix, so the m column is 0 here.
  std::string csv = std::string(kCurveCsvHeader) + "\n" + csv_row(0, gold.domain_tag, s) + "\n";
  manifest.results() = to_json(s);
  if (!opt.out.empty()) {
    emit(manifest, opt.out, csv);
    manifest.write(manifest_path(opt.out));
  }
  auto& log = ctx.log();
  char line[160];
  std::snprintf(line, sizeof line, "span F1 %.4f  nuclearity F1 %.4f  relation F1 %.4f  (%lld docs)\n",
                s.span.f1, s.nuc.f1, s.rel.f1, static_cast<long long>(s.docs));
  log << line;
  if (opt.out.empty()) log << csv;
  return s;
}

// ---------------------------------------------------------------------------
// curve

struct CurveOptions {
  std::string model;
  std::vector<std::string> treebanks;
  std::string out;
};

inline CurveTable cmd_curve(const Context& ctx, const CurveOptions& opt) {
  if (opt.treebanks.empty()) throw Error(ErrorKind::Usage, "curve needs at least one --treebank");
  Stopwatch clock;
  Manifest manifest("curve", ctx);
  BoostedEnsemble ensemble = model_from_string(ingest(manifest, opt.model));
  std::vector<Treebank> tbs;
  for (const auto& path : opt.treebanks) tbs.push_back(treebank_from_string(ingest(manifest, path), file_stem(path)));
  manifest.timing("load", clock.lap());
  CurveTable table = boost_curve(ensemble, tbs);
  manifest.timing("evaluate", clock.lap());
  manifest.config() = Json{{"model_steps", ensemble.size()}, {"train_domain", ensemble.train_domain}};
  emit(manifest, opt.out, curve_to_csv(table));
  Json results = Json::object();
  if (table.span_gap) {
    results["span_gap"] = *table.span_gap;
    results["gap_last_ge_first"] = table.span_gap->back() >= table.span_gap->front();
  } else {
    results["span_gap"] = nullptr;
  }
  manifest.results() = results;
  manifest.write(manifest_path(opt.out));

  auto& log = ctx.log();
  log << curve_to_csv(table);
  if (table.span_gap) {
    log << "span F1 gap (in-domain minus out-of-domain) by m:";
    char buf[32];
    for (double g : *table.span_gap) {
      std::snprintf(buf, sizeof buf, " %.4f", g);
      log << buf;
    }
    log << "\n";
  }
  return table;
}

// ---------------------------------------------------------------------------
// compare

/// Smallest-error hidden width whose single learner matches `target` params.
struct WidthMatch {
  int hidden_dim = 0;
  std::int64_t params = 0;
  double relative_error = 0.0;
  bool within_tolerance = false;
};

inline WidthMatch match_hidden_width(LearnerConfig cfg, std::int64_t target, double tolerance = 0.05) {
  // params(H) = H*(in + 1) + (4 + R)*(H + 1) for H > 0, (4 + R)*(in + 1) for H = 0.
  const double per_unit = static_cast<double>(cfg.input_dim + 1 + kStructureClasses + cfg.n_relations);
  const double offset = static_cast<double>(kStructureClasses + cfg.n_relations);
  double ideal = (static_cast<double>(target) - offset) / per_unit;
  std::vector<int> candidates = {0};
  if (ideal >= 1.0) {
    candidates.push_back(static_cast<int>(std::floor(ideal)));
    candidates.push_back(static_cast<int>(std::ceil(ideal)));
  } else {
    candidates.push_back(1);
  }
  WidthMatch best;
  bool have = false;
  for (int h : candidates) {
    cfg.hidden_dim = h;
    std::int64_t p = param_count(cfg);
    double err = std::abs(static_cast<double>(p - target)) / static_cast<double>(target);
    if (!have || err < best.relative_error) {
      best = {h, p, err, err <= tolerance};
      have = true;
    }
  }
  return best;
}

struct CompareOptions {
  std::string treebank;
  std::vector<std::string> eval;  // held-out treebanks; empty = split off dev_fraction of the input
  std::string out;
  bool match_params = false;
  BoostConfig boost;
  EncoderConfig encoder;
};

// Seeded document-level hold-out used when no evaluation treebank is given.
inline std::pair<Treebank, Treebank> holdout_split(const Treebank& tb, double fraction, std::uint64_t seed) {
  if (tb.size() < 2) throw Error(ErrorKind::InvalidInput, "need at least 2 documents to hold out test data");
  std::vector<std::size_t> order(tb.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0xc0a7));
  shuffle(std::span<std::size_t>(order), rng);
  auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(tb.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, tb.size() - 1);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  Treebank train = tb, test = tb;
  train.entries.clear();
  test.entries.clear();
  test.name = tb.name + "-heldout";
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_test ? test : train).entries.push_back(tb.entries[order[i]]);
  return {std::move(train), std::move(test)};
}

inline Json cmd_compare(const Context& ctx, CompareOptions opt) {
  Stopwatch clock;
  Manifest manifest("compare", ctx);
  opt.boost.seed = ctx.seed;
  check(opt.boost);
  Treebank input = treebank_from_string(ingest(manifest, opt.treebank), file_stem(opt.treebank));
  if (input.empty()) throw Error(ErrorKind::EmptyTreebank, "treebank '" + opt.treebank + "' has no documents");
  Treebank train_tb;
  std::vector<Treebank> eval_tbs;
  if (opt.eval.empty()) {
    auto [tr, te] = holdout_split(input, opt.boost.dev_fraction, ctx.seed);
    train_tb = std::move(tr);
    eval_tbs.push_back(std::move(te));
  } else {
    train_tb = std::move(input);
    for (const auto& path : opt.eval) eval_tbs.push_back(treebank_from_string(ingest(manifest, path), file_stem(path)));
  }
  manifest.timing("load", clock.lap());

  auto contender = [&](const BoostConfig& cfg, const char* name) {
    auto start = std::chrono::steady_clock::now();
    auto [ensemble, report] = train(train_tb, cfg, opt.encoder);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json scores = Json::array();
    for (const auto& tb : eval_tbs)
      scores.push_back(Json{{"treebank", tb.name}, {"domain", tb.domain_tag},
                            {"scores", to_json(evaluate_treebank(ensemble, ensemble.size(), tb))}});
    manifest.timing(std::string(name) + "_train", seconds);
    return Json{{"steps", ensemble.size()},
                {"hidden_dim", ensemble.boost_config.learner.hidden_dim},
                {"param_total", total_param_count(ensemble)},
                {"model_bytes", model_to_string(ensemble).size()},
                {"train_seconds", seconds},
                {"evaluation", scores}};
  };

  BoostConfig weak_cfg = opt.boost;
  Json weak = contender(weak_cfg, "weak_ensemble");
  std::int64_t weak_params = weak["param_total"].get<std::int64_t>();

  BoostConfig strong_cfg = opt.boost;
  strong_cfg.n_steps = 1;
  Json match = nullptr;
  bool warned = false;
  if (opt.match_params) {
    LearnerConfig lcfg = make_ensemble(train_tb, opt.boost, opt.encoder).step_config();
    WidthMatch wm = match_hidden_width(lcfg, weak_params);
    strong_cfg.learner.hidden_dim = wm.hidden_dim;
    match = Json{{"target_params", weak_params}, {"hidden_dim", wm.hidden_dim}, {"params", wm.params},
                 {"relative_error", wm.relative_error}, {"within_tolerance", wm.within_tolerance}};
    if (!wm.within_tolerance) {
      warned = true;
      std::string text = "NoMatchingWidth: closest hidden_dim " + std::to_string(wm.hidden_dim) + " gives " +
                         std::to_string(wm.params) + " parameters vs target " + std::to_string(weak_params);
      manifest.warning(text);
      std::cerr << "gbdp: warning: " << text << "\n";
    }
  }
  Json strong = contender(strong_cfg, "strong_single");
  std::int64_t strong_params = strong["param_total"].get<std::int64_t>();

  Json report{{"match_params", opt.match_params},
              {"weak_ensemble", weak},
              {"strong_single", strong},
              {"param_ratio", static_cast<double>(strong_params) / static_cast<double>(weak_params)},
              {"param_relative_difference",
               std::abs(static_cast<double>(strong_params - weak_params)) / static_cast<double>(weak_params)},
              {"width_match", match},
              {"warning", warned ? Json("NoMatchingWidth") : Json(nullptr)},
              {"total_train_seconds", weak["train_seconds"].get<double>() + strong["train_seconds"].get<double>()}};
  manifest.config() = resolved_config(opt.boost, opt.encoder);
  manifest.config()["strong_hidden_dim"] = strong_cfg.learner.hidden_dim;
  manifest.config()["heldout"] = opt.eval.empty();
  emit(manifest, opt.out, report.dump(2) + "\n");
  manifest.write(manifest_path(opt.out));

  auto& log = ctx.log();
  auto summary = [&](const char* label, const Json& c) {
    log << label << ": " << c["param_total"].get<std::int64_t>() << " params, "
        << c["train_seconds"].get<double>() << " s";
    for (const auto& e : c["evaluation"])
      log << " | " << e["domain"].get<std::string>() << " span F1 " << e["scores"]["span"]["f1"].get<double>()
          << " rel F1 " << e["scores"]["relation"]["f1"].get<double>();
    log << "\n";
  };
  summary("weak ensemble", weak);
  summary("strong single", strong);
  return report;
}

}  // namespace gbdp::harness
