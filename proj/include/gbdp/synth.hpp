#pragma once

// Synthetic RST-style treebanks with learnable surface cues.
//
// Structure: recursive uniform splitting of the EDU interval. Every internal
// node draws a relation (from the domain-specific set when the domain rule
// fires, else from the shared set) and a nuclearity (NN for multinuclear
// relations, otherwise NS or SN).
//
// Surface cues, placed at the start of each EDU:
//   lvl/<k>                 k = number of open left siblings when the EDU is
//                           reached (its right-branching depth)
//   <rel>/<nuc>/<i>         relation marker, injected into the head EDU of the
//                           node's satellite (right child for NN)
//   <tag>/<rel>/<nuc>/<i>   same, when the domain rule fired for the node
// followed by filler words w<j> (shared lexicon) or <tag>:w<j> (domain
// lexicon, chosen with probability p_domain).
//
// The random stream consumed per document does not depend on p_domain or the
// domain tag, so p_domain = 0 yields identical documents for any tag.

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include "gbdp/encoder.hpp"
#include "gbdp/error.hpp"
#include "gbdp/random.hpp"
#include "gbdp/treebank.hpp"

namespace gbdp {

struct SynthConfig {
  int n_docs = 100;
  int min_edus = 2;
  int max_edus = 12;
  int min_tokens = 6;
  int max_tokens = 12;
  int shared_vocab = 400;
  int domain_vocab = 150;
  std::string domain_tag = "alpha";
  std::vector<std::string> shared_relations = {"background", "cause",   "condition",
                                               "contrast",   "elaboration", "joint"};
  std::vector<std::string> domain_relations = {"evaluation", "manner-means"};
  std::vector<std::string> multinuclear_relations = {"contrast", "joint"};
  double p_domain = 0.25;
  double p_ns = 0.7;  // P(NS | mononuclear); SN otherwise
  int markers_per_relation = 2;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

inline void check(const SynthConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (cfg.n_docs < 0) fail("n_docs must be >= 0");
  if (cfg.min_edus < 1 || cfg.max_edus < cfg.min_edus) fail("EDU range must satisfy 1 <= min <= max");
  if (cfg.min_tokens < 3 || cfg.max_tokens < cfg.min_tokens)
    fail("token range must satisfy 3 <= min <= max");
  if (cfg.shared_vocab < 1 || cfg.domain_vocab < 1) fail("vocabulary sizes must be positive");
  if (cfg.shared_relations.empty()) fail("shared relation set is empty");
  if (cfg.markers_per_relation < 1) fail("markers_per_relation must be positive");
  if (!(cfg.p_domain >= 0.0 && cfg.p_domain <= 1.0)) fail("p_domain must lie in [0, 1]");
  if (!(cfg.p_ns >= 0.0 && cfg.p_ns <= 1.0)) fail("p_ns must lie in [0, 1]");
  if (cfg.domain_tag.empty() ||
      !std::all_of(cfg.domain_tag.begin(), cfg.domain_tag.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
      }))
    fail("domain_tag must match [a-z0-9_-]+");
  for (const auto* set : {&cfg.shared_relations, &cfg.domain_relations})
    for (const auto& rel : *set)
      if (!is_valid_relation(rel)) fail("relation '" + rel + "' is not of the form [a-z_-]+");
}

namespace detail {

struct SynthMarker {
  bool present = false;
  std::string token;
};

class DocumentSynthesizer {
 public:
  DocumentSynthesizer(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  TreebankEntry run(std::string doc_id) {
    int n = uniform_int(rng_, cfg_.min_edus, cfg_.max_edus);
    depth_.assign(static_cast<std::size_t>(n) + 1, 0);
    markers_.assign(static_cast<std::size_t>(n) + 1, SynthMarker{});
    DiscourseNode tree = split(1, n, 0);

    Document doc{std::move(doc_id), {}};
    for (int e = 1; e <= n; ++e) {
      std::vector<std::string> tokens;
      tokens.push_back("lvl/" + std::to_string(depth_[static_cast<std::size_t>(e)]));
      const auto& marker = markers_[static_cast<std::size_t>(e)];
      if (marker.present) tokens.push_back(marker.token);
      int length = uniform_int(rng_, cfg_.min_tokens, cfg_.max_tokens);
      while (static_cast<int>(tokens.size()) < length) {
        double u = uniform01(rng_);
        auto shared = uniform_index(rng_, static_cast<std::uint64_t>(cfg_.shared_vocab));
        auto domain = uniform_index(rng_, static_cast<std::uint64_t>(cfg_.domain_vocab));
        tokens.push_back(u < cfg_.p_domain ? cfg_.domain_tag + ":w" + std::to_string(domain)
                                           : "w" + std::to_string(shared));
      }
      doc.edus.push_back(Edu{e, std::move(tokens)});
    }
    return TreebankEntry{std::move(doc), std::move(tree)};
  }

 private:
  DiscourseNode split(int lo, int hi, int depth) {
    if (lo == hi) {
      depth_[static_cast<std::size_t>(lo)] = depth;
      return DiscourseNode::leaf(lo);
    }
    int k = uniform_int(rng_, lo, hi - 1);
    double u_fire = uniform01(rng_);
    auto shared_idx = uniform_index(rng_, cfg_.shared_relations.size());
    auto domain_idx = uniform_index(rng_, std::max<std::size_t>(1, cfg_.domain_relations.size()));
    double u_nuc = uniform01(rng_);
    auto marker_idx = uniform_index(rng_, static_cast<std::uint64_t>(cfg_.markers_per_relation));

    bool fired = u_fire < cfg_.p_domain && !cfg_.domain_relations.empty();
    const std::string& relation =
        fired ? cfg_.domain_relations[domain_idx] : cfg_.shared_relations[shared_idx];
    bool multinuclear = std::find(cfg_.multinuclear_relations.begin(), cfg_.multinuclear_relations.end(),
                                  relation) != cfg_.multinuclear_relations.end();
    Nuclearity nuc = multinuclear ? Nuclearity::NN : (u_nuc < cfg_.p_ns ? Nuclearity::NS : Nuclearity::SN);

    DiscourseNode left = split(lo, k, depth);
    DiscourseNode right = split(k + 1, hi, depth + 1);

    const DiscourseNode& satellite = nuc == Nuclearity::SN ? left : right;
    std::string nuc_tag(to_string(nuc));
    for (char& c : nuc_tag) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::string token = relation + "/" + nuc_tag + "/" + std::to_string(marker_idx);
    if (fired) token = cfg_.domain_tag + "/" + token;
    markers_[static_cast<std::size_t>(head_nucleus_edu(satellite))] = SynthMarker{true, std::move(token)};

    return DiscourseNode::internal(nuc, relation, std::move(left), std::move(right));
  }

  const SynthConfig& cfg_;
  Rng& rng_;
  std::vector<int> depth_;
  std::vector<SynthMarker> markers_;
};

}  // namespace detail

inline std::vector<std::string> synth_relation_inventory(const SynthConfig& cfg) {
  std::vector<std::string> inventory = cfg.shared_relations;
  inventory.insert(inventory.end(), cfg.domain_relations.begin(), cfg.domain_relations.end());
  normalize_inventory(inventory);
  return inventory;
}

/// Deterministic in (cfg, seed). Each document uses its own derived stream.
inline Treebank synthesize_treebank(const SynthConfig& cfg, std::uint64_t seed) {
  check(cfg);
  Treebank tb;
  tb.name = cfg.domain_tag;
  tb.domain_tag = cfg.domain_tag;
  tb.relation_inventory = synth_relation_inventory(cfg);
  for (int d = 0; d < cfg.n_docs; ++d) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    char id[32];
    std::snprintf(id, sizeof id, "doc-%04d", d + 1);
    tb.entries.push_back(detail::DocumentSynthesizer(cfg, rng).run(id));
  }
  return tb;
}

}  // namespace gbdp
