#pragma once

// RST-Parseval scoring. Every internal node, the root included, contributes
// one labeled constituent, so a tree over n EDUs has n-1 of them.
//   span match:        same (start, end)
//   nuclearity match:  span match and same nuclearity
//   relation match:    span match and same relation (nuclearity not required)
// Treebank scores are micro-averaged: counts are summed over documents before
// P/R/F1 are computed.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "gbdp/boosting.hpp"
#include "gbdp/error.hpp"
#include "gbdp/treebank.hpp"

namespace gbdp {

struct LabeledConstituent {
  int start = 0;
  int end = 0;
  Nuclearity nuclearity = Nuclearity::NN;
  std::string relation;

  friend auto operator<=>(const LabeledConstituent&, const LabeledConstituent&) = default;
};

inline std::vector<LabeledConstituent> constituents(const DiscourseTree& tree) {
  std::vector<LabeledConstituent> out;
  for_each_internal(tree, [&](const DiscourseNode& node) {
    out.push_back({node.first_edu(), node.last_edu(), node.nuclearity(), node.relation()});
  });
  std::sort(out.begin(), out.end());
  return out;
}

struct ParsevalCounts {
  std::int64_t gold = 0;
  std::int64_t pred = 0;
  std::int64_t span = 0;
  std::int64_t nuc = 0;
  std::int64_t rel = 0;

  ParsevalCounts& operator+=(const ParsevalCounts& o) {
    gold += o.gold;
    pred += o.pred;
    span += o.span;
    nuc += o.nuc;
    rel += o.rel;
    return *this;
  }
};

struct LevelScore {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

struct ParsevalScores {
  LevelScore span;
  LevelScore nuc;
  LevelScore rel;
  ParsevalCounts counts;
  std::int64_t docs = 0;
};

namespace detail {

// An empty predicted (gold) set has precision (recall) 1: two leaf-only trees
// agree perfectly.
inline LevelScore level_score(std::int64_t matches, std::int64_t pred, std::int64_t gold) {
  LevelScore s;
  s.p = pred == 0 ? (gold == 0 ? 1.0 : 0.0) : static_cast<double>(matches) / static_cast<double>(pred);
  s.r = gold == 0 ? (pred == 0 ? 1.0 : 0.0) : static_cast<double>(matches) / static_cast<double>(gold);
  s.f1 = (s.p + s.r) == 0.0 ? 0.0 : 2.0 * s.p * s.r / (s.p + s.r);
  return s;
}

}  // namespace detail

inline ParsevalScores scores_from_counts(const ParsevalCounts& c, std::int64_t docs) {
  ParsevalScores s;
  s.counts = c;
  s.docs = docs;
  s.span = detail::level_score(c.span, c.pred, c.gold);
  s.nuc = detail::level_score(c.nuc, c.pred, c.gold);
  s.rel = detail::level_score(c.rel, c.pred, c.gold);
  return s;
}

inline ParsevalCounts match_counts(const DiscourseTree& gold, const DiscourseTree& pred) {
  if (gold.leaf_count() != pred.leaf_count())
    throw Error(ErrorKind::DocumentMismatch, "gold covers " + std::to_string(gold.leaf_count()) +
                                                 " EDUs, prediction covers " +
                                                 std::to_string(pred.leaf_count()));
  auto g = constituents(gold);
  auto p = constituents(pred);
  ParsevalCounts c;
  c.gold = static_cast<std::int64_t>(g.size());
  c.pred = static_cast<std::int64_t>(p.size());
  // Spans are unique within a tree, so at most one partner per constituent.
  std::map<std::pair<int, int>, const LabeledConstituent*> by_span;
  for (const auto& item : g) by_span[{item.start, item.end}] = &item;
  for (const auto& item : p) {
    auto it = by_span.find({item.start, item.end});
    if (it == by_span.end()) continue;
    ++c.span;
    if (it->second->nuclearity == item.nuclearity) ++c.nuc;
    if (it->second->relation == item.relation) ++c.rel;
  }
  return c;
}

inline ParsevalScores score(const DiscourseTree& gold, const DiscourseTree& pred) {
  return scores_from_counts(match_counts(gold, pred), 1);
}

/// Micro-aggregated scores of gold/pred tree pairs.
inline ParsevalScores score_pairs(const std::vector<std::pair<DiscourseTree, DiscourseTree>>& pairs) {
  ParsevalCounts total;
  for (const auto& [gold, pred] : pairs) total += match_counts(gold, pred);
  return scores_from_counts(total, static_cast<std::int64_t>(pairs.size()));
}

inline void check_inventory(const BoostedEnsemble& ensemble, const Treebank& tb) {
  for (const auto& rel : tb.relation_inventory)
    if (!ensemble.relation_index(rel))
      throw Error(ErrorKind::RelationInventoryMismatch,
                  "treebank '" + tb.name + "' uses relation '" + rel + "' unknown to the model");
}

inline ParsevalScores evaluate_treebank(const BoostedEnsemble& ensemble, int m, const Treebank& tb) {
  check_prefix(ensemble, m);
  if (tb.empty()) throw Error(ErrorKind::EmptyTreebank, "cannot evaluate on an empty treebank");
  check_inventory(ensemble, tb);
  ParsevalCounts total;
  for (const auto& entry : tb.entries) total += match_counts(entry.tree, parse(ensemble, m, entry.doc));
  return scores_from_counts(total, static_cast<std::int64_t>(tb.size()));
}

struct CurveRow {
  int m = 0;
  std::string domain;
  ParsevalScores scores;
};

struct CurveTable {
  std::vector<CurveRow> rows;
  // Per m: in-domain span F1 minus mean out-of-domain span F1. Present when
  // exactly one treebank carries the ensemble's training domain tag and at
  // least one other treebank exists.
  std::optional<std::vector<double>> span_gap;
};

inline CurveTable boost_curve(const BoostedEnsemble& ensemble, const std::vector<Treebank>& treebanks) {
  if (treebanks.empty()) throw Error(ErrorKind::InvalidInput, "boost_curve needs at least one treebank");
  for (const auto& tb : treebanks) {
    if (tb.empty()) throw Error(ErrorKind::EmptyTreebank, "treebank '" + tb.name + "' is empty");
    check_inventory(ensemble, tb);
  }
  CurveTable table;
  for (int m = 1; m <= ensemble.size(); ++m)
    for (const auto& tb : treebanks)
      table.rows.push_back({m, tb.domain_tag, evaluate_treebank(ensemble, m, tb)});

  auto in_domain = std::count_if(treebanks.begin(), treebanks.end(), [&](const Treebank& tb) {
    return tb.domain_tag == ensemble.train_domain;
  });
  if (in_domain == 1 && treebanks.size() >= 2) {
    std::vector<double> gap;
    for (int m = 1; m <= ensemble.size(); ++m) {
      double in = 0.0;
      double out = 0.0;
      int n_out = 0;
      for (const auto& row : table.rows) {
        if (row.m != m) continue;
        if (row.domain == ensemble.train_domain) {
          in = row.scores.span.f1;
        } else {
          out += row.scores.span.f1;
          ++n_out;
        }
      }
      gap.push_back(in - out / n_out);
    }
    table.span_gap = std::move(gap);
  }
  return table;
}

inline constexpr const char* kCurveCsvHeader =
    "m,domain,docs,span_p,span_r,span_f1,nuc_p,nuc_r,nuc_f1,rel_p,rel_r,rel_f1";

inline std::string csv_row(int m, const std::string& domain, const ParsevalScores& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%s,%lld,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f", m,
                domain.c_str(), static_cast<long long>(s.docs), s.span.p, s.span.r, s.span.f1,
                s.nuc.p, s.nuc.r, s.nuc.f1, s.rel.p, s.rel.r, s.rel.f1);
  return buf;
}

inline std::string curve_to_csv(const CurveTable& table) {
  std::string out = std::string(kCurveCsvHeader) + "\n";
  for (const auto& row : table.rows) out += csv_row(row.m, row.domain, row.scores) + "\n";
  return out;
}

}  // namespace gbdp
