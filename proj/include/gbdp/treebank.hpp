#pragma once

// RST-style discourse treebanks: documents of EDUs, binary discourse trees
// with nuclearity and relation labels on internal nodes, the bracketed text
// format, and validation.
//
// Bracketed grammar:
//   tree := leaf | node
//   leaf := (leaf "<text>")
//   node := (<NN|NS|SN> <relation> tree tree)      relation = [a-z_-]+
//
// Treebank file: an optional `#relations r1 r2 ...` line, then records.
// A record is a `#doc <doc_id> <domain_tag>` line followed by one bracketed
// tree, which may span lines. Records are separated by blank lines.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gbdp/error.hpp"

namespace gbdp {

enum class Nuclearity { NN = 0, NS = 1, SN = 2 };

inline constexpr Nuclearity kAllNuclearities[] = {Nuclearity::NN, Nuclearity::NS,
                                                  Nuclearity::SN};

inline std::string_view to_string(Nuclearity nuc) {
  switch (nuc) {
    case Nuclearity::NN: return "NN";
    case Nuclearity::NS: return "NS";
    case Nuclearity::SN: return "SN";
  }
  return "??";
}

inline std::optional<Nuclearity> parse_nuclearity(std::string_view text) {
  if (text == "NN") return Nuclearity::NN;
  if (text == "NS") return Nuclearity::NS;
  if (text == "SN") return Nuclearity::SN;
  return std::nullopt;
}

inline bool is_valid_relation(std::string_view rel) {
  if (rel.empty()) return false;
  return std::all_of(rel.begin(), rel.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || c == '_' || c == '-';
  });
}

// Whitespace split + lowercase.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct Edu {
  int id = 0;
  std::vector<std::string> tokens;

  friend bool operator==(const Edu&, const Edu&) = default;
};

struct Document {
  std::string doc_id;
  std::vector<Edu> edus;

  std::size_t size() const { return edus.size(); }
  const Edu& edu(int id) const { return edus.at(static_cast<std::size_t>(id - 1)); }

  friend bool operator==(const Document&, const Document&) = default;
};

inline Document make_document(std::string doc_id, const std::vector<std::string>& edu_texts) {
  Document doc{std::move(doc_id), {}};
  int id = 1;
  for (const auto& text : edu_texts) doc.edus.push_back(Edu{id++, tokenize(text)});
  return doc;
}

/// Immutable binary discourse tree node. Copies share children, so values are
/// cheap to copy and safe to share across threads.
class DiscourseNode {
 public:
  DiscourseNode() = default;

  static DiscourseNode leaf(int edu_id) {
    DiscourseNode node;
    node.edu_ = edu_id;
    node.first_ = edu_id;
    node.last_ = edu_id;
    return node;
  }

  static DiscourseNode internal(Nuclearity nuc, std::string relation, DiscourseNode left,
                                DiscourseNode right);

  bool is_leaf() const { return children_ == nullptr; }
  int edu_id() const { return edu_; }
  Nuclearity nuclearity() const;
  const std::string& relation() const;
  const DiscourseNode& left() const;
  const DiscourseNode& right() const;

  // Cached span; only meaningful for trees that pass validation.
  int first_edu() const { return first_; }
  int last_edu() const { return last_; }
  int span_length() const { return last_ - first_ + 1; }

  std::size_t leaf_count() const;
  std::size_t internal_count() const;

  friend bool operator==(const DiscourseNode& a, const DiscourseNode& b);

 private:
  struct Internal;
  std::shared_ptr<const Internal> children_;
  int edu_ = 0;
  int first_ = 0;
  int last_ = 0;
};

using DiscourseTree = DiscourseNode;

struct DiscourseNode::Internal {
  Nuclearity nuc;
  std::string relation;
  DiscourseNode left;
  DiscourseNode right;
};

inline DiscourseNode DiscourseNode::internal(Nuclearity nuc, std::string relation,
                                             DiscourseNode left, DiscourseNode right) {
  DiscourseNode node;
  node.first_ = left.first_;
  node.last_ = right.last_;
  node.children_ = std::make_shared<const Internal>(
      Internal{nuc, std::move(relation), std::move(left), std::move(right)});
  return node;
}

inline Nuclearity DiscourseNode::nuclearity() const { return children_->nuc; }
inline const std::string& DiscourseNode::relation() const { return children_->relation; }
inline const DiscourseNode& DiscourseNode::left() const { return children_->left; }
inline const DiscourseNode& DiscourseNode::right() const { return children_->right; }

inline std::size_t DiscourseNode::leaf_count() const {
  return is_leaf() ? 1 : left().leaf_count() + right().leaf_count();
}

inline std::size_t DiscourseNode::internal_count() const {
  return is_leaf() ? 0 : 1 + left().internal_count() + right().internal_count();
}

inline bool operator==(const DiscourseNode& a, const DiscourseNode& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.edu_ == b.edu_;
  if (a.children_ == b.children_) return true;
  return a.nuclearity() == b.nuclearity() && a.relation() == b.relation() &&
         a.left() == b.left() && a.right() == b.right();
}

// Pre-order visit of internal nodes.
template <typename Visitor>
void for_each_internal(const DiscourseNode& node, Visitor&& visit) {
  if (node.is_leaf()) return;
  visit(node);
  for_each_internal(node.left(), visit);
  for_each_internal(node.right(), visit);
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

struct ValidationWalk {
  const Document& doc;
  const std::vector<std::string>* inventory;
  std::vector<std::string> violations;
  int previous_leaf = 0;
  std::size_t leaves = 0;
  bool leaf_problem = false;

  void visit(const DiscourseNode& node, const std::string& path) {
    if (node.is_leaf()) {
      ++leaves;
      int id = node.edu_id();
      int n = static_cast<int>(doc.size());
      if (id < 1 || id > n) {
        violations.push_back(path + ": coverage: edu " + std::to_string(id) +
                             " is outside document of " + std::to_string(n) + " EDUs");
        leaf_problem = true;
        return;
      }
      if (id <= previous_leaf) {
        violations.push_back(path + ": ordering: edu " + std::to_string(id) +
                             " follows edu " + std::to_string(previous_leaf));
        leaf_problem = true;
      }
      previous_leaf = std::max(previous_leaf, id);
      return;
    }
    if (!is_valid_relation(node.relation())) {
      violations.push_back(path + ": relation '" + node.relation() +
                           "' is not of the form [a-z_-]+");
    } else if (inventory != nullptr &&
               !std::binary_search(inventory->begin(), inventory->end(), node.relation())) {
      violations.push_back(path + ": relation '" + node.relation() +
                           "' is not in the relation inventory");
    }
    visit(node.left(), path + ".L");
    visit(node.right(), path + ".R");
  }
};

}  // namespace detail

/// Returns one description per violated invariant; empty means valid. If
/// `inventory` (sorted) is given, relations must be drawn from it.
inline std::vector<std::string> validate(const Document& doc, const DiscourseTree& tree,
                                         const std::vector<std::string>* inventory = nullptr) {
  detail::ValidationWalk walk{doc, inventory, {}};
  if (doc.edus.empty()) walk.violations.push_back("document: has no EDUs");
  for (std::size_t i = 0; i < doc.edus.size(); ++i) {
    const Edu& edu = doc.edus[i];
    if (edu.id != static_cast<int>(i) + 1)
      walk.violations.push_back("document: EDU at position " + std::to_string(i + 1) +
                                " has id " + std::to_string(edu.id));
    if (edu.tokens.empty())
      walk.violations.push_back("document: EDU " + std::to_string(edu.id) + " has no tokens");
  }
  walk.visit(tree, "root");
  if (!walk.leaf_problem && walk.leaves != doc.size()) {
    walk.violations.push_back("root: coverage: tree covers " + std::to_string(walk.leaves) +
                              " of " + std::to_string(doc.size()) + " EDUs");
  }
  return walk.violations;
}

// ---------------------------------------------------------------------------
// Bracketed format

namespace detail {

struct Sexp {
  enum class Kind { Symbol, String, List } kind = Kind::Symbol;
  std::string text;
  std::vector<Sexp> items;
};

class SexpReader {
 public:
  explicit SexpReader(std::string_view text) : text_(text) {}

  Sexp read_one() {
    skip_space();
    if (pos_ >= text_.size()) fail("expected a tree, found end of input");
    Sexp result = read();
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after tree");
    return result;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::MalformedSyntax, what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Sexp read() {
    skip_space();
    if (pos_ >= text_.size()) fail("unbalanced parentheses: unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Sexp list{Sexp::Kind::List, {}, {}};
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) fail("unbalanced parentheses: missing ')'");
        if (text_[pos_] == ')') {
          ++pos_;
          return list;
        }
        list.items.push_back(read());
      }
    }
    if (c == ')') fail("unbalanced parentheses: unexpected ')'");
    if (c == '"') return read_string();
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != '"')
      ++pos_;
    return Sexp{Sexp::Kind::Symbol, std::string(text_.substr(start, pos_ - start)), {}};
  }

  Sexp read_string() {
    ++pos_;
    std::string value;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        ++pos_;
        if (pos_ >= text_.size()) break;
      }
      value.push_back(text_[pos_++]);
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return Sexp{Sexp::Kind::String, std::move(value), {}};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline DiscourseNode build_node(const Sexp& sexp, Document& doc) {
  if (sexp.kind != Sexp::Kind::List)
    throw Error(ErrorKind::MalformedSyntax, "expected '(' to open a tree, found '" + sexp.text + "'");
  if (sexp.items.empty() || sexp.items[0].kind != Sexp::Kind::Symbol)
    throw Error(ErrorKind::MalformedSyntax, "tree must start with a keyword");
  const std::string& head = sexp.items[0].text;
  if (head == "leaf") {
    if (sexp.items.size() != 2 || sexp.items[1].kind != Sexp::Kind::String)
      throw Error(ErrorKind::MalformedSyntax, "leaf must be (leaf \"<text>\")");
    auto tokens = tokenize(sexp.items[1].text);
    if (tokens.empty()) throw Error(ErrorKind::InvalidTree, "leaf text has no tokens");
    int id = static_cast<int>(doc.edus.size()) + 1;
    doc.edus.push_back(Edu{id, std::move(tokens)});
    return DiscourseNode::leaf(id);
  }
  bool nuclearity_shaped = head.size() == 2 && std::isupper(static_cast<unsigned char>(head[0])) &&
                           std::isupper(static_cast<unsigned char>(head[1]));
  if (!nuclearity_shaped) throw Error(ErrorKind::MalformedSyntax, "bad keyword '" + head + "'");
  auto nuc = parse_nuclearity(head);
  if (!nuc) throw Error(ErrorKind::InvalidTree, "unknown nuclearity tag '" + head + "'");
  if (sexp.items.size() < 2 || sexp.items[1].kind != Sexp::Kind::Symbol ||
      !is_valid_relation(sexp.items[1].text))
    throw Error(ErrorKind::MalformedSyntax, "node needs a relation matching [a-z_-]+");
  if (sexp.items.size() != 4)
    throw Error(ErrorKind::InvalidTree, "node must have exactly two children, found " +
                                            std::to_string(sexp.items.size() - 2));
  DiscourseNode left = build_node(sexp.items[2], doc);
  DiscourseNode right = build_node(sexp.items[3], doc);
  return DiscourseNode::internal(*nuc, sexp.items[1].text, std::move(left), std::move(right));
}

inline void write_node(std::string& out, const Document& doc, const DiscourseNode& node) {
  if (node.is_leaf()) {
    out += "(leaf \"";
    const auto& tokens = doc.edu(node.edu_id()).tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      for (char c : tokens[i]) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
    }
    out += "\")";
    return;
  }
  out += '(';
  out += to_string(node.nuclearity());
  out += ' ';
  out += node.relation();
  out += ' ';
  write_node(out, doc, node.left());
  out += ' ';
  write_node(out, doc, node.right());
  out += ')';
}

}  // namespace detail

struct ParsedTree {
  Document doc;
  DiscourseTree tree;
};

/// Parses one bracketed tree. EDU ids are assigned 1..n from the leaves, left
/// to right; `doc_id` is left empty.
inline ParsedTree parse_bracketed(std::string_view text) {
  detail::Sexp sexp = detail::SexpReader(text).read_one();
  ParsedTree parsed;
  parsed.tree = detail::build_node(sexp, parsed.doc);
  return parsed;
}

inline std::string serialize_bracketed(const Document& doc, const DiscourseTree& tree) {
  std::string out;
  detail::write_node(out, doc, tree);
  return out;
}

// ---------------------------------------------------------------------------
// Treebanks

struct TreebankEntry {
  Document doc;
  DiscourseTree tree;
};

struct Treebank {
  std::string name;
  std::string domain_tag;
  std::vector<std::string> relation_inventory;  // sorted, unique
  std::vector<TreebankEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

inline void normalize_inventory(std::vector<std::string>& inventory) {
  std::sort(inventory.begin(), inventory.end());
  inventory.erase(std::unique(inventory.begin(), inventory.end()), inventory.end());
}

// Adds every relation used by the entries to the inventory.
inline void absorb_used_relations(Treebank& tb) {
  for (const auto& entry : tb.entries)
    for_each_internal(entry.tree,
                      [&](const DiscourseNode& n) { tb.relation_inventory.push_back(n.relation()); });
  normalize_inventory(tb.relation_inventory);
}

inline std::string treebank_to_string(const Treebank& tb) {
  std::string out;
  if (!tb.relation_inventory.empty()) {
    out += "#relations";
    for (const auto& rel : tb.relation_inventory) out += ' ' + rel;
    out += "\n\n";
  }
  for (std::size_t i = 0; i < tb.entries.size(); ++i) {
    const auto& entry = tb.entries[i];
    if (i) out += '\n';
    out += "#doc " + entry.doc.doc_id + ' ' + tb.domain_tag + '\n';
    out += serialize_bracketed(entry.doc, entry.tree);
    out += '\n';
  }
  return out;
}

/// Parses treebank file content. `name` becomes the treebank name.
inline Treebank treebank_from_string(std::string_view text, std::string name = {}) {
  Treebank tb;
  tb.name = std::move(name);

  struct Record {
    std::string header;
    std::string body;
  };
  std::vector<Record> records;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#relations", 0) == 0 && records.empty()) {
      for (auto& rel : tokenize(std::string_view(line).substr(10))) {
        if (!is_valid_relation(rel))
          throw Error(ErrorKind::MalformedSyntax, "bad relation label '" + rel + "' in #relations");
        tb.relation_inventory.push_back(rel);
      }
      continue;
    }
    if (line.rfind("#doc", 0) == 0) {
      records.push_back(Record{line, {}});
      continue;
    }
    bool blank = std::all_of(line.begin(), line.end(),
                             [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) {
      if (!records.empty()) records.back().body += '\n';
      continue;
    }
    if (records.empty())
      throw Error(ErrorKind::MalformedSyntax, "record 1: content before the first #doc line", 1);
    records.back().body += line;
    records.back().body += '\n';
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    std::size_t index = i + 1;
    std::string where = "record " + std::to_string(index);
    std::istringstream hs(records[i].header.substr(4));
    std::string doc_id;
    std::string domain;
    std::string extra;
    hs >> doc_id >> domain;
    if (doc_id.empty() || domain.empty() || (hs >> extra))
      throw Error(ErrorKind::MalformedSyntax, where + ": header must be '#doc <doc_id> <domain_tag>'",
                  index);
    if (tb.domain_tag.empty()) tb.domain_tag = domain;
    try {
      ParsedTree parsed = parse_bracketed(records[i].body);
      parsed.doc.doc_id = doc_id;
      auto problems = validate(parsed.doc, parsed.tree);
      if (!problems.empty()) throw Error(ErrorKind::InvalidTree, problems.front());
      tb.entries.push_back(TreebankEntry{std::move(parsed.doc), std::move(parsed.tree)});
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what(), index);
    }
  }
  absorb_used_relations(tb);
  return tb;
}

inline std::string file_stem(const std::string& path) {
  auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.find('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

inline Treebank load_treebank(const std::string& path) {
  return treebank_from_string(read_file(path), file_stem(path));
}

inline void save_treebank(const Treebank& tb, const std::string& path) {
  write_file(path, treebank_to_string(tb));
}

}  // namespace gbdp
