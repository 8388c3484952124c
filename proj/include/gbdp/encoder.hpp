#pragma once

// Parser-state features: three hashed bag-of-words blocks (stack top, stack
// second, queue front) followed by four structural scalars.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gbdp/error.hpp"
#include "gbdp/random.hpp"
#include "gbdp/transition.hpp"
#include "gbdp/treebank.hpp"

namespace gbdp {

enum class TruncationStrategy { Center, Nucleus };

inline std::string_view to_string(TruncationStrategy s) {
  return s == TruncationStrategy::Center ? "center" : "nucleus";
}

inline TruncationStrategy parse_truncation_strategy(std::string_view text) {
  if (text == "center") return TruncationStrategy::Center;
  if (text == "nucleus") return TruncationStrategy::Nucleus;
  throw Error(ErrorKind::InvalidConfig, "unknown truncation strategy '" + std::string(text) + "'");
}

struct EncoderConfig {
  int max_span_tokens = 8;
  int hash_dim = 1024;
  TruncationStrategy truncation = TruncationStrategy::Nucleus;
  std::uint64_t hash_seed = 0;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

inline constexpr int kStructuralFeatures = 4;
inline constexpr int kStackDepthClip = 32;

inline void check(const EncoderConfig& cfg) {
  if (cfg.max_span_tokens < 1)
    throw Error(ErrorKind::InvalidConfig, "max_span_tokens must be >= 1");
  if (cfg.hash_dim < 8) throw Error(ErrorKind::InvalidConfig, "hash_dim must be >= 8");
}

inline int feature_width(const EncoderConfig& cfg) {
  return 3 * cfg.hash_dim + kStructuralFeatures;
}

using FeatureVector = std::vector<double>;

struct SparseFeatures {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  std::size_t width = 0;
};

inline SparseFeatures sparsify(std::span<const double> dense) {
  SparseFeatures sparse;
  sparse.width = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      sparse.index.push_back(static_cast<std::uint32_t>(i));
      sparse.value.push_back(dense[i]);
    }
  }
  return sparse;
}

// Token hash: FNV-1a (64-bit) over the UTF-8 bytes, starting from the FNV
// offset basis xor-ed with splitmix64(seed), finished with the splitmix64
// mixer. Fixed-width integer arithmetic only, so values are identical on every
// platform.
inline std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ULL ^ splitmix64(seed);
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(h);
}

/// Keeps the first ceil(L/2) and last floor(L/2) tokens when over length.
inline std::vector<std::string> truncate_center(const std::vector<std::string>& tokens, int max_len) {
  std::size_t limit = static_cast<std::size_t>(max_len);
  if (tokens.size() <= limit) return tokens;
  std::size_t head = (limit + 1) / 2;
  std::size_t tail = limit / 2;
  std::vector<std::string> out(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(head));
  out.insert(out.end(), tokens.end() - static_cast<std::ptrdiff_t>(tail), tokens.end());
  return out;
}

/// EDU heading a subtree: follow the nucleus child down to a leaf. NN nodes
/// are headed by their left child.
inline int head_nucleus_edu(const DiscourseNode& node) {
  const DiscourseNode* cur = &node;
  while (!cur->is_leaf()) cur = cur->nuclearity() == Nuclearity::SN ? &cur->right() : &cur->left();
  return cur->edu_id();
}

inline std::vector<std::string> represent_span(const DiscourseNode& node, const Document& doc,
                                               const EncoderConfig& cfg) {
  if (cfg.truncation == TruncationStrategy::Nucleus)
    return truncate_center(doc.edu(head_nucleus_edu(node)).tokens, cfg.max_span_tokens);
  std::vector<std::string> all;
  for (int id = node.first_edu(); id <= node.last_edu(); ++id) {
    const auto& tokens = doc.edu(id).tokens;
    all.insert(all.end(), tokens.begin(), tokens.end());
  }
  return truncate_center(all, cfg.max_span_tokens);
}

namespace detail {

inline void fill_block(std::span<double> block, const std::vector<std::string>& tokens,
                       std::uint64_t seed) {
  if (tokens.empty()) return;
  for (const auto& tok : tokens) block[token_hash(tok, seed) % block.size()] += 1.0;
  double scale = 1.0 / static_cast<double>(tokens.size());
  for (double& v : block) v *= scale;
}

}  // namespace detail

inline FeatureVector encode_state(const ParserState& state, const Document& doc,
                                  const EncoderConfig& cfg) {
  const std::size_t dim = static_cast<std::size_t>(cfg.hash_dim);
  FeatureVector x(static_cast<std::size_t>(feature_width(cfg)), 0.0);
  std::span<double> all(x);
  const auto& stack = state.stack;
  if (!stack.empty())
    detail::fill_block(all.subspan(0, dim), represent_span(stack.back(), doc, cfg), cfg.hash_seed);
  if (stack.size() >= 2)
    detail::fill_block(all.subspan(dim, dim), represent_span(stack[stack.size() - 2], doc, cfg),
                       cfg.hash_seed);
  if (!state.queue_empty())
    detail::fill_block(all.subspan(2 * dim, dim),
                       represent_span(DiscourseNode::leaf(state.queue_cursor), doc, cfg),
                       cfg.hash_seed);

  double n = static_cast<double>(std::max(state.n_edus, 1));
  double* tail = x.data() + 3 * dim;
  tail[0] = static_cast<double>(std::min<std::size_t>(stack.size(), kStackDepthClip)) / 8.0;
  tail[1] = static_cast<double>(state.queue_remaining()) / n;
  tail[2] = stack.empty() ? 0.0 : stack.back().span_length() / n;
  tail[3] = stack.size() < 2 ? 0.0 : stack[stack.size() - 2].span_length() / n;
  return x;
}

}  // namespace gbdp
