#include <gtest/gtest.h>

#include <algorithm>

#include "gbdp/encoder.hpp"
#include "oracles.hpp"

using namespace gbdp;

namespace {

using Tokens = std::vector<std::string>;

DiscourseNode node(Nuclearity nuc, DiscourseNode l, DiscourseNode r) {
  return DiscourseNode::internal(nuc, "r", std::move(l), std::move(r));
}

}  // namespace

TEST(Truncate, CenterRemoval) {
  EXPECT_EQ(truncate_center({"t1", "t2", "t3", "t4"}, 2), (Tokens{"t1", "t4"}));
  EXPECT_EQ(truncate_center({"t1", "t2"}, 4), (Tokens{"t1", "t2"}));
  EXPECT_EQ(truncate_center({"t1", "t2", "t3", "t4", "t5"}, 3), (Tokens{"t1", "t2", "t5"}));
  EXPECT_EQ(truncate_center({"t1", "t2", "t3"}, 1), (Tokens{"t1"}));
}

TEST(Truncate, Idempotent) {
  Tokens t;
  for (int i = 0; i < 20; ++i) t.push_back("x" + std::to_string(i));
  for (int L = 1; L <= 22; ++L) EXPECT_EQ(truncate_center(truncate_center(t, L), L), truncate_center(t, L));
}

TEST(HeadNucleus, Examples) {
  EXPECT_EQ(head_nucleus_edu(DiscourseNode::leaf(3)), 3);
  EXPECT_EQ(head_nucleus_edu(node(Nuclearity::NS, DiscourseNode::leaf(1), DiscourseNode::leaf(2))), 1);
  // SN picks the right child; inside it, NS picks the left leaf.
  auto t = node(Nuclearity::SN, DiscourseNode::leaf(1),
                node(Nuclearity::NS, DiscourseNode::leaf(2), DiscourseNode::leaf(3)));
  EXPECT_EQ(head_nucleus_edu(t), 2);
  EXPECT_EQ(head_nucleus_edu(node(Nuclearity::NN, DiscourseNode::leaf(4), DiscourseNode::leaf(5))), 4);
}

TEST(HeadNucleus, AlwaysInsideSpan) {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    int n = uniform_int(rng, 1, 20);
    auto t = ref::random_tree(rng, 1, n, {"r"});
    int h = head_nucleus_edu(t);
    EXPECT_GE(h, t.first_edu());
    EXPECT_LE(h, t.last_edu());
  }
}

TEST(RepresentSpan, Strategies) {
  Document d = make_document("d", {"a1 a2 a3", "b1 b2 b3"});
  auto t = node(Nuclearity::NS, DiscourseNode::leaf(1), DiscourseNode::leaf(2));
  EncoderConfig nucleus;
  nucleus.max_span_tokens = 4;
  EXPECT_EQ(represent_span(t, d, nucleus), (Tokens{"a1", "a2", "a3"}));
  EncoderConfig center = nucleus;
  center.truncation = TruncationStrategy::Center;
  EXPECT_EQ(represent_span(t, d, center), (Tokens{"a1", "a2", "b2", "b3"}));
  for (int id : {1, 2})
    EXPECT_EQ(represent_span(DiscourseNode::leaf(id), d, nucleus), represent_span(DiscourseNode::leaf(id), d, center));
}

TEST(EncodeState, InitialStateBlocks) {
  Document d = make_document("d", {"x y z", "u v"});
  EncoderConfig cfg;
  auto x = encode_state(initial_state(2), d, cfg);
  ASSERT_EQ(x.size(), static_cast<std::size_t>(3 * 1024 + 4));
  const auto D = static_cast<std::ptrdiff_t>(cfg.hash_dim);
  EXPECT_TRUE(std::all_of(x.begin(), x.begin() + 2 * D, [](double v) { return v == 0.0; }));
  double sum = 0;
  for (auto it = x.begin() + 2 * D; it != x.begin() + 3 * D; ++it) sum += *it;
  EXPECT_DOUBLE_EQ(sum, 1.0);  // three tokens, each 1/3
}

TEST(EncodeState, ReferenceHashAndStructuralTail) {
  Document d = make_document("d", {"p q", "r s t", "u"});
  EncoderConfig cfg;
  cfg.hash_dim = 64;
  cfg.hash_seed = 99;
  auto s = apply(apply(apply(initial_state(3), Action::shift()), Action::shift()),
                 Action::reduce(Nuclearity::SN, "r"));
  auto x = encode_state(s, d, cfg);
  std::vector<double> top(64, 0.0);
  for (const char* tok : {"r", "s", "t"}) top[token_hash(tok, 99) % 64] += 1.0 / 3.0;
  std::vector<double> queue(64, 0.0);
  queue[token_hash("u", 99) % 64] += 1.0;
  for (int i = 0; i < 64; ++i) {
    EXPECT_NEAR(x[i], top[i], 1e-15);
    EXPECT_EQ(x[64 + i], 0.0);
    EXPECT_NEAR(x[128 + i], queue[i], 1e-15);
  }
  EXPECT_DOUBLE_EQ(x[192], 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(x[193], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(x[194], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(x[195], 0.0);
}

TEST(EncodeState, DeterministicAndPermutationInvariant) {
  Document a = make_document("d", {"one two three four", "five"});
  Document b = make_document("d", {"four three two one", "five"});
  EncoderConfig cfg;
  cfg.truncation = TruncationStrategy::Center;
  auto s = apply(initial_state(2), Action::shift());
  EXPECT_EQ(encode_state(s, a, cfg), encode_state(s, a, cfg));
  EXPECT_EQ(encode_state(s, a, cfg), encode_state(s, b, cfg));
}

TEST(TokenHash, FixedValues) {
  // Reference values from a separate big-integer implementation; pinning
  // them keeps model files portable across builds.
  EXPECT_EQ(token_hash("", 0), 0x5b21f68ffa77f14cULL);
  EXPECT_EQ(token_hash("a", 0), 0x2a5a3f02a61014a9ULL);
  EXPECT_EQ(token_hash("word", 7), 0x98d999c642f895d9ULL);
  EXPECT_EQ(token_hash("lvl/0", 0), 0x289ba28138646d3cULL);
}

TEST(EncoderConfigCheck, Rejects) {
  EncoderConfig c;
  c.max_span_tokens = 0;
  EXPECT_THROW(check(c), Error);
  c = EncoderConfig{};
  c.hash_dim = 7;
  EXPECT_THROW(check(c), Error);
  EXPECT_THROW(parse_truncation_strategy("middle"), Error);
}
