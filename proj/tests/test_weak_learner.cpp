#include <gtest/gtest.h>

#include "gbdp/weak_learner.hpp"
#include "oracles.hpp"

using namespace gbdp;

namespace {

LearnerConfig small_config(int in, int h, int r, double l2 = 0.0) {
  LearnerConfig c;
  c.input_dim = in;
  c.hidden_dim = h;
  c.n_relations = r;
  c.l2_penalty = l2;
  return c;
}

std::vector<double> random_x(Rng& rng, int n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = uniform01(rng) < 0.3 ? 0.0 : uniform(rng, -1.0, 1.0);
  return x;
}

LogitPair random_frozen(Rng& rng, int r, double scale) {
  LogitPair f = zero_logits(r);
  for (auto& v : f.structure) v = uniform(rng, -scale, scale);
  for (auto& v : f.relation) v = uniform(rng, -scale, scale);
  return f;
}

}  // namespace

TEST(Learner, InitDeterminismAndShapes) {
  auto cfg = small_config(10, 4, 3);
  EXPECT_EQ(init_learner(cfg, 1), init_learner(cfg, 1));
  EXPECT_NE(init_learner(cfg, 1).params, init_learner(cfg, 2).params);
  auto w0 = init_learner(small_config(10, 0, 3), 1);
  EXPECT_TRUE(w0.params.hidden_weight.empty());
  EXPECT_TRUE(w0.params.hidden_bias.empty());
  EXPECT_EQ(w0.params.structure_weight.size(), 40u);
  auto w = init_learner(cfg, 5);
  for (double v : w.params.hidden_weight) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(10.0));
  for (double v : w.params.structure_weight) EXPECT_LE(std::abs(v), 0.5);
  for (double v : w.params.hidden_bias) EXPECT_EQ(v, 0.0);
}

TEST(Learner, ParamCountFormula) {
  EXPECT_EQ(param_count(small_config(3076, 0, 8)), 36924);
  EXPECT_EQ(param_count(small_config(3076, 16, 8)), 49436);  // 49216 + 16 + 64 + 4 + 128 + 8
  for (int h : {1, 7, 16, 33}) {
    auto w = init_learner(small_config(50, h, 5), 1);
    std::int64_t total = 0;
    for (const auto* b : w.params.blocks()) total += static_cast<std::int64_t>(b->size());
    EXPECT_EQ(param_count(w), total);
  }
}

TEST(Learner, ForwardExamples) {
  auto cfg = small_config(6, 0, 2);
  WeakLearner w{cfg, zero_gradients(cfg)};
  std::vector<double> x = {0.5, -1, 2, 3, 9, 9};
  auto z = forward(w, x);
  for (double v : z.structure) EXPECT_EQ(v, 0.0);
  ASSERT_EQ(z.relation.size(), 2u);
  for (int k = 0; k < 4; ++k) w.params.structure_weight[static_cast<std::size_t>(k * 6 + k)] = 1.0;
  z = forward(w, x);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(z.structure[k], x[k]);
  EXPECT_THROW(forward(w, std::vector<double>(5)), Error);
}

TEST(Learner, ForwardMatchesDenseReference) {
  Rng rng(21);
  for (int h : {0, 3, 16}) {
    auto w = init_learner(small_config(30, h, 4), 8);
    for (auto* b : w.params.blocks())
      for (double& v : *b) v += uniform(rng, -0.3, 0.3);
    auto x = random_x(rng, 30);
    auto a = forward(w, x);
    auto b = ref::dense_forward(w, x);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(a.structure[k], b.structure[k], 1e-12);
    for (int q = 0; q < 4; ++q) EXPECT_NEAR(a.relation[q], b.relation[q], 1e-12);
  }
}

TEST(Learner, LossMatchesReferenceAndSingleLearnerWhenFrozenZero) {
  Rng rng(4);
  auto w = init_learner(small_config(20, 5, 3, 1e-3), 2);
  auto x = random_x(rng, 20);
  StructureMask mask = {true, true, true, true};
  auto out = boosted_loss_and_grad(w, x, zero_logits(3), kReduceNS, 1, mask);
  EXPECT_NEAR(out.loss, ref::boosted_loss(w, x, zero_logits(3), kReduceNS, 1, mask), 1e-12);
  auto z = forward(w, x);
  std::vector<double> zs(z.structure.begin(), z.structure.end());
  double expected = ref::nll(zs, {true, true, true, true}, kReduceNS) +
                    ref::nll(z.relation, {true, true, true}, 1) + 1e-3 * detail::squared_norm(w.params);
  EXPECT_NEAR(out.loss, expected, 1e-12);
}

TEST(Learner, GradientsMatchFiniteDifferences) {
  Rng rng(77);
  int configs = 0;
  for (int h : {0, 16, 3}) {
    for (int trial = 0; trial < 5; ++trial) {
      int in = uniform_int(rng, 5, 24);
      int r = uniform_int(rng, 1, 6);
      auto w = init_learner(small_config(in, h, r, trial % 2 ? 1e-3 : 0.0), rng());
      auto x = random_x(rng, in);
      auto frozen = random_frozen(rng, r, trial == 0 ? 0.0 : 3.0);
      StructureMask mask = {uniform01(rng) < 0.5, true, true, true};
      int gold = uniform_int(rng, mask[0] ? 0 : 1, 3);
      std::optional<int> gold_r;
      if (gold != kShiftClass) gold_r = uniform_int(rng, 0, r - 1);
      auto check = ref::finite_difference_check(w, x, frozen, gold, gold_r, mask);
      EXPECT_LE(check.max_rel_error, 1e-4) << "H=" << h << " trial " << trial;
      ++configs;
    }
  }
  EXPECT_GE(configs, 10);
}

TEST(Learner, SaturatedFrozenGivesVanishingStructureLoss) {
  Rng rng(3);
  auto w = init_learner(small_config(12, 4, 2), 6);
  auto x = random_x(rng, 12);
  LogitPair frozen = zero_logits(2);
  frozen.structure[kShiftClass] = 1000.0;
  auto out = boosted_loss_and_grad(w, x, frozen, kShiftClass, std::nullopt, {true, true, true, true});
  EXPECT_LE(out.loss, 1e-6);
  for (double g : out.grads.structure_weight) EXPECT_LE(std::abs(g), 1e-6);
  for (double g : out.grads.structure_bias) EXPECT_LE(std::abs(g), 1e-6);
}

TEST(Learner, MaskedLogitsDoNotMatter) {
  Rng rng(10);
  auto w = init_learner(small_config(9, 0, 2), 4);
  auto x = random_x(rng, 9);
  StructureMask mask = {false, true, true, true};
  LogitPair f = random_frozen(rng, 2, 1.0);
  auto a = boosted_loss_and_grad(w, x, f, kReduceSN, 0, mask);
  f.structure[kShiftClass] += 123.0;
  auto b = boosted_loss_and_grad(w, x, f, kReduceSN, 0, mask);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grads, b.grads);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(a.grads.structure_weight[static_cast<std::size_t>(i)], 0.0);
}

TEST(Learner, GoldValidation) {
  auto w = init_learner(small_config(4, 0, 2), 1);
  std::vector<double> x(4, 0.1);
  try {
    boosted_loss_and_grad(w, x, zero_logits(2), kShiftClass, std::nullopt, {false, true, true, true});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IllegalGold);
  }
  EXPECT_THROW(boosted_loss_and_grad(w, x, zero_logits(2), kReduceNN, std::nullopt, {true, true, true, true}),
               Error);
  EXPECT_THROW(boosted_loss_and_grad(w, x, zero_logits(3), kShiftClass, std::nullopt, {true, true, true, true}),
               Error);
}

TEST(Learner, NonNegativeLossWithoutPenalty) {
  Rng rng(14);
  for (int i = 0; i < 50; ++i) {
    auto w = init_learner(small_config(8, 2, 3), rng());
    auto x = random_x(rng, 8);
    auto out = boosted_loss_and_grad(w, x, random_frozen(rng, 3, 5.0), kReduceNN, 2, {true, true, true, true});
    EXPECT_GE(out.loss, 0.0);
  }
}

TEST(Sgd, StepSemantics) {
  auto cfg = small_config(6, 0, 2);
  auto w = init_learner(cfg, 3);
  Rng rng(2);
  auto x = random_x(rng, 6);
  auto g = boosted_loss_and_grad(w, x, zero_logits(2), kReduceNS, 1, {true, true, true, true});
  EXPECT_EQ(sgd_step(w, g.grads, 0.0), w);
  EXPECT_EQ(sgd_step(w, zero_gradients(cfg), 0.3), w);
  auto next = sgd_step(w, g.grads, 1e-2);
  auto after = boosted_loss_and_grad(next, x, zero_logits(2), kReduceNS, 1, {true, true, true, true});
  EXPECT_LT(after.loss, g.loss);
  Gradients bad = g.grads;
  bad.structure_bias.pop_back();
  EXPECT_THROW(sgd_step(w, bad, 0.1), Error);
}
