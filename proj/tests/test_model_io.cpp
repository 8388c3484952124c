#include <gtest/gtest.h>

#include <cstring>

#include "gbdp/model_io.hpp"
#include "gbdp/synth.hpp"

using namespace gbdp;

namespace {

BoostedEnsemble sample_ensemble(int hidden) {
  SynthConfig s;
  s.n_docs = 4;
  Treebank tb = synthesize_treebank(s, 1);
  BoostConfig b;
  b.n_steps = 2;
  b.learner.hidden_dim = hidden;
  EncoderConfig e;
  e.hash_dim = 32;
  e.truncation = TruncationStrategy::Center;
  auto ens = make_ensemble(tb, b, e);
  Rng rng(3);
  for (int k = 0; k < 2; ++k) {
    auto w = init_learner(ens.step_config(), 10 + k);
    // awkward values: tiny, huge, negative zero, non-terminating binary fractions
    for (auto* block : w.params.blocks())
      for (double& v : *block) v = uniform(rng, -1.0, 1.0) * std::pow(10.0, uniform_int(rng, -300, 300) / 10.0);
    w.params.structure_bias[0] = -0.0;
    w.params.structure_bias[1] = 0.1;
    ens.steps.push_back(std::move(w));
  }
  return ens;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST(ModelIo, RoundTripIsBitExact) {
  for (int h : {0, 5}) {
    auto e = sample_ensemble(h);
    auto text = model_to_string(e);
    auto back = model_from_string(text);
    EXPECT_EQ(model_to_string(back), text);
    EXPECT_EQ(back.encoder, e.encoder);
    EXPECT_EQ(back.boost_config, e.boost_config);
    EXPECT_EQ(back.relation_inventory, e.relation_inventory);
    EXPECT_EQ(back.train_domain, e.train_domain);
    ASSERT_EQ(back.size(), e.size());
    for (int k = 0; k < e.size(); ++k) {
      auto pa = e.steps[static_cast<std::size_t>(k)].params.blocks();
      auto pb = back.steps[static_cast<std::size_t>(k)].params.blocks();
      for (std::size_t b = 0; b < pa.size(); ++b) EXPECT_TRUE(bit_equal(*pa[b], *pb[b]));
    }
  }
}

TEST(ModelIo, RejectsBadFiles) {
  auto e = sample_ensemble(3);
  auto j = to_json(e);
  auto expect_kind = [](const std::string& text, ErrorKind kind) {
    try {
      model_from_string(text);
      FAIL() << "accepted";
    } catch (const Error& err) {
      EXPECT_EQ(err.kind(), kind) << err.what();
    }
  };
  expect_kind("{not json", ErrorKind::MalformedSyntax);
  auto v = j;
  v["format_version"] = 99;
  expect_kind(v.dump(), ErrorKind::MalformedSyntax);
  auto shape = j;
  shape["steps"][0]["structure_bias"]["data"].push_back(1.0);
  EXPECT_THROW(model_from_string(shape.dump()), Error);
  auto dims = j;
  dims["steps"][1]["input_dim"] = 5;
  EXPECT_THROW(model_from_string(dims.dump()), Error);
  auto hash = j;
  hash["encoder_config"]["hash_function"] = "md5";
  expect_kind(hash.dump(), ErrorKind::InvalidConfig);
  auto unsorted = j;
  unsorted["relation_inventory"] = Json::array({"z", "a"});
  EXPECT_THROW(model_from_string(unsorted.dump()), Error);
}

TEST(ModelIo, ParamCountIsRecorded) {
  auto e = sample_ensemble(4);
  auto j = to_json(e);
  for (std::size_t k = 0; k < 2; ++k)
    EXPECT_EQ(j["steps"][k]["param_count"].get<std::int64_t>(), param_count(e.steps[k]));
}

TEST(ModelIo, FileRoundTrip) {
  auto e = sample_ensemble(2);
  auto path = testing::TempDir() + "gbdp_model_io.json";
  save_model(e, path);
  EXPECT_EQ(model_to_string(load_model(path)), model_to_string(e));
  EXPECT_THROW(load_model(testing::TempDir() + "missing/none.json"), Error);
}
