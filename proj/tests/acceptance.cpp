// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "harness.hpp"
#include "oracles.hpp"

using namespace gbdp;
using namespace gbdp::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s criterion %2d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int run(const std::string& args, const std::string& log) {
  std::string cmd = std::string(GBDP_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Treebank synth_docs(int n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_docs = n;
  return synthesize_treebank(cfg, seed);
}

std::string step_bytes(const WeakLearner& w) { return to_json(w).dump(); }

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("gbdp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  auto at = [&](const std::string& name) { return (work / name).string(); };
  const Context quiet{1, true};

  report(1, "transition round-trip", [] {
    auto start = std::chrono::steady_clock::now();
    std::size_t trees = 0, failed = 0;
    for (int n = 1; n <= 6; ++n)
      ref::for_each_labelled_tree(n, {"r1", "r2"}, [&](const DiscourseNode& t) {
        ++trees;
        if (!(execute(n, oracle(t)) == t)) ++failed;
      });
    double s = seconds_since(start);
    return Outcome{failed == 0 && trees >= 5000 && s < 30.0,
                   fmt("%zu trees, %zu failures, %.2f s (limit 30)", trees, failed, s)};
  });

  report(2, "gradient oracle", [] {
    auto start = std::chrono::steady_clock::now();
    Rng rng(2024);
    double worst = 0.0;
    int configs = 0;
    bool saw_h0 = false, saw_h16 = false, saw_frozen = false;
    auto one = [&](int in, int h, int r, std::size_t sample) {
      LearnerConfig c;
      c.input_dim = in;
      c.hidden_dim = h;
      c.n_relations = r;
      c.l2_penalty = configs % 2 ? 1e-4 : 0.0;
      WeakLearner w = init_learner(c, rng());
      for (auto* b : w.params.blocks())
        for (double& v : *b) v += uniform(rng, -0.2, 0.2);
      std::vector<double> x(static_cast<std::size_t>(in), 0.0);
      for (int i = 0; i < std::max(4, in / 50); ++i) x[uniform_index(rng, x.size())] += uniform(rng, 0.05, 1.0);
      LogitPair frozen = zero_logits(r);
      for (auto& v : frozen.structure) v = uniform(rng, -3.0, 3.0);
      for (auto& v : frozen.relation) v = uniform(rng, -3.0, 3.0);
      StructureMask mask = {uniform01(rng) < 0.6, true, true, true};
      int gold = uniform_int(rng, mask[0] ? 0 : 1, 3);
      std::optional<int> gold_r;
      if (gold != kShiftClass) gold_r = uniform_int(rng, 0, r - 1);
      auto check = ref::finite_difference_check(w, x, frozen, gold, gold_r, mask, 1e-5, sample, rng());
      worst = std::max(worst, check.max_rel_error);
      saw_h0 |= h == 0;
      saw_h16 |= h == 16;
      saw_frozen = true;
      ++configs;
    };
    for (int i = 0; i < 6; ++i) one(uniform_int(rng, 8, 40), i % 2 ? 16 : 0, uniform_int(rng, 1, 8), 0);
    for (int i = 0; i < 6; ++i) one(uniform_int(rng, 8, 40), uniform_int(rng, 1, 24), uniform_int(rng, 1, 8), 0);
    one(3076, 0, 8, 200);
    one(3076, 16, 8, 200);
    double s = seconds_since(start);
    bool ok = worst <= 1e-4 && configs >= 10 && saw_h0 && saw_h16 && saw_frozen && s < 10.0;
    return Outcome{ok, fmt("%d configurations, max relative error %.3g (limit 1e-4), %.2f s (limit 10)", configs,
                           worst, s)};
  });

  report(3, "truncation fidelity", [] {
    auto got = truncate_center({"t1", "t2", "t3", "t4"}, 2);
    bool ok = got == std::vector<std::string>{"t1", "t4"};
    std::string shown;
    for (const auto& t : got) shown += (shown.empty() ? "" : ",") + t;
    return Outcome{ok, "truncate_center({t1,t2,t3,t4}, 2) = {" + shown + "}"};
  });

  BoostedEnsemble trained_200;  // reused by criterion 6
  report(4, "boosting improvement", [&] {
    auto start = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
      Treebank tb = synth_docs(200, seed);
      BoostConfig cfg;
      cfg.seed = seed;
      auto [ensemble, rep] = train(tb, cfg, EncoderConfig{});
      auto split = build_training_split(ensemble, tb);
      detail += fmt("seed %llu:", static_cast<unsigned long long>(seed));
      double prev = 0.0;
      for (int m = 1; m <= ensemble.size(); ++m) {
        double loss = mean_combined_loss(ensemble, m, split.train);
        if (m > 1 && loss > prev + 1e-6) ok = false;
        detail += fmt(" %.5f", loss);
        prev = loss;
      }
      detail += "; ";
      if (seed == 1) trained_200 = ensemble;
    }
    double s = seconds_since(start);
    detail += fmt("%.1f s (limit 300)", s);
    return Outcome{ok && s < 300.0, detail};
  });

  report(5, "frozen immutability", [] {
    Treebank tb = synth_docs(200, 5);
    BoostConfig cfg;
    BoostedEnsemble e = make_ensemble(tb, cfg, EncoderConfig{});
    auto split = build_training_split(e, tb);
    bool ok = true;
    int compared = 0;
    for (int k = 1; k <= 5; ++k) {
      std::vector<std::string> before;
      for (const auto& s : e.steps) before.push_back(step_bytes(s));
      auto [next, rep] = train_step(e, split, step_seed(cfg, k - 1));
      for (std::size_t i = 0; i < before.size(); ++i) {
        ok = ok && step_bytes(next.steps[i]) == before[i] && step_bytes(e.steps[i]) == before[i];
        ++compared;
      }
      e = std::move(next);
    }
    return Outcome{ok && compared == 10, fmt("%d frozen-step comparisons over k = 2..5, all identical: %s",
                                             compared, ok ? "yes" : "no")};
  });

  report(6, "parser validity", [&] {
    Treebank tb = synth_docs(20, 6);
    BoostConfig cfg;
    cfg.n_steps = 3;
    BoostedEnsemble random = make_ensemble(tb, cfg, EncoderConfig{});
    for (int k = 0; k < 3; ++k) {
      WeakLearner w = init_learner(random.step_config(), 100 + k);
      for (auto* b : w.params.blocks())
        for (double& v : *b) v *= 20.0;
      random.steps.push_back(std::move(w));
    }
    Rng rng(66);
    std::size_t parses = 0, bad = 0;
    for (int i = 0; i < 500; ++i) {
      Document d = ref::random_document(rng, "rand" + std::to_string(i), uniform_int(rng, 1, 25));
      for (const BoostedEnsemble* e : {&random, &trained_200}) {
        for (int m : {1, e->size()}) {
          ActionSequence trace;
          auto tree = parse(*e, m, d, &trace);
          ++parses;
          if (!validate(d, tree, &e->relation_inventory).empty() || trace.size() != 2 * d.size() - 1) ++bad;
        }
      }
    }
    return Outcome{bad == 0 && trained_200.size() == 5,
                   fmt("%zu parses of 500 random documents (random and trained ensembles), %zu invalid", parses,
                       bad)};
  });

  report(7, "metric self-consistency", [] {
    Rng rng(7);
    int imperfect = 0;
    for (int i = 0; i < 1000; ++i) {
      auto t = ref::random_tree(rng, 1, uniform_int(rng, 1, 30), {"a", "b", "c"});
      auto s = score(t, t);
      if (s.span.f1 != 1.0 || s.nuc.f1 != 1.0 || s.rel.f1 != 1.0) ++imperfect;
    }
    using N = DiscourseNode;
    auto gold = N::internal(Nuclearity::NS, "a", N::internal(Nuclearity::NS, "a", N::leaf(1), N::leaf(2)), N::leaf(3));
    auto pred = N::internal(Nuclearity::NS, "a", N::leaf(1), N::internal(Nuclearity::NS, "a", N::leaf(2), N::leaf(3)));
    double f = score(gold, pred).span.f1;
    return Outcome{imperfect == 0 && f == 0.5,
                   fmt("1000 random trees, %d below 1.0; 3-EDU case span F1 = %.4f", imperfect, f)};
  });

  // Default two-domain corpora for seeds 1..5, shared by criteria 8-11.
  auto corpus = [&](int seed) {
    fs::path dir = work / ("seed" + std::to_string(seed));
    if (!fs::exists(dir / "alpha_train.tb")) {
      fs::create_directories(dir);
      cmd_synth(Context{static_cast<std::uint64_t>(seed), true}, std::nullopt, dir.string());
    }
    return dir;
  };
  auto trained_model = [&](int seed) {
    fs::path dir = corpus(seed);
    std::string model = (dir / "model.json").string();
    if (!fs::exists(model)) {
      TrainOptions opt;
      opt.treebank = (dir / "alpha_train.tb").string();
      opt.out = model;
      cmd_train(Context{static_cast<std::uint64_t>(seed), true}, opt);
    }
    return model;
  };

  report(8, "learnability end-to-end", [&] {
    auto start = std::chrono::steady_clock::now();
    std::string model = trained_model(1);
    BoostedEnsemble e = load_model(model);
    Treebank test = load_treebank((corpus(1) / "alpha_test.tb").string());
    auto s = evaluate_treebank(e, e.size(), test);
    double secs = seconds_since(start);
    bool ok = e.size() == 5 && s.span.f1 >= 0.85 && s.rel.f1 >= 0.70 && secs < 600.0;
    return Outcome{ok, fmt("5-step ensemble, 2000 training docs, in-domain test: span F1 %.4f (>= 0.85), relation "
                           "F1 %.4f (>= 0.70), %.1f s (limit 600)",
                           s.span.f1, s.rel.f1, secs)};
  });

  report(9, "domain-specificity experiment", [&] {
    bool complete = true;
    int widening = 0;
    std::string detail;
    for (int seed = 1; seed <= 5; ++seed) {
      std::string model = trained_model(seed);
      fs::path dir = corpus(seed);
      CurveOptions c{model, {(dir / "alpha_test.tb").string(), (dir / "beta_test.tb").string()},
                     (dir / "curve.csv").string()};
      auto table = cmd_curve(quiet, c);
      std::string first = read_file(c.out);
      c.out = (dir / "curve_again.csv").string();
      cmd_curve(quiet, c);
      bool same = read_file(c.out) == first;
      int n = load_model(model).size();
      complete = complete && same && table.rows.size() == static_cast<std::size_t>(2 * n) && table.span_gap &&
                 table.span_gap->size() == static_cast<std::size_t>(n);
      if (table.span_gap) {
        bool widen = table.span_gap->back() >= table.span_gap->front();
        widening += widen;
        detail += fmt("seed %d gap(1)=%+.4f gap(%d)=%+.4f %s; ", seed, table.span_gap->front(), n,
                      table.span_gap->back(), widen ? "widens" : "narrows");
      }
    }
    detail += fmt("gap(n) >= gap(1) in %d of 5 seeds (reported, not gated); tables complete and deterministic: %s",
                  widening, complete ? "yes" : "no");
    return Outcome{complete, detail};
  });

  report(10, "determinism", [&] {
    fs::path dir = corpus(1);
    std::string train = (dir / "alpha_train.tb").string();
    int a = run("--quiet --seed 11 train --treebank " + train + " --out " + at("det_a.json"), at("det_a.log"));
    int b = run("--quiet --seed 11 train --treebank " + train + " --out " + at("det_b.json"), at("det_b.log"));
    std::string bytes_a = read_file(at("det_a.json"));
    bool identical = a == 0 && b == 0 && bytes_a == read_file(at("det_b.json"));
    BoostedEnsemble loaded = load_model(at("det_a.json"));
    save_model(loaded, at("det_c.json"));
    bool round_trip = read_file(at("det_c.json")) == bytes_a;
    // bit-level check on the reloaded parameters
    BoostedEnsemble again = load_model(at("det_c.json"));
    for (std::size_t k = 0; k < loaded.steps.size(); ++k) {
      auto pa = loaded.steps[k].params.blocks();
      auto pb = again.steps[k].params.blocks();
      for (std::size_t i = 0; i < pa.size(); ++i)
        round_trip = round_trip && pa[i]->size() == pb[i]->size() &&
                     (pa[i]->empty() || std::memcmp(pa[i]->data(), pb[i]->data(), pa[i]->size() * 8) == 0);
    }
    return Outcome{identical && round_trip,
                   fmt("two CLI trainings byte-identical: %s (%zu bytes); save/load bit-exact: %s",
                       identical ? "yes" : "no", bytes_a.size(), round_trip ? "yes" : "no")};
  });

  report(11, "parameter matching", [&] {
    fs::path dir = corpus(1);
    std::string out = at("compare.json");
    int code = run("--quiet compare --match-params --treebank " + (dir / "alpha_train.tb").string() + " --eval " +
                       (dir / "alpha_test.tb").string() + " --eval " + (dir / "beta_test.tb").string() + " --out " +
                       out,
                   at("compare.log"));
    if (code != 0) return Outcome{false, fmt("compare exited with %d", code)};
    Json r = Json::parse(read_file(out));
    double diff = r["param_relative_difference"].get<double>();
    bool warned = r["warning"] == "NoMatchingWidth";
    bool timed = r["weak_ensemble"].contains("train_seconds") && r["strong_single"].contains("train_seconds");
    auto f1 = [&](const char* who) { return r[who]["evaluation"][0]["scores"]["span"]["f1"].get<double>(); };
    return Outcome{(diff <= 0.05 || warned) && timed,
                   fmt("weak %lld params vs strong %lld params (H=%d), |relative difference| %.4f (<= 0.05); "
                       "train seconds %.1f / %.1f; in-domain span F1 %.4f / %.4f",
                       r["weak_ensemble"]["param_total"].get<long long>(),
                       r["strong_single"]["param_total"].get<long long>(),
                       r["strong_single"]["hidden_dim"].get<int>(), diff,
                       r["weak_ensemble"]["train_seconds"].get<double>(),
                       r["strong_single"]["train_seconds"].get<double>(), f1("weak_ensemble"), f1("strong_single"))};
  });

  fs::remove_all(work);
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
