// gbdp: command-line driver for the gradient-boosted discourse parser.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "harness.hpp"

namespace {

using namespace gbdp;
using namespace gbdp::harness;

struct ModelFlags {
  BoostConfig boost;
  EncoderConfig encoder;
  std::string truncation = "nucleus";
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--steps", f.boost.n_steps, "number of boosting steps n")->capture_default_str();
  cmd->add_option("--hidden", f.boost.learner.hidden_dim, "hidden width H per step (0 = linear)")
      ->capture_default_str();
  cmd->add_option("--lr", f.boost.learner.learning_rate, "SGD learning rate")->capture_default_str();
  cmd->add_option("--l2", f.boost.learner.l2_penalty, "L2 penalty")->capture_default_str();
  cmd->add_option("--epochs", f.boost.epochs_max, "maximum epochs per step")->capture_default_str();
  cmd->add_option("--patience", f.boost.patience, "early-stopping patience")->capture_default_str();
  cmd->add_option("--dev-fraction", f.boost.dev_fraction, "fraction of documents held out as dev")
      ->capture_default_str();
  cmd->add_option("--batch-size", f.boost.batch_size, "minibatch size")->capture_default_str();
  cmd->add_flag("!--keep-worse-steps", f.boost.reject_worse_step,
                "append a step even when it raises training loss");
  cmd->add_option("--max-span-tokens", f.encoder.max_span_tokens, "tokens kept per span (L)")
      ->capture_default_str();
  cmd->add_option("--hash-dim", f.encoder.hash_dim, "hash buckets per span block (D)")->capture_default_str();
  cmd->add_option("--truncation", f.truncation, "span truncation strategy")
      ->check(CLI::IsMember({"center", "nucleus"}))
      ->capture_default_str();
  cmd->add_option("--hash-seed", f.encoder.hash_seed, "token hash seed")->capture_default_str();
}

void resolve(ModelFlags& f) { f.encoder.truncation = parse_truncation_strategy(f.truncation); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-boosted shift-reduce RST discourse parser"};
  app.set_version_flag("--version", kToolkitVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  std::int64_t seed = 1;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_flag("--quiet", ctx.quiet, "suppress informational output");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic two-domain treebanks");
  std::optional<std::string> synth_config;
  std::string synth_out;
  synth->add_option("--config", synth_config, "experiment config JSON (defaults apply when omitted)");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a boosted ensemble");
  TrainOptions train_opt;
  ModelFlags train_flags;
  train_cmd->add_option("--treebank", train_opt.treebank, "training treebank file")->required();
  train_cmd->add_option("--out", train_opt.out, "model JSON output path")->required();
  train_cmd->add_option("--report", train_opt.report, "train report path (default <out>.report.json)");
  add_model_flags(train_cmd, train_flags);

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "parse documents with a trained model");
  ParseOptions parse_opt;
  std::string parse_format = "auto";
  parse_cmd->add_option("--model", parse_opt.model, "model JSON")->required();
  parse_cmd->add_option("--input", parse_opt.input, "treebank or raw-EDU file")->required();
  parse_cmd->add_option("--out", parse_opt.out, "predicted treebank output path")->required();
  parse_cmd->add_option("--prefix", parse_opt.prefix, "use the first m steps (default: all)");
  parse_cmd->add_option("--trace", parse_opt.trace, "write the action trace to this path");
  parse_cmd->add_option("--format", parse_format, "input format")
      ->check(CLI::IsMember({"auto", "treebank", "raw"}))
      ->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score predicted trees against gold trees");
  EvalOptions eval_opt;
  eval_cmd->add_option("--gold", eval_opt.gold, "gold treebank")->required();
  eval_cmd->add_option("--pred", eval_opt.pred, "predicted treebank")->required();
  eval_cmd->add_option("--out", eval_opt.out, "CSV output path");

  // curve
  auto* curve_cmd = app.add_subcommand("curve", "score every prefix m on every treebank");
  CurveOptions curve_opt;
  curve_cmd->add_option("--model", curve_opt.model, "model JSON")->required();
  curve_cmd->add_option("--treebank", curve_opt.treebanks, "evaluation treebank (repeatable)")->required();
  curve_cmd->add_option("--out", curve_opt.out, "CSV output path")->required();

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "boosted ensemble vs a single learner");
  CompareOptions compare_opt;
  ModelFlags compare_flags;
  compare_cmd->add_option("--treebank", compare_opt.treebank, "training treebank")->required();
  compare_cmd->add_option("--eval", compare_opt.eval, "held-out treebank (repeatable)");
  compare_cmd->add_option("--out", compare_opt.out, "report JSON output path")->required();
  compare_cmd->add_flag("--match-params", compare_opt.match_params,
                        "size the single learner to the ensemble's parameter total");
  add_model_flags(compare_cmd, compare_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (seed < 0) throw Error(ErrorKind::Usage, "--seed must be non-negative");
    ctx.seed = static_cast<std::uint64_t>(seed);
    if (*synth) {
      cmd_synth(ctx, synth_config, synth_out);
    } else if (*train_cmd) {
      resolve(train_flags);
      train_opt.boost = train_flags.boost;
      train_opt.encoder = train_flags.encoder;
      cmd_train(ctx, train_opt);
    } else if (*parse_cmd) {
      parse_opt.format = parse_input_format(parse_format);
      cmd_parse(ctx, parse_opt);
    } else if (*eval_cmd) {
      cmd_eval(ctx, eval_opt);
    } else if (*curve_cmd) {
      cmd_curve(ctx, curve_opt);
    } else if (*compare_cmd) {
      resolve(compare_flags);
      compare_opt.boost = compare_flags.boost;
      compare_opt.encoder = compare_flags.encoder;
      cmd_compare(ctx, compare_opt);
    }
  } catch (const Error& e) {
    std::cerr << "gbdp: error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "gbdp: internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
