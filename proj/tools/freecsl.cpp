// freecsl - experiment runner: mask generation, training, evaluation, and
// missing-rate sweeps over multi-view datasets.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "freecsl/experiment.hpp"

namespace {

freecsl::ExperimentConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  return freecsl::parse_experiment_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FreeCSL: consensus semantic learning for incomplete multi-view clustering"};
  app.require_subcommand(1);

  // mask -----------------------------------------------------------------
  std::string mask_dataset, mask_out;
  double mask_rate = 0.0;
  std::uint64_t mask_seed = 0;
  auto* mask = app.add_subcommand("mask", "generate an instance-incomplete mask file");
  mask->add_option("--dataset", mask_dataset, "dataset directory")->required();
  mask->add_option("--rate", mask_rate, "missing rate r in [0,1)")->required();
  mask->add_option("--seed", mask_seed, "rng seed");
  mask->add_option("--out", mask_out, "output mask.csv path (default: <dataset>/mask.csv)");

  // shared train/sweep configuration flags ---------------------------------
  struct Overrides {
    std::string config_path, dataset, out_dir, mode;
    std::optional<double> tau, alpha, lambda, gamma, lr_warmup, lr_finetune;
    std::optional<int> zeta, sinkhorn_iters, warmup_epochs, finetune_epochs, batch_size,
        repeats, checkpoint_every, metrics_every;
    std::optional<std::uint64_t> seed;
    std::optional<bool> use_cc, use_gc, ablations;
    std::string rates;
  };
  auto add_run_flags = [](CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "flat key = value config file");
    cmd->add_option("--dataset", o.dataset, "dataset directory");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--tau", o.tau, "softmax temperature");
    cmd->add_option("--alpha", o.alpha, "transport smoothness");
    cmd->add_option("--sinkhorn-iters", o.sinkhorn_iters, "scaling rounds");
    cmd->add_option("--zeta", o.zeta, "graph neighbors");
    cmd->add_option("--lambda", o.lambda, "KL regularizer weight");
    cmd->add_option("--gamma", o.gamma, "Student's-t dof");
    cmd->add_option("--lr-warmup", o.lr_warmup, "warm-up learning rate");
    cmd->add_option("--lr-finetune", o.lr_finetune, "fine-tune learning rate");
    cmd->add_option("--warmup-epochs", o.warmup_epochs, "warm-up epochs");
    cmd->add_option("--finetune-epochs", o.finetune_epochs, "fine-tune epochs");
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
    cmd->add_option("--use-cc", o.use_cc, "enable the contrastive term");
    cmd->add_option("--use-gc", o.use_gc, "enable the graph term");
    cmd->add_option("--checkpoint-every", o.checkpoint_every, "periodic checkpoint cadence");
    cmd->add_option("--metrics-every", o.metrics_every, "metrics snapshot cadence");
  };
  auto merge = [](const Overrides& o) {
    freecsl::ExperimentConfig c = load_config(o.config_path);
    if (!o.dataset.empty()) c.dataset_dir = o.dataset;
    if (!o.out_dir.empty()) c.out_dir = o.out_dir;
    if (!o.mode.empty()) c.mode = o.mode;
    if (!o.rates.empty()) freecsl::apply_config_entry(c, "rates", o.rates);
    if (o.seed) c.train.seed = *o.seed;
    if (o.tau) c.train.csl.temperature = *o.tau;
    if (o.alpha) c.train.csl.smoothness = *o.alpha;
    if (o.sinkhorn_iters) c.train.csl.sinkhorn_iters = *o.sinkhorn_iters;
    if (o.zeta) c.train.cse.neighbors = *o.zeta;
    if (o.lambda) c.train.cse.kl_weight = *o.lambda;
    if (o.gamma) c.train.cse.t_dof = *o.gamma;
    if (o.lr_warmup) c.train.lr_warmup = *o.lr_warmup;
    if (o.lr_finetune) c.train.lr_finetune = *o.lr_finetune;
    if (o.warmup_epochs) c.train.warmup_epochs = *o.warmup_epochs;
    if (o.finetune_epochs) c.train.finetune_epochs = *o.finetune_epochs;
    if (o.batch_size) c.train.batch_size = *o.batch_size;
    if (o.use_cc) c.train.use_cc = *o.use_cc;
    if (o.use_gc) c.train.use_gc = *o.use_gc;
    if (o.ablations) c.ablations = *o.ablations;
    if (o.repeats) c.repeats = *o.repeats;
    if (o.checkpoint_every) c.train.checkpoint_every = *o.checkpoint_every;
    if (o.metrics_every) c.train.metrics_every = *o.metrics_every;
    return c;
  };

  // train ------------------------------------------------------------------
  Overrides train_o;
  std::string train_mask;
  auto* train = app.add_subcommand("train", "warm up and fine-tune a model");
  add_run_flags(train, train_o);
  train->add_option("--mask", train_mask, "external mask.csv overriding the dataset's");

  // eval -------------------------------------------------------------------
  std::string eval_ckpt, eval_dataset, eval_mask, eval_mode = "freecsl", eval_out = "out",
              eval_tag = "eval";
  std::optional<double> eval_rate;
  std::optional<std::uint64_t> eval_seed;
  int eval_zeta = 3;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint.bin path")->required();
  eval->add_option("--dataset", eval_dataset, "dataset directory")->required();
  eval->add_option("--mask", eval_mask, "external mask.csv");
  eval->add_option("--mode", eval_mode, "freecsl | ilr | isr");
  eval->add_option("--out", eval_out, "output directory");
  eval->add_option("--tag", eval_tag, "tag for similarity artifacts");
  eval->add_option("--rate", eval_rate, "missing rate recorded in the row");
  eval->add_option("--seed", eval_seed, "seed recorded in the row and used by k-means");
  eval->add_option("--zeta", eval_zeta, "neighbors for the imputation baselines");

  // sweep ------------------------------------------------------------------
  Overrides sweep_o;
  auto* sweep = app.add_subcommand("sweep", "mask/train/eval across missing rates");
  add_run_flags(sweep, sweep_o);
  sweep->add_option("--rates", sweep_o.rates, "comma separated missing rates");
  sweep->add_option("--repeats", sweep_o.repeats, "repeats per rate");
  sweep->add_option("--mode", sweep_o.mode, "freecsl | ilr | isr");
  sweep->add_option("--ablations", sweep_o.ablations, "sweep the loss-term ablations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (mask->parsed()) {
      const std::string out =
          mask_out.empty() ? mask_dataset + "/mask.csv" : mask_out;
      freecsl::run_mask(mask_dataset, mask_rate, mask_seed, out);
      std::cout << "wrote " << out << "\n";
    } else if (train->parsed()) {
      const auto cfg = merge(train_o);
      const auto result = freecsl::run_train(cfg, train_mask);
      std::cout << "trained " << result.reports.size() << " epochs; checkpoint under "
                << freecsl::resolve_out_dir(cfg.out_dir) << "\n";
    } else if (eval->parsed()) {
      const auto result = freecsl::run_eval(eval_ckpt, eval_dataset, eval_mask, eval_mode,
                                            eval_out, eval_tag, eval_rate, eval_seed,
                                            eval_zeta);
      std::cout << freecsl::results_csv_header() << "\n"
                << freecsl::format_result_row(result.row) << "\n";
    } else if (sweep->parsed()) {
      const auto csv = freecsl::run_sweep(merge(sweep_o));
      std::cout << "wrote " << csv << "\n";
    }
  } catch (const freecsl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
