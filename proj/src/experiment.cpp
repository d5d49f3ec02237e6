#include "freecsl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "freecsl/eval.hpp"
#include "json.hpp"

namespace freecsl {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (dataset_dir.empty()) throw ConfigError("config: dataset path is required");
  if (repeats < 1) throw ConfigError("config: repeats must be >= 1");
  for (double r : rates)
    if (r < 0.0 || r >= 1.0) throw ConfigError("config: rates must lie in [0, 1)");
  if (mode != "freecsl" && mode != "ilr" && mode != "isr")
    throw ConfigError("config: mode must be freecsl, ilr, or isr");
  train.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

long to_long(const std::string& v, const std::string& key) {
  try {
    return std::stol(v);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<double> to_rates(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(to_double(trim(field), "rates"));
  if (out.empty()) throw ConfigError("config: rates list is empty");
  return out;
}

}  // namespace

void apply_config_entry(ExperimentConfig& c, const std::string& key,
                        const std::string& value) {
  if (key == "dataset") c.dataset_dir = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "rates") c.rates = to_rates(value);
  else if (key == "repeats") c.repeats = int(to_long(value, key));
  else if (key == "mode") c.mode = value;
  else if (key == "ablations") c.ablations = to_bool(value, key);
  else if (key == "seed") c.train.seed = std::uint64_t(to_long(value, key));
  else if (key == "tau") c.train.csl.temperature = to_double(value, key);
  else if (key == "alpha") c.train.csl.smoothness = to_double(value, key);
  else if (key == "sinkhorn_iters") c.train.csl.sinkhorn_iters = int(to_long(value, key));
  else if (key == "zeta") c.train.cse.neighbors = int(to_long(value, key));
  else if (key == "lambda") c.train.cse.kl_weight = to_double(value, key);
  else if (key == "gamma") c.train.cse.t_dof = to_double(value, key);
  else if (key == "lr_warmup") c.train.lr_warmup = to_double(value, key);
  else if (key == "lr_finetune") c.train.lr_finetune = to_double(value, key);
  else if (key == "warmup_epochs") c.train.warmup_epochs = int(to_long(value, key));
  else if (key == "finetune_epochs") c.train.finetune_epochs = int(to_long(value, key));
  else if (key == "batch_size") c.train.batch_size = int(to_long(value, key));
  else if (key == "use_cc") c.train.use_cc = to_bool(value, key);
  else if (key == "use_gc") c.train.use_gc = to_bool(value, key);
  else if (key == "checkpoint_every") c.train.checkpoint_every = int(to_long(value, key));
  else if (key == "metrics_every") c.train.metrics_every = int(to_long(value, key));
  else throw ConfigError("config: unknown key '" + key + "'");
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " is not key = value");
    apply_config_entry(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

std::string resolve_out_dir(const std::string& out_dir) {
  const char* root = std::getenv("FREECSL_OUT_ROOT");
  if (root && *root && fs::path(out_dir).is_relative())
    return (fs::path(root) / out_dir).string();
  return out_dir;
}

std::string results_csv_header() {
  return "dataset,mode,r,seed,status,acc,nmi,ari,acc_std,nmi_std,ari_std";
}

namespace {

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << std::fixed << x;
  return ss.str();
}

}  // namespace

std::string format_result_row(const ResultRow& row) {
  std::ostringstream ss;
  ss << row.dataset << "," << row.mode << "," << fmt(row.rate) << "," << row.seed << ","
     << row.status << ",";
  if (row.metrics)
    ss << fmt(row.metrics->acc) << "," << fmt(row.metrics->nmi) << ","
       << fmt(row.metrics->ari);
  else
    ss << ",,";
  ss << ",";
  if (row.stds)
    ss << fmt(row.stds->acc) << "," << fmt(row.stds->nmi) << "," << fmt(row.stds->ari);
  else
    ss << ",,";
  return ss.str();
}

void append_result_row(const std::string& csv_path, const ResultRow& row) {
  const bool fresh = !fs::exists(csv_path);
  std::ofstream out(csv_path, std::ios::app);
  if (!out) throw DataError("cannot write " + csv_path);
  if (fresh) out << results_csv_header() << "\n";
  out << format_result_row(row) << "\n";
}

void run_mask(const std::string& dataset_dir, double rate, std::uint64_t seed,
              const std::string& out_path) {
  const MultiViewDataset ds = load_dataset(dataset_dir);
  MaskSpec spec;
  spec.missing_rate = rate;
  spec.seed = seed;
  write_mask_csv(out_path, generate_mask(ds.n(), ds.n_views(), spec));
}

namespace {

MultiViewDataset load_for_run(const std::string& dataset_dir, const std::string& mask_path) {
  MultiViewDataset ds = load_dataset(dataset_dir);
  if (!mask_path.empty()) {
    ds.mask = read_mask_csv(mask_path, ds.n(), ds.n_views());
    ds.validate();
    apply_mask_sentinels(ds);
  }
  return normalize(std::move(ds));
}

ModelSpec model_spec_for(const MultiViewDataset& ds) {
  ModelSpec spec;
  for (int v = 0; v < ds.n_views(); ++v) spec.view_dims.push_back(ds.dim(v));
  spec.n_clusters = ds.n_clusters;
  return spec;
}

void write_epoch_log_line(std::ofstream& log, const EpochReport& r) {
  json j{{"phase", r.phase}, {"epoch", r.epoch},       {"rec", r.rec},
         {"cc", r.cc},       {"gc", r.gc},             {"total", r.total},
         {"wall_seconds", r.wall_seconds}};
  if (r.metrics)
    j["metrics"] = {{"acc", r.metrics->acc}, {"nmi", r.metrics->nmi},
                    {"ari", r.metrics->ari}};
  log << j.dump() << "\n";
  log.flush();  // keep a usable partial log if training aborts
}

}  // namespace

TrainRunResult run_train(const ExperimentConfig& config, const std::string& mask_path) {
  config.validate();
  MultiViewDataset ds = load_for_run(config.dataset_dir, mask_path);

  const std::string out_dir = resolve_out_dir(config.out_dir);
  fs::create_directories(out_dir);
  std::ofstream log(fs::path(out_dir) / "epochs.log");
  if (!log) throw DataError("cannot write epochs.log under " + out_dir);

  TrainRunResult result;
  result.state = init_params(model_spec_for(ds), config.train.seed);

  TrainConfig train_cfg = config.train;
  if (train_cfg.checkpoint_every > 0 && train_cfg.checkpoint_dir.empty())
    train_cfg.checkpoint_dir = out_dir;

  const auto log_epoch = [&](const EpochReport& r) { write_epoch_log_line(log, r); };
  auto warmup_reports = warmup(result.state, ds, train_cfg, log_epoch);
  result.reports = std::move(warmup_reports);
  auto ft = finetune(result.state, ds, train_cfg, log_epoch);
  result.prototypes = std::move(ft.prototypes);
  result.reports.insert(result.reports.end(), ft.reports.begin(), ft.reports.end());

  result.state.save((fs::path(out_dir) / "checkpoint.bin").string());
  return result;
}

MetricReport evaluate_mode(const ModelState& state, const MultiViewDataset& dataset,
                           const std::string& mode, std::uint64_t seed, int zeta) {
  if (dataset.labels.empty())
    throw ConfigError("evaluation requires a labels.csv in the dataset");
  std::vector<int> pred;
  if (mode == "freecsl")
    pred = predict(state, dataset, dataset.n_clusters, seed);
  else if (mode == "ilr")
    pred = impute_baseline(state, dataset, ImputeMode::kIlr, zeta, seed);
  else if (mode == "isr")
    pred = impute_baseline(state, dataset, ImputeMode::kIsr, zeta, seed);
  else
    throw ConfigError("unknown eval mode: " + mode);
  return evaluate_clustering(pred, dataset.labels, dataset.n_clusters);
}

EvalRunResult run_eval(const std::string& checkpoint, const std::string& dataset_dir,
                       const std::string& mask_path, const std::string& mode,
                       const std::string& out_dir_raw, const std::string& tag,
                       std::optional<double> rate, std::optional<std::uint64_t> seed,
                       int zeta) {
  const MultiViewDataset ds = load_for_run(dataset_dir, mask_path);
  const ModelState state = ModelState::load(checkpoint);
  if (state.spec().n_views() != ds.n_views() || state.spec().n_clusters != ds.n_clusters)
    throw ConfigError("checkpoint does not match the dataset (views/clusters differ)");
  for (int v = 0; v < ds.n_views(); ++v)
    if (state.spec().view_dims[v] != ds.dim(v))
      throw ConfigError("checkpoint does not match the dataset (view " +
                        std::to_string(v + 1) + " dimension differs)");

  const std::uint64_t eval_seed = seed.value_or(0);
  double r = 0.0;
  if (rate) {
    r = *rate;
  } else {
    Index incomplete = 0;
    for (Index i = 0; i < ds.n(); ++i) {
      int cnt = 0;
      for (Index v = 0; v < ds.mask.cols(); ++v) cnt += ds.mask(i, v) ? 1 : 0;
      if (cnt < ds.n_views()) ++incomplete;
    }
    r = double(incomplete) / double(ds.n());
  }

  const std::string out_dir = resolve_out_dir(out_dir_raw);
  fs::create_directories(out_dir);

  EvalRunResult out;
  out.row.dataset = fs::path(dataset_dir).filename().string();
  out.row.mode = mode;
  out.row.rate = r;
  out.row.seed = std::to_string(eval_seed);
  out.row.status = "ok";
  out.row.metrics = evaluate_mode(state, ds, mode, eval_seed, zeta);
  append_result_row((fs::path(out_dir) / "results.csv").string(), out.row);

  const Matrix h = consensus_semantic(state, ds);
  const Matrix sim = similarity_matrix(h, ds.labels);
  out.sim_csv = (fs::path(out_dir) / ("sim_" + tag + ".csv")).string();
  out.sim_pgm = (fs::path(out_dir) / ("sim_" + tag + ".pgm")).string();
  write_matrix_csv(sim, out.sim_csv);
  write_pgm_heatmap(sim, out.sim_pgm);
  return out;
}

namespace {

struct CellOutcome {
  ResultRow row;
};

MetricReport mean_of(const std::vector<MetricReport>& reports) {
  MetricReport m;
  for (const auto& r : reports) {
    m.acc += r.acc;
    m.nmi += r.nmi;
    m.ari += r.ari;
  }
  const double n = double(reports.size());
  m.acc /= n;
  m.nmi /= n;
  m.ari /= n;
  return m;
}

MetricReport std_of(const std::vector<MetricReport>& reports, const MetricReport& mean) {
  MetricReport s;
  if (reports.size() < 2) return s;
  for (const auto& r : reports) {
    s.acc += (r.acc - mean.acc) * (r.acc - mean.acc);
    s.nmi += (r.nmi - mean.nmi) * (r.nmi - mean.nmi);
    s.ari += (r.ari - mean.ari) * (r.ari - mean.ari);
  }
  const double n = double(reports.size() - 1);
  s.acc = std::sqrt(s.acc / n);
  s.nmi = std::sqrt(s.nmi / n);
  s.ari = std::sqrt(s.ari / n);
  return s;
}

}  // namespace

std::string run_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::string out_root = resolve_out_dir(config.out_dir);
  fs::create_directories(out_root);
  const std::string csv_path = (fs::path(out_root) / "results.csv").string();
  {
    std::ofstream fresh(csv_path);  // truncate: a sweep owns its results file
    fresh << results_csv_header() << "\n";
  }

  const MultiViewDataset base = load_dataset(config.dataset_dir);
  const std::string dataset_name = fs::path(config.dataset_dir).filename().string();

  struct ModeFlags {
    std::string tag;
    bool use_cc, use_gc;
  };
  std::vector<ModeFlags> modes;
  if (config.ablations) {
    modes = {{"rec", false, false},
             {"rec+cc", true, false},
             {"rec+gc", false, true},
             {"freecsl", true, true}};
  } else {
    modes = {{config.mode, config.train.use_cc, config.train.use_gc}};
  }

  for (const ModeFlags& mf : modes) {
    for (double rate : config.rates) {
      std::vector<MetricReport> ok_reports;
      for (int rep = 0; rep < config.repeats; ++rep) {
        const std::uint64_t cell_seed = config.train.seed + std::uint64_t(rep);
        ResultRow row;
        row.dataset = dataset_name;
        row.mode = mf.tag;
        row.rate = rate;
        row.seed = std::to_string(cell_seed);
        std::ostringstream cell_name;
        cell_name << mf.tag << "_r" << fmt(rate) << "_s" << cell_seed;
        try {
          MultiViewDataset ds = base;
          MaskSpec mask_spec;
          mask_spec.missing_rate = rate;
          mask_spec.seed = cell_seed;
          ds.mask = generate_mask(ds.n(), ds.n_views(), mask_spec);
          apply_mask_sentinels(ds);
          ds = normalize(std::move(ds));

          const fs::path cell_dir = fs::path(out_root) / cell_name.str();
          fs::create_directories(cell_dir);
          write_mask_csv((cell_dir / "mask.csv").string(), ds.mask);

          TrainConfig tc = config.train;
          tc.seed = cell_seed;
          tc.use_cc = mf.use_cc;
          tc.use_gc = mf.use_gc;

          ModelState state = init_params(model_spec_for(ds), cell_seed);
          std::ofstream log(cell_dir / "epochs.log");
          const auto log_epoch = [&](const EpochReport& r) { write_epoch_log_line(log, r); };
          warmup(state, ds, tc, log_epoch);
          finetune(state, ds, tc, log_epoch);
          state.save((cell_dir / "checkpoint.bin").string());

          const std::string eval_mode = config.ablations ? "freecsl" : config.mode;
          row.status = "ok";
          row.metrics = evaluate_mode(state, ds, eval_mode, cell_seed,
                                      config.train.cse.neighbors);

          const Matrix sim = similarity_matrix(consensus_semantic(state, ds), ds.labels);
          write_matrix_csv(sim, (cell_dir / ("sim_" + cell_name.str() + ".csv")).string());
          write_pgm_heatmap(sim, (cell_dir / ("sim_" + cell_name.str() + ".pgm")).string());

          ok_reports.push_back(*row.metrics);
        } catch (const std::exception& e) {
          row.status = "failed";
          row.metrics.reset();
          std::ofstream err(fs::path(out_root) / (cell_name.str() + ".error.txt"));
          err << e.what() << "\n";
        }
        append_result_row(csv_path, row);
      }
      if (!ok_reports.empty()) {
        ResultRow agg;
        agg.dataset = dataset_name;
        agg.mode = mf.tag;
        agg.rate = rate;
        agg.seed = "agg";
        agg.status = "ok";
        agg.metrics = mean_of(ok_reports);
        agg.stds = std_of(ok_reports, *agg.metrics);
        append_result_row(csv_path, agg);
      }
    }
  }
  return csv_path;
}

}  // namespace freecsl
