#include "freecsl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "freecsl/eval.hpp"

namespace freecsl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<Index>> make_batches(Index n, int batch_size, Rng& rng) {
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));
  rng.shuffle(order);
  std::vector<std::vector<Index>> batches;
  for (Index start = 0; start < n; start += batch_size) {
    const Index stop = std::min(n, start + Index(batch_size));
    batches.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return batches;
}

Matrix gather_rows_of(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = m.row(rows[r]);
  return out;
}

void maybe_checkpoint(const ModelState& state, const TrainConfig& cfg, int global_epoch) {
  if (cfg.checkpoint_every <= 0 || cfg.checkpoint_dir.empty()) return;
  if (global_epoch % cfg.checkpoint_every != 0) return;
  namespace fs = std::filesystem;
  fs::create_directories(cfg.checkpoint_dir);
  state.save((fs::path(cfg.checkpoint_dir) /
              ("checkpoint_e" + std::to_string(global_epoch) + ".bin")).string());
}

}  // namespace

Adam::Adam(const ModelState& state, double lr) : lr_(lr) {
  m_.reserve(state.n_params());
  v_.reserve(state.n_params());
  for (std::size_t i = 0; i < state.n_params(); ++i) {
    m_.push_back(Matrix::Zero(state.param(i).rows(), state.param(i).cols()));
    v_.push_back(Matrix::Zero(state.param(i).rows(), state.param(i).cols()));
  }
}

void Adam::step(ModelState& state, const std::vector<Matrix>& grads) {
  if (grads.size() != m_.size()) throw ShapeError("Adam: gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, double(t_));
  const double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    state.param(i).array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

std::vector<EpochReport> warmup(ModelState& state, const MultiViewDataset& dataset,
                                const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  std::vector<EpochReport> reports;
  Adam opt(state, config.lr_warmup);
  for (int epoch = 1; epoch <= config.warmup_epochs; ++epoch) {
    const auto t0 = Clock::now();
    Rng rng(mix_seed(config.seed, 1000 + epoch));
    double rec_total = 0.0;
    for (const auto& batch : make_batches(dataset.n(), config.batch_size, rng)) {
      ad::Tape tape;
      ParamBinding pb(tape, state);
      const BatchNodes nodes = encode_batch(pb, dataset, batch);
      const int loss = rec_loss_node(pb, nodes);
      if (loss < 0) continue;
      if (!std::isfinite(tape.scalar_value(loss)))
        throw TrainingError("warmup diverged: non-finite reconstruction loss at epoch " +
                            std::to_string(epoch));
      const GradientTape grads = backward(tape, loss, pb);
      rec_total += grads.loss;
      opt.step(state, grads.grads);
    }
    EpochReport report{"warmup", epoch, rec_total, 0.0, 0.0, rec_total,
                       seconds_since(t0), std::nullopt};
    if (on_epoch) on_epoch(report);
    reports.push_back(std::move(report));
    maybe_checkpoint(state, config, epoch);
  }
  return reports;
}

FinetuneResult finetune(ModelState& state, const MultiViewDataset& dataset,
                        const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  FinetuneResult result;
  if (config.finetune_epochs == 0) return result;

  const GraphSet graphs =
      config.use_gc ? build_graphs(dataset, config.cse.neighbors) : GraphSet{};
  Adam opt(state, config.lr_finetune);

  for (int epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
    const auto t0 = Clock::now();
    const std::uint64_t epoch_seed = mix_seed(config.seed, 2000 + epoch);
    const EpochArtifacts artifacts =
        build_epoch_artifacts(state, dataset, epoch_seed, config.cse);
    result.prototypes = artifacts.prototypes;

    Rng rng(mix_seed(config.seed, 3000 + epoch));
    double rec_total = 0.0, cc_total = 0.0, gc_total = 0.0;
    bool first_batch = true;
    for (const auto& batch : make_batches(dataset.n(), config.batch_size, rng)) {
      ad::Tape tape;
      ParamBinding pb(tape, state);
      const BatchNodes nodes = encode_batch(pb, dataset, batch);

      int loss = rec_loss_node(pb, nodes);
      const double rec_value = loss < 0 ? 0.0 : tape.scalar_value(loss);
      if (!std::isfinite(rec_value))
        throw TrainingError("finetune diverged: non-finite reconstruction loss at epoch " +
                            std::to_string(epoch));
      rec_total += rec_value;

      if (config.use_cc) {
        const CcSupervision sup = prepare_cc_supervision(state, dataset,
                                                         artifacts.prototypes, batch,
                                                         config.csl);
        const int cc = cc_loss_node(pb, nodes, artifacts.prototypes, sup, config.csl);
        if (cc >= 0) {
          if (!std::isfinite(tape.scalar_value(cc)))
            throw TrainingError(
                "finetune diverged: non-finite contrastive loss at epoch " +
                std::to_string(epoch));
          cc_total += tape.scalar_value(cc);
          loss = loss < 0 ? cc : tape.add(loss, cc);
        }
      }

      if (config.use_gc && first_batch) {
        const int gc = gc_loss_node(pb, dataset, graphs, artifacts, config.cse);
        if (!std::isfinite(tape.scalar_value(gc)))
          throw TrainingError("finetune diverged: non-finite graph loss at epoch " +
                              std::to_string(epoch));
        gc_total = tape.scalar_value(gc);
        loss = loss < 0 ? gc : tape.add(loss, gc);
      }
      first_batch = false;

      if (loss < 0) continue;
      const GradientTape grads = backward(tape, loss, pb);
      opt.step(state, grads.grads);
    }

    const double total = rec_total + (config.use_cc ? cc_total : 0.0) +
                         (config.use_gc ? gc_total : 0.0);
    EpochReport report{"finetune", epoch, rec_total, cc_total, gc_total, total,
                       seconds_since(t0), std::nullopt};
    if (config.metrics_every > 0 && epoch % config.metrics_every == 0 &&
        !dataset.labels.empty()) {
      const auto pred = predict(state, dataset, dataset.n_clusters,
                                mix_seed(config.seed, 4000 + epoch));
      const MetricReport m = evaluate_clustering(pred, dataset.labels, dataset.n_clusters);
      report.metrics = MetricsSnapshot{m.acc, m.nmi, m.ari};
      report.wall_seconds = seconds_since(t0);
    }
    if (on_epoch) on_epoch(report);
    result.reports.push_back(std::move(report));
    maybe_checkpoint(state, config, config.warmup_epochs + epoch);
  }
  return result;
}

double reconstruction_loss(const ModelState& state, const MultiViewDataset& dataset,
                           const std::vector<Index>& batch) {
  return rec_loss_value(state, dataset, batch);
}

LossParts overall_loss(const ModelState& state, const MultiViewDataset& dataset,
                       const std::vector<Index>& batch, const EpochArtifacts& artifacts,
                       const GraphSet& graphs, const TrainConfig& config) {
  LossParts parts;
  parts.rec = rec_loss_value(state, dataset, batch);
  if (config.use_cc) {
    const CcSupervision sup =
        prepare_cc_supervision(state, dataset, artifacts.prototypes, batch, config.csl);
    parts.cc = cc_loss_value(state, dataset, artifacts.prototypes, batch, sup, config.csl);
  }
  if (config.use_gc)
    parts.gc = gc_loss_value(state, dataset, graphs, artifacts, config.cse);
  parts.total = parts.rec + parts.cc + parts.gc;
  return parts;
}

Matrix consensus_semantic(const ModelState& state, const MultiViewDataset& dataset) {
  const FusionWeights weights = completeness_weights(dataset.mask);
  std::vector<Matrix> semantic_full;
  for (int v = 0; v < dataset.n_views(); ++v) {
    const std::vector<Index> rows = observed_rows(dataset.mask, v);
    const Matrix h = contrastive_head(
        encode(gather_rows_of(dataset.views[v], rows), v, state), state);
    semantic_full.push_back(expand_rows(h, rows, dataset.n()));
  }
  return fuse(semantic_full, dataset.mask, weights);
}

Matrix consensus_latent(const ModelState& state, const MultiViewDataset& dataset) {
  const FusionWeights weights = completeness_weights(dataset.mask);
  std::vector<Matrix> latent_full;
  for (int v = 0; v < dataset.n_views(); ++v) {
    const std::vector<Index> rows = observed_rows(dataset.mask, v);
    const Matrix z = encode(gather_rows_of(dataset.views[v], rows), v, state);
    latent_full.push_back(expand_rows(z, rows, dataset.n()));
  }
  return fuse(latent_full, dataset.mask, weights);
}

std::vector<int> predict(const ModelState& state, const MultiViewDataset& dataset, int k,
                         std::uint64_t seed) {
  const Matrix h = consensus_semantic(state, dataset);
  return kmeans(h, k, seed).assignment;
}

std::vector<Matrix> imputed_representations(const ModelState& state,
                                            const MultiViewDataset& dataset,
                                            ImputeMode mode, int zeta) {
  const int n_views = dataset.n_views();
  const Index n = dataset.n();

  // per-view representations over observed rows
  std::vector<std::vector<Index>> obs(n_views);
  std::vector<Matrix> reps(n_views);
  std::vector<std::vector<Index>> pos_of(n_views, std::vector<Index>(n, -1));
  for (int v = 0; v < n_views; ++v) {
    obs[v] = observed_rows(dataset.mask, v);
    const Matrix z = encode(gather_rows_of(dataset.views[v], obs[v]), v, state);
    reps[v] = mode == ImputeMode::kIsr ? contrastive_head(z, state) : z;
    for (std::size_t r = 0; r < obs[v].size(); ++r) pos_of[v][obs[v][r]] = Index(r);
  }

  // zeta nearest observed neighbors per instance per observed view, on the
  // original features (the same metric the view graphs use)
  std::vector<Matrix> features(n_views);
  for (int v = 0; v < n_views; ++v)
    features[v] = gather_rows_of(dataset.views[v], obs[v]);

  auto knn_of = [&](int v, Index instance) {
    const Index row = pos_of[v][instance];
    std::vector<std::pair<double, Index>> dist;
    dist.reserve(obs[v].size());
    for (std::size_t r = 0; r < obs[v].size(); ++r) {
      if (Index(r) == row) continue;
      dist.push_back({(features[v].row(row) - features[v].row(Index(r))).squaredNorm(),
                      obs[v][r]});
    }
    const std::size_t take = std::min<std::size_t>(zeta, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    std::vector<Index> ids(take);
    for (std::size_t i = 0; i < take; ++i) ids[i] = dist[i].second;
    return ids;
  };

  // fill missing rows with the mean of transferred neighbors observed there
  std::vector<Matrix> out;
  for (int v = 0; v < n_views; ++v) {
    Matrix full(n, reps[v].cols());
    Matrix view_mean = reps[v].colwise().mean();
    for (Index i = 0; i < n; ++i) {
      if (dataset.mask(i, v)) {
        full.row(i) = reps[v].row(pos_of[v][i]);
        continue;
      }
      std::vector<Index> transferred;
      for (int u = 0; u < n_views; ++u) {
        if (u == v || !dataset.mask(i, u)) continue;
        for (Index j : knn_of(u, i))
          if (dataset.mask(j, v) &&
              std::find(transferred.begin(), transferred.end(), j) == transferred.end())
            transferred.push_back(j);
      }
      if (transferred.empty()) {
        full.row(i) = view_mean;  // no cross-view neighbor observed here
        continue;
      }
      RowVector acc = RowVector::Zero(reps[v].cols());
      for (Index j : transferred) acc += reps[v].row(pos_of[v][j]);
      full.row(i) = acc / double(transferred.size());
    }
    out.push_back(std::move(full));
  }
  return out;
}

std::vector<int> impute_baseline(const ModelState& state, const MultiViewDataset& dataset,
                                 ImputeMode mode, int zeta, std::uint64_t seed) {
  const std::vector<Matrix> reps = imputed_representations(state, dataset, mode, zeta);
  Matrix summed = Matrix::Zero(dataset.n(), reps[0].cols());
  for (const Matrix& r : reps) summed += r;
  return kmeans(summed, dataset.n_clusters, seed).assignment;
}

}  // namespace freecsl
