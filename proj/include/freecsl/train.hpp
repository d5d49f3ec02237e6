// train.hpp - two-stage training: reconstruction warm-up, then joint
// fine-tuning with per-epoch prototype/label refresh, plus final prediction
// and the KNN-imputation comparison baselines.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "freecsl/losses.hpp"

namespace freecsl {

struct TrainConfig {
  int warmup_epochs = 100;    // e
  int finetune_epochs = 100;  // E
  int batch_size = 512;
  double lr_warmup = 3e-4;
  double lr_finetune = 5e-4;
  std::uint64_t seed = 0;
  CslConfig csl;
  CseConfig cse;
  bool use_cc = true;
  bool use_gc = true;
  int checkpoint_every = 0;        // 0 disables periodic checkpoints
  std::string checkpoint_dir;
  int metrics_every = 0;           // snapshot cadence during fine-tuning, 0 = off

  void validate() const {
    if (warmup_epochs < 0 || finetune_epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr_warmup > 0.0) || !(lr_finetune > 0.0))
      throw ConfigError("learning rates must be positive");
    csl.validate();
    cse.validate();
  }
};

struct MetricsSnapshot {
  double acc = 0.0, nmi = 0.0, ari = 0.0;
};

struct EpochReport {
  std::string phase;  // "warmup" or "finetune"
  int epoch = 0;      // 1-based within phase
  double rec = 0.0, cc = 0.0, gc = 0.0, total = 0.0;
  double wall_seconds = 0.0;
  std::optional<MetricsSnapshot> metrics;
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Adam with standard defaults; moments follow the model's parameter layout.
class Adam {
 public:
  Adam(const ModelState& state, double lr);
  void step(ModelState& state, const std::vector<Matrix>& grads);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Mini-batch gradient descent on the reconstruction loss alone.
// Deterministic given the seed; aborts with TrainingError on divergence.
std::vector<EpochReport> warmup(ModelState& state, const MultiViewDataset& dataset,
                                const TrainConfig& config,
                                const EpochCallback& on_epoch = nullptr);

struct FinetuneResult {
  std::vector<EpochReport> reports;
  PrototypeSet prototypes;  // from the last refresh
};

// Joint fine-tuning: per epoch, refresh prototypes and self-labels, then run
// mini-batches on the overall loss. The graph-clustering term is computed
// full-graph once per epoch and stepped with the first batch.
FinetuneResult finetune(ModelState& state, const MultiViewDataset& dataset,
                        const TrainConfig& config,
                        const EpochCallback& on_epoch = nullptr);

// --- loss surfaces -----------------------------------------------------------

// Sum over views of squared reconstruction error on the observed batch rows.
double reconstruction_loss(const ModelState& state, const MultiViewDataset& dataset,
                           const std::vector<Index>& batch);

struct LossParts {
  double rec = 0.0, cc = 0.0, gc = 0.0;
  double total = 0.0;
};

// L = L_rec + L_cc + L_gc on one batch with the given epoch artifacts;
// ablation flags zero out disabled terms (and their gradients).
LossParts overall_loss(const ModelState& state, const MultiViewDataset& dataset,
                       const std::vector<Index>& batch, const EpochArtifacts& artifacts,
                       const GraphSet& graphs, const TrainConfig& config);

// --- prediction and baselines ------------------------------------------------

// Fused consensus semantic rows for every instance.
Matrix consensus_semantic(const ModelState& state, const MultiViewDataset& dataset);

// Fused consensus latent rows for every instance.
Matrix consensus_latent(const ModelState& state, const MultiViewDataset& dataset);

// k-means over the consensus semantic representations.
std::vector<int> predict(const ModelState& state, const MultiViewDataset& dataset, int k,
                         std::uint64_t seed);

enum class ImputeMode { kIlr, kIsr };

// Full-height per-view representations with missing rows filled by the mean
// of the zeta nearest neighbors transferred from the views where the
// instance is observed (latent rows for ILR, semantic rows for ISR).
std::vector<Matrix> imputed_representations(const ModelState& state,
                                            const MultiViewDataset& dataset,
                                            ImputeMode mode, int zeta);

// Cross-view KNN imputation baseline: impute as above, then k-means on the
// sum of the view matrices.
std::vector<int> impute_baseline(const ModelState& state, const MultiViewDataset& dataset,
                                 ImputeMode mode, int zeta, std::uint64_t seed);

}  // namespace freecsl
