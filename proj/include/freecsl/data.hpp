// data.hpp - multi-view dataset container, masking protocol, normalization,
// paired/observed index queries, and the on-disk dataset directory format.
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "freecsl/common.hpp"

namespace freecsl {

inline constexpr double kMissingSentinel = std::numeric_limits<double>::quiet_NaN();

// Per-view feature matrices plus the observation mask. Rows masked out of a
// view hold NaN sentinels and must never enter any computation; the mask is
// authoritative.
struct MultiViewDataset {
  std::vector<Matrix> views;  // V matrices, each N x D_v
  BoolMatrix mask;            // N x V, true = observed
  std::vector<int> labels;    // optional ground truth, empty if absent
  int n_clusters = 0;         // K

  Index n() const { return mask.rows(); }
  int n_views() const { return static_cast<int>(views.size()); }
  Index dim(int view) const { return views.at(view).cols(); }

  // Throws DataError if any structural invariant is broken.
  void validate() const;
};

enum class MaskProtocol { kInstanceIncomplete };

struct MaskSpec {
  double missing_rate = 0.0;  // r in [0, 1)
  std::uint64_t seed = 0;
  MaskProtocol protocol = MaskProtocol::kInstanceIncomplete;
};

// Instance-incomplete masking: exactly round(r*n) instances are incomplete,
// each keeping a uniformly random nonempty strict subset of the v views.
// Deterministic given the seed. Throws ConfigError when v == 1 and r > 0.
BoolMatrix generate_mask(Index n, int v, const MaskSpec& spec);

// Per-feature min-max scaling to [0,1] computed over observed rows only;
// constant columns map to 0; sentinel rows pass through untouched.
MultiViewDataset normalize(MultiViewDataset dataset);

// Sorted instance ids observed in both views m and n.
std::vector<Index> paired_indices(const BoolMatrix& mask, int m, int n);

// Sorted instance ids observed in view v.
std::vector<Index> observed_rows(const BoolMatrix& mask, int v);

// Overwrites masked-out rows of every view with the NaN sentinel.
void apply_mask_sentinels(MultiViewDataset& dataset);

// --- dataset directory format -----------------------------------------------
//
//   meta        key = value lines: n, v, k, dims (comma separated per view)
//   view_<i>.csv  N rows of D_i comma separated decimals (i from 1)
//   mask.csv    N rows of V 0/1 entries, optional (all-observed if absent)
//   labels.csv  N integers, optional

MultiViewDataset load_dataset(const std::string& root);

// Writers used by the mask tool, the sweep harness, and dataset generators.
void write_dataset(const std::string& root, const MultiViewDataset& dataset);
void write_mask_csv(const std::string& path, const BoolMatrix& mask);
BoolMatrix read_mask_csv(const std::string& path, Index n, int v);

}  // namespace freecsl
