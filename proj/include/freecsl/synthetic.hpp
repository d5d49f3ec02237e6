// synthetic.hpp - deterministic multi-view Gaussian-blob generator for demos
// and the acceptance benchmark.
#pragma once

#include "freecsl/data.hpp"

namespace freecsl {

struct BlobSpec {
  Index n = 600;
  int n_views = 2;
  int n_clusters = 3;
  Index dim = 10;            // raw feature dimension per view
  double separation = 6.0;   // minimum distance between cluster means, in
                             // units of the within-cluster standard deviation
  std::uint64_t seed = 0;
};

// Balanced isotropic Gaussian clusters; each view applies its own random
// rotation so views are distinct but consistently labeled. The mask is left
// all-observed; apply generate_mask for incomplete variants.
MultiViewDataset make_blobs(const BlobSpec& spec);

}  // namespace freecsl
