#include "freecsl/synthetic.hpp"

#include <cmath>

namespace freecsl {

namespace {

// Orthonormal basis from the QR factorization of a random Gaussian matrix.
Matrix random_rotation(Index dim, Rng& rng) {
  Matrix g(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // fix signs so the factorization is unique
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

MultiViewDataset make_blobs(const BlobSpec& spec) {
  if (spec.n_clusters < 1 || spec.n_views < 1 || spec.dim < spec.n_clusters)
    throw ConfigError("make_blobs: need dim >= n_clusters and positive counts");
  if (spec.n < spec.n_clusters) throw ConfigError("make_blobs: need n >= n_clusters");

  Rng rng(spec.seed);
  MultiViewDataset ds;
  ds.n_clusters = spec.n_clusters;
  ds.mask = BoolMatrix::Constant(spec.n, spec.n_views, true);
  ds.labels.resize(spec.n);
  for (Index i = 0; i < spec.n; ++i) ds.labels[i] = int(i % spec.n_clusters);

  // Axis-aligned means at distance separation * sqrt(2) >= separation.
  Matrix means = Matrix::Zero(spec.n_clusters, spec.dim);
  for (int k = 0; k < spec.n_clusters; ++k) means(k, k) = spec.separation;

  for (int v = 0; v < spec.n_views; ++v) {
    const Matrix rot = random_rotation(spec.dim, rng);
    Matrix x(spec.n, spec.dim);
    for (Index i = 0; i < spec.n; ++i) {
      RowVector noise(spec.dim);
      for (Index j = 0; j < spec.dim; ++j) noise(j) = rng.normal();
      x.row(i) = (means.row(ds.labels[i]) + noise) * rot;
    }
    ds.views.push_back(std::move(x));
  }
  ds.validate();
  return ds;
}

}  // namespace freecsl
