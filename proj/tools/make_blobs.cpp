// make_blobs - writes a synthetic multi-view Gaussian-blob dataset in the
// directory format the freecsl tool consumes.
#include <cstdint>
#include <iostream>

#include "CLI11.hpp"
#include "freecsl/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic multi-view blob dataset"};
  freecsl::BlobSpec spec;
  std::string out;
  long long n = 600, dim = 10;
  app.add_option("--out", out, "output dataset directory")->required();
  app.add_option("--n", n, "instances");
  app.add_option("--views", spec.n_views, "views");
  app.add_option("--k", spec.n_clusters, "clusters");
  app.add_option("--dim", dim, "raw feature dimension per view");
  app.add_option("--sep", spec.separation, "cluster mean separation in sigmas");
  app.add_option("--seed", spec.seed, "rng seed");
  CLI11_PARSE(app, argc, argv);
  spec.n = n;
  spec.dim = dim;

  try {
    freecsl::write_dataset(out, freecsl::make_blobs(spec));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}
