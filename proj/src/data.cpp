#include "freecsl/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace freecsl {

namespace fs = std::filesystem;

void MultiViewDataset::validate() const {
  if (views.empty()) throw DataError("dataset has no views");
  if (mask.rows() != views[0].rows() || mask.cols() != static_cast<Index>(views.size()))
    throw DataError("mask shape does not match views");
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].rows() != mask.rows())
      throw DataError("view " + std::to_string(v + 1) + " row count differs");
  }
  for (Index i = 0; i < mask.rows(); ++i) {
    bool any = false;
    for (Index v = 0; v < mask.cols(); ++v) any = any || mask(i, v);
    if (!any) throw DataError("instance " + std::to_string(i) + " observed in no view");
  }
  if (!labels.empty()) {
    if (static_cast<Index>(labels.size()) != mask.rows())
      throw DataError("labels length differs from instance count");
    for (int y : labels) {
      if (y < 0 || y >= n_clusters)
        throw DataError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(n_clusters) + ")");
    }
  }
  if (n_clusters <= 0) throw DataError("n_clusters must be positive");
}

BoolMatrix generate_mask(Index n, int v, const MaskSpec& spec) {
  if (n < 1 || v < 1) throw ConfigError("mask needs n >= 1 and v >= 1");
  if (spec.missing_rate < 0.0 || spec.missing_rate >= 1.0)
    throw ConfigError("missing rate must lie in [0, 1)");
  const Index n_incomplete = static_cast<Index>(std::llround(spec.missing_rate * double(n)));
  if (v == 1 && n_incomplete > 0)
    throw ConfigError("missing rate > 0 is unsatisfiable with a single view");

  BoolMatrix mask = BoolMatrix::Constant(n, v, true);
  if (n_incomplete == 0) return mask;

  Rng rng(spec.seed);
  std::vector<Index> order(n);
  for (Index i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  // Subset codes 1 .. 2^v-2 enumerate the nonempty strict subsets of views.
  const std::uint64_t n_subsets = (std::uint64_t(1) << v) - 2;
  for (Index j = 0; j < n_incomplete; ++j) {
    const Index i = order[j];
    const std::uint64_t code = 1 + rng.uniform_index(n_subsets);
    for (int k = 0; k < v; ++k) mask(i, k) = (code >> k) & 1u;
  }
  return mask;
}

MultiViewDataset normalize(MultiViewDataset dataset) {
  for (int v = 0; v < dataset.n_views(); ++v) {
    Matrix& x = dataset.views[v];
    const std::vector<Index> rows = observed_rows(dataset.mask, v);
    if (rows.empty()) continue;
    for (Index c = 0; c < x.cols(); ++c) {
      double lo = x(rows[0], c), hi = lo;
      for (Index r : rows) {
        lo = std::min(lo, x(r, c));
        hi = std::max(hi, x(r, c));
      }
      const double range = hi - lo;
      for (Index r : rows) x(r, c) = range > 0.0 ? (x(r, c) - lo) / range : 0.0;
    }
  }
  return dataset;
}

std::vector<Index> paired_indices(const BoolMatrix& mask, int m, int n) {
  if (m == n) throw ConfigError("paired_indices needs two distinct views");
  if (m < 0 || n < 0 || m >= mask.cols() || n >= mask.cols())
    throw ConfigError("view id out of range");
  std::vector<Index> out;
  for (Index i = 0; i < mask.rows(); ++i)
    if (mask(i, m) && mask(i, n)) out.push_back(i);
  return out;
}

std::vector<Index> observed_rows(const BoolMatrix& mask, int v) {
  if (v < 0 || v >= mask.cols()) throw ConfigError("view id out of range");
  std::vector<Index> out;
  for (Index i = 0; i < mask.rows(); ++i)
    if (mask(i, v)) out.push_back(i);
  return out;
}

void apply_mask_sentinels(MultiViewDataset& dataset) {
  for (int v = 0; v < dataset.n_views(); ++v) {
    for (Index i = 0; i < dataset.n(); ++i) {
      if (!dataset.mask(i, v)) dataset.views[v].row(i).setConstant(kMissingSentinel);
    }
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw DataError("malformed number '" + s + "' in " + where);
  }
}

Matrix read_csv_matrix(const std::string& path, Index expect_rows, Index expect_cols) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& f : split(line, ',')) row.push_back(parse_double(trim(f), path));
    if (!rows.empty() && row.size() != rows[0].size())
      throw DataError("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty matrix file: " + path);
  if (expect_rows >= 0 && static_cast<Index>(rows.size()) != expect_rows)
    throw DataError(path + ": expected " + std::to_string(expect_rows) + " rows, found " +
                    std::to_string(rows.size()));
  if (expect_cols >= 0 && static_cast<Index>(rows[0].size()) != expect_cols)
    throw DataError(path + ": expected " + std::to_string(expect_cols) + " columns, found " +
                    std::to_string(rows[0].size()));
  Matrix out(rows.size(), rows[0].size());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[i][j];
  return out;
}

std::map<std::string, std::string> read_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("meta line without '=': " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

MultiViewDataset load_dataset(const std::string& root) {
  const fs::path dir(root);
  const auto meta = read_meta((dir / "meta").string());
  auto need = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw DataError("meta is missing key '" + key + "'");
    return it->second;
  };
  const Index n = static_cast<Index>(std::stoll(need("n")));
  const int v = std::stoi(need("v"));
  const int k = std::stoi(need("k"));
  const auto dim_fields = split(need("dims"), ',');
  if (static_cast<int>(dim_fields.size()) != v)
    throw DataError("meta dims lists " + std::to_string(dim_fields.size()) +
                    " entries for " + std::to_string(v) + " views");

  MultiViewDataset ds;
  ds.n_clusters = k;
  for (int i = 0; i < v; ++i) {
    const Index d = static_cast<Index>(std::stoll(trim(dim_fields[i])));
    const std::string path = (dir / ("view_" + std::to_string(i + 1) + ".csv")).string();
    ds.views.push_back(read_csv_matrix(path, n, d));
  }

  const std::string mask_path = (dir / "mask.csv").string();
  ds.mask = fs::exists(mask_path) ? read_mask_csv(mask_path, n, v)
                                  : BoolMatrix::Constant(n, v, true);

  const std::string labels_path = (dir / "labels.csv").string();
  if (fs::exists(labels_path)) {
    const Matrix raw = read_csv_matrix(labels_path, n, 1);
    ds.labels.resize(n);
    for (Index i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(std::llround(raw(i, 0)));
  }

  ds.validate();
  apply_mask_sentinels(ds);
  return ds;
}

void write_dataset(const std::string& root, const MultiViewDataset& dataset) {
  const fs::path dir(root);
  fs::create_directories(dir);
  {
    std::ofstream meta(dir / "meta");
    meta << "n = " << dataset.n() << "\n";
    meta << "v = " << dataset.n_views() << "\n";
    meta << "k = " << dataset.n_clusters << "\n";
    meta << "dims = ";
    for (int v = 0; v < dataset.n_views(); ++v)
      meta << (v ? "," : "") << dataset.dim(v);
    meta << "\n";
  }
  for (int v = 0; v < dataset.n_views(); ++v) {
    std::ofstream out(dir / ("view_" + std::to_string(v + 1) + ".csv"));
    out.precision(17);
    const Matrix& x = dataset.views[v];
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < x.cols(); ++j) {
        // Write zeros for sentinel rows; the mask is authoritative on load.
        const double value = dataset.mask(i, v) ? x(i, j) : 0.0;
        out << (j ? "," : "") << value;
      }
      out << "\n";
    }
  }
  write_mask_csv((dir / "mask.csv").string(), dataset.mask);
  if (!dataset.labels.empty()) {
    std::ofstream out(dir / "labels.csv");
    for (int y : dataset.labels) out << y << "\n";
  }
}

void write_mask_csv(const std::string& path, const BoolMatrix& mask) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index v = 0; v < mask.cols(); ++v) out << (v ? "," : "") << (mask(i, v) ? 1 : 0);
    out << "\n";
  }
}

BoolMatrix read_mask_csv(const std::string& path, Index n, int v) {
  const Matrix raw = read_csv_matrix(path, n, v);
  BoolMatrix mask(n, v);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < v; ++j) {
      if (raw(i, j) != 0.0 && raw(i, j) != 1.0)
        throw DataError(path + ": mask entries must be 0 or 1");
      mask(i, j) = raw(i, j) != 0.0;
    }
  return mask;
}

}  // namespace freecsl
