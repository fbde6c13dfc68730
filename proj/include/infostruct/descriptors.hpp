#pragma once

// Descriptors turn a set of vectors into a categorical distribution:
//   soft    - scaled-softmax cosine responsibilities against sphere anchors
//   binned  - per-dimension equal-width histograms on the attested range
//   kmeans  - k-means++ / Lloyd cluster occupancy
// plus the histogram conversion from discrete to differential entropy.

#include "infostruct/core_info.hpp"
#include "infostruct/errors.hpp"
#include "infostruct/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace infostruct {

/// count x dim matrix of finite activations.
struct RepresentationSet {
  Matrix vectors;
  std::optional<int> layer_index;

  RepresentationSet() = default;
  explicit RepresentationSet(Matrix v, std::optional<int> layer = std::nullopt)
      : vectors(std::move(v)), layer_index(layer) {
    validate();
  }

  void validate() const {
    if (vectors.rows() < 1 || vectors.cols() < 1) throw ValidationError("representation set: empty matrix");
    if (!vectors.allFinite()) throw ValidationError("representation set: non-finite entries");
  }

  [[nodiscard]] std::size_t count() const { return static_cast<std::size_t>(vectors.rows()); }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
};

/// n unit-norm anchor points on the sphere, plus the softmax scale.
struct AnchorSet {
  Matrix points;  ///< n x dim
  std::uint64_t seed = 0;
  double scale = 100.0;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
};

inline constexpr std::size_t kDefaultAnchors = 50;
inline constexpr double kDefaultScale = 100.0;
inline constexpr std::size_t kDefaultSubspaceWidth = 32;

/// Normalised standard-normal draws; identical (seed, n, dim) gives identical points.
inline AnchorSet sample_anchors(std::size_t dim, std::size_t n, std::uint64_t seed, double scale = kDefaultScale) {
  if (dim < 1) throw ValidationError("anchors: dim must be at least 1");
  if (n < 2) throw ValidationError("anchors: need at least 2 anchors");
  if (!(scale > 0.0)) throw ValidationError("anchors: scale must be positive");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  AnchorSet a{Matrix(n, dim), seed, scale};
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (std::size_t j = 0; j < dim; ++j) a.points(i, j) = normal(gen);
      norm = a.points.row(i).norm();
    } while (norm == 0.0);
    a.points.row(i) /= norm;
  }
  return a;
}

enum class Backend { soft, binned, kmeans };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::soft: return "soft";
    case Backend::binned: return "binned";
    case Backend::kmeans: return "kmeans";
  }
  return "?";
}

struct DescriptorParams {
  std::size_t events = 0;  ///< anchors, bins or clusters
  double scale = 0.0;
  std::uint64_t seed = 0;
  std::size_t subspace_width = 0;
};

struct Descriptor {
  Categorical dist;
  Backend backend = Backend::soft;
  DescriptorParams params;
  std::size_t samples = 0;   ///< rows that contributed
  std::size_t nonempty = 0;  ///< events counted as occupied
  std::size_t excluded_rows = 0;
  /// Per-row event responsibilities (count x events); excluded rows are zero.
  std::optional<Matrix> responsibilities;
  /// 1 for rows that contributed, 0 for excluded rows.
  std::vector<std::uint8_t> valid;

  [[nodiscard]] double entropy() const { return infostruct::entropy(dist); }
};

namespace detail {

struct SoftAccumulation {
  Matrix responsibilities;
  std::vector<std::uint8_t> valid;
  std::vector<double> column_mass;
  std::size_t excluded = 0;
};

/// Row-wise softmax of logits(row) with per-block compensated column sums,
/// merged in block order. `logits` fills a length-n buffer for row i and
/// returns false when the row must be excluded.
template <class LogitFn>
SoftAccumulation soft_accumulate(std::size_t count, std::size_t n, LogitFn&& logits) {
  SoftAccumulation acc;
  acc.responsibilities = Matrix::Zero(count, n);
  acc.valid.assign(count, 0);
  const std::size_t blocks = block_count(count);
  std::vector<std::vector<CompensatedSum>> partial(blocks, std::vector<CompensatedSum>(n));
  for_each_block(count, [&](std::size_t b, std::size_t begin, std::size_t end) {
    std::vector<double> z(n);
    auto& sums = partial[b];
    for (std::size_t i = begin; i < end; ++i) {
      if (!logits(i, z)) continue;
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        z[j] = std::exp(z[j] - m);
        s += z[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double r = z[j] / s;
        acc.responsibilities(i, j) = r;
        sums[j].add(r);
      }
      acc.valid[i] = 1;
    }
  });
  acc.column_mass.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    CompensatedSum s;
    for (std::size_t b = 0; b < blocks; ++b) s.add(partial[b][j].value());
    acc.column_mass[j] = s.value();
  }
  for (auto v : acc.valid) acc.excluded += v == 0;
  return acc;
}

/// Events whose probability clears the floor 1 / (10 n samples).
inline std::size_t soft_nonempty(const Categorical& dist, std::size_t samples) {
  const double floor = 1.0 / (10.0 * static_cast<double>(dist.support_size()) * static_cast<double>(samples));
  std::size_t m = 0;
  for (double p : dist.probs()) m += p > floor;
  return std::max<std::size_t>(m, 1);
}

}  // namespace detail

/// Sum over rows of softmax(scale * cos(row, anchor)), renormalised.
/// Zero-norm rows are excluded and counted in `excluded_rows`.
inline Descriptor soft_descriptor(const Matrix& Y, const AnchorSet& anchors) {
  if (Y.rows() < 1 || Y.cols() < 1) throw ValidationError("soft descriptor: empty representation set");
  if (static_cast<std::size_t>(Y.cols()) != anchors.dim()) {
    throw ShapeError("soft descriptor: representation dim " + std::to_string(Y.cols()) + " != anchor dim " +
                     std::to_string(anchors.dim()));
  }
  if (!Y.allFinite()) throw ValidationError("soft descriptor: non-finite entries");
  const std::size_t n = anchors.size();
  auto acc = detail::soft_accumulate(static_cast<std::size_t>(Y.rows()), n, [&](std::size_t i, std::vector<double>& z) {
    const double norm = Y.row(i).norm();
    if (!(norm > 0.0)) return false;
    const auto u = Y.row(i) / norm;
    for (std::size_t j = 0; j < n; ++j) z[j] = anchors.scale * u.dot(anchors.points.row(j));
    return true;
  });
  const std::size_t samples = Y.rows() - acc.excluded;
  if (samples == 0) throw ValidationError("soft descriptor: every row has zero norm");
  Descriptor d;
  d.dist = Categorical::from_masses(acc.column_mass);
  d.backend = Backend::soft;
  d.params = {n, anchors.scale, anchors.seed, anchors.dim()};
  d.samples = samples;
  d.nonempty = detail::soft_nonempty(d.dist, samples);
  d.excluded_rows = acc.excluded;
  d.responsibilities = std::move(acc.responsibilities);
  d.valid = std::move(acc.valid);
  return d;
}

inline Descriptor soft_descriptor(const RepresentationSet& Y, const AnchorSet& anchors) {
  return soft_descriptor(Y.vectors, anchors);
}

/// Entropy of a soft descriptor, optionally Miller-Madow corrected (capped at ln n).
inline double soft_entropy(const Descriptor& d, bool miller_madow_correction) {
  const double h = d.entropy();
  if (!miller_madow_correction) return h;
  return miller_madow(h, d.nonempty, d.samples, std::log(static_cast<double>(d.dist.support_size())));
}

inline double soft_entropy(const Matrix& Y, const AnchorSet& anchors, bool miller_madow_correction = false) {
  return soft_entropy(soft_descriptor(Y, anchors), miller_madow_correction);
}

/// Column block [chunk * width, (chunk + 1) * width).
inline Matrix column_chunk(const Matrix& Y, std::size_t chunk, std::size_t width) {
  return Y.middleCols(static_cast<Eigen::Index>(chunk * width), static_cast<Eigen::Index>(width));
}

inline std::size_t checked_chunks(std::size_t dim, std::size_t width) {
  if (width < 1) throw ValidationError("subspace: width must be at least 1");
  if (width > dim) {
    throw ValidationError("subspace: width " + std::to_string(width) + " exceeds dim " + std::to_string(dim));
  }
  if (dim % width != 0) {
    throw ValidationError("subspace: dim " + std::to_string(dim) + " is not divisible by width " +
                          std::to_string(width) + "; ragged final chunk rejected");
  }
  return dim / width;
}

/// Anchors for each chunk use seed + chunk index.
inline std::vector<AnchorSet> subspace_anchors(std::size_t dim, std::size_t width, std::size_t n, std::uint64_t seed,
                                               double scale) {
  const std::size_t chunks = checked_chunks(dim, width);
  std::vector<AnchorSet> out;
  out.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) out.push_back(sample_anchors(width, n, seed + c, scale));
  return out;
}

inline std::vector<Descriptor> subspace_descriptors(const Matrix& Y, std::span<const AnchorSet> chunk_anchors) {
  if (chunk_anchors.empty()) throw ValidationError("subspace: no chunks");
  const std::size_t width = chunk_anchors.front().dim();
  const std::size_t chunks = checked_chunks(static_cast<std::size_t>(Y.cols()), width);
  if (chunks != chunk_anchors.size()) throw ShapeError("subspace: anchor set count does not match chunk count");
  std::vector<Descriptor> out;
  out.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    out.push_back(soft_descriptor(column_chunk(Y, c, width), chunk_anchors[c]));
    out.back().params.subspace_width = width;
  }
  return out;
}

inline std::vector<Descriptor> subspace_descriptors(const Matrix& Y, std::size_t width, std::uint64_t seed,
                                                    double scale = kDefaultScale, std::size_t n = kDefaultAnchors) {
  const auto anchors = subspace_anchors(static_cast<std::size_t>(Y.cols()), width, n, seed, scale);
  return subspace_descriptors(Y, anchors);
}

struct SoftConfig {
  std::size_t anchors = kDefaultAnchors;
  double scale = kDefaultScale;
  std::uint64_t seed = 0;
  bool miller_madow = false;
};

/// Unweighted mean of chunk entropies over every chunk of every layer.
inline double subspace_entropy(std::span<const Matrix> layers, std::size_t width, const SoftConfig& cfg) {
  if (layers.empty()) throw ValidationError("subspace entropy: no layers");
  CompensatedSum acc;
  std::size_t terms = 0;
  for (const auto& Y : layers) {
    for (const auto& d : subspace_descriptors(Y, width, cfg.seed, cfg.scale, cfg.anchors)) {
      acc.add(soft_entropy(d, cfg.miller_madow));
      ++terms;
    }
  }
  return acc.value() / static_cast<double>(terms);
}

/// Mean of per-layer soft entropies using one full-width anchor set.
inline double layer_entropy(std::span<const Matrix> layers, const SoftConfig& cfg) {
  if (layers.empty()) throw ValidationError("layer entropy: empty layer list");
  const auto dim = static_cast<std::size_t>(layers.front().cols());
  for (const auto& Y : layers) {
    if (static_cast<std::size_t>(Y.cols()) != dim) throw ShapeError("layer entropy: layers differ in dim");
  }
  const auto anchors = sample_anchors(dim, cfg.anchors, cfg.seed, cfg.scale);
  CompensatedSum acc;
  for (const auto& Y : layers) acc.add(soft_entropy(Y, anchors, cfg.miller_madow));
  return acc.value() / static_cast<double>(layers.size());
}

/// Per-dimension equal-width grid over the attested [min, max].
struct BinGrid {
  std::vector<double> lo, hi;
  std::vector<std::size_t> bins;  ///< 1 for zero-width dimensions
  std::size_t configured_bins = 1;

  static BinGrid attested(const Matrix& Y, std::size_t N) {
    if (N < 1) throw ValidationError("bin grid: need at least one bin");
    if (Y.rows() < 1) throw ValidationError("bin grid: empty representation set");
    BinGrid g;
    g.configured_bins = N;
    const auto dims = static_cast<std::size_t>(Y.cols());
    g.lo.resize(dims);
    g.hi.resize(dims);
    g.bins.resize(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      g.lo[d] = Y.col(d).minCoeff();
      g.hi[d] = Y.col(d).maxCoeff();
      g.bins[d] = g.hi[d] > g.lo[d] ? N : 1;
    }
    return g;
  }

  [[nodiscard]] std::size_t dims() const { return lo.size(); }

  /// The maximum value falls in the top bin.
  [[nodiscard]] std::size_t bin_of(std::size_t d, double y) const {
    if (bins[d] == 1) return 0;
    const double t = (y - lo[d]) / (hi[d] - lo[d]) * static_cast<double>(bins[d]);
    if (!(t > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(t), bins[d] - 1);
  }

  [[nodiscard]] double width(std::size_t d) const { return bins[d] == 1 ? 0.0 : (hi[d] - lo[d]) / bins[d]; }
};

using IndexMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BinnedDescriptor {
  BinGrid grid;
  std::vector<Descriptor> per_dim;
  IndexMatrix bin_index;  ///< count x dim
  /// Mean over dimensions of per-dimension entropy (Miller-Madow if requested).
  double h_dw = 0.0;
};

inline IndexMatrix assign_bins(const Matrix& Y, const BinGrid& grid) {
  IndexMatrix idx(Y.rows(), Y.cols());
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    for (Eigen::Index d = 0; d < Y.cols(); ++d) idx(i, d) = static_cast<std::int32_t>(grid.bin_of(d, Y(i, d)));
  }
  return idx;
}

/// Dimension-wise histogram entropy with N equal-width bins per dimension.
inline BinnedDescriptor binned_descriptor(const Matrix& Y, std::size_t N, bool miller_madow_correction = true) {
  if (!Y.allFinite()) throw ValidationError("binned descriptor: non-finite entries");
  BinnedDescriptor out;
  out.grid = BinGrid::attested(Y, N);
  out.bin_index = assign_bins(Y, out.grid);
  const auto count = static_cast<std::size_t>(Y.rows());
  CompensatedSum hsum;
  for (std::size_t d = 0; d < out.grid.dims(); ++d) {
    std::vector<double> counts(out.grid.bins[d], 0.0);
    for (std::size_t i = 0; i < count; ++i) counts[out.bin_index(i, d)] += 1.0;
    Descriptor desc;
    desc.dist = Categorical::from_masses(counts);
    desc.backend = Backend::binned;
    desc.params = {N, 0.0, 0, 1};
    desc.samples = count;
    desc.nonempty = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
    desc.valid.assign(count, 1);
    double h = desc.entropy();
    if (miller_madow_correction) h = miller_madow(h, desc.nonempty, count, std::log(static_cast<double>(N)));
    hsum.add(h);
    out.per_dim.push_back(std::move(desc));
  }
  out.h_dw = hsum.value() / static_cast<double>(out.grid.dims());
  return out;
}

struct KMeansResult {
  Descriptor descriptor;
  Matrix centers;
  std::vector<int> assignment;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Index of the nearest row of `sites` for each row of X (ties -> lowest index).
inline void nearest_sites(const Matrix& X, const Matrix& sites, std::vector<int>& out, std::vector<double>* dist2 = nullptr) {
  const Eigen::VectorXd site_sq = sites.rowwise().squaredNorm();
  out.resize(X.rows());
  if (dist2) dist2->resize(X.rows());
  constexpr Eigen::Index kBlock = 4096;
  for (Eigen::Index b = 0; b < X.rows(); b += kBlock) {
    const Eigen::Index rows = std::min(kBlock, X.rows() - b);
    const Matrix dots = X.middleRows(b, rows) * sites.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index best = 0;
      double best_v = site_sq(0) - 2.0 * dots(i, 0);
      for (Eigen::Index j = 1; j < sites.rows(); ++j) {
        const double v = site_sq(j) - 2.0 * dots(i, j);
        if (v < best_v) {
          best_v = v;
          best = j;
        }
      }
      out[b + i] = static_cast<int>(best);
      if (dist2) (*dist2)[b + i] = std::max(0.0, best_v + X.row(b + i).squaredNorm());
    }
  }
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations until assignments stop
/// changing or max_iters is reached. Empty clusters keep their previous center.
inline KMeansResult kmeans_descriptor(const Matrix& Y, std::size_t k, std::uint64_t seed, int max_iters = 100) {
  const auto count = static_cast<std::size_t>(Y.rows());
  if (k < 1) throw ValidationError("kmeans: k must be at least 1");
  if (k > count) throw ValidationError("kmeans: k = " + std::to_string(k) + " exceeds row count " + std::to_string(count));
  if (!Y.allFinite()) throw ValidationError("kmeans: non-finite entries");

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  KMeansResult res;
  res.centers.resize(static_cast<Eigen::Index>(k), Y.cols());
  std::uniform_int_distribution<std::size_t> first(0, count - 1);
  res.centers.row(0) = Y.row(first(gen));
  std::vector<double> d2(count);
  for (std::size_t i = 0; i < count; ++i) d2[i] = (Y.row(i) - res.centers.row(0)).squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = compensated_sum(d2);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit(gen) * total;
      double run = 0.0;
      pick = count - 1;
      for (std::size_t i = 0; i < count; ++i) {
        run += d2[i];
        if (run > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(gen);
    }
    res.centers.row(c) = Y.row(pick);
    for (std::size_t i = 0; i < count; ++i) d2[i] = std::min(d2[i], (Y.row(i) - res.centers.row(c)).squaredNorm());
  }

  std::vector<int> assign(count, -1), next;
  for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
    detail::nearest_sites(Y, res.centers, next);
    if (next == assign) {
      res.converged = true;
      break;
    }
    assign.swap(next);
    Matrix sums = Matrix::Zero(res.centers.rows(), res.centers.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < count; ++i) {
      sums.row(assign[i]) += Y.row(i);
      ++sizes[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) res.centers.row(c) = sums.row(c) / static_cast<double>(sizes[c]);
    }
  }
  if (!res.converged) detail::nearest_sites(Y, res.centers, assign);
  res.assignment = std::move(assign);

  std::vector<double> occupancy(k, 0.0);
  for (int a : res.assignment) occupancy[a] += 1.0;
  Descriptor& d = res.descriptor;
  d.dist = Categorical::from_masses(occupancy);
  d.backend = Backend::kmeans;
  d.params = {k, 0.0, seed, static_cast<std::size_t>(Y.cols())};
  d.samples = count;
  d.nonempty = static_cast<std::size_t>(std::count_if(occupancy.begin(), occupancy.end(), [](double c) { return c > 0; }));
  d.valid.assign(count, 1);
  return res;
}

/// Histogram estimator: -sum p ln(p / w) over non-empty cells, widths in log space.
inline double to_differential_log(const Categorical& p, std::span<const double> log_widths) {
  if (log_widths.size() != p.support_size()) throw ShapeError("to_differential: width count != event count");
  CompensatedSum acc;
  for (std::size_t i = 0; i < log_widths.size(); ++i) {
    if (std::isnan(log_widths[i]) || log_widths[i] == std::numeric_limits<double>::infinity()) {
      throw ValidationError("to_differential: invalid width for cell " + std::to_string(i));
    }
    if (p[i] > 0.0) {
      if (log_widths[i] == -std::numeric_limits<double>::infinity()) {
        throw ValidationError("to_differential: non-positive width for occupied cell " + std::to_string(i));
      }
      acc.add(-p[i] * (std::log(p[i]) - log_widths[i]));
    }
  }
  return acc.value();
}

inline double to_differential(const Categorical& p, std::span<const double> widths) {
  std::vector<double> logw(widths.size());
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (!(widths[i] > 0.0) || !std::isfinite(widths[i])) {
      throw ValidationError("to_differential: non-positive width for cell " + std::to_string(i));
    }
    logw[i] = std::log(widths[i]);
  }
  return to_differential_log(p, logw);
}

/// Axis-aligned box over the attested range, expanded by `expansion` x range per side.
struct BoundingBox {
  std::vector<double> lo, hi;

  static BoundingBox attested(const Matrix& Y, double expansion = 0.01) {
    if (Y.rows() < 1) throw ValidationError("bounding box: empty sample");
    BoundingBox b;
    for (Eigen::Index d = 0; d < Y.cols(); ++d) {
      const double mn = Y.col(d).minCoeff(), mx = Y.col(d).maxCoeff();
      const double pad = (mx - mn) * expansion;
      b.lo.push_back(mn - pad);
      b.hi.push_back(mx + pad);
    }
    return b;
  }

  [[nodiscard]] std::size_t dims() const { return lo.size(); }
  [[nodiscard]] bool degenerate() const {
    for (std::size_t d = 0; d < dims(); ++d) {
      if (!(hi[d] > lo[d])) return true;
    }
    return false;
  }
  /// -inf for degenerate boxes.
  [[nodiscard]] double log_volume() const {
    CompensatedSum s;
    for (std::size_t d = 0; d < dims(); ++d) {
      if (!(hi[d] > lo[d])) return -std::numeric_limits<double>::infinity();
      s.add(std::log(hi[d] - lo[d]));
    }
    return s.value();
  }

  [[nodiscard]] Matrix sample_uniform(std::size_t count, std::uint64_t seed) const {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix out(count, dims());
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t d = 0; d < dims(); ++d) out(i, d) = lo[d] + unit(gen) * (hi[d] - lo[d]);
    }
    return out;
  }
};

/// Equal-width cells: every cell gets box volume / n.
inline std::vector<double> equal_log_widths(const BoundingBox& box, std::size_t n) {
  return std::vector<double>(n, box.log_volume() - std::log(static_cast<double>(n)));
}

enum class SiteMetric { angular, euclidean };

/// Monte-Carlo estimate of each site's Voronoi share of the box.
struct VoronoiMeasure {
  std::vector<std::uint64_t> hits;
  std::size_t probes = 0;
  /// Largest binomial standard error over cells, sqrt(f(1 - f) / probes).
  double max_stderr = 0.0;

  /// Cells with no probe hits are credited half a hit so every width stays positive.
  [[nodiscard]] std::vector<double> log_widths(const BoundingBox& box) const {
    const double logv = box.log_volume();
    std::vector<double> out(hits.size());
    for (std::size_t j = 0; j < hits.size(); ++j) {
      const double h = hits[j] > 0 ? static_cast<double>(hits[j]) : 0.5;
      out[j] = logv + std::log(h / static_cast<double>(probes));
    }
    return out;
  }
};

/// `count` points uniform in the unit cube [0, 1)^dims.
inline Matrix sample_unit_probes(std::size_t count, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(count, dims);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = unit(gen);
  return out;
}

/// Assigns unit-cube probes, mapped affinely onto the box, to their nearest
/// site: by Euclidean distance, or by largest cosine for the angular metric.
inline VoronoiMeasure voronoi_measure(const BoundingBox& box, const Matrix& sites, SiteMetric metric,
                                      const Matrix& unit_probes) {
  if (unit_probes.rows() < 1) throw ValidationError("voronoi: need at least one probe");
  if (static_cast<std::size_t>(sites.cols()) != box.dims()) throw ShapeError("voronoi: site dim != box dim");
  if (static_cast<std::size_t>(unit_probes.cols()) != box.dims()) throw ShapeError("voronoi: probe dim != box dim");
  const auto probes = static_cast<std::size_t>(unit_probes.rows());
  VoronoiMeasure m;
  m.hits.assign(sites.rows(), 0);
  m.probes = probes;
  Vector lo(box.dims()), width(box.dims());
  for (std::size_t d = 0; d < box.dims(); ++d) {
    lo(d) = box.lo[d];
    width(d) = box.hi[d] - box.lo[d];
  }
  Matrix unit_sites = sites;
  if (metric == SiteMetric::angular) {
    for (Eigen::Index j = 0; j < unit_sites.rows(); ++j) {
      const double n = unit_sites.row(j).norm();
      if (n > 0.0) unit_sites.row(j) /= n;
    }
  }
  constexpr Eigen::Index kChunk = 8192;
  std::vector<int> nearest;
  for (Eigen::Index start = 0; start < unit_probes.rows(); start += kChunk) {
    const Eigen::Index rows = std::min(kChunk, unit_probes.rows() - start);
    Matrix P = unit_probes.middleRows(start, rows) * width.asDiagonal();
    P.rowwise() += lo.transpose();
    if (metric == SiteMetric::euclidean) {
      detail::nearest_sites(P, sites, nearest);
    } else {
      const Matrix dots = P * unit_sites.transpose();
      nearest.resize(rows);
      for (Eigen::Index i = 0; i < dots.rows(); ++i) {
        Eigen::Index best = 0;
        dots.row(i).maxCoeff(&best);
        nearest[i] = static_cast<int>(best);
      }
    }
    for (int j : nearest) ++m.hits[j];
  }
  for (auto h : m.hits) {
    const double f = static_cast<double>(h) / static_cast<double>(probes);
    m.max_stderr = std::max(m.max_stderr, std::sqrt(f * (1.0 - f) / static_cast<double>(probes)));
  }
  return m;
}

inline VoronoiMeasure voronoi_measure(const BoundingBox& box, const Matrix& sites, SiteMetric metric,
                                      std::size_t probes, std::uint64_t seed) {
  if (probes < 1) throw ValidationError("voronoi: need at least one probe");
  return voronoi_measure(box, sites, metric, sample_unit_probes(probes, box.dims(), seed));
}

/// Per-dimension differential entropy of a binned descriptor, averaged over
/// dimensions with non-zero width.
inline double binned_differential(const BinnedDescriptor& b) {
  CompensatedSum acc;
  std::size_t used = 0;
  for (std::size_t d = 0; d < b.grid.dims(); ++d) {
    if (b.grid.bins[d] == 1) continue;
    const std::vector<double> w(b.grid.bins[d], b.grid.width(d));
    acc.add(to_differential(b.per_dim[d].dist, w));
    ++used;
  }
  if (used == 0) return -std::numeric_limits<double>::infinity();
  return acc.value() / static_cast<double>(used);
}

}  // namespace infostruct
