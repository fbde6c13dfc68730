#pragma once

// Validation of vector-space entropy estimators against the closed-form
// differential entropy of random multivariate normals.

#include "infostruct/descriptors.hpp"
#include "infostruct/errors.hpp"
#include "infostruct/numeric.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace infostruct::bench {

struct GaussianSpec {
  std::size_t dim = 0;
  Vector mean;
  Eigen::MatrixXd covariance;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultConditionCap = 1e3;
inline constexpr double kDefaultJitter = 1e-3;

/// Symmetric within 1e-9 and Cholesky succeeds.
inline void validate(const GaussianSpec& g) {
  const auto d = static_cast<Eigen::Index>(g.dim);
  if (g.dim < 1 || g.covariance.rows() != d || g.covariance.cols() != d || g.mean.size() != d) {
    throw ShapeError("gaussian: mean/covariance shape does not match dim");
  }
  if ((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ValidationError("gaussian: covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
  if (llt.info() != Eigen::Success) throw ValidationError("gaussian: covariance is not positive-definite");
}

/// Zero-mean Gaussian with covariance A A^T / dim + jitter I, eigen-spectrum
/// floored so the condition number is at most condition_cap.
inline GaussianSpec gaussian_from_factor(const Eigen::MatrixXd& A, std::uint64_t seed,
                                         double condition_cap = kDefaultConditionCap, double jitter = kDefaultJitter) {
  if (A.rows() < 1 || A.rows() != A.cols()) throw ShapeError("gaussian: factor must be square and non-empty");
  if (!(condition_cap >= 1.0)) throw ValidationError("gaussian: condition cap must be >= 1");
  const auto d = A.rows();
  Eigen::MatrixXd C = A * A.transpose() / static_cast<double>(d);
  C.diagonal().array() += jitter;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double floor = lambda.maxCoeff() / condition_cap;
  bool clipped = false;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda(i) < floor) {
      lambda(i) = floor;
      clipped = true;
    }
  }
  if (clipped) C = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  C = 0.5 * (C + C.transpose()).eval();
  GaussianSpec g{static_cast<std::size_t>(d), Vector::Zero(d), C, seed};
  validate(g);
  return g;
}

/// gaussian_from_factor with a seeded standard-normal A.
inline GaussianSpec random_gaussian(std::size_t dim, std::uint64_t seed, double condition_cap = kDefaultConditionCap,
                                    double jitter = kDefaultJitter) {
  if (dim < 1) throw ValidationError("gaussian: dim must be at least 1");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd A(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = normal(gen);
  }
  return gaussian_from_factor(A, seed, condition_cap, jitter);
}

/// 0.5 ln((2 pi e)^d det C), with ln det from the Cholesky factor.
inline double closed_form_entropy(const GaussianSpec& g) {
  validate(g);
  Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
  const Eigen::MatrixXd L = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
  return 0.5 * (static_cast<double>(g.dim) * std::log(2.0 * std::numbers::pi * std::numbers::e) + logdet);
}

inline Matrix sample_gaussian(const GaussianSpec& g, std::size_t count, std::uint64_t seed) {
  Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
  if (llt.info() != Eigen::Success) throw ValidationError("gaussian: covariance is not positive-definite");
  const Eigen::MatrixXd L = llt.matrixL();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix Z(count, g.dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < g.dim; ++j) Z(i, j) = normal(gen);
  }
  Matrix X = Z * L.transpose();
  X.rowwise() += g.mean.transpose();
  return X;
}

/// A differential-entropy estimate; `degenerate` marks a zero-volume cell or box.
struct Estimate {
  double nats = 0.0;
  double discrete_nats = 0.0;
  bool degenerate = false;
  /// Largest Monte-Carlo standard error of a cell share, when Voronoi widths are used.
  double mc_stderr = 0.0;
};

inline constexpr std::size_t kMaxJointCells = 10'000'000;

struct KeyHash {
  std::size_t operator()(const std::vector<std::uint32_t>& k) const noexcept {
    std::uint64_t h = 0x84222325CBF29CE4ULL;
    for (auto v : k) h = mix_seed(h, v);
    return static_cast<std::size_t>(h);
  }
};

/// Joint equal-width grid on the attested ranges; sparse cell counts; plug-in
/// entropy with Miller-Madow; widths = product of per-dimension bin widths.
inline Estimate estimate_full_discretization(const Matrix& samples, std::size_t bins_per_dim) {
  if (bins_per_dim < 1) throw ValidationError("full discretization: need at least one bin per dimension");
  const auto count = static_cast<std::size_t>(samples.rows());
  if (count > kMaxJointCells) {
    throw ValidationError("full discretization: " + std::to_string(count) +
                          " samples could exceed the joint-cell memory guard of 1e7 cells");
  }
  const BinGrid grid = BinGrid::attested(samples, bins_per_dim);
  std::unordered_map<std::vector<std::uint32_t>, std::uint64_t, KeyHash> cells;
  cells.reserve(count);
  std::vector<std::uint32_t> key(grid.dims());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t d = 0; d < grid.dims(); ++d) key[d] = static_cast<std::uint32_t>(grid.bin_of(d, samples(i, d)));
    ++cells[key];
  }
  std::vector<std::pair<std::vector<std::uint32_t>, std::uint64_t>> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  CompensatedSum h;
  for (const auto& [k, c] : sorted) {
    const double p = static_cast<double>(c) / static_cast<double>(count);
    h.add(-p * std::log(p));
  }
  const double cap = static_cast<double>(grid.dims()) * std::log(static_cast<double>(bins_per_dim));
  Estimate e;
  e.discrete_nats = miller_madow(std::max(0.0, h.value()), sorted.size(), count, cap);
  CompensatedSum log_cell;
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    if (grid.bins[d] == 1) {
      e.degenerate = true;
      e.nats = -std::numeric_limits<double>::infinity();
      return e;
    }
    log_cell.add(std::log(grid.width(d)));
  }
  e.nats = e.discrete_nats + log_cell.value();
  return e;
}

enum class WidthModel { equal, voronoi };
enum class Geometry { angular, euclidean };

struct SoftBenchConfig {
  std::size_t anchors = kDefaultAnchors;
  double scale = kDefaultScale;
  WidthModel width = WidthModel::equal;
  Geometry geometry = Geometry::angular;
  std::uint64_t seed = 0;
  std::size_t probes = 100'000;
  double box_expansion = 0.01;
};

/// Soft descriptor with anchors drawn uniformly in the box and logits
/// -scale * |x - a|^2 / |box diagonal|^2.
inline Descriptor euclidean_soft_descriptor(const Matrix& Y, const Matrix& anchors, double scale, double length_sq) {
  const auto n = static_cast<std::size_t>(anchors.rows());
  auto acc = detail::soft_accumulate(static_cast<std::size_t>(Y.rows()), n, [&](std::size_t i, std::vector<double>& z) {
    for (std::size_t j = 0; j < n; ++j) z[j] = -scale * (Y.row(i) - anchors.row(j)).squaredNorm() / length_sq;
    return true;
  });
  Descriptor d;
  d.dist = Categorical::from_masses(acc.column_mass);
  d.backend = Backend::soft;
  d.params = {n, scale, 0, static_cast<std::size_t>(Y.cols())};
  d.samples = static_cast<std::size_t>(Y.rows());
  d.nonempty = detail::soft_nonempty(d.dist, d.samples);
  d.valid = std::move(acc.valid);
  return d;
}

/// `unit_probes`, when given, replaces the Voronoi probes drawn from cfg.seed.
inline Estimate estimate_soft(const Matrix& samples, const SoftBenchConfig& cfg, const Matrix* unit_probes = nullptr) {
  const BoundingBox box = BoundingBox::attested(samples, cfg.box_expansion);
  Estimate e;
  if (box.degenerate()) {
    e.degenerate = true;
    e.nats = -std::numeric_limits<double>::infinity();
    return e;
  }
  Descriptor desc;
  Matrix sites;
  if (cfg.geometry == Geometry::angular) {
    const AnchorSet anchors = sample_anchors(static_cast<std::size_t>(samples.cols()), cfg.anchors, cfg.seed, cfg.scale);
    desc = soft_descriptor(samples, anchors);
    sites = anchors.points;
  } else {
    if (cfg.anchors < 2) throw ValidationError("soft estimate: need at least 2 anchors");
    sites = box.sample_uniform(cfg.anchors, cfg.seed);
    double length_sq = 0.0;
    for (std::size_t d = 0; d < box.dims(); ++d) length_sq += (box.hi[d] - box.lo[d]) * (box.hi[d] - box.lo[d]);
    desc = euclidean_soft_descriptor(samples, sites, cfg.scale, length_sq);
  }
  e.discrete_nats = desc.entropy();
  std::vector<double> logw;
  if (cfg.width == WidthModel::equal) {
    logw = equal_log_widths(box, cfg.anchors);
  } else {
    const auto metric = cfg.geometry == Geometry::angular ? SiteMetric::angular : SiteMetric::euclidean;
    const auto vm = unit_probes ? voronoi_measure(box, sites, metric, *unit_probes)
                                : voronoi_measure(box, sites, metric, cfg.probes, mix_seed(cfg.seed, 0xB0));
    logw = vm.log_widths(box);
    e.mc_stderr = vm.max_stderr;
  }
  e.nats = to_differential_log(desc.dist, logw);
  return e;
}

struct KMeansBenchConfig {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  int max_iters = 100;
  std::size_t probes = 100'000;
  double box_expansion = 0.01;
};

/// Cluster occupancy with Monte-Carlo Voronoi cell volumes over the box.
inline Estimate estimate_kmeans(const Matrix& samples, const KMeansBenchConfig& cfg,
                               const Matrix* unit_probes = nullptr) {
  const auto km = kmeans_descriptor(samples, cfg.k, cfg.seed, cfg.max_iters);
  const BoundingBox box = BoundingBox::attested(samples, cfg.box_expansion);
  Estimate e;
  e.discrete_nats = km.descriptor.entropy();
  if (box.degenerate()) {
    e.degenerate = true;
    e.nats = -std::numeric_limits<double>::infinity();
    return e;
  }
  if (cfg.k == 1) {
    e.nats = box.log_volume();
    return e;
  }
  const auto vm = unit_probes ? voronoi_measure(box, km.centers, SiteMetric::euclidean, *unit_probes)
                              : voronoi_measure(box, km.centers, SiteMetric::euclidean, cfg.probes, mix_seed(cfg.seed, 0xC0));
  e.mc_stderr = vm.max_stderr;
  e.nats = to_differential_log(km.descriptor.dist, vm.log_widths(box));
  return e;
}

/// Method names accepted by the sweep. "all" expands to the first four.
inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"full_discretization", "soft_equal", "soft_voronoi", "kmeans",
                                          "soft_equal_euclidean", "soft_voronoi_euclidean"};
  return m;
}

inline std::vector<std::string> expand_methods(const std::vector<std::string>& requested) {
  std::vector<std::string> out;
  for (const auto& r : requested) {
    if (r == "all") {
      for (std::size_t i = 0; i < 4; ++i) out.push_back(known_methods()[i]);
    } else if (std::find(known_methods().begin(), known_methods().end(), r) != known_methods().end()) {
      out.push_back(r);
    } else {
      throw ValidationError("bench: unknown method '" + r + "'");
    }
  }
  return out;
}

struct BenchRow {
  std::string method;
  std::size_t dim = 0;
  std::size_t samples = 0;
  std::size_t cells = 0;
  std::size_t trial = 0;
  double estimate = 0.0;
  double truth = 0.0;
  double error = 0.0;  ///< estimate - truth
  std::string status = "ok";
  /// Largest Voronoi cell-share standard error; 0 for methods without probes.
  double mc_stderr = 0.0;
};

struct SweepConfig {
  std::vector<std::size_t> dims{16, 64};
  std::vector<std::size_t> sample_counts{100, 1000, 10000};
  std::vector<std::size_t> cells{10, 100};
  std::vector<std::string> methods{"all"};
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  double scale = kDefaultScale;
  std::size_t probes = 100'000;
  double box_expansion = 0.01;
  double condition_cap = kDefaultConditionCap;
  int kmeans_max_iters = 100;
  unsigned jobs = 0;  ///< 0 = hardware concurrency
};

inline bool uses_voronoi(const std::string& method) { return method == "kmeans" || method.starts_with("soft_voronoi"); }

inline Estimate run_method(const std::string& method, const Matrix& X, std::size_t cells, std::uint64_t seed,
                           const SweepConfig& cfg, const Matrix* unit_probes = nullptr) {
  if (method == "full_discretization") return estimate_full_discretization(X, cells);
  if (method == "kmeans") {
    return estimate_kmeans(X, {cells, seed, cfg.kmeans_max_iters, cfg.probes, cfg.box_expansion}, unit_probes);
  }
  SoftBenchConfig s;
  s.anchors = cells;
  s.scale = cfg.scale;
  s.seed = seed;
  s.probes = cfg.probes;
  s.box_expansion = cfg.box_expansion;
  s.width = method.starts_with("soft_voronoi") ? WidthModel::voronoi : WidthModel::equal;
  s.geometry = method.ends_with("_euclidean") ? Geometry::euclidean : Geometry::angular;
  return estimate_soft(X, s, unit_probes);
}

/// Full Cartesian sweep. Each (dim, trial) draws one Gaussian and one sample
/// matrix; smaller sample counts use its leading rows, so every method and
/// sample count within a trial sees nested, identical data. Voronoi estimates
/// of a trial share one set of unit-cube probes, mapped onto each bounding box.
/// Rows are ordered by (method, dim, samples, cells, trial).
inline std::vector<BenchRow> run_sweep(const SweepConfig& cfg) {
  if (cfg.dims.empty() || cfg.sample_counts.empty() || cfg.cells.empty() || cfg.methods.empty() || cfg.trials == 0) {
    throw ValidationError("bench: dims, samples, cells, methods and trials must be non-empty");
  }
  const auto methods = expand_methods(cfg.methods);
  const std::size_t max_samples = *std::max_element(cfg.sample_counts.begin(), cfg.sample_counts.end());

  struct Job {
    std::size_t dim_index, trial;
  };
  std::vector<Job> jobs;
  for (std::size_t di = 0; di < cfg.dims.size(); ++di) {
    for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({di, t});
  }

  const std::size_t per_job = cfg.sample_counts.size() * cfg.cells.size() * methods.size();
  std::vector<BenchRow> slots(jobs.size() * per_job);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto [di, trial] = jobs[j];
      const std::size_t dim = cfg.dims[di];
      const std::uint64_t trial_seed = mix_seed(mix_seed(cfg.seed, dim), trial);
      double truth = std::numeric_limits<double>::quiet_NaN();
      Matrix X, probes;
      std::string setup_error;
      try {
        const auto g = random_gaussian(dim, trial_seed, cfg.condition_cap);
        truth = closed_form_entropy(g);
        X = sample_gaussian(g, max_samples, mix_seed(trial_seed, 1));
        if (std::any_of(methods.begin(), methods.end(), uses_voronoi)) {
          if (cfg.probes < 1) throw ValidationError("voronoi: need at least one probe");
          probes = sample_unit_probes(cfg.probes, dim, mix_seed(trial_seed, 3));
        }
      } catch (const std::exception& ex) {
        setup_error = ex.what();
      }
      std::size_t slot = j * per_job;
      for (std::size_t si = 0; si < cfg.sample_counts.size(); ++si) {
        const std::size_t n = cfg.sample_counts[si];
        for (std::size_t ci = 0; ci < cfg.cells.size(); ++ci) {
          for (std::size_t mi = 0; mi < methods.size(); ++mi, ++slot) {
            BenchRow row{methods[mi], dim, n, cfg.cells[ci], trial, 0.0, truth, 0.0, "ok", 0.0};
            try {
              if (!setup_error.empty()) throw Error(setup_error);
              const Matrix sub = X.topRows(static_cast<Eigen::Index>(n));
              const auto est = run_method(methods[mi], sub, cfg.cells[ci], mix_seed(trial_seed, 2), cfg,
                                          uses_voronoi(methods[mi]) ? &probes : nullptr);
              row.estimate = est.nats;
              row.error = row.estimate - row.truth;
              row.mc_stderr = est.mc_stderr;
              if (est.degenerate) row.status = "degenerate";
            } catch (const std::exception& ex) {
              row.estimate = std::numeric_limits<double>::quiet_NaN();
              row.error = std::numeric_limits<double>::quiet_NaN();
              row.status = std::string("error: ") + ex.what();
            }
            slots[slot] = std::move(row);
          }
        }
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.jobs ? cfg.jobs : worker_count(), jobs.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  auto method_rank = [&](const std::string& m) {
    return static_cast<std::size_t>(std::find(methods.begin(), methods.end(), m) - methods.begin());
  };
  std::stable_sort(slots.begin(), slots.end(), [&](const BenchRow& a, const BenchRow& b) {
    return std::tuple(method_rank(a.method), a.dim, a.samples, a.cells, a.trial) <
           std::tuple(method_rank(b.method), b.dim, b.samples, b.cells, b.trial);
  });
  return slots;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "method,dim,samples,cells,trial,estimate_nats,truth_nats,error_nats,status\n";
  for (const auto& r : rows) {
    out << csv_field(r.method) << ',' << r.dim << ',' << r.samples << ',' << r.cells << ',' << r.trial << ','
        << format_double(r.estimate) << ',' << format_double(r.truth) << ',' << format_double(r.error) << ','
        << csv_field(r.status) << '\n';
  }
}

}  // namespace infostruct::bench
