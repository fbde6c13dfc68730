#include "infostruct/estimator_bench.hpp"
#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace infostruct;
using namespace infostruct::bench;

namespace {

GaussianSpec diagonal(std::vector<double> variances) {
  const auto d = static_cast<Eigen::Index>(variances.size());
  GaussianSpec g{variances.size(), Vector::Zero(d), Eigen::MatrixXd::Zero(d, d), 0};
  for (Eigen::Index i = 0; i < d; ++i) g.covariance(i, i) = variances[i];
  return g;
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.dims = {2, 3};
  cfg.sample_counts = {50, 200};
  cfg.cells = {4};
  cfg.trials = 3;
  cfg.probes = 2000;
  cfg.jobs = 1;
  return cfg;
}

}  // namespace

TEST(ClosedForm, StandardCases) {
  EXPECT_NEAR(closed_form_entropy(diagonal({1.0})), 1.4189385332046727, 1e-12);
  EXPECT_NEAR(closed_form_entropy(diagonal({1.0, 1.0})), 2.8378770664093453, 1e-12);
  EXPECT_NEAR(closed_form_entropy(diagonal({4.0})), 2.1120857137646180, 1e-12);
}

TEST(ClosedForm, MatchesEigenvalueOracle) {
  for (std::size_t dim : {1, 2, 5, 16, 64}) {
    const auto g = random_gaussian(dim, 100 + dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.covariance);
    oracle::Vec lambda;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) lambda.push_back(eig.eigenvalues()(i));
    EXPECT_NEAR(closed_form_entropy(g), static_cast<double>(oracle::gaussian_entropy(lambda)), 1e-9) << dim;
  }
}

TEST(Gaussian, FromFactorCovariance) {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
  const auto g = gaussian_from_factor(A, 0);
  EXPECT_TRUE(g.covariance.isApprox(Eigen::MatrixXd::Identity(4, 4) * (0.25 + kDefaultJitter), 1e-12));
  EXPECT_TRUE(g.mean.isZero());
}

TEST(Gaussian, ConditionCapFloorsSpectrum) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 100.0;
  const auto g = gaussian_from_factor(A, 0, 1e3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.covariance);
  EXPECT_NEAR(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff(), 1e3, 1e-6);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = random_gaussian(32, seed, 50.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(r.covariance);
    EXPECT_LE(e.eigenvalues().maxCoeff() / e.eigenvalues().minCoeff(), 50.0 * (1 + 1e-9));
  }
}

TEST(Gaussian, ValidationErrors) {
  auto g = diagonal({1.0, 1.0});
  g.covariance(0, 1) = 0.5;
  EXPECT_THROW(validate(g), ValidationError);
  g = diagonal({1.0, -1.0});
  EXPECT_THROW(validate(g), ValidationError);
  g = diagonal({1.0, 1.0});
  g.mean = Vector::Zero(3);
  EXPECT_THROW(validate(g), ShapeError);
  EXPECT_THROW(gaussian_from_factor(Eigen::MatrixXd::Zero(2, 3), 0), ShapeError);
  EXPECT_THROW(gaussian_from_factor(Eigen::MatrixXd::Identity(2, 2), 0, 0.5), ValidationError);
  EXPECT_THROW(random_gaussian(0, 0), ValidationError);
}

TEST(Gaussian, SampleCovarianceAndDeterminism) {
  const auto g = random_gaussian(3, 9);
  const Matrix X = sample_gaussian(g, 100000, 1);
  const Matrix centered = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd S = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  EXPECT_LT((S - g.covariance).cwiseAbs().maxCoeff(), 0.03 * g.covariance.diagonal().maxCoeff());
  EXPECT_EQ(X, sample_gaussian(g, 100000, 1));
  EXPECT_NE(X, sample_gaussian(g, 100000, 2));
}

TEST(FullDiscretization, UniformSquareNearZero) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(200000, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(gen);
  const auto e = estimate_full_discretization(X, 10);
  EXPECT_FALSE(e.degenerate);
  EXPECT_NEAR(e.discrete_nats, std::log(100.0), 1e-3);
  EXPECT_NEAR(e.nats, 0.0, 0.01);
}

TEST(FullDiscretization, StandardNormal1D) {
  const Matrix X = sample_gaussian(diagonal({1.0}), 100000, 4);
  EXPECT_NEAR(estimate_full_discretization(X, 20).nats, 1.4189385332046727, 0.05);
}

TEST(FullDiscretization, DegenerateAndErrors) {
  Matrix X(10, 2);
  X.col(0).setConstant(1.0);
  X.col(1).setLinSpaced(0.0, 1.0);
  const auto e = estimate_full_discretization(X, 4);
  EXPECT_TRUE(e.degenerate);
  EXPECT_TRUE(std::isinf(e.nats) && e.nats < 0);
  EXPECT_THROW(estimate_full_discretization(X, 0), ValidationError);
}

TEST(FullDiscretization, SparseHighDimUnderestimates) {
  // Every sample lands in its own joint cell, so the discrete part saturates at ln N.
  const auto g = random_gaussian(64, 5);
  const Matrix X = sample_gaussian(g, 100, 6);
  const auto e = estimate_full_discretization(X, 10);
  EXPECT_LE(e.discrete_nats, std::log(100.0) + 100.0 / 200.0 + 1e-12);
  EXPECT_LT(e.nats, closed_form_entropy(g));
}

TEST(Soft, DegenerateBox) {
  const Matrix X = Matrix::Constant(20, 3, 2.0);
  SoftBenchConfig cfg;
  cfg.anchors = 5;
  EXPECT_TRUE(estimate_soft(X, cfg).degenerate);
  cfg.geometry = Geometry::euclidean;
  EXPECT_TRUE(estimate_soft(X, cfg).degenerate);
}

TEST(Soft, EqualWidthIsDiscretePlusLogCellVolume) {
  const Matrix X = sample_gaussian(random_gaussian(4, 1), 500, 2);
  SoftBenchConfig cfg;
  cfg.anchors = 10;
  const auto e = estimate_soft(X, cfg);
  const auto box = BoundingBox::attested(X, cfg.box_expansion);
  EXPECT_NEAR(e.nats, e.discrete_nats + box.log_volume() - std::log(10.0), 1e-9);
  EXPECT_EQ(e.mc_stderr, 0.0);
}

TEST(Soft, VoronoiReportsStderrAndIsDeterministic) {
  const Matrix X = sample_gaussian(random_gaussian(3, 1), 300, 2);
  SoftBenchConfig cfg;
  cfg.anchors = 8;
  cfg.width = WidthModel::voronoi;
  cfg.probes = 5000;
  const auto a = estimate_soft(X, cfg), b = estimate_soft(X, cfg);
  EXPECT_GT(a.mc_stderr, 0.0);
  EXPECT_EQ(a.nats, b.nats);
  cfg.geometry = Geometry::euclidean;
  EXPECT_TRUE(std::isfinite(estimate_soft(X, cfg).nats));
  cfg.anchors = 1;
  EXPECT_THROW(estimate_soft(X, cfg), ValidationError);
}

TEST(KMeans, SingleClusterIsBoxVolume) {
  const Matrix X = sample_gaussian(random_gaussian(2, 3), 200, 4);
  const auto e = estimate_kmeans(X, {1, 0, 100, 1000, 0.01});
  EXPECT_EQ(e.discrete_nats, 0.0);
  EXPECT_NEAR(e.nats, BoundingBox::attested(X, 0.01).log_volume(), 1e-12);
}

TEST(KMeans, TwoBlobsDiscreteLn2) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n(0.0, 0.1);
  Matrix X(400, 2);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double c = i % 2 ? 10.0 : -10.0;
    X(i, 0) = c + n(gen);
    X(i, 1) = n(gen);
  }
  const auto e = estimate_kmeans(X, {2, 1, 100, 4000, 0.01});
  EXPECT_NEAR(e.discrete_nats, std::log(2.0), 1e-12);
  EXPECT_GT(e.mc_stderr, 0.0);
}

TEST(Sweep, RowCountOrderAndTruth) {
  const auto cfg = small_sweep();
  const auto rows = run_sweep(cfg);
  ASSERT_EQ(rows.size(), 4u * 2 * 2 * 1 * 3);
  const auto methods = expand_methods({"all"});
  std::map<std::pair<std::size_t, std::size_t>, double> truth;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    EXPECT_EQ(r.method, methods[i / 12]);
    if (i > 0 && rows[i - 1].method == r.method) {
      EXPECT_LE(std::tuple(rows[i - 1].dim, rows[i - 1].samples, rows[i - 1].trial),
                std::tuple(r.dim, r.samples, r.trial));
    }
    EXPECT_EQ(r.status, "ok");
    EXPECT_DOUBLE_EQ(r.error, r.estimate - r.truth);
    auto [it, inserted] = truth.emplace(std::pair(r.dim, r.trial), r.truth);
    if (!inserted) {
      EXPECT_EQ(it->second, r.truth);
    }
  }
  EXPECT_EQ(truth.size(), 6u);
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  auto cfg = small_sweep();
  const auto a = run_sweep(cfg);
  cfg.jobs = 3;
  const auto b = run_sweep(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].method, b[i].method);
    EXPECT_EQ(a[i].estimate, b[i].estimate) << i;
    EXPECT_EQ(a[i].truth, b[i].truth);
  }
  cfg.seed = 1;
  EXPECT_NE(run_sweep(cfg)[0].truth, a[0].truth);
}

TEST(Sweep, NestedSamplesShareData) {
  // A method whose estimate depends only on the first rows sees the same prefix.
  auto cfg = small_sweep();
  cfg.methods = {"full_discretization"};
  cfg.sample_counts = {50, 50};
  const auto rows = run_sweep(cfg);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].dim == rows[i + 1].dim && rows[i].trial == rows[i + 1].trial) {
      EXPECT_EQ(rows[i].estimate, rows[i + 1].estimate);
    }
  }
}

TEST(Sweep, DegenerateRowsAreMarked) {
  auto cfg = small_sweep();
  cfg.methods = {"full_discretization"};
  cfg.cells = {1};
  for (const auto& r : run_sweep(cfg)) EXPECT_EQ(r.status, "degenerate");
}

TEST(Sweep, Errors) {
  auto cfg = small_sweep();
  cfg.methods = {"histogram"};
  EXPECT_THROW(run_sweep(cfg), ValidationError);
  cfg = small_sweep();
  cfg.trials = 0;
  EXPECT_THROW(run_sweep(cfg), ValidationError);
  cfg = small_sweep();
  cfg.dims.clear();
  EXPECT_THROW(run_sweep(cfg), ValidationError);
}

TEST(Sweep, ExpandMethods) {
  EXPECT_EQ(expand_methods({"all"}),
            (std::vector<std::string>{"full_discretization", "soft_equal", "soft_voronoi", "kmeans"}));
  EXPECT_EQ(expand_methods({"kmeans", "soft_equal_euclidean"}),
            (std::vector<std::string>{"kmeans", "soft_equal_euclidean"}));
}

TEST(Csv, HeaderQuotingAndSpecials) {
  BenchRow r{"kmeans", 2, 10, 3, 0, std::numeric_limits<double>::quiet_NaN(), 1.5, -std::numeric_limits<double>::infinity(),
             "error: bad, \"quoted\"", 0.0};
  std::ostringstream out;
  write_csv(out, {r});
  EXPECT_EQ(out.str(),
            "method,dim,samples,cells,trial,estimate_nats,truth_nats,error_nats,status\n"
            "kmeans,2,10,3,0,nan,1.5,-inf,\"error: bad, \"\"quoted\"\"\"\n");
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Soft, SharedProbesMatchSeededProbes) {
  const Matrix X = sample_gaussian(random_gaussian(3, 2), 300, 5);
  SoftBenchConfig cfg;
  cfg.anchors = 6;
  cfg.width = WidthModel::voronoi;
  cfg.probes = 3000;
  cfg.seed = 4;
  const Matrix probes = sample_unit_probes(cfg.probes, 3, mix_seed(cfg.seed, 0xB0));
  EXPECT_EQ(estimate_soft(X, cfg).nats, estimate_soft(X, cfg, &probes).nats);
  const Matrix narrow = sample_unit_probes(10, 2, 0);
  EXPECT_THROW(estimate_soft(X, cfg, &narrow), ShapeError);
}

TEST(Soft, EqualWidthOnUniformCubeNearVoronoi) {
  // Centred cube: angular cells are near-uniform only when the data surrounds the origin.
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix X(5000, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(gen);
  const double truth = 4.0 * std::log(2.0);
  for (auto geometry : {Geometry::angular, Geometry::euclidean}) {
    SoftBenchConfig cfg;
    cfg.anchors = 20;
    cfg.geometry = geometry;
    const double equal = std::abs(estimate_soft(X, cfg).nats - truth);
    cfg.width = WidthModel::voronoi;
    const double voronoi = std::abs(estimate_soft(X, cfg).nats - truth);
    EXPECT_LE(equal, 2.0 * voronoi);
  }
}
