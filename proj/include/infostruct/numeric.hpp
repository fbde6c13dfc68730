#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace infostruct {

/// Row-major dense matrix used for every count x dim table in the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Neumaier-compensated accumulator. Summation order is the call order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  [[nodiscard]] double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// Fixed block size for row-parallel reductions. Partition depends only on
/// the row count, so merged results are independent of the thread count.
inline constexpr std::size_t kRowBlock = 2048;

inline unsigned worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs body(block_index, begin, end) over fixed-size row blocks, possibly on
/// several threads. Callers write into per-block slots and merge in block order.
inline void for_each_block(std::size_t rows, const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                           std::size_t block = kRowBlock) {
  const std::size_t blocks = (rows + block - 1) / block;
  const unsigned workers = std::min<std::size_t>(worker_count(), blocks);
  auto run = [&](std::size_t b) { body(b, b * block, std::min(rows, (b + 1) * block)); };
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers) run(b);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::size_t block_count(std::size_t rows, std::size_t block = kRowBlock) { return (rows + block - 1) / block; }

/// Derives an independent stream seed from a base seed and a tag (splitmix64 finaliser).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace infostruct
