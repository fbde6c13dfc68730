#pragma once

#include "infostruct/corpus_io.hpp"

#include <random>
#include <string>

namespace infostruct::fixtures {

/// Sentences of tokens drawn uniformly from `clusters` symbols ("c0", "c1", ...).
/// Each token's vector is its cluster center plus unit-variance noise; center
/// coordinates have standard deviation separation / sqrt(2), so per-dimension
/// center differences have standard deviation `separation`.
inline EmbeddingArchive planted_clusters(std::size_t sentences, std::size_t dim, std::size_t clusters,
                                         double separation, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, clusters - 1);
  std::uniform_int_distribution<std::size_t> length(4, 12);
  Matrix centers(clusters, dim);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = normal(gen) * separation / std::sqrt(2.0);

  EmbeddingArchive a;
  a.labels.set_names = {"token"};
  a.labels.values.resize(1);
  std::vector<std::size_t> cluster;
  for (std::size_t s = 0; s < sentences; ++s) {
    const std::size_t len = length(gen);
    for (std::size_t p = 0; p < len; ++p) {
      const std::size_t c = pick(gen);
      cluster.push_back(c);
      a.labels.sentence_id.push_back(static_cast<std::int64_t>(s));
      a.labels.position.push_back(static_cast<std::int64_t>(p));
      a.labels.values[0].push_back("c" + std::to_string(c));
    }
  }
  a.vectors.resize(static_cast<Eigen::Index>(cluster.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) a.vectors(i, d) = static_cast<float>(centers(cluster[i], d) + normal(gen));
  }
  return a;
}

/// The bundled archive under data/fixtures/planted3.
inline EmbeddingArchive bundled_planted3() { return planted_clusters(60, 64, 3, 10.0, 20240607); }

}  // namespace infostruct::fixtures
