#pragma once

// Variation, regularity, disentanglement and information proportions over
// label sets, for the soft and binned descriptor backends.

#include "infostruct/core_info.hpp"
#include "infostruct/descriptors.hpp"
#include "infostruct/errors.hpp"
#include "infostruct/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace infostruct {

/// Per-row label ids into `vocabulary`, optionally nested in a coarser set.
struct LabelColumn {
  std::string set_name;
  std::vector<std::uint32_t> values;
  std::vector<std::string> vocabulary;
  /// Name of the coarser set this one refines.
  std::optional<std::string> superset;

  void validate(std::size_t rows) const {
    if (set_name.empty()) throw ValidationError("label column: empty set name");
    if (values.empty()) throw ValidationError("label set '" + set_name + "': no labelled rows");
    if (values.size() != rows) {
      throw ShapeError("label set '" + set_name + "': " + std::to_string(values.size()) + " labels for " +
                       std::to_string(rows) + " rows");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] >= vocabulary.size()) {
        throw ValidationError("label set '" + set_name + "': row " + std::to_string(i) + " has label id " +
                              std::to_string(values[i]) + " outside the vocabulary");
      }
    }
  }
};

/// Builds a column from string labels; ids follow first appearance.
inline LabelColumn make_label_column(std::string name, std::span<const std::string> labels,
                                     std::optional<std::string> superset = std::nullopt) {
  LabelColumn col{std::move(name), {}, {}, std::move(superset)};
  std::map<std::string, std::uint32_t> ids;
  col.values.reserve(labels.size());
  for (const auto& l : labels) {
    auto [it, inserted] = ids.emplace(l, static_cast<std::uint32_t>(col.vocabulary.size()));
    if (inserted) col.vocabulary.push_back(l);
    col.values.push_back(it->second);
  }
  return col;
}

/// Throws unless every fine label maps to exactly one coarse label.
inline void check_nesting(const LabelColumn& fine, const LabelColumn& coarse) {
  if (fine.values.size() != coarse.values.size()) {
    throw ShapeError("label sets '" + fine.set_name + "' and '" + coarse.set_name + "' differ in row count");
  }
  std::vector<std::int64_t> parent(fine.vocabulary.size(), -1);
  for (std::size_t i = 0; i < fine.values.size(); ++i) {
    auto& p = parent[fine.values[i]];
    const auto c = static_cast<std::int64_t>(coarse.values[i]);
    if (p == -1) {
      p = c;
    } else if (p != c) {
      throw ValidationError("label set '" + fine.set_name + "' is not nested in '" + coarse.set_name + "': label '" +
                            fine.vocabulary[fine.values[i]] + "' maps to both '" + coarse.vocabulary[p] + "' and '" +
                            coarse.vocabulary[c] + "' (row " + std::to_string(i) + ")");
    }
  }
}

/// Orders columns coarse to fine along superset links and checks nesting and
/// acyclicity. Columns without a superset start chains.
inline std::vector<std::vector<std::size_t>> label_chains(std::span<const LabelColumn> columns) {
  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (!by_name.emplace(columns[i].set_name, i).second) {
      throw ValidationError("duplicate label set '" + columns[i].set_name + "'");
    }
  }
  std::vector<std::int64_t> parent(columns.size(), -1);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (!columns[i].superset) continue;
    auto it = by_name.find(*columns[i].superset);
    if (it == by_name.end()) {
      throw LookupError("label set '" + columns[i].set_name + "' names unknown superset '" + *columns[i].superset + "'");
    }
    parent[i] = static_cast<std::int64_t>(it->second);
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    std::size_t steps = 0;
    for (auto p = parent[i]; p != -1; p = parent[p]) {
      if (++steps > columns.size()) throw ValidationError("superset links of '" + columns[i].set_name + "' form a cycle");
    }
    if (parent[i] != -1) check_nesting(columns[i], columns[parent[i]]);
  }
  // Each leaf yields the path root -> leaf.
  std::vector<bool> has_child(columns.size(), false);
  for (auto p : parent) {
    if (p != -1) has_child[p] = true;
  }
  std::vector<std::vector<std::size_t>> chains;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (has_child[i]) continue;
    std::vector<std::size_t> chain;
    for (auto c = static_cast<std::int64_t>(i); c != -1; c = parent[c]) chain.push_back(static_cast<std::size_t>(c));
    std::reverse(chain.begin(), chain.end());
    chains.push_back(std::move(chain));
  }
  return chains;
}

/// Event masses per label for one descriptor factor (a subspace chunk of a
/// layer, or one binned dimension of a layer).
struct FactorTable {
  std::size_t events = 0;
  std::vector<double> overall;      ///< mass of every contributing row
  std::vector<Matrix> label_mass;   ///< per column: vocabulary x events
  std::vector<std::vector<std::size_t>> label_rows;  ///< per column: contributing row count per label
};

/// Conditional mass tables for every (factor, label column) pair. Factors are
/// averaged with equal weight by every measure.
struct ConditionalTables {
  Backend backend = Backend::soft;
  /// Events used for the ln(event count) normaliser.
  std::size_t events = 0;
  std::size_t rows = 0;
  std::size_t excluded_rows = 0;
  std::vector<std::string> set_names;
  std::vector<FactorTable> factors;

  [[nodiscard]] std::size_t column_index(const std::string& name) const {
    auto it = std::find(set_names.begin(), set_names.end(), name);
    if (it == set_names.end()) throw LookupError("unknown label set '" + name + "'");
    return static_cast<std::size_t>(it - set_names.begin());
  }
  [[nodiscard]] double normalizer() const { return std::log(static_cast<double>(events)); }
};

namespace detail {

/// Rows grouped by label id, in row order.
inline std::vector<std::vector<std::size_t>> group_rows(const LabelColumn& col, std::span<const std::uint8_t> valid) {
  std::vector<std::vector<std::size_t>> groups(col.vocabulary.size());
  for (std::size_t i = 0; i < col.values.size(); ++i) {
    if (valid.empty() || valid[i]) groups[col.values[i]].push_back(i);
  }
  return groups;
}

inline std::vector<std::size_t> group_sizes(const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<std::size_t> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(g.size());
  return out;
}

/// Fills label_mass for one column; `row_mass(i, out)` adds row i's event mass.
/// Labels are independent, so they run in parallel with a fixed summation order.
template <class RowMass>
Matrix label_masses(const std::vector<std::vector<std::size_t>>& groups, std::size_t events, RowMass&& row_mass) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(groups.size()), static_cast<Eigen::Index>(events));
  for_each_block(
      groups.size(),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<CompensatedSum> acc(events);
        for (std::size_t k = begin; k < end; ++k) {
          std::fill(acc.begin(), acc.end(), CompensatedSum{});
          for (std::size_t i : groups[k]) row_mass(i, acc);
          for (std::size_t j = 0; j < events; ++j) out(k, j) = acc[j].value();
        }
      },
      64);
  return out;
}

inline void check_columns(std::span<const LabelColumn> columns, std::size_t rows) {
  for (const auto& c : columns) c.validate(rows);
  label_chains(columns);
}

}  // namespace detail

/// Tables from descriptors carrying per-row responsibilities (soft backend).
/// Every descriptor must cover the same rows.
inline ConditionalTables conditional_tables(std::span<const Descriptor> factors, std::span<const LabelColumn> columns) {
  if (factors.empty()) throw ValidationError("conditional tables: no descriptors");
  ConditionalTables t;
  t.backend = factors.front().backend;
  t.events = factors.front().dist.support_size();
  t.rows = factors.front().valid.size();
  detail::check_columns(columns, t.rows);
  for (const auto& c : columns) t.set_names.push_back(c.set_name);
  std::vector<std::uint8_t> any_excluded(t.rows, 0);
  for (const auto& d : factors) {
    if (!d.responsibilities) throw ValidationError("conditional tables: descriptor has no responsibilities");
    if (d.valid.size() != t.rows || d.dist.support_size() != t.events) {
      throw ShapeError("conditional tables: descriptors differ in rows or events");
    }
    const Matrix& R = *d.responsibilities;
    FactorTable f;
    f.events = t.events;
    f.overall.assign(d.dist.probs().begin(), d.dist.probs().end());
    for (double& p : f.overall) p *= static_cast<double>(d.samples);
    for (const auto& col : columns) {
      auto groups = detail::group_rows(col, d.valid);
      f.label_mass.push_back(detail::label_masses(groups, t.events, [&](std::size_t i, std::vector<CompensatedSum>& acc) {
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j].add(R(i, j));
      }));
      f.label_rows.push_back(detail::group_sizes(groups));
    }
    for (std::size_t i = 0; i < t.rows; ++i) any_excluded[i] |= d.valid[i] == 0;
    t.factors.push_back(std::move(f));
  }
  t.excluded_rows = static_cast<std::size_t>(std::count(any_excluded.begin(), any_excluded.end(), 1));
  return t;
}

/// Tables from dimension-wise binning: one factor per (layer, dimension).
inline ConditionalTables conditional_tables(std::span<const BinnedDescriptor> layers, std::span<const LabelColumn> columns) {
  if (layers.empty()) throw ValidationError("conditional tables: no binned layers");
  ConditionalTables t;
  t.backend = Backend::binned;
  t.events = layers.front().grid.configured_bins;
  t.rows = static_cast<std::size_t>(layers.front().bin_index.rows());
  detail::check_columns(columns, t.rows);
  for (const auto& c : columns) t.set_names.push_back(c.set_name);
  std::vector<std::vector<std::vector<std::size_t>>> groups;
  for (const auto& col : columns) groups.push_back(detail::group_rows(col, {}));
  for (const auto& layer : layers) {
    if (static_cast<std::size_t>(layer.bin_index.rows()) != t.rows || layer.grid.configured_bins != t.events) {
      throw ShapeError("conditional tables: binned layers differ in rows or bins");
    }
    for (std::size_t d = 0; d < layer.grid.dims(); ++d) {
      FactorTable f;
      f.events = layer.grid.bins[d];
      f.overall.assign(f.events, 0.0);
      for (std::size_t i = 0; i < t.rows; ++i) f.overall[layer.bin_index(i, d)] += 1.0;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        f.label_mass.push_back(
            detail::label_masses(groups[c], f.events, [&](std::size_t i, std::vector<CompensatedSum>& acc) {
              acc[layer.bin_index(i, d)].add(1.0);
            }));
        f.label_rows.push_back(detail::group_sizes(groups[c]));
      }
      t.factors.push_back(std::move(f));
    }
  }
  return t;
}

/// Per-label conditional quantities on one factor.
struct LabelConditional {
  std::uint32_t label = 0;
  std::size_t rows = 0;
  double mass = 0.0;
  Categorical dist;
  double entropy = 0.0;
};

namespace detail {

inline std::vector<LabelConditional> conditionals(const FactorTable& f, std::size_t column, std::size_t min_count) {
  const Matrix& M = f.label_mass[column];
  std::vector<LabelConditional> out;
  for (Eigen::Index k = 0; k < M.rows(); ++k) {
    const std::size_t rows = f.label_rows[column][k];
    if (rows == 0 || rows < min_count) continue;
    std::vector<double> m(M.row(k).begin(), M.row(k).end());
    const double total = compensated_sum(m);
    if (!(total > 0.0)) continue;
    LabelConditional c;
    c.label = static_cast<std::uint32_t>(k);
    c.rows = rows;
    c.mass = total;
    c.dist = Categorical::from_masses(m);
    c.entropy = infostruct::entropy(c.dist);
    out.push_back(std::move(c));
  }
  return out;
}

inline double aggregate_entropy(std::span<const LabelConditional> conds, Weighting w) {
  if (conds.empty()) throw ValidationError("structure measure: no attested labels");
  CompensatedSum num, den;
  for (const auto& c : conds) {
    const double wt = w == Weighting::uniform ? 1.0 : c.mass;
    num.add(wt * c.entropy);
    den.add(wt);
  }
  return num.value() / den.value();
}

inline Categorical label_weights(std::span<const LabelConditional> conds) {
  std::vector<double> m;
  for (const auto& c : conds) m.push_back(c.mass);
  return Categorical::from_masses(m);
}

template <class PerFactor>
double factor_mean(const ConditionalTables& t, PerFactor&& fn) {
  if (t.factors.empty()) throw ValidationError("structure measure: no descriptor factors");
  CompensatedSum acc;
  for (const auto& f : t.factors) acc.add(fn(f));
  return acc.value() / static_cast<double>(t.factors.size());
}

inline double factor_entropy(const FactorTable& f) { return infostruct::entropy(Categorical::from_masses(f.overall)); }

}  // namespace detail

/// Mean over factors of the overall descriptor entropy, in nats.
inline double overall_entropy(const ConditionalTables& t) { return detail::factor_mean(t, detail::factor_entropy); }

inline double overall_efficiency(const ConditionalTables& t) {
  if (t.events < 2) return 0.0;
  return overall_entropy(t) / t.normalizer();
}

/// Aggregated conditional entropy given the label, in nats.
inline double conditional_entropy_nats(const ConditionalTables& t, std::size_t column, Weighting w,
                                       std::size_t min_count = 1) {
  return detail::factor_mean(t, [&](const FactorTable& f) {
    const auto conds = detail::conditionals(f, column, min_count);
    return detail::aggregate_entropy(conds, w);
  });
}

/// Aggregated H(Y | label) / ln(events).
inline double variation(const ConditionalTables& t, std::size_t column, Weighting w, std::size_t min_count = 1) {
  if (t.events < 2) return 0.0;
  return conditional_entropy_nats(t, column, w, min_count) / t.normalizer();
}

/// H(Y) minus aggregated H(Y | label), in nats. Non-negative under frequency weighting.
inline double regularity_nats(const ConditionalTables& t, std::size_t column, Weighting w, std::size_t min_count = 1) {
  return overall_entropy(t) - conditional_entropy_nats(t, column, w, min_count);
}

inline double regularity(const ConditionalTables& t, std::size_t column, Weighting w, std::size_t min_count = 1) {
  if (t.events < 2) return 0.0;
  return regularity_nats(t, column, w, min_count) / t.normalizer();
}

/// Normalised multivariate JSD of the label conditionals under frequency
/// weights; 0 when fewer than two labels are attested.
inline double disentanglement_multivariate(const ConditionalTables& t, std::size_t column, std::size_t min_count = 1) {
  return detail::factor_mean(t, [&](const FactorTable& f) {
    const auto conds = detail::conditionals(f, column, min_count);
    if (conds.size() < 2) return 0.0;
    std::vector<Categorical> comps;
    for (const auto& c : conds) comps.push_back(c.dist);
    return js_divergence(comps, detail::label_weights(conds)).normalized;
  });
}

namespace detail {

/// Normalised two-component JSD of one label against all other attested rows.
inline double one_vs_rest(const LabelConditional& c, std::span<const LabelConditional> conds, std::size_t events,
                          const Matrix& M) {
  std::vector<CompensatedSum> rest(events);
  CompensatedSum rest_total;
  for (const auto& o : conds) {
    if (o.label == c.label) continue;
    for (std::size_t j = 0; j < events; ++j) rest[j].add(M(o.label, j));
    rest_total.add(o.mass);
  }
  if (!(rest_total.value() > 0.0)) return 0.0;
  std::vector<double> r(events);
  for (std::size_t j = 0; j < events; ++j) r[j] = std::max(0.0, rest[j].value());
  const std::vector<Categorical> comps{c.dist, Categorical::from_masses(r)};
  const std::vector<double> w{c.mass, rest_total.value()};
  return js_divergence(comps, Categorical::from_masses(w)).normalized;
}

}  // namespace detail

/// Unweighted mean over labels of the label-vs-rest normalised JSD.
inline double disentanglement_one_vs_rest(const ConditionalTables& t, std::size_t column, std::size_t min_count = 1) {
  return detail::factor_mean(t, [&](const FactorTable& f) {
    const auto conds = detail::conditionals(f, column, min_count);
    if (conds.size() < 2) return 0.0;
    CompensatedSum acc;
    for (const auto& c : conds) acc.add(detail::one_vs_rest(c, conds, f.events, f.label_mass[column]));
    return acc.value() / static_cast<double>(conds.size());
  });
}

struct Proportions {
  std::vector<std::string> sets;  ///< coarse to fine
  std::vector<double> proportion;
  std::vector<double> regularity_nats;  ///< frequency-weighted mutual information
  double entropy = 0.0;
  double residual = 1.0;
};

/// Share of H(Y) explained by each set beyond its superset, plus the share
/// left over by the finest set. Frequency weighting is always used.
inline Proportions information_proportions(const ConditionalTables& t, std::span<const std::size_t> chain,
                                           std::span<const LabelColumn> columns = {}, std::size_t min_count = 1) {
  if (chain.empty()) throw ValidationError("information proportions: empty chain");
  if (!columns.empty()) {
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const auto& fine = columns[chain[i]];
      const auto& coarse = columns[chain[i - 1]];
      if (fine.superset != coarse.set_name) {
        throw ValidationError("information proportions: superset of '" + fine.set_name + "' is not '" +
                              coarse.set_name + "'");
      }
      check_nesting(fine, coarse);
    }
  }
  Proportions p;
  p.entropy = overall_entropy(t);
  double previous = 0.0;
  for (std::size_t c : chain) {
    const double reg = regularity_nats(t, c, Weighting::frequency, min_count);
    p.sets.push_back(t.set_names.at(c));
    p.regularity_nats.push_back(reg);
    p.proportion.push_back(p.entropy > 0.0 ? (reg - previous) / p.entropy : 0.0);
    previous = reg;
  }
  p.residual = p.entropy > 0.0 ? (p.entropy - previous) / p.entropy : 1.0;
  return p;
}

struct AnalysisConfig {
  Backend backend = Backend::soft;
  std::size_t anchors = kDefaultAnchors;
  double scale = kDefaultScale;
  /// 0 = full width.
  std::size_t subspace = kDefaultSubspaceWidth;
  std::uint64_t seed = 0;
  Weighting weighting = Weighting::uniform;
  std::size_t bins = 10;
  std::size_t min_count = 1;
  bool detail = false;
};

struct LabelDetail {
  std::string label;
  std::size_t rows = 0;
  double conditional_entropy = 0.0;  ///< nats, mean over factors where attested
  double variation = 0.0;
  double one_vs_rest = 0.0;
};

struct SetMeasures {
  std::string name;
  std::optional<std::string> superset;
  std::size_t labels = 0;           ///< attested labels (first factor)
  std::size_t labels_excluded = 0;  ///< vocabulary entries with no contributing rows or below min_count
  double variation = 0.0;           ///< under the configured weighting
  double variation_uniform = 0.0;
  double variation_frequency = 0.0;
  double regularity = 0.0;
  double regularity_uniform = 0.0;
  double regularity_frequency = 0.0;
  double regularity_nats = 0.0;  ///< frequency weighted
  double disentanglement_multivariate = 0.0;
  double disentanglement_one_vs_rest = 0.0;
  double proportion = 0.0;
  std::vector<LabelDetail> details;
};

struct StructureReport {
  AnalysisConfig config;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t layers = 0;
  std::size_t factors = 0;
  std::size_t events = 0;
  std::size_t excluded_rows = 0;
  double overall_entropy = 0.0;
  double overall_efficiency = 0.0;
  std::vector<SetMeasures> sets;
  double residual = 1.0;
  std::vector<std::string> notes;

  [[nodiscard]] const SetMeasures& set(const std::string& name) const {
    for (const auto& s : sets) {
      if (s.name == name) return s;
    }
    throw LookupError("report has no label set '" + name + "'");
  }
};

inline constexpr const char* kResidualNote =
    "residual = (H(Y) - frequency-weighted regularity of the finest set) / H(Y); the finest set has the highest "
    "regularity along a nested chain. The alternative reading regularity(coarsest set) / H(Y) is not used.";

/// Builds conditional tables for `layers` (all count x dim) under `cfg`, with
/// one anchor set per subspace chunk shared by every layer.
inline ConditionalTables build_tables(std::span<const Matrix> layers, std::span<const LabelColumn> columns,
                                      const AnalysisConfig& cfg) {
  if (layers.empty()) throw ValidationError("analyze: no layers");
  const auto rows = static_cast<std::size_t>(layers.front().rows());
  const auto dim = static_cast<std::size_t>(layers.front().cols());
  if (rows == 0 || dim == 0) throw ValidationError("analyze: empty representation set");
  for (const auto& Y : layers) {
    if (static_cast<std::size_t>(Y.rows()) != rows || static_cast<std::size_t>(Y.cols()) != dim) {
      throw ShapeError("analyze: layers differ in shape");
    }
    if (!Y.allFinite()) throw ValidationError("analyze: non-finite entries");
  }
  switch (cfg.backend) {
    case Backend::soft: {
      const std::size_t width = cfg.subspace == 0 ? dim : cfg.subspace;
      const auto anchors = subspace_anchors(dim, width, cfg.anchors, cfg.seed, cfg.scale);
      std::vector<Descriptor> ds;
      for (const auto& Y : layers) {
        for (auto& d : subspace_descriptors(Y, anchors)) ds.push_back(std::move(d));
      }
      auto t = conditional_tables(ds, columns);
      for (auto& d : ds) d.responsibilities.reset();
      return t;
    }
    case Backend::binned: {
      if (cfg.bins < 2) throw ValidationError("analyze: binned backend needs at least 2 bins");
      std::vector<BinnedDescriptor> bs;
      for (const auto& Y : layers) bs.push_back(binned_descriptor(Y, cfg.bins, false));
      return conditional_tables(bs, columns);
    }
    case Backend::kmeans:
      break;
  }
  throw ValidationError(std::string("analyze: backend '") + to_string(cfg.backend) + "' is not supported");
}

inline StructureReport analyze(std::span<const Matrix> layers, std::span<const LabelColumn> columns,
                               const AnalysisConfig& cfg) {
  if (columns.empty()) throw ValidationError("analyze: no label sets");
  for (const auto& c : columns) {
    if (c.values.empty()) throw ValidationError("label set '" + c.set_name + "': empty label column");
  }
  const auto t = build_tables(layers, columns, cfg);
  const auto chains = label_chains(columns);

  StructureReport r;
  r.config = cfg;
  r.rows = t.rows;
  r.dim = static_cast<std::size_t>(layers.front().cols());
  r.layers = layers.size();
  r.factors = t.factors.size();
  r.events = t.events;
  r.excluded_rows = t.excluded_rows;
  r.overall_entropy = overall_entropy(t);
  r.overall_efficiency = overall_efficiency(t);
  const double H = r.overall_entropy;
  double best_reg = 0.0;

  for (std::size_t c = 0; c < columns.size(); ++c) {
    SetMeasures s;
    s.name = columns[c].set_name;
    s.superset = columns[c].superset;
    const auto first = detail::conditionals(t.factors.front(), c, cfg.min_count);
    s.labels = first.size();
    s.labels_excluded = columns[c].vocabulary.size() - first.size();
    s.variation_uniform = variation(t, c, Weighting::uniform, cfg.min_count);
    s.variation_frequency = variation(t, c, Weighting::frequency, cfg.min_count);
    s.regularity_uniform = regularity(t, c, Weighting::uniform, cfg.min_count);
    s.regularity_frequency = regularity(t, c, Weighting::frequency, cfg.min_count);
    s.variation = cfg.weighting == Weighting::uniform ? s.variation_uniform : s.variation_frequency;
    s.regularity = cfg.weighting == Weighting::uniform ? s.regularity_uniform : s.regularity_frequency;
    s.regularity_nats = regularity_nats(t, c, Weighting::frequency, cfg.min_count);
    s.disentanglement_multivariate = disentanglement_multivariate(t, c, cfg.min_count);
    s.disentanglement_one_vs_rest = disentanglement_one_vs_rest(t, c, cfg.min_count);
    best_reg = std::max(best_reg, s.regularity_nats);
    if (cfg.detail) {
      std::vector<CompensatedSum> h(columns[c].vocabulary.size()), ovr(columns[c].vocabulary.size());
      std::vector<std::size_t> seen(columns[c].vocabulary.size(), 0);
      for (const auto& f : t.factors) {
        const auto conds = detail::conditionals(f, c, cfg.min_count);
        for (const auto& lc : conds) {
          h[lc.label].add(lc.entropy);
          ovr[lc.label].add(conds.size() < 2 ? 0.0 : detail::one_vs_rest(lc, conds, f.events, f.label_mass[c]));
          ++seen[lc.label];
        }
      }
      for (const auto& lc : first) {
        LabelDetail d;
        d.label = columns[c].vocabulary[lc.label];
        d.rows = lc.rows;
        const auto n = static_cast<double>(std::max<std::size_t>(seen[lc.label], 1));
        d.conditional_entropy = h[lc.label].value() / n;
        d.variation = t.events < 2 ? 0.0 : d.conditional_entropy / t.normalizer();
        d.one_vs_rest = ovr[lc.label].value() / n;
        s.details.push_back(std::move(d));
      }
    }
    r.sets.push_back(std::move(s));
  }

  // Proportions follow superset links; unlinked sets are measured against nothing.
  for (auto& s : r.sets) {
    double prev = 0.0;
    if (s.superset) prev = r.set(*s.superset).regularity_nats;
    s.proportion = H > 0.0 ? (s.regularity_nats - prev) / H : 0.0;
  }
  if (chains.size() == 1) {
    const auto& last = r.set(columns[chains.front().back()].set_name);
    r.residual = H > 0.0 ? (H - last.regularity_nats) / H : 1.0;
  } else {
    r.residual = H > 0.0 ? (H - best_reg) / H : 1.0;
    r.notes.push_back("label sets form " + std::to_string(chains.size()) +
                      " separate chains; residual uses the set with the highest regularity");
  }
  r.notes.push_back(kResidualNote);
  if (cfg.weighting == Weighting::uniform) {
    r.notes.push_back("variation and regularity use the unweighted label mean; proportions use frequency weighting");
  }
  if (r.excluded_rows > 0) {
    r.notes.push_back(std::to_string(r.excluded_rows) + " zero-norm rows excluded from the soft descriptor");
  }
  return r;
}

inline StructureReport analyze(const Matrix& Y, std::span<const LabelColumn> columns, const AnalysisConfig& cfg) {
  const std::vector<Matrix> layers{Y};
  return analyze(layers, columns, cfg);
}

}  // namespace infostruct
