#pragma once

// Discrete information-theory primitives. All quantities are in nats.

#include "infostruct/errors.hpp"
#include "infostruct/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace infostruct {

inline constexpr double kNormTolerance = 1e-9;

/// A finite probability distribution over `support_size()` events.
class Categorical {
 public:
  Categorical() = default;

  /// Validates that probs are non-negative and sum to 1 within 1e-9.
  explicit Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError("categorical: empty support");
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) throw ValidationError("categorical: negative or non-finite probability");
    }
    const double total = compensated_sum(probs_);
    if (std::abs(total - 1.0) > kNormTolerance) {
      throw ValidationError("categorical: probabilities sum to " + std::to_string(total) + ", expected 1");
    }
  }

  /// Normalises non-negative masses (counts, responsibility sums).
  static Categorical from_masses(std::span<const double> masses) {
    if (masses.empty()) throw ValidationError("categorical: empty support");
    CompensatedSum s;
    for (double m : masses) {
      if (!std::isfinite(m) || m < 0.0) throw ValidationError("categorical: negative or non-finite mass");
      s.add(m);
    }
    const double total = s.value();
    if (!(total > 0.0)) throw ValidationError("categorical: total mass is zero");
    std::vector<double> p(masses.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = masses[i] / total;
    return Categorical(std::move(p));
  }

  static Categorical from_counts(std::span<const std::uint64_t> counts) {
    std::vector<double> m(counts.begin(), counts.end());
    return from_masses(m);
  }

  static Categorical uniform(std::size_t n) {
    if (n == 0) throw ValidationError("categorical: empty support");
    return Categorical(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static Categorical one_hot(std::size_t n, std::size_t hot) {
    if (hot >= n) throw ValidationError("categorical: one-hot index out of range");
    std::vector<double> p(n, 0.0);
    p[hot] = 1.0;
    return Categorical(std::move(p));
  }

  [[nodiscard]] std::span<const double> probs() const { return probs_; }
  [[nodiscard]] std::size_t support_size() const { return probs_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

/// -sum p ln p with 0 ln 0 := 0, clamped to [0, ln n].
inline double entropy(const Categorical& dist) {
  CompensatedSum s;
  for (double p : dist.probs()) {
    if (p > 0.0) s.add(-p * std::log(p));
  }
  const double cap = std::log(static_cast<double>(dist.support_size()));
  return std::clamp(s.value(), 0.0, cap);
}

struct Efficiency {
  double value = 0.0;
  /// Set when the support has a single event, so ln(support) = 0.
  bool degenerate = false;
};

inline Efficiency efficiency(const Categorical& dist) {
  if (dist.support_size() < 2) return {0.0, true};
  const double e = entropy(dist) / std::log(static_cast<double>(dist.support_size()));
  return {std::clamp(e, 0.0, 1.0), false};
}

enum class Weighting { uniform, frequency };

inline const char* to_string(Weighting w) { return w == Weighting::uniform ? "uniform" : "frequency"; }

inline Weighting parse_weighting(const std::string& s) {
  if (s == "uniform") return Weighting::uniform;
  if (s == "frequency") return Weighting::frequency;
  throw ValidationError("unknown weighting '" + s + "'");
}

/// Maximum-likelihood count table: label -> (event -> count).
template <class Label = std::string, class Event = std::string>
class LabeledCounts {
 public:
  using Row = std::map<Event, std::uint64_t>;

  void add(const Label& label, const Event& event, std::uint64_t count = 1) {
    if (count == 0) return;
    rows_[label][event] += count;
    total_ += count;
  }

  [[nodiscard]] std::uint64_t total() const { return total_; }
  [[nodiscard]] const std::map<Label, Row>& rows() const { return rows_; }
  [[nodiscard]] bool contains(const Label& label) const { return rows_.count(label) != 0; }

  [[nodiscard]] const Row& row(const Label& label) const {
    auto it = rows_.find(label);
    if (it == rows_.end()) throw LookupError("labeled counts: unknown label");
    return it->second;
  }

  [[nodiscard]] std::uint64_t row_total(const Label& label) const {
    std::uint64_t t = 0;
    for (const auto& [e, c] : row(label)) t += c;
    return t;
  }

  [[nodiscard]] std::vector<Label> labels() const {
    std::vector<Label> out;
    for (const auto& [l, r] : rows_) out.push_back(l);
    return out;
  }

 private:
  std::map<Label, Row> rows_;
  std::uint64_t total_ = 0;
};

namespace detail {

template <class Row>
Categorical row_distribution(const Row& row) {
  std::vector<double> m;
  m.reserve(row.size());
  for (const auto& [e, c] : row) m.push_back(static_cast<double>(c));
  return Categorical::from_masses(m);
}

}  // namespace detail

template <class L, class E>
double conditional_entropy(const LabeledCounts<L, E>& data, const L& label) {
  return entropy(detail::row_distribution(data.row(label)));
}

template <class L, class E>
double set_conditional_entropy(const LabeledCounts<L, E>& data, std::span<const L> set,
                               Weighting weighting = Weighting::uniform) {
  if (set.empty()) throw ValidationError("set conditional entropy: empty label set");
  std::vector<double> h(set.size());
  std::vector<double> w(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    h[i] = conditional_entropy(data, set[i]);
    w[i] = weighting == Weighting::uniform ? 1.0 : static_cast<double>(data.row_total(set[i]));
  }
  const double wsum = compensated_sum(w);
  CompensatedSum acc;
  for (std::size_t i = 0; i < set.size(); ++i) acc.add(w[i] / wsum * h[i]);
  return acc.value();
}

/// Marginal over the rows belonging to `set`.
template <class L, class E>
Categorical marginal(const LabeledCounts<L, E>& data, std::span<const L> set) {
  std::map<E, std::uint64_t> m;
  for (const auto& l : set) {
    for (const auto& [e, c] : data.row(l)) m[e] += c;
  }
  return detail::row_distribution(m);
}

template <class L, class E>
double mutual_information(const LabeledCounts<L, E>& data, std::span<const L> set,
                          Weighting weighting = Weighting::uniform) {
  if (set.empty()) throw ValidationError("mutual information: empty label set");
  return entropy(marginal(data, set)) - set_conditional_entropy(data, set, weighting);
}

struct JsDivergence {
  double raw = 0.0;         ///< nats, in [0, H(weights)]
  double normalized = 0.0;  ///< raw / H(weights), in [0, 1]
};

/// Multivariate (Lambda) Jensen-Shannon divergence: H(sum w_i P_i) - sum w_i H(P_i).
inline JsDivergence js_divergence(std::span<const Categorical> components, const Categorical& weights) {
  if (components.empty()) throw ValidationError("js divergence: no components");
  if (weights.support_size() != components.size()) {
    throw ShapeError("js divergence: weights length does not match component count");
  }
  const std::size_t n = components.front().support_size();
  for (const auto& c : components) {
    if (c.support_size() != n) throw ShapeError("js divergence: components have mismatched supports");
  }
  std::vector<double> mix(n, 0.0);
  CompensatedSum mean_h;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const double w = weights[k];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) mix[i] += w * components[k][i];
    mean_h.add(w * entropy(components[k]));
  }
  const double hw = entropy(weights);
  const double raw = std::clamp(entropy(Categorical::from_masses(mix)) - mean_h.value(), 0.0, hw);
  return {raw, hw > 0.0 ? std::clamp(raw / hw, 0.0, 1.0) : 0.0};
}

/// Plug-in entropy plus (m - 1) / (2 N), clamped to `cap`.
inline double miller_madow(double h_mle, std::size_t nonempty_bins, std::size_t samples, double cap) {
  if (samples == 0) throw ValidationError("miller-madow: zero samples");
  if (nonempty_bins == 0) throw ValidationError("miller-madow: no non-empty bins");
  const double corrected =
      h_mle + static_cast<double>(nonempty_bins - 1) / (2.0 * static_cast<double>(samples));
  return std::min(corrected, std::max(cap, h_mle));
}

/// Spearman correlation; `rho` is empty when either input has no variance.
struct RankCorrelation {
  std::optional<double> rho;
  std::size_t n = 0;
  [[nodiscard]] bool no_variance() const { return !rho.has_value(); }
};

/// 1-based average ranks (ties share the mean of their positions).
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n;
  const double my = compensated_sum(y) / n;
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) return std::nullopt;
  return std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
}

inline RankCorrelation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("spearman: inputs differ in length");
  if (x.size() < 3) throw ValidationError("spearman: need at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return {pearson(rx, ry), x.size()};
}

}  // namespace infostruct
