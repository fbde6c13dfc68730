#pragma once

// Variation measures over discrete meaning -> signal mappings: synonymy,
// homonymy, word-order freedom, entanglement and topographic similarity,
// plus ideal/random calibration languages.

#include "infostruct/core_info.hpp"
#include "infostruct/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace infostruct {

/// Meanings are rows of atom ids (one slot per role); signals are rows of
/// char ids of length at most `signal_length`.
struct MeaningSignalDataset {
  int roles = 0;
  int atoms_per_role = 0;
  int alphabet_size = 0;
  int signal_length = 0;
  std::vector<std::vector<int>> meanings;
  std::vector<std::vector<int>> signals;
  /// Display glyph per char id, when loaded from text.
  std::vector<std::string> glyphs;

  [[nodiscard]] std::size_t size() const { return meanings.size(); }

  void validate() const {
    if (roles < 1 || atoms_per_role < 1 || alphabet_size < 1 || signal_length < 1) {
      throw ValidationError("dataset: roles, atoms, alphabet and signal length must be positive");
    }
    if (meanings.size() != signals.size()) throw ShapeError("dataset: meanings and signals differ in row count");
    for (std::size_t i = 0; i < meanings.size(); ++i) {
      if (meanings[i].size() != static_cast<std::size_t>(roles)) {
        throw ValidationError("dataset: row " + std::to_string(i) + " does not have exactly one atom per role");
      }
      for (int a : meanings[i]) {
        if (a < 0 || a >= atoms_per_role) throw ValidationError("dataset: atom id out of range in row " + std::to_string(i));
      }
      if (signals[i].size() > static_cast<std::size_t>(signal_length)) {
        throw ValidationError("dataset: signal longer than signal_length in row " + std::to_string(i));
      }
      for (int c : signals[i]) {
        if (c < 0 || c >= alphabet_size) throw ValidationError("dataset: char id out of range in row " + std::to_string(i));
      }
    }
  }

  [[nodiscard]] bool needs_padding() const {
    return std::any_of(signals.begin(), signals.end(),
                       [&](const auto& s) { return s.size() < static_cast<std::size_t>(signal_length); });
  }
};

/// P(char at position | atom in role), laid out [role][atom][position][char].
/// When any signal is shorter than P, the char axis gains a trailing pad symbol.
class MappingTensor {
 public:
  MappingTensor(int roles, int atoms, int positions, int chars)
      : roles_(roles), atoms_(atoms), positions_(positions), chars_(chars),
        probs_(static_cast<std::size_t>(roles) * atoms * positions * chars, 0.0),
        attested_(static_cast<std::size_t>(roles) * atoms, false) {}

  [[nodiscard]] int roles() const { return roles_; }
  [[nodiscard]] int atoms() const { return atoms_; }
  [[nodiscard]] int positions() const { return positions_; }
  /// Effective alphabet, including the pad symbol when present.
  [[nodiscard]] int chars() const { return chars_; }

  [[nodiscard]] double prob(int r, int a, int p, int c) const { return probs_[index(r, a, p, c)]; }
  double& prob(int r, int a, int p, int c) { return probs_[index(r, a, p, c)]; }
  [[nodiscard]] bool attested(int r, int a) const { return attested_[static_cast<std::size_t>(r) * atoms_ + a]; }
  void set_attested(int r, int a, bool v) { attested_[static_cast<std::size_t>(r) * atoms_ + a] = v; }

  /// Char distribution at one position for one (role, atom).
  [[nodiscard]] Categorical column(int r, int a, int p) const {
    const auto* begin = &probs_[index(r, a, p, 0)];
    return Categorical(std::vector<double>(begin, begin + chars_));
  }

 private:
  [[nodiscard]] std::size_t index(int r, int a, int p, int c) const {
    return ((static_cast<std::size_t>(r) * atoms_ + a) * positions_ + p) * chars_ + c;
  }

  int roles_, atoms_, positions_, chars_;
  std::vector<double> probs_;
  std::vector<bool> attested_;
};

inline MappingTensor estimate_mapping_tensor(const MeaningSignalDataset& data) {
  data.validate();
  if (data.size() == 0) throw ValidationError("mapping tensor: empty dataset");
  const bool pad = data.needs_padding();
  const int C = data.alphabet_size + (pad ? 1 : 0);
  const int pad_char = data.alphabet_size;
  const int R = data.roles, A = data.atoms_per_role, P = data.signal_length;

  std::vector<std::uint64_t> counts(static_cast<std::size_t>(R) * A * P * C, 0);
  std::vector<std::uint64_t> atom_counts(static_cast<std::size_t>(R) * A, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& m = data.meanings[i];
    const auto& s = data.signals[i];
    for (int r = 0; r < R; ++r) {
      const auto ra = static_cast<std::size_t>(r) * A + m[r];
      ++atom_counts[ra];
      for (int p = 0; p < P; ++p) {
        const int c = p < static_cast<int>(s.size()) ? s[p] : pad_char;
        ++counts[(ra * P + p) * C + c];
      }
    }
  }

  MappingTensor t(R, A, P, C);
  for (int r = 0; r < R; ++r) {
    for (int a = 0; a < A; ++a) {
      const auto ra = static_cast<std::size_t>(r) * A + a;
      const auto n = atom_counts[ra];
      t.set_attested(r, a, n > 0);
      if (n == 0) continue;
      for (int p = 0; p < P; ++p) {
        for (int c = 0; c < C; ++c) {
          t.prob(r, a, p, c) = static_cast<double>(counts[(ra * P + p) * C + c]) / static_cast<double>(n);
        }
      }
    }
  }
  return t;
}

namespace detail {

inline double bounded(double h, int support) {
  return support > 1 ? std::clamp(h / std::log(static_cast<double>(support)), 0.0, 1.0) : 0.0;
}

/// Per-role vector over positions of mean H(char_p | atom) across attested atoms.
inline std::vector<std::vector<double>> role_position_profiles(const MappingTensor& t) {
  std::vector<std::vector<double>> out(t.roles(), std::vector<double>(t.positions(), 0.0));
  for (int r = 0; r < t.roles(); ++r) {
    int attested = 0;
    for (int a = 0; a < t.atoms(); ++a) {
      if (!t.attested(r, a)) continue;
      ++attested;
      for (int p = 0; p < t.positions(); ++p) out[r][p] += entropy(t.column(r, a, p));
    }
    if (attested > 0) {
      for (double& v : out[r]) v /= attested;
    }
  }
  return out;
}

}  // namespace detail

/// Mean per-position entropy profile for each role (nats).
struct RolePositionProfile {
  std::vector<std::vector<double>> mean_entropy;
};

inline RolePositionProfile role_position_profile(const MappingTensor& t) {
  return {detail::role_position_profiles(t)};
}

/// Mean over roles of mean over attested atoms of min_p H(char_p|atom) / ln C.
inline double synonymy(const MappingTensor& t) {
  CompensatedSum roles;
  int counted = 0;
  for (int r = 0; r < t.roles(); ++r) {
    CompensatedSum atoms;
    int n = 0;
    for (int a = 0; a < t.atoms(); ++a) {
      if (!t.attested(r, a)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int p = 0; p < t.positions(); ++p) best = std::min(best, entropy(t.column(r, a, p)));
      atoms.add(detail::bounded(best, t.chars()));
      ++n;
    }
    if (n == 0) continue;
    roles.add(atoms.value() / n);
    ++counted;
  }
  return counted ? roles.value() / counted : 0.0;
}

/// Renormalises the tensor along the atom axis for each (role, position, char);
/// per char takes the minimum over positions of H(atom | char) / ln A.
inline double homonymy(const MappingTensor& t) {
  CompensatedSum roles;
  int counted_roles = 0;
  for (int r = 0; r < t.roles(); ++r) {
    CompensatedSum chars;
    int counted_chars = 0;
    for (int c = 0; c < t.chars(); ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (int p = 0; p < t.positions(); ++p) {
        std::vector<double> mass;
        mass.reserve(t.atoms());
        for (int a = 0; a < t.atoms(); ++a) {
          if (t.attested(r, a)) mass.push_back(t.prob(r, a, p, c));
        }
        if (mass.empty() || compensated_sum(mass) <= 0.0) continue;
        best = std::min(best, entropy(Categorical::from_masses(mass)));
      }
      if (!std::isfinite(best)) continue;  // char never attested for this role
      chars.add(detail::bounded(best, t.atoms()));
      ++counted_chars;
    }
    if (counted_chars == 0) continue;
    roles.add(chars.value() / counted_chars);
    ++counted_roles;
  }
  return counted_roles ? roles.value() / counted_roles : 0.0;
}

inline double word_order_freedom(const MappingTensor& t) {
  const auto profiles = detail::role_position_profiles(t);
  CompensatedSum acc;
  for (const auto& f : profiles) acc.add(detail::bounded(*std::min_element(f.begin(), f.end()), t.chars()));
  return acc.value() / static_cast<double>(profiles.size());
}

inline double entanglement(const MappingTensor& t) {
  if (t.roles() < 2) throw ValidationError("entanglement: needs at least two roles");
  const auto f = detail::role_position_profiles(t);
  CompensatedSum acc;
  int pairs = 0;
  for (int i = 0; i < t.roles(); ++i) {
    for (int j = i + 1; j < t.roles(); ++j) {
      double max_diff = 0.0, max_both = 0.0;
      for (int p = 0; p < t.positions(); ++p) {
        max_diff = std::max(max_diff, std::abs(f[i][p] - f[j][p]));
        max_both = std::max({max_both, f[i][p], f[j][p]});
      }
      acc.add(max_both > 0.0 ? max_diff / max_both : 0.0);
      ++pairs;
    }
  }
  return std::clamp(1.0 - acc.value() / pairs, 0.0, 1.0);
}

/// Character-level Levenshtein distance with unit costs.
inline int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline int hamming(const std::vector<int>& a, const std::vector<int>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

enum class CorrelationKind { spearman, pearson };

/// Rank correlation between pairwise meaning Hamming distances and signal
/// Levenshtein distances. All pairs are used when they number at most
/// max_pairs; otherwise max_pairs distinct-index pairs are drawn with `seed`.
inline RankCorrelation topographic_similarity(const MeaningSignalDataset& data, std::size_t max_pairs,
                                              std::uint64_t seed,
                                              CorrelationKind kind = CorrelationKind::spearman) {
  data.validate();
  const std::size_t n = data.size();
  if (n < 3) throw ValidationError("topographic similarity: need at least 3 rows");
  std::vector<double> dm, ds;
  const std::size_t all_pairs = n * (n - 1) / 2;
  if (all_pairs <= max_pairs) {
    dm.reserve(all_pairs);
    ds.reserve(all_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        dm.push_back(hamming(data.meanings[i], data.meanings[j]));
        ds.push_back(levenshtein(data.signals[i], data.signals[j]));
      }
    }
  } else {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    dm.reserve(max_pairs);
    ds.reserve(max_pairs);
    while (dm.size() < max_pairs) {
      const std::size_t i = pick(gen), j = pick(gen);
      if (i == j) continue;
      dm.push_back(hamming(data.meanings[i], data.meanings[j]));
      ds.push_back(levenshtein(data.signals[i], data.signals[j]));
    }
  }
  if (kind == CorrelationKind::pearson) return {pearson(dm, ds), dm.size()};
  return spearman(dm, ds);
}

enum class LanguageKind { ideal, random };

/// Lookup tables of an ideal one-to-one code: which positions carry each role
/// and which char encodes each (role, atom).
struct IdealCode {
  std::vector<std::vector<int>> role_positions;  ///< [role] -> positions
  std::vector<std::vector<int>> atom_char;       ///< [role][atom] -> char

  [[nodiscard]] std::vector<int> encode(const std::vector<int>& meaning, int signal_length) const {
    std::vector<int> s(signal_length, 0);
    for (std::size_t r = 0; r < role_positions.size(); ++r) {
      for (int p : role_positions[r]) s[p] = atom_char[r][meaning[r]];
    }
    return s;
  }

  [[nodiscard]] std::vector<int> decode(const std::vector<int>& signal) const {
    std::vector<int> m(role_positions.size());
    for (std::size_t r = 0; r < role_positions.size(); ++r) {
      const int c = signal[role_positions[r].front()];
      const auto& table = atom_char[r];
      m[r] = static_cast<int>(std::find(table.begin(), table.end(), c) - table.begin());
    }
    return m;
  }
};

/// Roles occupy contiguous blocks of P / R positions in a seeded order (the
/// last block absorbs the remainder); each role maps atoms to chars through
/// its own seeded injection.
inline IdealCode ideal_code(int R, int A, int C, int P, std::uint64_t seed) {
  if (R < 1 || A < 1 || C < 1 || P < 1) throw ValidationError("ideal code: sizes must be positive");
  if (P < R) throw ValidationError("ideal code: signal length shorter than role count");
  if (C < A) throw CapacityError("ideal code: alphabet smaller than atoms per role");
  std::mt19937_64 gen(seed);
  std::vector<int> order(R);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), gen);
  IdealCode code;
  code.role_positions.assign(R, {});
  const int width = P / R;
  for (int slot = 0; slot < R; ++slot) {
    const int begin = slot * width;
    const int end = slot == R - 1 ? P : begin + width;
    for (int p = begin; p < end; ++p) code.role_positions[order[slot]].push_back(p);
  }
  code.atom_char.assign(R, {});
  for (int r = 0; r < R; ++r) {
    std::vector<int> chars(C);
    std::iota(chars.begin(), chars.end(), 0);
    std::shuffle(chars.begin(), chars.end(), gen);
    code.atom_char[r].assign(chars.begin(), chars.begin() + A);
  }
  return code;
}

/// Every meaning in the A^R space, in lexicographic order.
inline std::vector<std::vector<int>> enumerate_meanings(int R, int A) {
  std::vector<std::vector<int>> out;
  std::vector<int> m(R, 0);
  while (true) {
    out.push_back(m);
    int r = R - 1;
    while (r >= 0 && ++m[r] == A) m[r--] = 0;
    if (r < 0) break;
  }
  return out;
}

inline MeaningSignalDataset generate_language(LanguageKind kind, int R, int A, int C, int P, std::uint64_t seed) {
  if (R < 1 || A < 1 || C < 1 || P < 1) throw ValidationError("generate language: sizes must be positive");
  if (P < R) throw ValidationError("generate language: signal length shorter than role count");
  MeaningSignalDataset d;
  d.roles = R;
  d.atoms_per_role = A;
  d.alphabet_size = C;
  d.signal_length = P;
  d.meanings = enumerate_meanings(R, A);
  d.signals.reserve(d.meanings.size());
  if (kind == LanguageKind::ideal) {
    const auto code = ideal_code(R, A, C, P, seed);
    for (const auto& m : d.meanings) d.signals.push_back(code.encode(m, P));
  } else {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> ch(0, C - 1);
    for (std::size_t i = 0; i < d.meanings.size(); ++i) {
      std::vector<int> s(P);
      for (int& c : s) c = ch(gen);
      d.signals.push_back(std::move(s));
    }
  }
  return d;
}

namespace detail {

/// Splits UTF-8 text into code-point substrings.
inline std::vector<std::string> utf8_glyphs(const std::string& s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (b >= 0xF0) len = 4;
    else if (b >= 0xE0) len = 3;
    else if (b >= 0xC0) len = 2;
    if (i + len > s.size()) throw ValidationError("pairs file: truncated UTF-8 sequence");
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace detail

/// Parses tab-separated meaning/signal pairs: "r0:a r1:a ...\tSIGNAL".
/// Char ids follow the byte order of the distinct glyphs.
inline MeaningSignalDataset parse_pairs(std::istream& in) {
  std::vector<std::map<int, int>> meanings;
  std::vector<std::vector<std::string>> raw_signals;
  std::string line;
  std::size_t lineno = 0;
  int max_role = -1, max_atom = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError("pairs file: line " + std::to_string(lineno) + " has no tab");
    std::istringstream ms(line.substr(0, tab));
    std::map<int, int> m;
    std::string tok;
    while (ms >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ValidationError("pairs file: line " + std::to_string(lineno) + " token '" + tok + "' is not role:atom");
      }
      int r = 0, a = 0;
      try {
        r = std::stoi(tok.substr(0, colon));
        a = std::stoi(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw ValidationError("pairs file: line " + std::to_string(lineno) + " token '" + tok + "' is not numeric");
      }
      if (r < 0 || a < 0) throw ValidationError("pairs file: negative id on line " + std::to_string(lineno));
      m[r] = a;
      max_role = std::max(max_role, r);
      max_atom = std::max(max_atom, a);
    }
    meanings.push_back(std::move(m));
    raw_signals.push_back(detail::utf8_glyphs(line.substr(tab + 1)));
  }
  if (meanings.empty()) throw ValidationError("pairs file: no pairs");

  std::map<std::string, int> alphabet;
  std::size_t max_len = 0;
  for (const auto& s : raw_signals) {
    for (const auto& g : s) alphabet.emplace(g, 0);
    max_len = std::max(max_len, s.size());
  }
  if (alphabet.empty()) throw ValidationError("pairs file: all signals are empty");
  MeaningSignalDataset d;
  for (auto& [g, id] : alphabet) {
    id = static_cast<int>(d.glyphs.size());
    d.glyphs.push_back(g);
  }
  d.roles = max_role + 1;
  d.atoms_per_role = max_atom + 1;
  d.alphabet_size = static_cast<int>(alphabet.size());
  d.signal_length = static_cast<int>(max_len);
  for (std::size_t i = 0; i < meanings.size(); ++i) {
    if (meanings[i].size() != static_cast<std::size_t>(d.roles)) {
      throw ValidationError("pairs file: row " + std::to_string(i + 1) + " does not fill every role");
    }
    std::vector<int> m(d.roles);
    for (const auto& [r, a] : meanings[i]) m[r] = a;
    std::vector<int> s;
    for (const auto& g : raw_signals[i]) s.push_back(alphabet.at(g));
    d.meanings.push_back(std::move(m));
    d.signals.push_back(std::move(s));
  }
  d.validate();
  return d;
}

inline MeaningSignalDataset read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pairs file '" + path + "'");
  return parse_pairs(in);
}

}  // namespace infostruct
