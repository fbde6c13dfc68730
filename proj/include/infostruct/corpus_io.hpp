#pragma once

// Embedding archives (meta.json + vectors.f32 + labels.tsv) and n-gram label
// derivation from token columns.

#include "infostruct/errors.hpp"
#include "infostruct/numeric.hpp"
#include "infostruct/structure_measures.hpp"

#include "json.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace infostruct {

inline constexpr int kArchiveSchema = 1;
inline constexpr const char* kBoundary = "⟂";  // rendered sentence-boundary sentinel
inline constexpr std::int64_t kBoundaryId = -1;

static_assert(std::endian::native == std::endian::little, "archive payload is read and written natively as little-endian");

/// One row per vector: sentence id, position within the sentence, then one
/// string per label set.
struct LabelTable {
  std::vector<std::string> set_names;
  std::vector<std::int64_t> sentence_id;
  std::vector<std::int64_t> position;
  std::vector<std::vector<std::string>> values;  ///< per set, per row

  [[nodiscard]] std::size_t rows() const { return sentence_id.size(); }

  [[nodiscard]] const std::vector<std::string>& column(const std::string& name) const {
    for (std::size_t i = 0; i < set_names.size(); ++i) {
      if (set_names[i] == name) return values[i];
    }
    throw LookupError("label table has no column '" + name + "'");
  }
  [[nodiscard]] bool has_column(const std::string& name) const {
    return std::find(set_names.begin(), set_names.end(), name) != set_names.end();
  }
};

struct EmbeddingArchive {
  MatrixF vectors;  ///< count x dim, bit-exact payload
  LabelTable labels;

  [[nodiscard]] std::size_t count() const { return static_cast<std::size_t>(vectors.rows()); }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
  [[nodiscard]] Matrix as_double() const { return vectors.cast<double>(); }
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + p.string());
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

inline std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ValidationError(what + ": '" + s + "' is not an integer");
  return v;
}

}  // namespace detail

inline LabelTable parse_label_table(std::istream& in) {
  LabelTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("labels.tsv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_tabs(line);
  if (header.size() < 2 || header[0] != "sentence_id" || header[1] != "position") {
    throw ValidationError("labels.tsv: header must start with sentence_id<TAB>position");
  }
  t.set_names.assign(header.begin() + 2, header.end());
  t.values.resize(t.set_names.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_tabs(line);
    if (f.size() != header.size()) {
      throw ValidationError("labels.tsv: row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                            " fields, expected " + std::to_string(header.size()));
    }
    t.sentence_id.push_back(detail::parse_int(f[0], "labels.tsv row " + std::to_string(row) + " sentence_id"));
    t.position.push_back(detail::parse_int(f[1], "labels.tsv row " + std::to_string(row) + " position"));
    for (std::size_t c = 0; c < t.set_names.size(); ++c) t.values[c].push_back(f[c + 2]);
    ++row;
  }
  return t;
}

inline std::string format_label_table(const LabelTable& t) {
  std::string out = "sentence_id\tposition";
  for (const auto& n : t.set_names) out += "\t" + n;
  out += "\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out += std::to_string(t.sentence_id[i]) + "\t" + std::to_string(t.position[i]);
    for (const auto& col : t.values) out += "\t" + col[i];
    out += "\n";
  }
  return out;
}

inline void validate_label_table(const LabelTable& t) {
  if (t.position.size() != t.rows()) throw ValidationError("label table: position column length mismatch");
  if (t.values.size() != t.set_names.size()) throw ValidationError("label table: column count mismatch");
  for (std::size_t c = 0; c < t.values.size(); ++c) {
    if (t.values[c].size() != t.rows()) {
      throw ValidationError("label table: column '" + t.set_names[c] + "' has " + std::to_string(t.values[c].size()) +
                            " rows, expected " + std::to_string(t.rows()));
    }
    for (std::size_t i = 0; i < t.values[c].size(); ++i) {
      if (t.values[c][i].find_first_of("\t\n\r") != std::string::npos) {
        throw ValidationError("label table: column '" + t.set_names[c] + "' row " + std::to_string(i) +
                              " contains a tab or newline");
      }
    }
  }
}

inline nlohmann::json archive_meta(std::size_t count, std::size_t dim) {
  return {{"count", count}, {"dim", dim},   {"dtype", "f32"},
          {"layout", "row-major"}, {"endianness", "little"}, {"schema", kArchiveSchema}};
}

inline void write_archive(const std::filesystem::path& dir, const MatrixF& vectors, const LabelTable& labels) {
  if (!vectors.allFinite()) throw ValidationError("write_archive: non-finite vectors");
  validate_label_table(labels);
  if (labels.rows() != static_cast<std::size_t>(vectors.rows())) {
    throw ValidationError("write_archive: " + std::to_string(labels.rows()) + " label rows for " +
                          std::to_string(vectors.rows()) + " vectors");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  detail::write_file(dir / "meta.json", archive_meta(vectors.rows(), vectors.cols()).dump(2) + "\n");
  std::string payload(static_cast<std::size_t>(vectors.size()) * sizeof(float), '\0');
  std::memcpy(payload.data(), vectors.data(), payload.size());
  detail::write_file(dir / "vectors.f32", payload);
  detail::write_file(dir / "labels.tsv", format_label_table(labels));
}

inline EmbeddingArchive read_archive(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("archive directory not found: " + dir.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("meta.json: " + std::string(e.what()));
  }
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!meta.contains(key)) throw ValidationError(std::string("meta.json: missing field '") + key + "'");
    return meta.at(key);
  };
  const auto& schema = field("schema");
  if (!schema.is_number_integer() || schema.get<int>() != kArchiveSchema) {
    throw ValidationError("meta.json: unknown schema version " + schema.dump() + " in field 'schema'");
  }
  const auto expect = [&](const char* key, const char* value) {
    if (field(key) != value) {
      throw ValidationError(std::string("meta.json: field '") + key + "' must be \"" + value + "\", got " +
                            field(key).dump());
    }
  };
  expect("dtype", "f32");
  expect("layout", "row-major");
  expect("endianness", "little");
  if (!field("count").is_number_unsigned() || !field("dim").is_number_unsigned()) {
    throw ValidationError("meta.json: fields 'count' and 'dim' must be non-negative integers");
  }
  const auto count = field("count").get<std::uint64_t>();
  const auto dim = field("dim").get<std::uint64_t>();
  if (count == 0 || dim == 0) throw ValidationError("meta.json: count and dim must be positive");

  const std::string payload = detail::read_file(dir / "vectors.f32");
  if (payload.size() != count * dim * sizeof(float)) {
    throw ValidationError("vectors.f32: payload length mismatch: " + std::to_string(payload.size()) +
                          " bytes, expected count x dim x 4 = " + std::to_string(count * dim * sizeof(float)));
  }
  EmbeddingArchive a;
  a.vectors.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::memcpy(a.vectors.data(), payload.data(), payload.size());
  if (!a.vectors.allFinite()) throw ValidationError("vectors.f32: non-finite entries");

  std::ifstream in(dir / "labels.tsv", std::ios::binary);
  if (!in) throw IoError("cannot open " + (dir / "labels.tsv").string());
  a.labels = parse_label_table(in);
  if (a.labels.rows() != count) {
    throw ValidationError("labels.tsv: row " + std::to_string(a.labels.rows()) + " missing: table has " +
                          std::to_string(a.labels.rows()) + " rows, expected " + std::to_string(count));
  }
  return a;
}

enum class Direction { forward, backward };

inline Direction parse_direction(const std::string& s) {
  if (s == "forward") return Direction::forward;
  if (s == "backward") return Direction::backward;
  throw ValidationError("unknown n-gram direction '" + s + "'");
}

inline const char* to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

/// Half-open row ranges of consecutive sentences. Rows of a sentence must be
/// contiguous with positions 0, 1, 2, ...
inline std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(std::span<const std::int64_t> sentence_id,
                                                                       std::span<const std::int64_t> position) {
  if (sentence_id.size() != position.size()) throw ShapeError("sentence boundaries: column lengths differ");
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::map<std::int64_t, bool> seen;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= sentence_id.size(); ++i) {
    const bool boundary = i == sentence_id.size() || (i > 0 && sentence_id[i] != sentence_id[i - 1]);
    if (i > 0 && boundary) {
      if (seen.count(sentence_id[start])) {
        throw ValidationError("sentence boundaries: sentence " + std::to_string(sentence_id[start]) +
                              " is not contiguous (row " + std::to_string(start) + ")");
      }
      seen[sentence_id[start]] = true;
      spans.emplace_back(start, i);
      start = i;
    }
    if (i == sentence_id.size()) break;
    const auto expected = static_cast<std::int64_t>(i - start);
    if (position[i] != expected) {
      throw ValidationError("sentence boundaries: row " + std::to_string(i) + " has position " +
                            std::to_string(position[i]) + ", expected " + std::to_string(expected));
    }
  }
  return spans;
}

/// Token ids by first appearance; vocabulary strings in the same order.
struct TokenIds {
  std::vector<std::int64_t> ids;
  std::vector<std::string> vocabulary;
};

inline TokenIds token_ids(std::span<const std::string> tokens) {
  TokenIds t;
  std::map<std::string, std::int64_t> index;
  for (const auto& s : tokens) {
    auto [it, inserted] = index.emplace(s, static_cast<std::int64_t>(t.vocabulary.size()));
    if (inserted) t.vocabulary.push_back(s);
    t.ids.push_back(it->second);
  }
  return t;
}

inline std::string ngram_set_name(int order) {
  switch (order) {
    case 1: return "token";
    case 2: return "bigram";
    case 3: return "trigram";
  }
  throw ValidationError("n-gram order must be 1, 2 or 3");
}

/// Order-k label of each row: the row's token followed by the next (forward)
/// or previous (backward) k - 1 tokens of the same sentence, padded with the
/// boundary sentinel. Superset is the order k - 1 set.
inline LabelColumn derive_ngram_labels(std::span<const std::string> tokens, std::span<const std::int64_t> sentence_id,
                                       std::span<const std::int64_t> position, int order,
                                       Direction direction = Direction::forward) {
  const std::string name = ngram_set_name(order);
  if (tokens.size() != sentence_id.size()) {
    throw ValidationError("n-gram labels: missing boundary markers (" + std::to_string(sentence_id.size()) +
                          " sentence ids for " + std::to_string(tokens.size()) + " tokens)");
  }
  const auto spans = sentence_spans(sentence_id, position);
  const auto tok = token_ids(tokens);
  LabelColumn col;
  col.set_name = name;
  if (order > 1) col.superset = ngram_set_name(order - 1);
  std::map<std::vector<std::int64_t>, std::uint32_t> index;
  col.values.resize(tokens.size());
  std::vector<std::int64_t> key(static_cast<std::size_t>(order));
  for (const auto& [begin, end] : spans) {
    for (std::size_t i = begin; i < end; ++i) {
      for (int k = 0; k < order; ++k) {
        const auto j = direction == Direction::forward ? static_cast<std::int64_t>(i) + k : static_cast<std::int64_t>(i) - k;
        key[k] = j >= static_cast<std::int64_t>(begin) && j < static_cast<std::int64_t>(end) ? tok.ids[j] : kBoundaryId;
      }
      auto [it, inserted] = index.emplace(key, static_cast<std::uint32_t>(col.vocabulary.size()));
      if (inserted) {
        std::string label;
        for (int k = 0; k < order; ++k) {
          if (k) label += ' ';
          label += key[k] == kBoundaryId ? std::string(kBoundary) : tok.vocabulary[key[k]];
        }
        col.vocabulary.push_back(std::move(label));
      }
      col.values[i] = it->second;
    }
  }
  return col;
}

/// Label columns for `names` from the archive's table. "bigram" and "trigram"
/// are derived from the "token" column when the table lacks them; the
/// token -> bigram -> trigram superset links are wired whenever both ends are requested.
inline std::vector<LabelColumn> label_columns(const LabelTable& table, std::span<const std::string> names,
                                              Direction direction = Direction::forward) {
  std::vector<LabelColumn> out;
  auto requested = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
  for (const auto& name : names) {
    LabelColumn col;
    if (table.has_column(name)) {
      col = make_label_column(name, table.column(name));
    } else if ((name == "bigram" || name == "trigram") && table.has_column("token")) {
      col = derive_ngram_labels(table.column("token"), table.sentence_id, table.position, name == "bigram" ? 2 : 3,
                                direction);
    } else {
      throw LookupError("label set '" + name + "' is not in labels.tsv and cannot be derived");
    }
    if (col.values.empty()) throw ValidationError("label set '" + name + "': empty label column");
    col.superset.reset();
    if (name == "bigram" && requested("token")) col.superset = "token";
    if (name == "trigram" && requested("bigram")) col.superset = "bigram";
    out.push_back(std::move(col));
  }
  return out;
}

}  // namespace infostruct
