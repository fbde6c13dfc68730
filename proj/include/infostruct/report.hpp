#pragma once

// Report documents: canonical JSON (sorted keys, %.17g floats) with the
// estimator config echo and archive provenance.

#include "infostruct/corpus_io.hpp"
#include "infostruct/errors.hpp"
#include "infostruct/structure_measures.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

namespace infostruct {

inline constexpr int kReportSchema = 1;

/// Lower-case hex SHA-256 of `bytes`.
inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(detail::read_file(p)); }

/// File modification time as UTC ISO-8601 with second resolution.
inline std::string file_timestamp(const std::filesystem::path& p) {
  std::error_code ec;
  const auto ft = std::filesystem::last_write_time(p, ec);
  if (ec) throw IoError("cannot stat " + p.string() + ": " + ec.message());
  const auto sys = std::chrono::file_clock::to_sys(ft);
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::time_point_cast<std::chrono::seconds>(sys));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// %.17g; non-finite values become null.
inline std::string format_float(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void canonical_dump(const nlohmann::json& j, std::string& out, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      // nlohmann::json objects are std::map backed, so iteration is key-sorted.
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        canonical_dump(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        newline(depth + 1);
        canonical_dump(j[i], out, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_float(j.get<double>());
      return;
    default:
      out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
      return;
  }
}

}  // namespace detail

/// Sorted keys, floats with 17 significant digits, two-space indent, trailing newline.
inline std::string canonical_json(const nlohmann::json& j) {
  std::string out;
  detail::canonical_dump(j, out, 2, 0);
  out += '\n';
  return out;
}

/// Estimator settings echoed into every report; reports compare only when equal.
inline nlohmann::json config_json(const AnalysisConfig& cfg, std::span<const std::string> labels, Direction direction) {
  nlohmann::json j;
  j["backend"] = to_string(cfg.backend);
  j["anchors"] = cfg.anchors;
  j["scale"] = cfg.scale;
  j["subspace"] = cfg.subspace;
  j["seed"] = cfg.seed;
  j["weighting"] = to_string(cfg.weighting);
  j["bins"] = cfg.bins;
  j["min_count"] = cfg.min_count;
  j["detail"] = cfg.detail;
  j["labels"] = std::vector<std::string>(labels.begin(), labels.end());
  j["ngram_direction"] = to_string(direction);
  return j;
}

inline nlohmann::json payload_json(const StructureReport& r) {
  nlohmann::json p;
  p["rows"] = r.rows;
  p["dim"] = r.dim;
  p["layers"] = r.layers;
  p["factors"] = r.factors;
  p["events"] = r.events;
  p["excluded_rows"] = r.excluded_rows;
  p["overall_entropy"] = r.overall_entropy;
  p["overall_efficiency"] = r.overall_efficiency;
  p["residual"] = r.residual;
  p["notes"] = r.notes;
  nlohmann::json sets = nlohmann::json::object();
  for (const auto& s : r.sets) {
    nlohmann::json j;
    j["superset"] = s.superset ? nlohmann::json(*s.superset) : nlohmann::json(nullptr);
    j["labels"] = s.labels;
    j["labels_excluded"] = s.labels_excluded;
    j["variation"] = s.variation;
    j["variation_uniform"] = s.variation_uniform;
    j["variation_frequency"] = s.variation_frequency;
    j["regularity"] = s.regularity;
    j["regularity_uniform"] = s.regularity_uniform;
    j["regularity_frequency"] = s.regularity_frequency;
    j["regularity_nats"] = s.regularity_nats;
    j["disentanglement"] = s.disentanglement_multivariate;
    j["disentanglement_one_vs_rest"] = s.disentanglement_one_vs_rest;
    j["proportion"] = s.proportion;
    if (!s.details.empty()) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& d : s.details) {
        rows.push_back({{"label", d.label},
                        {"rows", d.rows},
                        {"conditional_entropy", d.conditional_entropy},
                        {"variation", d.variation},
                        {"one_vs_rest", d.one_vs_rest}});
      }
      j["detail"] = std::move(rows);
    }
    sets[s.name] = std::move(j);
  }
  p["per_set"] = std::move(sets);
  return p;
}

struct Provenance {
  std::string archive;
  std::string sha256;     ///< of vectors.f32
  std::string timestamp;  ///< vectors.f32 modification time
};

inline Provenance archive_provenance(const std::filesystem::path& dir) {
  return {dir.string(), sha256_file(dir / "vectors.f32"), file_timestamp(dir / "vectors.f32")};
}

struct ReportDocument {
  nlohmann::json config;
  nlohmann::json payload;
  Provenance provenance;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"schema_version", kReportSchema},
            {"config", config},
            {"payload", payload},
            {"provenance", {{"archive", provenance.archive}, {"sha256", provenance.sha256}, {"timestamp", provenance.timestamp}}}};
  }
  [[nodiscard]] std::string serialize() const { return canonical_json(to_json()); }

  /// Value at a dotted path below `payload`, e.g. "per_set.token.disentanglement".
  [[nodiscard]] const nlohmann::json& metric(const std::string& dotted) const {
    const nlohmann::json* cur = &payload;
    std::size_t start = 0;
    while (start <= dotted.size()) {
      const auto dot = dotted.find('.', start);
      const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!cur->is_object() || !cur->contains(key)) throw LookupError("report has no metric '" + dotted + "'");
      cur = &cur->at(key);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return *cur;
  }
};

/// Throws ValidationError naming the first missing or mistyped field.
inline void validate_report_json(const nlohmann::json& j) {
  auto require = [](const nlohmann::json& o, const char* key, nlohmann::json::value_t type, const std::string& where) {
    if (!o.is_object() || !o.contains(key)) throw ValidationError("report: missing field '" + where + key + "'");
    const auto& v = o.at(key);
    const bool number = type == nlohmann::json::value_t::number_float && (v.is_number() || v.is_null());
    if (!number && v.type() != type &&
        !(type == nlohmann::json::value_t::number_unsigned && v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ValidationError("report: field '" + where + key + "' has the wrong type");
    }
  };
  using T = nlohmann::json::value_t;
  require(j, "schema_version", T::number_unsigned, "");
  if (j.at("schema_version") != kReportSchema) {
    throw ValidationError("report: unknown schema version " + j.at("schema_version").dump());
  }
  require(j, "config", T::object, "");
  require(j, "payload", T::object, "");
  require(j, "provenance", T::object, "");
  const auto& c = j.at("config");
  for (const char* k : {"backend", "weighting", "ngram_direction"}) require(c, k, T::string, "config.");
  for (const char* k : {"anchors", "subspace", "seed", "bins", "min_count"}) require(c, k, T::number_unsigned, "config.");
  require(c, "scale", T::number_float, "config.");
  require(c, "labels", T::array, "config.");
  const auto& p = j.at("payload");
  for (const char* k : {"rows", "dim", "layers", "factors", "events", "excluded_rows"}) {
    require(p, k, T::number_unsigned, "payload.");
  }
  for (const char* k : {"overall_entropy", "overall_efficiency", "residual"}) require(p, k, T::number_float, "payload.");
  require(p, "notes", T::array, "payload.");
  require(p, "per_set", T::object, "payload.");
  for (auto it = p.at("per_set").begin(); it != p.at("per_set").end(); ++it) {
    const std::string where = "payload.per_set." + it.key() + ".";
    for (const char* k : {"variation", "variation_uniform", "variation_frequency", "regularity", "regularity_uniform",
                          "regularity_frequency", "regularity_nats", "disentanglement", "disentanglement_one_vs_rest",
                          "proportion"}) {
      require(it.value(), k, T::number_float, where);
    }
    require(it.value(), "labels", T::number_unsigned, where);
  }
  const auto& v = j.at("provenance");
  for (const char* k : {"archive", "sha256", "timestamp"}) require(v, k, T::string, "provenance.");
}

inline ReportDocument parse_report(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("report: " + std::string(e.what()));
  }
  validate_report_json(j);
  ReportDocument d;
  d.config = j.at("config");
  d.payload = j.at("payload");
  const auto& p = j.at("provenance");
  d.provenance = {p.at("archive").get<std::string>(), p.at("sha256").get<std::string>(),
                  p.at("timestamp").get<std::string>()};
  return d;
}

inline ReportDocument read_report(const std::filesystem::path& p) { return parse_report(detail::read_file(p)); }

/// Reads the archive at `dir`, derives the requested label sets and analyses
/// the single layer of vectors.
inline ReportDocument analyze_archive(const std::filesystem::path& dir, std::span<const std::string> label_sets,
                                      const AnalysisConfig& cfg, Direction direction = Direction::forward) {
  const auto archive = read_archive(dir);
  const auto columns = label_columns(archive.labels, label_sets, direction);
  const auto report = analyze(archive.as_double(), columns, cfg);
  ReportDocument doc;
  doc.config = config_json(cfg, label_sets, direction);
  doc.payload = payload_json(report);
  doc.provenance = archive_provenance(dir);
  return doc;
}

}  // namespace infostruct
