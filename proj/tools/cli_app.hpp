#pragma once

#include "infostruct/core_info.hpp"
#include "infostruct/corpus_io.hpp"
#include "infostruct/estimator_bench.hpp"
#include "infostruct/report.hpp"
#include "infostruct/signal_measures.hpp"
#include "infostruct/structure_measures.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <glob.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace infostruct::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kIo = 3 };

inline std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc == GLOB_NOMATCH || out.empty()) throw IoError("no files match '" + pattern + "'");
  if (rc != 0) throw IoError("glob failed for '" + pattern + "'");
  return out;
}

/// Writes to `path`, or to `out` when path is "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  detail::write_file(p, text);
}

struct AnalyzeOptions {
  std::string estimator = "soft";
  std::vector<std::string> labels{"token"};
  std::size_t anchors = kDefaultAnchors;
  double scale = kDefaultScale;
  std::size_t subspace = kDefaultSubspaceWidth;
  std::uint64_t seed = 0;
  std::string weighting = "uniform";
  std::size_t bins = 10;
  std::size_t min_count = 1;
  bool detail = false;
  std::string direction = "forward";

  [[nodiscard]] AnalysisConfig config() const {
    AnalysisConfig c;
    if (estimator == "soft") {
      c.backend = Backend::soft;
    } else if (estimator == "binned") {
      c.backend = Backend::binned;
    } else {
      throw ValidationError("unknown estimator '" + estimator + "' (expected soft or binned)");
    }
    c.anchors = anchors;
    c.scale = scale;
    c.subspace = subspace;
    c.seed = seed;
    c.weighting = parse_weighting(weighting);
    c.bins = bins;
    c.min_count = min_count;
    c.detail = detail;
    return c;
  }
};

inline void add_analysis_flags(CLI::App* cmd, AnalyzeOptions& o) {
  cmd->add_option("--labels", o.labels, "Label sets (token, bigram, trigram or labels.tsv columns)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--estimator", o.estimator, "soft or binned")->capture_default_str();
  cmd->add_option("--anchors", o.anchors, "Soft anchors per subspace")->capture_default_str();
  cmd->add_option("--scale", o.scale, "Softmax scale")->capture_default_str();
  cmd->add_option("--subspace", o.subspace, "Subspace width (0 = full dimension)")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Anchor seed")->capture_default_str();
  cmd->add_option("--weighting", o.weighting, "uniform or frequency label aggregation")->capture_default_str();
  cmd->add_option("--bins", o.bins, "Bins per dimension for the binned estimator")->capture_default_str();
  cmd->add_option("--min-count", o.min_count, "Drop labels with fewer rows")->capture_default_str();
  cmd->add_option("--direction", o.direction, "n-gram direction: forward or backward")->capture_default_str();
  cmd->add_flag("--detail", o.detail, "Include the per-label table");
}

inline std::string analyze_to_json(const std::string& dir, const AnalyzeOptions& o) {
  return analyze_archive(dir, o.labels, o.config(), parse_direction(o.direction)).serialize();
}

/// Trailing integer of the path's final component, if any.
inline std::optional<long long> checkpoint_step(const std::string& path) {
  const std::string name = std::filesystem::path(path).lexically_normal().filename().string().empty()
                               ? std::filesystem::path(path).lexically_normal().parent_path().filename().string()
                               : std::filesystem::path(path).lexically_normal().filename().string();
  static const std::regex trailing(R"((\d+)\D*$)");
  std::smatch m;
  if (std::regex_search(name, m, trailing)) return std::stoll(m[1].str());
  return std::nullopt;
}

inline std::string timecourse_csv(const std::vector<std::pair<std::string, ReportDocument>>& reports) {
  std::string out = "step,measure,set,value\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& [path, doc] = reports[i];
    const auto step = checkpoint_step(path);
    const std::string s = step ? std::to_string(*step) : std::to_string(i);
    const auto line = [&](const std::string& measure, const std::string& set, const nlohmann::json& v) {
      out += s + "," + measure + "," + bench::csv_field(set) + "," +
             (v.is_number() ? format_float(v.get<double>()) : std::string("nan")) + "\n";
    };
    for (const char* m : {"overall_entropy", "overall_efficiency", "residual"}) line(m, "", doc.payload.at(m));
    for (auto it = doc.payload.at("per_set").begin(); it != doc.payload.at("per_set").end(); ++it) {
      for (const char* m : {"variation", "regularity", "disentanglement", "disentanglement_one_vs_rest", "proportion"}) {
        line(m, it.key(), it.value().at(m));
      }
    }
  }
  return out;
}

struct ScoreTable {
  std::map<std::string, double> by_key;
};

inline ScoreTable read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "report,score") throw ValidationError(path + ": header must be 'report,score'");
  ScoreTable t;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ValidationError(path + ": row " + std::to_string(row) + " has no score");
    const std::string key = line.substr(0, comma);
    const std::string val = line.substr(comma + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size()) {
      throw ValidationError(path + ": row " + std::to_string(row) + " score '" + val + "' is not a number");
    }
    if (!t.by_key.emplace(key, v).second) throw ValidationError(path + ": duplicate report '" + key + "'");
  }
  return t;
}

/// Score for a report, matched by path as given, file name, or stem.
inline double score_for(const ScoreTable& t, const std::string& report_path) {
  const std::filesystem::path p(report_path);
  for (const auto& key : {report_path, p.filename().string(), p.stem().string()}) {
    auto it = t.by_key.find(key);
    if (it != t.by_key.end()) return it->second;
  }
  throw ValidationError("no score for report '" + report_path + "'");
}

inline std::string correlate_to_json(const std::vector<std::string>& paths, const std::string& metric,
                                     const std::string& scores_path) {
  const auto scores = read_scores(scores_path);
  std::vector<double> x, y;
  nlohmann::json config;
  for (const auto& p : paths) {
    const auto doc = read_report(p);
    auto cfg = doc.config;
    cfg.erase("detail");
    if (config.is_null()) {
      config = cfg;
    } else if (cfg != config) {
      throw ValidationError("report '" + p + "' was produced with a different estimator config; refusing to compare");
    }
    const auto& v = doc.metric(metric);
    if (!v.is_number()) throw ValidationError("metric '" + metric + "' in '" + p + "' is not a number");
    x.push_back(v.get<double>());
    y.push_back(score_for(scores, p));
  }
  const auto rc = spearman(x, y);
  nlohmann::json out;
  out["metric"] = metric;
  out["n"] = rc.n;
  out["rho"] = rc.rho ? nlohmann::json(*rc.rho) : nlohmann::json(nullptr);
  out["config"] = config;
  out["reports"] = paths;
  return canonical_json(out);
}

inline std::string signal_to_json(const std::string& pairs, const std::vector<std::string>& measures,
                                  std::size_t max_pairs, std::uint64_t seed, const std::string& correlation) {
  const auto data = read_pairs(pairs);
  const auto t = estimate_mapping_tensor(data);
  nlohmann::json out;
  out["rows"] = data.size();
  out["roles"] = data.roles;
  out["atoms_per_role"] = data.atoms_per_role;
  out["alphabet_size"] = data.alphabet_size;
  out["signal_length"] = data.signal_length;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& name : measures) {
    if (name == "synonymy") {
      m[name] = synonymy(t);
    } else if (name == "homonymy") {
      m[name] = homonymy(t);
    } else if (name == "freedom") {
      m[name] = word_order_freedom(t);
    } else if (name == "entanglement") {
      m[name] = entanglement(t);
    } else if (name == "topsim") {
      CorrelationKind kind;
      if (correlation == "spearman") {
        kind = CorrelationKind::spearman;
      } else if (correlation == "pearson") {
        kind = CorrelationKind::pearson;
      } else {
        throw ValidationError("unknown correlation '" + correlation + "'");
      }
      const auto rc = topographic_similarity(data, max_pairs, seed, kind);
      m[name] = rc.rho ? nlohmann::json(*rc.rho) : nlohmann::json(nullptr);
      out["topsim_pairs"] = rc.n;
      out["topsim_correlation"] = correlation;
      out["topsim_seed"] = seed;
    } else {
      throw ValidationError("unknown signal measure '" + name + "'");
    }
  }
  out["measures"] = std::move(m);
  return canonical_json(out);
}

inline std::string bench_metadata(const bench::SweepConfig& cfg, const std::vector<bench::BenchRow>& rows) {
  double max_stderr = 0.0;
  for (const auto& r : rows) max_stderr = std::max(max_stderr, r.mc_stderr);
  nlohmann::json j;
  j["methods"] = bench::expand_methods(cfg.methods);
  j["dims"] = cfg.dims;
  j["samples"] = cfg.sample_counts;
  j["cells"] = cfg.cells;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["scale"] = cfg.scale;
  j["probes"] = cfg.probes;
  j["box_expansion"] = cfg.box_expansion;
  j["condition_cap"] = cfg.condition_cap;
  j["kmeans_max_iters"] = cfg.kmeans_max_iters;
  j["rows"] = rows.size();
  j["voronoi_max_cell_stderr"] = max_stderr;
  j["gaussian"] =
      "zero mean; covariance A A^T / d + 1e-3 I with standard-normal A, eigenvalues floored so the condition "
      "number is at most condition_cap";
  j["width_models"] = {
      {"full_discretization", "joint cells of the per-dimension equal-width grid on the attested range"},
      {"equal", "bounding-box volume / cells"},
      {"voronoi", "Monte-Carlo Voronoi share of the bounding box; cells without probe hits get half a hit"},
      {"bounding_box", "attested per-dimension range expanded by box_expansion on each side"}};
  return canonical_json(j);
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(item);
    } else {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size()) throw ValidationError(std::string(what) + ": '" + item + "' is not a count");
      out.push_back(static_cast<T>(v));
    }
  }
  if (out.empty()) throw ValidationError(std::string(what) + ": empty list");
  return out;
}

/// Runs the command line; never throws. Errors go to `err` as one `E:` line.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Information-theoretic structure measures for vector representations and signal mappings"};
  app.require_subcommand(1);

  AnalyzeOptions aopt;
  std::string data_dir, report_out = "-";
  auto* analyze_cmd = app.add_subcommand("analyze", "Analyse one embedding archive into a report");
  analyze_cmd->add_option("--data", data_dir, "Archive directory")->required();
  analyze_cmd->add_option("--out", report_out, "Report path ('-' for stdout)")->capture_default_str();
  add_analysis_flags(analyze_cmd, aopt);

  AnalyzeOptions topt;
  std::string checkpoints, tc_dir = "timecourse", tc_csv;
  unsigned tc_jobs = 1;
  auto* tc_cmd = app.add_subcommand("timecourse", "Analyse every archive matching a glob");
  tc_cmd->add_option("--checkpoints", checkpoints, "Glob of archive directories")->required();
  tc_cmd->add_option("--out-dir", tc_dir, "Directory for per-checkpoint reports")->capture_default_str();
  tc_cmd->add_option("--csv", tc_csv, "Long-format CSV path (default OUT_DIR/timecourse.csv)");
  tc_cmd->add_option("--jobs", tc_jobs, "Checkpoints analysed concurrently")->capture_default_str();
  add_analysis_flags(tc_cmd, topt);

  bench::SweepConfig bcfg;
  std::string b_dims = "16,64", b_samples = "100,1000,10000", b_cells = "10,100", b_methods = "all", bench_out = "-";
  auto* bench_cmd = app.add_subcommand("bench", "Gaussian ground-truth estimator sweep");
  bench_cmd->add_option("--dims", b_dims, "Comma-separated dimensions")->capture_default_str();
  bench_cmd->add_option("--samples", b_samples, "Comma-separated sample counts")->capture_default_str();
  bench_cmd->add_option("--cells", b_cells, "Comma-separated cell counts")->capture_default_str();
  bench_cmd->add_option("--methods", b_methods, "Comma-separated methods or 'all'")->capture_default_str();
  bench_cmd->add_option("--trials", bcfg.trials, "Trials per dimension")->capture_default_str();
  bench_cmd->add_option("--seed", bcfg.seed, "Base seed")->capture_default_str();
  bench_cmd->add_option("--scale", bcfg.scale, "Soft-entropy scale")->capture_default_str();
  bench_cmd->add_option("--probes", bcfg.probes, "Monte-Carlo Voronoi probes")->capture_default_str();
  bench_cmd->add_option("--box-expansion", bcfg.box_expansion, "Bounding-box expansion per side")->capture_default_str();
  bench_cmd->add_option("--condition-cap", bcfg.condition_cap, "Covariance condition-number cap")->capture_default_str();
  bench_cmd->add_option("--jobs", bcfg.jobs, "Worker threads (0 = all cores)")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "CSV path ('-' for stdout)")->capture_default_str();

  std::string pairs, signal_out = "-", correlation = "spearman";
  std::string measures = "synonymy,homonymy,freedom,entanglement,topsim";
  std::size_t max_pairs = 100'000;
  std::uint64_t signal_seed = 0;
  auto* signal_cmd = app.add_subcommand("signal", "Signal-mapping measures for meaning/signal pairs");
  signal_cmd->add_option("--pairs", pairs, "Pairs file: 'role:atom ...<TAB>SIGNAL' per line")->required();
  signal_cmd->add_option("--measures", measures, "Comma-separated measures")->capture_default_str();
  signal_cmd->add_option("--max-pairs", max_pairs, "Topographic-similarity pair budget")->capture_default_str();
  signal_cmd->add_option("--seed", signal_seed, "Pair subsampling seed")->capture_default_str();
  signal_cmd->add_option("--correlation", correlation, "spearman or pearson")->capture_default_str();
  signal_cmd->add_option("--out", signal_out, "JSON path ('-' for stdout)")->capture_default_str();

  std::string reports_glob, metric, scores_path, corr_out = "-";
  auto* corr_cmd = app.add_subcommand("correlate", "Spearman correlation of a report metric with external scores");
  corr_cmd->add_option("--reports", reports_glob, "Glob of report files")->required();
  corr_cmd->add_option("--metric", metric, "Dotted payload path, e.g. per_set.token.disentanglement")->required();
  corr_cmd->add_option("--scores", scores_path, "CSV with header report,score")->required();
  corr_cmd->add_option("--out", corr_out, "JSON path ('-' for stdout)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "E: usage: " << msg << "\n";
    return kValidation;
  }

  try {
    if (analyze_cmd->parsed()) {
      emit(report_out, analyze_to_json(data_dir, aopt), out);
    } else if (tc_cmd->parsed()) {
      auto paths = expand_glob(checkpoints);
      std::vector<std::pair<std::string, ReportDocument>> reports(paths.size());
      std::atomic<std::size_t> next{0};
      std::mutex failure_mu;
      std::exception_ptr failure;
      const auto cfg = topt.config();
      const auto dir = parse_direction(topt.direction);
      auto work = [&] {
        for (std::size_t i = next++; i < paths.size(); i = next++) {
          try {
            reports[i] = {paths[i], analyze_archive(paths[i], topt.labels, cfg, dir)};
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      };
      const unsigned workers = std::max(1u, std::min<unsigned>(tc_jobs, paths.size()));
      std::vector<std::thread> pool;
      for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
      work();
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
      std::filesystem::create_directories(tc_dir);
      for (std::size_t i = 0; i < reports.size(); ++i) {
        auto name = std::filesystem::path(paths[i]).lexically_normal();
        if (name.filename().empty()) name = name.parent_path();
        emit((std::filesystem::path(tc_dir) / (name.filename().string() + ".report.json")).string(),
             reports[i].second.serialize(), out);
      }
      emit(tc_csv.empty() ? (std::filesystem::path(tc_dir) / "timecourse.csv").string() : tc_csv,
           timecourse_csv(reports), out);
    } else if (bench_cmd->parsed()) {
      bcfg.dims = parse_list<std::size_t>(b_dims, "--dims");
      bcfg.sample_counts = parse_list<std::size_t>(b_samples, "--samples");
      bcfg.cells = parse_list<std::size_t>(b_cells, "--cells");
      bcfg.methods = parse_list<std::string>(b_methods, "--methods");
      const auto rows = bench::run_sweep(bcfg);
      std::ostringstream csv;
      bench::write_csv(csv, rows);
      emit(bench_out, csv.str(), out);
      if (bench_out != "-") emit(bench_out + ".meta.json", bench_metadata(bcfg, rows), out);
    } else if (signal_cmd->parsed()) {
      emit(signal_out,
           signal_to_json(pairs, parse_list<std::string>(measures, "--measures"), max_pairs, signal_seed, correlation),
           out);
    } else if (corr_cmd->parsed()) {
      emit(corr_out, correlate_to_json(expand_glob(reports_glob), metric, scores_path), out);
    }
  } catch (const IoError& e) {
    err << "E: io: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "E: io: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "E: validation: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "E: internal: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}

}  // namespace infostruct::cli
