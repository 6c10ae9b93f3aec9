#pragma once

// The command-line front end's operations, kept free of argument parsing so
// tests can drive them directly. Every emitted file starts with a `#` header
// naming the tool version, the command and its full configuration.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "diffmap/annotation.hpp"
#include "diffmap/features.hpp"
#include "diffmap/io.hpp"
#include "diffmap/reduce.hpp"
#include "diffmap/synthetic.hpp"

#ifndef DIFFMAP_VERSION
#define DIFFMAP_VERSION "0.1.0"
#endif

namespace diffmap {

inline std::string header_line(const std::string& command,
                               const std::vector<std::pair<std::string, std::string>>& config) {
  std::string line = "# diffmap " DIFFMAP_VERSION " " + command;
  for (const auto& [k, v] : config) line += " " + k + "=" + v;
  return line;
}

inline std::vector<std::pair<std::string, std::string>> reducer_echo(const ReducerConfig& r) {
  return {{"method", std::string(method_name(r.method))},
          {"d", std::to_string(r.dim)},
          {"sigma", shortest_real(r.sigma)},
          {"t", std::to_string(r.t)},
          {"knn", std::to_string(r.k_nn)},
          {"lle_reg", shortest_real(r.lle_reg)},
          {"lem_sigma", r.lem_sigma ? shortest_real(*r.lem_sigma) : std::string("auto")}};
}

/// `key = value` lines; `#` starts a comment.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + " line " + std::to_string(lineno) + ": expected 'key = value'");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// reduce

struct ReduceOptions {
  std::string input;
  std::string out;
  ReducerConfig reducer;
  std::uint64_t seed = 0;
};

inline void cmd_reduce(const ReduceOptions& opt) {
  const FeatureTable table = read_feature_table(opt.input);
  const Embedding e = reduce(table.data, opt.reducer);
  auto config = reducer_echo(opt.reducer);
  config.emplace_back("seed", std::to_string(opt.seed));
  config.emplace_back("n", std::to_string(table.data.rows()));
  config.emplace_back("input", opt.input);
  AtomicFile file(opt.out);
  file.stream() << header_line("reduce", config) << '\n';
  write_feature_lines(file.stream(), table.ids, e.coords);
  file.commit();
}

// ---------------------------------------------------------------------------
// annotate

struct ResultRow {
  std::string method;
  std::string feature;
  long d = 0;
  int k = 0;
  double mean_ap = 0.0;
  double precision_at_5 = 0.0;
  double recall_at_5 = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_evaluated = 0;
  std::size_t n_skipped = 0;
  std::uint64_t seed = 0;

  auto key() const { return std::tie(method, feature, d, k); }
};

inline constexpr const char* kResultColumns =
    "method,feature,d,k,mean_ap,precision_at_5,recall_at_5,n_train,n_test,n_evaluated,n_skipped,"
    "seed";

inline void write_results_csv(std::ostream& out, const std::vector<std::string>& comments,
                              const std::vector<ResultRow>& rows) {
  for (const auto& c : comments) out << c << '\n';
  out << kResultColumns << '\n';
  for (const ResultRow& r : rows)
    out << r.method << ',' << r.feature << ',' << r.d << ',' << r.k << ',' << format_real(r.mean_ap)
        << ',' << format_real(r.precision_at_5) << ',' << format_real(r.recall_at_5) << ','
        << r.n_train << ',' << r.n_test << ',' << r.n_evaluated << ',' << r.n_skipped << ','
        << r.seed << '\n';
}

struct ResultsCsv {
  std::vector<std::string> comments;
  std::vector<ResultRow> rows;
};

inline ResultsCsv read_results_csv(std::istream& in) {
  ResultsCsv out;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') {
      out.comments.push_back(line);
      continue;
    }
    if (!header) {
      if (line != kResultColumns) throw Error("results CSV: unexpected column header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 12)
      throw Error("results CSV line " + std::to_string(lineno) + ": expected 12 fields");
    const std::string where = "results CSV line " + std::to_string(lineno);
    ResultRow r;
    r.method = f[0];
    r.feature = f[1];
    r.d = std::stol(f[2]);
    r.k = std::stoi(f[3]);
    r.mean_ap = parse_real(f[4], where);
    r.precision_at_5 = parse_real(f[5], where);
    r.recall_at_5 = parse_real(f[6], where);
    r.n_train = std::stoul(f[7]);
    r.n_test = std::stoul(f[8]);
    r.n_evaluated = std::stoul(f[9]);
    r.n_skipped = std::stoul(f[10]);
    r.seed = std::stoull(f[11]);
    out.rows.push_back(r);
  }
  return out;
}

struct AnnotateOptions {
  std::vector<std::string> features;
  std::string labels;
  std::string vocabulary;
  std::string out;
  std::vector<Method> methods = {Method::DiffusionMaps};
  std::vector<Eigen::Index> dims = {30};
  std::vector<int> ks = {8};
  ReducerConfig reducer;  ///< method and dim are taken from the grid
  std::uint64_t seed = 0;
  int prune_min = 5;
  OutOfSample oos = OutOfSample::Transductive;
};

/// Name for a feature file: the descriptor name when the width matches one,
/// otherwise the file stem.
inline std::string feature_label(const std::string& path, Eigen::Index width) {
  for (FeatureKind k : {FeatureKind::Edh73, FeatureKind::Corr144, FeatureKind::Cm225})
    if (static_cast<Eigen::Index>(feature_length(k)) == width) return std::string(feature_name(k));
  return std::filesystem::path(path).stem().string();
}

/// Joins a feature table with the label map. Rows come out in ascending id
/// order so every feature file sees the same split.
inline LabeledDataset join_labels(const FeatureTable& table,
                                  const std::map<std::string, std::vector<int>>& labels,
                                  const std::vector<std::string>& vocabulary,
                                  const std::string& source) {
  std::vector<std::string> missing;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (!row_of.emplace(table.ids[i], i).second)
      throw Error(source + ": duplicate image id '" + table.ids[i] + "'");
    if (!labels.count(table.ids[i])) missing.push_back(table.ids[i]);
  }
  std::vector<std::string> unlabeled_side;
  for (const auto& [id, ls] : labels)
    if (!row_of.count(id)) unlabeled_side.push_back(id);
  if (!missing.empty() || !unlabeled_side.empty()) {
    auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (std::size_t i = 0; i < std::min<std::size_t>(10, ids.size()); ++i)
        s += (i ? ", " : "") + ids[i];
      if (ids.size() > 10) s += ", ...";
      return s;
    };
    std::string msg = "image ids disagree between " + source + " and the label file:";
    if (!missing.empty())
      msg += " " + std::to_string(missing.size()) + " without labels [" + list(missing) + "]";
    if (!unlabeled_side.empty())
      msg += " " + std::to_string(unlabeled_side.size()) + " without features [" +
             list(unlabeled_side) + "]";
    throw Error(msg);
  }
  LabeledDataset all;
  all.vocabulary = vocabulary;
  all.ids = table.ids;
  all.features = table.data;
  for (const auto& id : table.ids) all.labels.push_back(canonical_labels(labels.at(id)));
  all.validate();
  std::vector<std::size_t> order;
  for (const auto& [id, row] : row_of) order.push_back(row);
  return all.subset(order);
}

inline std::vector<ResultRow> run_annotation_grid(const AnnotateOptions& opt) {
  if (opt.features.empty() || opt.methods.empty() || opt.dims.empty() || opt.ks.empty())
    throw Error("annotation grid needs at least one feature file, method, dimension and k");
  for (auto d : opt.dims)
    if (d < 1) throw Error("grid dimensions must be >= 1");
  const auto labels = read_label_file(opt.labels);
  const auto vocabulary = read_vocabulary(opt.vocabulary);

  std::vector<ResultRow> rows;
  for (const auto& path : opt.features) {
    const FeatureTable table = read_feature_table(path);
    const std::string feature = feature_label(path, table.data.cols());
    const SplitDataset split =
        prune_and_split(join_labels(table, labels, vocabulary, path), opt.prune_min, opt.seed);
    for (Method m : opt.methods) {
      for (Eigen::Index d : opt.dims) {
        ReducerConfig cfg = opt.reducer;
        cfg.method = m;
        cfg.dim = d;
        ReducedSplit coords;
        try {
          coords = reduce_split(split, cfg, opt.oos);
        } catch (const Error& e) {
          throw Error(feature + ", d=" + std::to_string(d) + ": " + e.what());
        }
        for (int k : opt.ks) {
          const AnnotationReport rep = annotate_split(split, coords, k);
          ResultRow r;
          r.method = std::string(method_name(m));
          r.feature = feature;
          r.d = static_cast<long>(m == Method::Identity ? table.data.cols() : d);
          r.k = k;
          r.mean_ap = rep.mean_ap;
          r.precision_at_5 = rep.precision_at_5;
          r.recall_at_5 = rep.recall_at_5;
          r.n_train = rep.n_train;
          r.n_test = rep.n_test;
          r.n_evaluated = rep.n_evaluated;
          r.n_skipped = rep.n_skipped;
          r.seed = opt.seed;
          rows.push_back(r);
        }
      }
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
  return rows;
}

inline std::string join_list(const auto& items, auto&& to_text) {
  std::string s;
  for (const auto& x : items) s += (s.empty() ? "" : ",") + to_text(x);
  return s;
}

inline void cmd_annotate(const AnnotateOptions& opt) {
  const std::vector<ResultRow> rows = run_annotation_grid(opt);
  auto config = reducer_echo(opt.reducer);
  config.erase(config.begin(), config.begin() + 2);  // method and d come from the grid
  config.insert(config.begin(),
                {{"methods", join_list(opt.methods, [](Method m) { return std::string(method_name(m)); })},
                 {"dims", join_list(opt.dims, [](Eigen::Index d) { return std::to_string(d); })},
                 {"ks", join_list(opt.ks, [](int k) { return std::to_string(k); })}});
  config.emplace_back("seed", std::to_string(opt.seed));
  config.emplace_back("prune_min", std::to_string(opt.prune_min));
  config.emplace_back("oos", opt.oos == OutOfSample::Nystrom ? "nystrom" : "transductive");
  config.emplace_back("features", join_list(opt.features, [](const std::string& s) { return s; }));
  config.emplace_back("labels", opt.labels);
  config.emplace_back("vocabulary", opt.vocabulary);
  AtomicFile file(opt.out);
  write_results_csv(file.stream(), {header_line("annotate", config)}, rows);
  file.commit();
}

// ---------------------------------------------------------------------------
// bench

struct BenchRecord {
  std::string method;
  std::string feature;
  long d = 0;
  long n = 0;
  double seconds = 0.0;
  std::string machine;
};

struct BenchOptions {
  std::vector<std::string> features;
  std::vector<Method> methods = {Method::Pca, Method::Lle, Method::Lem, Method::DiffusionMaps};
  Eigen::Index dim = 30;
  ReducerConfig reducer;
  std::string out;
};

inline std::string machine_note() {
  return "hw_threads=" + std::to_string(std::thread::hardware_concurrency());
}

/// Times reduce() alone (file parsing excluded) with a monotonic clock.
inline std::vector<BenchRecord> run_bench(const BenchOptions& opt) {
  std::vector<BenchRecord> out;
  for (const auto& path : opt.features) {
    const FeatureTable table = read_feature_table(path);
    const std::string feature = feature_label(path, table.data.cols());
    for (Method m : opt.methods) {
      ReducerConfig cfg = opt.reducer;
      cfg.method = m;
      cfg.dim = opt.dim;
      const auto start = std::chrono::steady_clock::now();
      const Embedding e = reduce(table.data, cfg);
      const auto stop = std::chrono::steady_clock::now();
      BenchRecord r;
      r.method = std::string(method_name(m));
      r.feature = feature;
      r.d = static_cast<long>(e.dim());
      r.n = static_cast<long>(table.data.rows());
      r.seconds = std::max(std::chrono::duration<double>(stop - start).count(), 1e-9);
      r.machine = machine_note();
      out.push_back(r);
    }
  }
  return out;
}

inline void write_bench_csv(std::ostream& out, const std::string& header,
                            const std::vector<BenchRecord>& rows) {
  out << header << '\n' << "method,feature,d,n,seconds,machine\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.feature << ',' << r.d << ',' << r.n << ','
        << format_real(r.seconds) << ',' << r.machine << '\n';
}

inline std::vector<BenchRecord> cmd_bench(const BenchOptions& opt) {
  const auto rows = run_bench(opt);
  auto config = reducer_echo(opt.reducer);
  config.erase(config.begin(), config.begin() + 2);
  config.insert(config.begin(),
                {{"methods", join_list(opt.methods, [](Method m) { return std::string(method_name(m)); })},
                 {"d", std::to_string(opt.dim)}});
  config.emplace_back("features", join_list(opt.features, [](const std::string& s) { return s; }));
  AtomicFile file(opt.out);
  write_bench_csv(file.stream(), header_line("bench", config), rows);
  file.commit();
  return rows;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string name = "swiss_roll";
  Eigen::Index n = 2000;
  double height_scale = 1.0;
  ReducerConfig reducer;
  std::uint64_t seed = 0;
  int k_eval = 10;
  std::string out;  ///< empty: the CSV goes to standard output
};

inline SyntheticSample make_sample(const std::string& name, Eigen::Index n, double height_scale,
                                   std::uint64_t seed) {
  if (name == "swiss_roll") return swiss_roll(n, seed);
  if (name == "punctured_sphere") return punctured_sphere(n, height_scale, seed);
  throw Error("unknown dataset '" + name + "' (expected swiss_roll or punctured_sphere)");
}

struct SynthResult {
  SyntheticSample sample;
  Embedding embedding;
  double quality = 0.0;
};

inline SynthResult run_synth(const SynthOptions& opt) {
  SynthResult r{make_sample(opt.name, opt.n, opt.height_scale, opt.seed), {}, 0.0};
  r.embedding = reduce(r.sample.points, opt.reducer);
  r.quality = embedding_quality(r.embedding.coords, r.sample.intrinsic, opt.k_eval);
  return r;
}

/// Columns x,y,z,intrinsic1,intrinsic2 then the embedding coordinates; the
/// last line is a `# quality=` comment.
inline void write_synth_csv(std::ostream& out, const std::string& header, const SynthResult& r) {
  out << header << '\n' << "x,y,z,intrinsic1,intrinsic2";
  for (Eigen::Index j = 0; j < r.embedding.dim(); ++j) out << ",e" << (j + 1);
  out << '\n';
  const Matrix& p = r.sample.points.values();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    out << format_real(p(i, 0)) << ',' << format_real(p(i, 1)) << ',' << format_real(p(i, 2))
        << ',' << format_real(r.sample.intrinsic(i, 0)) << ','
        << format_real(r.sample.intrinsic(i, 1));
    for (Eigen::Index j = 0; j < r.embedding.dim(); ++j)
      out << ',' << format_real(r.embedding.coords(i, j));
    out << '\n';
  }
  out << "# quality=" << format_real(r.quality) << '\n';
}

inline double cmd_synth(const SynthOptions& opt, std::ostream& console) {
  const SynthResult r = run_synth(opt);
  auto config = reducer_echo(opt.reducer);
  config.insert(config.begin(), {{"name", opt.name},
                                 {"n", std::to_string(opt.n)},
                                 {"height", shortest_real(opt.height_scale)}});
  config.emplace_back("seed", std::to_string(opt.seed));
  config.emplace_back("k_eval", std::to_string(opt.k_eval));
  const std::string header = header_line("synth", config);
  if (opt.out.empty()) {
    write_synth_csv(console, header, r);
  } else {
    AtomicFile file(opt.out);
    write_synth_csv(file.stream(), header, r);
    file.commit();
    console << "quality=" << format_real(r.quality) << '\n';
  }
  return r.quality;
}

// ---------------------------------------------------------------------------
// features

struct FeaturesOptions {
  std::string input_dir;
  FeatureKind kind = FeatureKind::Edh73;
  std::string out;
};

/// One feature line per .ppm file in `input_dir`, ids are file stems in
/// lexicographic order.
inline void cmd_features(const FeaturesOptions& opt) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(opt.input_dir)) throw Error("not a directory: " + opt.input_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(opt.input_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .ppm images in " + opt.input_dir);

  std::vector<std::string> ids(files.size());
  Matrix values(static_cast<Eigen::Index>(files.size()),
                static_cast<Eigen::Index>(feature_length(opt.kind)));
  parallel_for(files.size(), [&](std::size_t i) {
    const FeatureVector f = extract_features(read_ppm(files[i].string()), opt.kind);
    ids[i] = files[i].stem().string();
    for (std::size_t c = 0; c < f.values.size(); ++c)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f.values[c];
  });
  AtomicFile file(opt.out);
  file.stream() << header_line("features", {{"kind", std::string(feature_name(opt.kind))},
                                            {"hsv_bins", "6x3x2"},
                                            {"images", std::to_string(files.size())},
                                            {"input", opt.input_dir}})
                << '\n';
  write_feature_lines(file.stream(), ids, values);
  file.commit();
}

}  // namespace diffmap
