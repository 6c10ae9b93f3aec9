// diffmap: command-line driver for the reducers, the annotation grid, the
// timing benchmark, the synthetic manifolds and the image descriptors.

#include <algorithm>
#include <cstring>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffmap/commands.hpp"

namespace {

using namespace diffmap;

/// Splices `key = value` lines from --config into argv as `--key value`,
/// ahead of the user's own flags and only for keys the user did not pass,
/// so explicit flags always win.
std::vector<std::string> merge_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name == "config") {
      if (eq != std::string::npos)
        config_path = a.substr(eq + 1);
      else if (i + 1 < args.size())
        config_path = args[i + 1];
    }
  }
  if (config_path.empty() || args.empty()) return args;
  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (given.count(key)) continue;
    injected.push_back("--" + key);
    injected.push_back(value);
  }
  // args[0] is the subcommand
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

struct SharedReducerFlags {
  std::string method = "dm";
  double sigma = 10.0;
  int t = 1;
  int knn = 12;
  double lle_reg = 1e-3;
  double lem_sigma = 0.0;

  void attach(CLI::App* app, bool with_method) {
    if (with_method) app->add_option("--method", method, "dm, pca, lle, lem or identity");
    app->add_option("--sigma", sigma, "diffusion-maps Gaussian width")->capture_default_str();
    app->add_option("--t", t, "diffusion time steps")->capture_default_str();
    app->add_option("--knn", knn, "neighborhood size for LLE and LEM")->capture_default_str();
    app->add_option("--lle-reg", lle_reg, "LLE regularization (relative to Gram trace)")
        ->capture_default_str();
    app->add_option("--lem-sigma", lem_sigma, "LEM heat-kernel width (0: mean neighbor distance)");
  }

  ReducerConfig config() const {
    ReducerConfig r;
    r.method = parse_method(method);
    r.sigma = sigma;
    r.t = t;
    r.k_nn = knn;
    r.lle_reg = lle_reg;
    if (lem_sigma > 0.0) r.lem_sigma = lem_sigma;
    return r;
  }
};

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

OutOfSample parse_oos(const std::string& s) {
  if (s == "transductive" || s == "none") return OutOfSample::Transductive;
  if (s == "nystrom") return OutOfSample::Nystrom;
  throw Error("unknown --oos mode '" + s + "' (expected transductive or nystrom)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion maps and baseline reducers for image annotation experiments"};
  app.name("diffmap");
  app.set_version_flag("--version", DIFFMAP_VERSION);
  app.require_subcommand(1);
  std::string config_file;

  // reduce
  auto* reduce_cmd = app.add_subcommand("reduce", "reduce a feature file to d dimensions");
  ReduceOptions reduce_opt;
  SharedReducerFlags reduce_flags;
  long reduce_dim = 2;
  reduce_cmd->add_option("--input", reduce_opt.input, "feature file (<id> <v1> ... per line)")
      ->required();
  reduce_cmd->add_option("--out", reduce_opt.out, "output embedding file")->required();
  reduce_cmd->add_option("--dim", reduce_dim, "target dimension")->capture_default_str();
  reduce_cmd->add_option("--seed", reduce_opt.seed, "recorded seed")->capture_default_str();
  reduce_cmd->add_option("--config", config_file, "key = value defaults");
  reduce_flags.attach(reduce_cmd, true);

  // annotate
  auto* annotate_cmd = app.add_subcommand("annotate", "KNN annotation over an experiment grid");
  AnnotateOptions annotate_opt;
  SharedReducerFlags annotate_flags;
  std::vector<std::string> annotate_methods = {"dm"};
  std::vector<long> annotate_dims = {30};
  std::string annotate_oos = "transductive";
  annotate_cmd->add_option("--features", annotate_opt.features, "feature files")
      ->required()
      ->delimiter(',');
  annotate_cmd->add_option("--labels", annotate_opt.labels, "label file")->required();
  annotate_cmd->add_option("--vocab", annotate_opt.vocabulary, "vocabulary file")->required();
  annotate_cmd->add_option("--out", annotate_opt.out, "results CSV")->required();
  annotate_cmd->add_option("--method", annotate_methods, "reducers (comma separated)")
      ->delimiter(',');
  annotate_cmd->add_option("--dim", annotate_dims, "target dimensions")->delimiter(',');
  annotate_cmd->add_option("--k", annotate_opt.ks, "neighbor counts")->delimiter(',');
  annotate_cmd->add_option("--seed", annotate_opt.seed, "split seed")->capture_default_str();
  annotate_cmd->add_option("--prune-min", annotate_opt.prune_min, "minimum labels per image")
      ->capture_default_str();
  annotate_cmd->add_option("--oos", annotate_oos, "transductive or nystrom")->capture_default_str();
  annotate_cmd->add_option("--config", config_file, "key = value defaults");
  annotate_flags.attach(annotate_cmd, false);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "time each reducer on the same input");
  BenchOptions bench_opt;
  SharedReducerFlags bench_flags;
  std::vector<std::string> bench_methods = {"pca", "lle", "lem", "dm"};
  long bench_dim = 30;
  bench_cmd->add_option("--features", bench_opt.features, "feature files")
      ->required()
      ->delimiter(',');
  bench_cmd->add_option("--method", bench_methods, "reducers (comma separated)")->delimiter(',');
  bench_cmd->add_option("--dim", bench_dim, "target dimension")->capture_default_str();
  bench_cmd->add_option("--out", bench_opt.out, "timing CSV")->required();
  bench_cmd->add_option("--config", config_file, "key = value defaults");
  bench_flags.attach(bench_cmd, false);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "embed a synthetic manifold and score it");
  SynthOptions synth_opt;
  SharedReducerFlags synth_flags;
  long synth_dim = 2;
  long synth_n = 2000;
  synth_cmd->add_option("--name", synth_opt.name, "swiss_roll or punctured_sphere")
      ->capture_default_str();
  synth_cmd->add_option("--n", synth_n, "number of points")->capture_default_str();
  synth_cmd->add_option("--height", synth_opt.height_scale, "punctured sphere height scale")
      ->capture_default_str();
  synth_cmd->add_option("--dim", synth_dim, "embedding dimension")->capture_default_str();
  synth_cmd->add_option("--seed", synth_opt.seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--k-eval", synth_opt.k_eval, "neighbors for the quality score")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth_opt.out, "CSV file (default: standard output)");
  synth_cmd->add_option("--config", config_file, "key = value defaults");
  synth_flags.attach(synth_cmd, true);

  // features
  auto* features_cmd = app.add_subcommand("features", "extract descriptors from .ppm images");
  FeaturesOptions features_opt;
  std::string features_kind = "edh73";
  features_cmd->add_option("--input", features_opt.input_dir, "directory of .ppm images")
      ->required();
  features_cmd->add_option("--kind", features_kind, "edh73, corr144 or cm225")
      ->capture_default_str();
  features_cmd->add_option("--out", features_opt.out, "feature file")->required();
  features_cmd->add_option("--config", config_file, "key = value defaults");

  try {
    std::vector<std::string> args = merge_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*reduce_cmd) {
      reduce_opt.reducer = reduce_flags.config();
      reduce_opt.reducer.dim = reduce_dim;
      cmd_reduce(reduce_opt);
    } else if (*annotate_cmd) {
      annotate_opt.reducer = annotate_flags.config();
      annotate_opt.methods = parse_methods(annotate_methods);
      annotate_opt.dims.assign(annotate_dims.begin(), annotate_dims.end());
      annotate_opt.oos = parse_oos(annotate_oos);
      cmd_annotate(annotate_opt);
    } else if (*bench_cmd) {
      bench_opt.reducer = bench_flags.config();
      bench_opt.methods = parse_methods(bench_methods);
      bench_opt.dim = bench_dim;
      cmd_bench(bench_opt);
    } else if (*synth_cmd) {
      synth_opt.reducer = synth_flags.config();
      synth_opt.reducer.dim = synth_dim;
      synth_opt.n = synth_n;
      cmd_synth(synth_opt, std::cout);
    } else if (*features_cmd) {
      features_opt.kind = parse_feature_kind(features_kind);
      cmd_features(features_opt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
