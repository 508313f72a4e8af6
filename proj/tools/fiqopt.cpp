// fiqopt: batch tools for mated-pair quality label refinement.
//
// Subcommands: synth (make a synthetic dataset), optimize (refine quality
// labels), evaluate (error-versus-reject curve + partial AUC), pairs (dump
// one repeat's sampled pair table). Exit codes: 0 success, 1 data/runtime
// error, 2 usage error. Diagnostics go to stderr, artifacts to files.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fiqopt/dataset.hpp"
#include "fiqopt/evaluate.hpp"
#include "fiqopt/log.hpp"
#include "fiqopt/optimizer.hpp"
#include "fiqopt/pairing.hpp"
#include "fiqopt/rng.hpp"
#include "fiqopt/synth.hpp"
#include "fiqopt/types.hpp"

namespace {

using namespace fiqopt;

// Command-line level mistakes detected after flag parsing (bad grid spec and
// the like); mapped to exit code 2 alongside CLI11's own parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kPaucCutoffs[] = {0.1, 0.2, 0.4, 0.8};
constexpr char kDefaultGrid[] = "0:0.02:0.8";

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct CommonOpts {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string log_level = "info";
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--seed", c.seed, "master seed; every random draw derives from it")
      ->capture_default_str();
  cmd->add_option("--threads", c.threads,
                  "worker threads, 0 = all hardware threads; never changes results")
      ->capture_default_str();
  cmd->add_option("--log-level", c.log_level, "debug, info, warn or error")
      ->capture_default_str()
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));
}

void apply_log_level(const CommonOpts& c) {
  LogLevel lv = LogLevel::kInfo;
  parse_log_level(c.log_level, lv);
  set_log_level(lv);
}

double parse_grid_number(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw UsageError("--grid: bad number '" + s + "'");
  return v;
}

// Accepts "start:step:stop" or a comma-separated list. The grid must be
// strictly ascending within [0,1) and contain the reject fractions the
// partial-AUC summary is reported at.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3)
      throw UsageError("--grid: range form must be start:step:stop, got '" + text + "'");
    const double start = parse_grid_number(parts[0]);
    const double step = parse_grid_number(parts[1]);
    const double stop = parse_grid_number(parts[2]);
    if (!(step > 0.0)) throw UsageError("--grid: step must be positive");
    // Recompute each point from the start so the grid carries no accumulated
    // rounding; the slack absorbs the representation error of the stop.
    for (std::size_t i = 0;; ++i) {
      const double v = start + static_cast<double>(i) * step;
      if (v > stop + step * 1e-9) break;
      grid.push_back(v);
    }
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(parse_grid_number(item));
  }
  if (grid.empty()) throw UsageError("--grid: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] < 1.0))
      throw UsageError("--grid: reject fractions must lie in [0,1)");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw UsageError("--grid: grid must be strictly ascending");
  }
  for (const double p : kPaucCutoffs) {
    bool found = false;
    for (const double g : grid)
      if (std::abs(g - p) <= 1e-9) {
        found = true;
        break;
      }
    if (!found)
      throw UsageError("--grid: grid must include the reject fractions 0.1, 0.2, 0.4 and 0.8");
  }
  return grid;
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  CommonOpts common;
  std::size_t ids = 200;
  std::size_t per_id = 10;
  std::size_t dim = 64;
  double noise_floor = 0.05;
  double noise_scale = 0.8;
  double label_noise = 0.15;
  std::string out;
};

int cmd_synth(const SynthOpts& o) {
  apply_log_level(o.common);
  log_info("config: synth ids=" + std::to_string(o.ids) + " per-id=" + std::to_string(o.per_id) +
           " dim=" + std::to_string(o.dim) + " noise-floor=" + fmt_g(o.noise_floor) +
           " noise-scale=" + fmt_g(o.noise_scale) + " label-noise=" + fmt_g(o.label_noise) +
           " seed=" + std::to_string(o.common.seed) + " threads=" +
           std::to_string(o.common.threads) + " log-level=" + o.common.log_level + " out=" +
           o.out);

  SynthSpec spec;
  spec.n_identities = o.ids;
  spec.images_per_identity = o.per_id;
  spec.dim = o.dim;
  spec.noise_floor = o.noise_floor;
  spec.noise_scale = o.noise_scale;
  spec.base_label_noise_sigma = o.label_noise;
  spec.seed = o.common.seed;

  const SynthResult res = generate(spec);
  const std::filesystem::path out_dir(o.out);
  std::filesystem::create_directories(out_dir);
  write_manifest(out_dir / "manifest.csv", res.dataset.samples);
  write_embeddings(out_dir / "embeddings.fqem", res.dataset.embeddings);
  write_quality_csv(out_dir / "true_quality.csv", res.dataset, res.true_quality);
  log_info("wrote " + std::to_string(res.dataset.size()) + " samples to " + o.out +
           " (manifest.csv, embeddings.fqem, true_quality.csv)");
  return 0;
}

struct OptimizeOpts {
  CommonOpts common;
  std::string manifest;
  std::string embeddings;
  std::string out;
  std::size_t k = 10;
  double lambda = 0.05;
  double epsilon = 0.01;
  std::size_t iters = 10;
  std::size_t repeats = 10;
  std::string theta_mode = "formula-literal";
};

int cmd_optimize(const OptimizeOpts& o) {
  apply_log_level(o.common);
  log_info("config: optimize manifest=" + o.manifest + " embeddings=" + o.embeddings +
           " out=" + o.out + " k=" + std::to_string(o.k) + " lambda=" + fmt_g(o.lambda) +
           " epsilon=" + fmt_g(o.epsilon) + " iters=" + std::to_string(o.iters) +
           " repeats=" + std::to_string(o.repeats) + " theta-mode=" + o.theta_mode +
           " seed=" + std::to_string(o.common.seed) + " threads=" +
           std::to_string(o.common.threads) + " log-level=" + o.common.log_level);

  OptimConfig cfg;
  cfg.k = o.k;
  cfg.lambda = o.lambda;
  cfg.epsilon = o.epsilon;
  cfg.iterations = o.iters;
  cfg.repeats = o.repeats;
  cfg.seed = o.common.seed;
  cfg.threads = o.common.threads;
  parse_theta_mode(o.theta_mode, cfg.theta_mode);  // IsMember vetted the name

  const Dataset ds = load_dataset(o.manifest, o.embeddings);
  log_info("loaded " + std::to_string(ds.size()) + " samples, dim " +
           std::to_string(ds.embeddings.d) + ", " + std::to_string(ds.identity_index.size()) +
           " identities");
  const QualityVector base = normalize_qualities(base_qualities_by_row(ds));
  const QualityVector optimized = optimize(ds, base, cfg);
  write_quality_csv(o.out, ds, optimized);
  log_info("wrote optimized qualities to " + o.out);
  return 0;
}

struct EvaluateOpts {
  CommonOpts common;
  std::string manifest;
  std::string embeddings;
  std::string protocol;
  std::string qualities;
  std::string out;
  double fmr = 1e-3;
  std::string grid = kDefaultGrid;
};

int cmd_evaluate(const EvaluateOpts& o) {
  apply_log_level(o.common);
  log_info("config: evaluate manifest=" + o.manifest + " embeddings=" + o.embeddings +
           " protocol=" + o.protocol + " qualities=" + o.qualities + " out=" + o.out +
           " fmr=" + fmt_g(o.fmr) + " grid=" + o.grid + " seed=" +
           std::to_string(o.common.seed) + " threads=" + std::to_string(o.common.threads) +
           " log-level=" + o.common.log_level);

  if (!(o.fmr > 0.0 && o.fmr < 1.0)) throw UsageError("--fmr: must be in (0,1)");
  const std::vector<double> grid = parse_grid(o.grid);

  const Dataset ds = load_dataset(o.manifest, o.embeddings);
  const VerificationProtocol proto = load_protocol(o.protocol, ds);
  log_info("protocol: " + std::to_string(proto.genuine_pairs.size()) + " genuine, " +
           std::to_string(proto.impostor_pairs.size()) + " impostor pairs");
  const QualityVector q = read_quality_csv(o.qualities, ds);
  const ErcCurve curve = erc_curve(ds, proto, q, o.fmr, grid, o.common.threads);
  log_info("threshold " + fmt_g(curve.threshold) + " at FMR target " + fmt_g(o.fmr));

  const std::string json = erc_curve_json(
      curve, std::span<const double>(kPaucCutoffs, std::size(kPaucCutoffs)));
  std::ofstream out_file(o.out, std::ios::trunc);
  if (!out_file) throw std::runtime_error(o.out + ": cannot open for writing");
  out_file << json;
  if (!out_file) throw std::runtime_error(o.out + ": write failed");
  log_info("wrote curve to " + o.out);
  return 0;
}

struct PairsOpts {
  CommonOpts common;
  std::string manifest;
  std::string embeddings;
  std::string out;
  std::size_t k = 10;
  std::size_t repeat = 0;
};

int cmd_pairs(const PairsOpts& o) {
  apply_log_level(o.common);
  log_info("config: pairs manifest=" + o.manifest + " embeddings=" + o.embeddings + " out=" +
           o.out + " k=" + std::to_string(o.k) + " repeat=" + std::to_string(o.repeat) +
           " seed=" + std::to_string(o.common.seed) + " threads=" +
           std::to_string(o.common.threads) + " log-level=" + o.common.log_level);

  const Dataset ds = load_dataset(o.manifest, o.embeddings);
  const std::uint64_t repeat_seed = derive_seed(o.common.seed, o.repeat);
  PairTable table = sample_mated_pairs(ds, o.k, repeat_seed);
  compute_pair_similarities(table, ds.embeddings, o.common.threads);
  write_pair_table_csv(o.out, table, ds);
  log_info("wrote " + std::to_string(table.pair_count()) + " pairs (" +
           std::to_string(table.skipped.size()) + " samples without a mated peer) to " + o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mated-pair refinement of face image quality labels"};
  app.require_subcommand(1);

  SynthOpts synth_opts;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  synth_cmd->add_option("--ids", synth_opts.ids, "number of identities")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--per-id", synth_opts.per_id, "images per identity")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", synth_opts.dim, "embedding dimension")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise-floor", synth_opts.noise_floor, "noise gain at quality 1")
      ->capture_default_str();
  synth_cmd->add_option("--noise-scale", synth_opts.noise_scale, "extra noise gain at quality 0")
      ->capture_default_str();
  synth_cmd
      ->add_option("--label-noise", synth_opts.label_noise,
                   "stddev of Gaussian noise on recorded base qualities")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth_opts.out, "output directory")->required();
  add_common(synth_cmd, synth_opts.common);

  OptimizeOpts optimize_opts;
  CLI::App* optimize_cmd =
      app.add_subcommand("optimize", "refine base quality labels with mated-pair similarity");
  optimize_cmd->add_option("--manifest", optimize_opts.manifest, "manifest CSV")->required();
  optimize_cmd->add_option("--embeddings", optimize_opts.embeddings, "embedding binary file")
      ->required();
  optimize_cmd->add_option("--out", optimize_opts.out, "output quality CSV")->required();
  optimize_cmd->add_option("--k", optimize_opts.k, "mated pairs sampled per sample")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  optimize_cmd->add_option("--lambda", optimize_opts.lambda, "quality-gap gate margin")
      ->capture_default_str();
  optimize_cmd->add_option("--epsilon", optimize_opts.epsilon, "per-iteration step size")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  optimize_cmd->add_option("--iters", optimize_opts.iters, "iterations per repeat")
      ->capture_default_str();
  optimize_cmd->add_option("--repeats", optimize_opts.repeats, "independent repeats to average")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  optimize_cmd
      ->add_option("--theta-mode", optimize_opts.theta_mode,
                   "correction-factor divisor: formula-literal, count-normalized or skip-empty")
      ->capture_default_str()
      ->check(CLI::IsMember({"formula-literal", "count-normalized", "skip-empty"}));
  add_common(optimize_cmd, optimize_opts.common);

  EvaluateOpts evaluate_opts;
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "error-versus-reject curve and partial AUC");
  evaluate_cmd->add_option("--manifest", evaluate_opts.manifest, "manifest CSV")->required();
  evaluate_cmd->add_option("--embeddings", evaluate_opts.embeddings, "embedding binary file")
      ->required();
  evaluate_cmd->add_option("--protocol", evaluate_opts.protocol, "verification protocol CSV")
      ->required();
  evaluate_cmd->add_option("--qualities", evaluate_opts.qualities, "quality CSV to evaluate")
      ->required();
  evaluate_cmd->add_option("--out", evaluate_opts.out, "output JSON file")->required();
  evaluate_cmd->add_option("--fmr", evaluate_opts.fmr, "false match rate target")
      ->capture_default_str();
  evaluate_cmd
      ->add_option("--grid", evaluate_opts.grid,
                   "reject grid, start:step:stop or comma list; must include 0.1, 0.2, 0.4, 0.8")
      ->capture_default_str();
  add_common(evaluate_cmd, evaluate_opts.common);

  PairsOpts pairs_opts;
  CLI::App* pairs_cmd =
      app.add_subcommand("pairs", "dump the sampled mated-pair table of one repeat");
  pairs_cmd->add_option("--manifest", pairs_opts.manifest, "manifest CSV")->required();
  pairs_cmd->add_option("--embeddings", pairs_opts.embeddings, "embedding binary file")
      ->required();
  pairs_cmd->add_option("--out", pairs_opts.out, "output pair CSV")->required();
  pairs_cmd->add_option("--k", pairs_opts.k, "mated pairs sampled per sample")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  pairs_cmd->add_option("--repeat", pairs_opts.repeat, "repeat index the table belongs to")
      ->capture_default_str();
  add_common(pairs_cmd, pairs_opts.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(synth_cmd)) return cmd_synth(synth_opts);
    if (app.got_subcommand(optimize_cmd)) return cmd_optimize(optimize_opts);
    if (app.got_subcommand(evaluate_cmd)) return cmd_evaluate(evaluate_opts);
    if (app.got_subcommand(pairs_cmd)) return cmd_pairs(pairs_opts);
  } catch (const UsageError& e) {
    fiqopt::log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    fiqopt::log_error(e.what());
    return 1;
  }
  return 0;
}
