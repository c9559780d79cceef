// Copyright 2026 The flatprior Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// flatprior: command-line front end for the flatness / prior experiments.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flatprior/data.hpp"
#include "flatprior/errors.hpp"
#include "flatprior/experiments.hpp"
#include "flatprior/flatness.hpp"
#include "flatprior/gpprior.hpp"
#include "flatprior/records.hpp"
#include "flatprior/rescale.hpp"
#include "flatprior/stats.hpp"

using namespace flatprior;
namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

std::string default_data_dir() {
  const char* env = std::getenv("FLATPRIOR_DATA_DIR");
  return env ? env : "data";
}

// "0,20,40" or "start:step:stop" (inclusive).
std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.find(':') != std::string::npos) {
    std::istringstream in(text);
    std::string a, b, c;
    std::getline(in, a, ':');
    std::getline(in, b, ':');
    std::getline(in, c);
    const std::size_t start = std::stoul(a);
    const std::size_t step = std::stoul(b);
    const std::size_t stop = std::stoul(c);
    if (step == 0) throw CLI::ValidationError("range step must be positive: " + text);
    for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
    return out;
  }
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    if (!cell.empty()) out.push_back(std::stoul(cell));
  }
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (std::size_t v : parse_sizes(text)) out.push_back(static_cast<int>(v));
  return out;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string("nan"); }

LabeledSet load_dataset(const std::string& name, const fs::path& dir) {
  auto require = [](const fs::path& p) {
    if (!fs::exists(p)) throw DataError("missing data file " + p.string());
    return p;
  };
  if (name == "mnist") {
    const fs::path images = require(dir / "mnist" / "train-images-idx3-ubyte");
    const fs::path labels = require(dir / "mnist" / "train-labels-idx1-ubyte");
    return load_mnist(images, labels);
  }
  std::vector<fs::path> batches;
  for (int i = 1; i <= 5; ++i) {
    batches.push_back(require(dir / "cifar-10-batches-bin" / ("data_batch_" + std::to_string(i) + ".bin")));
  }
  return load_cifar10_binary(batches);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

// Settings shared by the subcommands that train networks on a dataset split.
struct TrainingFlags {
  std::string dataset = "mnist";
  std::size_t train = 100;
  std::size_t test = 500;
  std::string hidden = "40,40";
  double sigma_w = 1.0;
  double sigma_b = 0.1;
  std::string optimizer = "sgd";
  std::optional<double> lr;
  std::size_t batch = 32;
  int max_epochs = 10000;
  std::optional<double> zeta;
  std::optional<double> ascent_lr;
  std::optional<std::size_t> ascent_batch;
  std::optional<int> ascent_epochs;
  std::string kernel = "analytic";
  std::size_t mc_samples = 0;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--dataset", dataset, "Dataset: mnist or cifar")->check(CLI::IsMember({"mnist", "cifar"}));
    app->add_option("--train", train, "Training set size |S|");
    app->add_option("--test", test, "Test set size |E|");
    app->add_option("--hidden", hidden, "Hidden layer widths, comma separated");
    app->add_option("--sigma-w", sigma_w, "Weight scale (variance sigma_w^2 / fan_in)");
    app->add_option("--sigma-b", sigma_b, "Bias standard deviation");
    app->add_option("--opt", optimizer, "Optimizer")
        ->check(CLI::IsMember({"sgd", "gd", "momentum", "adam", "adagrad", "rmsprop", "entropy-sgd"}));
    app->add_option("--lr", lr, "Learning rate (default: 0.01 for SGD-like, 0.001 for adaptive optimizers)");
    app->add_option("--batch", batch, "Minibatch size");
    app->add_option("--max-epochs", max_epochs, "Epoch cap when training to zero error");
    app->add_option("--zeta", zeta, "Sharpness box size (default: 1e-4 mnist, 1e-5 cifar)");
    app->add_option("--ascent-lr", ascent_lr, "Sharpness ascent learning rate (default: 1e-3 mnist, 5e-5 cifar)");
    app->add_option("--ascent-batch", ascent_batch, "Sharpness ascent batch (default: 32 mnist, 128 cifar)");
    app->add_option("--ascent-epochs", ascent_epochs, "Sharpness ascent epochs (default: 100)");
    app->add_option("--kernel", kernel, "Prior kernel: analytic or empirical")
        ->check(CLI::IsMember({"analytic", "empirical"}));
    app->add_option("--mc-samples", mc_samples, "Networks for the empirical kernel (0: 0.1 * (|S| + |E|))");
    app->add_option("--seed", seed, "Base seed");
  }

  OptimizerConfig optimizer_config() const {
    OptimizerConfig c = OptimizerConfig::defaults(parse_optimizer_kind(optimizer));
    if (lr) c.learning_rate = *lr;
    c.batch_size = batch;
    return c;
  }

  SharpnessConfig sharpness_config() const {
    SharpnessConfig c = dataset == "cifar" ? SharpnessConfig::cifar_defaults() : SharpnessConfig::mnist_defaults();
    if (zeta) c.zeta = *zeta;
    if (ascent_lr) c.ascent_lr = *ascent_lr;
    if (ascent_batch) c.ascent_batch = *ascent_batch;
    if (ascent_epochs) c.ascent_epochs = *ascent_epochs;
    return c;
  }

  PriorConfig prior_config() const {
    PriorConfig p;
    p.kernel = kernel == "empirical" ? KernelKind::kEmpirical : KernelKind::kAnalytic;
    p.mc_samples = mc_samples;
    return p;
  }

  CsvMetadata metadata(const std::string& command) const {
    return {{"command", command}, {"seed", std::to_string(seed)}, {"dataset", dataset},
            {"train", std::to_string(train)}, {"test", std::to_string(test)}, {"hidden", hidden},
            {"optimizer", optimizer}, {"learning_rate", format_number(optimizer_config().learning_rate)}};
  }
};

struct Globals {
  std::string data_dir = default_data_dir();
  int jobs = 1;
};

int run_boolean_command(const Globals& g, int n, std::size_t samples, std::size_t top, std::size_t runs,
                        const std::string& hidden, double sw, double sb, const std::string& encoding, double lr,
                        std::size_t batch, int max_epochs, bool spectral, std::uint64_t seed, const std::string& out) {
  BooleanConfig c;
  std::vector<int> sizes{n};
  for (int h : parse_ints(hidden)) sizes.push_back(h);
  sizes.push_back(1);
  c.spec = NetworkSpec{sizes, sw, sb};
  c.encoding = encoding == "pm1" ? BooleanEncoding::kPlusMinusOne : BooleanEncoding::kZeroOne;
  c.n_samples = samples;
  c.top_functions = top;
  c.n_sgd_runs = runs;
  c.optimizer.learning_rate = lr;
  c.optimizer.batch_size = batch;
  c.train.max_epochs = max_epochs;
  c.spectral = spectral;
  c.seed = seed;
  c.jobs = g.jobs;
  const BooleanResult r = run_boolean(c);

  std::ostringstream csv;
  write_boolean_csv(csv, r.records,
                    {{"command", "boolean"}, {"seed", std::to_string(seed)}, {"n", std::to_string(n)},
                     {"samples", std::to_string(samples)}, {"hidden", hidden}, {"encoding", encoding}});
  write_text(out, csv.str());

  std::vector<double> log_freq;
  std::vector<double> log_flat;
  for (const auto& rec : r.records) {
    log_freq.push_back(std::log(static_cast<double>(rec.sample_frequency)));
    log_flat.push_back(-std::log(rec.sharpness));
  }
  std::optional<double> rho;
  try {
    rho = spearman(log_freq, log_flat);
  } catch (const std::exception&) {
  }
  std::cout << "boolean: samples=" << r.total_samples << " distinct=" << r.tally.size()
            << " top=" << (r.tally.empty() ? std::string("-") : r.tally.front().function.to_string())
            << " fitted=" << r.records.size() << " skipped_runs=" << r.skipped_runs
            << " spearman_freq_flatness=" << opt_number(rho) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flatness, Bayesian priors and generalization of small ReLU classifiers"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI config file; sections per subcommand, flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", "flatprior 0.1.0");

  Globals g;
  app.add_option("--data-dir", g.data_dir, "Data directory (default: $FLATPRIOR_DATA_DIR or ./data)");
  app.add_option("--jobs", g.jobs, "Worker threads for independent runs")->check(CLI::PositiveNumber);

  // boolean
  auto* boolean = app.add_subcommand("boolean", "Sampled prior over Boolean functions vs flatness of SGD fits");
  int b_n = 7;
  std::size_t b_samples = 1'000'000;
  std::size_t b_top = 100;
  std::size_t b_runs = 100;
  std::string b_hidden = "40,40";
  double b_sw = 1.0;
  double b_sb = 0.1;
  std::string b_encoding = "01";
  double b_lr = 0.01;
  std::size_t b_batch = 32;
  int b_max_epochs = 10000;
  bool b_spectral = true;
  std::uint64_t b_seed = 0;
  std::string b_out = "boolean.csv";
  boolean->add_option("--n", b_n, "Boolean input bits")->check(CLI::Range(1, 20));
  boolean->add_option("--samples", b_samples, "Random networks sampled for the prior");
  boolean->add_option("--top", b_top, "Most frequent functions used as SGD targets");
  boolean->add_option("--runs", b_runs, "SGD trainings, round-robin over the targets");
  boolean->add_option("--hidden", b_hidden, "Hidden layer widths, comma separated");
  boolean->add_option("--sigma-w", b_sw, "Weight scale");
  boolean->add_option("--sigma-b", b_sb, "Bias standard deviation");
  boolean->add_option("--encoding", b_encoding, "Input encoding: 01 or pm1")->check(CLI::IsMember({"01", "pm1"}));
  boolean->add_option("--lr", b_lr, "SGD learning rate");
  boolean->add_option("--batch", b_batch, "SGD minibatch size");
  boolean->add_option("--max-epochs", b_max_epochs, "Epoch cap per training");
  boolean->add_option("--spectral", b_spectral, "Also compute the Hessian spectral norm");
  boolean->add_option("--seed", b_seed, "Base seed");
  boolean->add_option("--out", b_out, "Output CSV");

  // correlate
  auto* correlate = app.add_subcommand("correlate", "Attack-set experiment: prior, flatness and generalization");
  TrainingFlags c_flags;
  c_flags.add(correlate);
  std::string c_attack = "0:10:100";
  int c_reps = 3;
  bool c_hessian = true;
  std::size_t c_top_k = 50;
  double c_delta = 0.05;
  std::string c_overtrain;
  std::string c_out = "correlate.csv";
  correlate->add_option("--attack", c_attack, "Attack set sizes: comma list or start:step:stop");
  correlate->add_option("--reps", c_reps, "Repetitions (splits) per attack size")->check(CLI::PositiveNumber);
  correlate->add_option("--hessian", c_hessian, "Hessian spectral metrics when the network is small enough");
  correlate->add_option("--top-k", c_top_k, "Eigenvalues in the top-k log product");
  correlate->add_option("--delta", c_delta, "Confidence parameter of the bound");
  correlate->add_option("--overtrain", c_overtrain, "Extra measurement offsets after zero error, comma list");
  correlate->add_option("--out", c_out, "Output CSV");

  // temporal
  auto* temporal = app.add_subcommand("temporal", "Per-epoch trace with an alpha-rescaling event");
  TrainingFlags t_flags;
  t_flags.add(temporal);
  std::size_t t_attack = 0;
  int t_epochs = 300;
  int t_scale_epoch = 200;
  std::optional<int> t_after_zero;
  double t_alpha = 5.9;
  int t_layer = 1;
  bool t_prior = true;
  int t_prior_every = 1;
  std::string t_out = "temporal.csv";
  temporal->add_option("--attack", t_attack, "Attack set size");
  temporal->add_option("--epochs", t_epochs, "Total epochs");
  temporal->add_option("--scale-epoch", t_scale_epoch, "Epoch of the rescaling (0: never)");
  temporal->add_option("--scale-after-zero-error", t_after_zero, "Rescale this many epochs after zero error instead");
  temporal->add_option("--alpha", t_alpha, "Rescaling factor");
  temporal->add_option("--layer", t_layer, "Rescaled layer (1-based)");
  temporal->add_option("--prior", t_prior, "Measure log P(f) of the trace");
  temporal->add_option("--prior-every", t_prior_every, "Epoch stride of the prior measurement");
  temporal->add_option("--out", t_out, "Output CSV");

  // prior
  auto* prior = app.add_subcommand("prior", "log P(f) of a fingerprint under the NNGP prior");
  std::string p_file;
  std::string p_inputs = "boolean";
  int p_n = 7;
  std::string p_dataset = "mnist";
  std::size_t p_train = 100;
  std::size_t p_test = 500;
  std::string p_kernel = "analytic";
  int p_depth = 2;
  int p_width = 40;
  std::size_t p_mc = 0;
  double p_sw = 1.0;
  double p_sb = 0.1;
  std::uint64_t p_seed = 0;
  prior->add_option("--fingerprint-file", p_file, "File of 0/1 characters, one per input")->required();
  prior->add_option("--inputs", p_inputs, "Input list: boolean, or dataset (S then E of the seeded split)")
      ->check(CLI::IsMember({"boolean", "dataset"}));
  prior->add_option("--n", p_n, "Boolean input bits")->check(CLI::Range(1, 20));
  prior->add_option("--dataset", p_dataset, "Dataset for --inputs dataset: mnist or cifar")
      ->check(CLI::IsMember({"mnist", "cifar"}));
  prior->add_option("--train", p_train, "Training set size |S|");
  prior->add_option("--test", p_test, "Test set size |E|");
  prior->add_option("--kernel", p_kernel, "analytic or empirical")->check(CLI::IsMember({"analytic", "empirical"}));
  prior->add_option("--depth", p_depth, "Hidden layers")->check(CLI::PositiveNumber);
  prior->add_option("--width", p_width, "Hidden width for the empirical kernel")->check(CLI::PositiveNumber);
  prior->add_option("--mc-samples", p_mc, "Networks for the empirical kernel (0: 0.1 * inputs)");
  prior->add_option("--sigma-w", p_sw, "Weight scale");
  prior->add_option("--sigma-b", p_sb, "Bias standard deviation");
  prior->add_option("--seed", p_seed, "Split and kernel seed");

  // sharpness
  auto* sharp = app.add_subcommand("sharpness", "Train to zero error on one split and measure flatness");
  TrainingFlags s_flags;
  s_flags.add(sharp);
  std::size_t s_attack = 0;
  bool s_hessian = true;
  std::string s_out = "sharpness.csv";
  sharp->add_option("--attack", s_attack, "Attack set size");
  sharp->add_option("--hessian", s_hessian, "Hessian spectral metrics when the network is small enough");
  sharp->add_option("--out", s_out, "Output CSV");

  // rescale-demo
  auto* rescale = app.add_subcommand("rescale-demo", "Alpha-rescale a trained network: same function, new sharpness");
  TrainingFlags r_flags;
  r_flags.add(rescale);
  std::string r_alphas = "1,2,4,8";
  int r_layer = 1;
  std::string r_out = "rescale.csv";
  rescale->add_option("--alphas", r_alphas, "Comma separated rescaling factors");
  rescale->add_option("--layer", r_layer, "Rescaled layer (1-based)");
  rescale->add_option("--out", r_out, "Output CSV");

  // plot
  auto* plot = app.add_subcommand("plot", "SVG scatter of two CSV columns");
  std::string pl_in;
  std::string pl_x = "log_prior";
  std::string pl_y = "test_error";
  std::string pl_title;
  std::string pl_out = "plot.svg";
  plot->add_option("--in", pl_in, "Input CSV")->required();
  plot->add_option("--x", pl_x, "Column on the x axis");
  plot->add_option("--y", pl_y, "Column on the y axis");
  plot->add_option("--title", pl_title, "Plot title");
  plot->add_option("--out", pl_out, "Output SVG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    const fs::path data_dir = g.data_dir;
    if (boolean->parsed()) {
      return run_boolean_command(g, b_n, b_samples, b_top, b_runs, b_hidden, b_sw, b_sb, b_encoding, b_lr, b_batch,
                                 b_max_epochs, b_spectral, b_seed, b_out);
    }

    if (correlate->parsed()) {
      const LabeledSet full = load_dataset(c_flags.dataset, data_dir);
      CorrelationConfig c;
      c.train_size = c_flags.train;
      c.test_size = c_flags.test;
      c.attack_sizes = parse_sizes(c_attack);
      c.repetitions = c_reps;
      c.hidden = parse_ints(c_flags.hidden);
      c.sigma_w = c_flags.sigma_w;
      c.sigma_b = c_flags.sigma_b;
      c.optimizer = c_flags.optimizer_config();
      c.train.max_epochs = c_flags.max_epochs;
      c.sharpness = c_flags.sharpness_config();
      c.hessian_metrics = c_hessian;
      c.top_k = c_top_k;
      c.prior = c_flags.prior_config();
      c.bound_delta = c_delta;
      c.overtrain_offsets = parse_ints(c_overtrain);
      c.seed = c_flags.seed;
      c.jobs = g.jobs;
      const CorrelationResult r = run_correlation(full, c);
      CsvMetadata meta = c_flags.metadata("correlate");
      meta.emplace_back("attack", join(c.attack_sizes));
      meta.emplace_back("repetitions", std::to_string(c_reps));
      std::ostringstream csv;
      write_experiment_csv(csv, r.records, meta);
      write_text(c_out, csv.str());
      for (const auto& run : r.runs) {
        if (run.status != TrainStatus::kConverged) std::cerr << run.run_id << ": " << run.message << "\n";
      }
      const CorrelationSummary s = summarize_correlation(r.records);
      std::cout << "correlate: runs=" << r.runs.size() << " records=" << r.records.size() << " points=" << s.points
                << " spearman_prior_error=" << opt_number(s.spearman_prior_error)
                << " pearson_prior_accuracy=" << opt_number(s.pearson_prior_accuracy)
                << " spearman_sharpness_error=" << opt_number(s.spearman_sharpness_error)
                << " spearman_flatness_accuracy=" << opt_number(s.spearman_flatness_accuracy) << "\n";
      return 0;
    }

    if (temporal->parsed()) {
      const LabeledSet full = load_dataset(t_flags.dataset, data_dir);
      TemporalConfig t;
      t.train_size = t_flags.train;
      t.test_size = t_flags.test;
      t.attack_size = t_attack;
      t.hidden = parse_ints(t_flags.hidden);
      t.sigma_w = t_flags.sigma_w;
      t.sigma_b = t_flags.sigma_b;
      t.optimizer = t_flags.optimizer_config();
      t.total_epochs = t_epochs;
      t.scale_epoch = t_scale_epoch;
      t.scale_after_zero_error = t_after_zero;
      t.alpha = t_alpha;
      t.scale_layer = t_layer;
      t.sharpness = t_flags.sharpness_config();
      t.measure_prior = t_prior;
      t.prior_every = t_prior_every;
      t.prior = t_flags.prior_config();
      t.seed = t_flags.seed;
      const TemporalResult r = run_temporal(full, t);
      CsvMetadata meta = t_flags.metadata("temporal");
      meta.emplace_back("alpha", format_number(t_alpha));
      meta.emplace_back("scale_layer", std::to_string(t_layer));
      meta.emplace_back("scale_epoch", std::to_string(r.scale_epoch));
      std::ostringstream csv;
      write_experiment_csv(csv, r.records, meta);
      write_text(t_out, csv.str());
      std::cout << "temporal: epochs=" << t_epochs << " zero_error_epoch=" << r.zero_error_epoch
                << " scale_epoch=" << r.scale_epoch;
      if (r.scale_epoch >= 1) {
        std::cout << " sharpness_before=" << format_number(r.records[r.scale_epoch - 1].sharpness)
                  << " sharpness_at=" << format_number(r.records[r.scale_epoch].sharpness) << " fingerprint_unchanged="
                  << (r.fingerprints[r.scale_epoch] == r.pre_scale_fingerprint ? "yes" : "no");
      }
      std::cout << "\n";
      return 0;
    }

    if (prior->parsed()) {
      std::ifstream in(p_file);
      if (!in) throw DataError("missing fingerprint file " + p_file);
      const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const FunctionFingerprint f = FunctionFingerprint::parse(text);
      InputMatrix inputs;
      std::optional<FunctionFingerprint> train_labels;
      if (p_inputs == "boolean") {
        inputs = boolean_inputs(p_n);
      } else {
        const Split split = make_split(load_dataset(p_dataset, data_dir), {p_train, 0, p_test, p_seed});
        inputs = split.fingerprint_inputs();
        train_labels = split.train.label_fingerprint();
      }
      if (f.size() != static_cast<std::size_t>(inputs.rows())) {
        throw std::invalid_argument("fingerprint has " + std::to_string(f.size()) + " bits but there are " +
                                    std::to_string(inputs.rows()) + " inputs");
      }
      const NetworkSpec spec = make_spec(static_cast<int>(inputs.cols()), std::vector<int>(p_depth, p_width), p_sw, p_sb);
      PriorConfig pc;
      pc.kernel = p_kernel == "empirical" ? KernelKind::kEmpirical : KernelKind::kAnalytic;
      pc.mc_samples = p_mc;
      const KernelMatrix k = with_jitter(prior_kernel(inputs, spec, pc, p_seed));
      const double lp = log_prior(k, f);
      std::cout << "log_prior=" << format_number(lp);
      if (train_labels && f.prefix(train_labels->size()) == *train_labels) {
        const double evidence = log_prior(leading_block(k, static_cast<Eigen::Index>(train_labels->size())), *train_labels);
        std::cout << " log_posterior=" << format_number(log_posterior_given_evidence(lp, evidence));
      }
      std::cout << "\n";
      return 0;
    }

    if (sharp->parsed() || rescale->parsed()) {
      const TrainingFlags& flags = sharp->parsed() ? s_flags : r_flags;
      const LabeledSet full = load_dataset(flags.dataset, data_dir);
      const Split split = make_split(full, {flags.train, sharp->parsed() ? s_attack : 0, flags.test, flags.seed});
      const LabeledSet trainset = split.train_with_attack();
      const NetworkSpec spec = make_spec(full.input_dim(), parse_ints(flags.hidden), flags.sigma_w, flags.sigma_b);
      TrainOptions options;
      options.max_epochs = flags.max_epochs;
      const TrainResult tr =
          train_to_zero_error(init_params(spec, flags.seed), trainset, flags.optimizer_config(), options, flags.seed + 1);
      if (!tr.converged) throw ConvergenceError("training did not reach zero error: " + tr.message);
      const SharpnessConfig sc = flags.sharpness_config();
      const InputMatrix probes = split.fingerprint_inputs();

      if (sharp->parsed()) {
        ExperimentRecord rec;
        rec.run_id = "s" + std::to_string(flags.seed);
        rec.optimizer = flags.optimizer;
        rec.attack_size = s_attack;
        rec.epoch = tr.epochs_to_zero_error;
        rec.train_error = classification_error(tr.params, trainset);
        rec.test_error = classification_error(tr.params, split.test);
        rec.sharpness = sharpness(tr.params, trainset, sc, flags.seed + 2);
        if (s_hessian && tr.params.size() <= HessianOptions{}.max_params) {
          HessianOptions ho;
          ho.threads = g.jobs;
          const HessianResult h = hessian(tr.params, trainset, ho);
          rec.spectral_norm = spectral_norm(h.matrix);
          try {
            rec.top_k_log_product = top_k_log_product(h.matrix, 50).value;
          } catch (const std::domain_error&) {
          }
        }
        std::ostringstream csv;
        write_experiment_csv(csv, {rec}, flags.metadata("sharpness"));
        write_text(s_out, csv.str());
        std::cout << "sharpness: epoch=" << rec.epoch << " test_error=" << format_number(rec.test_error)
                  << " sharpness=" << format_number(rec.sharpness)
                  << " spectral_norm=" << opt_number(rec.spectral_norm) << "\n";
        return 0;
      }

      std::ostringstream csv;
      for (const auto& [key, value] : r_flags.metadata("rescale-demo")) csv << "# " << key << '=' << value << '\n';
      csv << "alpha,layer,max_deviation,fingerprint_unchanged,sharpness\n";
      const FunctionFingerprint base = fingerprint(tr.params, probes);
      double worst = 0.0;
      bool all_same = true;
      std::vector<std::string> sharp_values;
      std::istringstream alphas(r_alphas);
      std::string cell;
      while (std::getline(alphas, cell, ',')) {
        const double alpha = std::stod(cell);
        const Params p = alpha_scale(tr.params, {r_layer, alpha});
        const double dev = verify_invariance(tr.params, p, probes);
        const bool same = fingerprint(p, probes) == base;
        const double s = sharpness(p, trainset, sc, flags.seed + 2);
        worst = std::max(worst, dev);
        all_same = all_same && same;
        sharp_values.push_back(format_number(s));
        csv << format_number(alpha) << ',' << r_layer << ',' << format_number(dev) << ',' << (same ? 1 : 0) << ','
            << format_number(s) << '\n';
      }
      write_text(r_out, csv.str());
      std::cout << "rescale-demo: alphas=" << r_alphas << " max_deviation=" << format_number(worst)
                << " fingerprints_unchanged=" << (all_same ? "yes" : "no") << " sharpness=";
      for (std::size_t i = 0; i < sharp_values.size(); ++i) std::cout << (i ? "," : "") << sharp_values[i];
      std::cout << "\n";
      return 0;
    }

    if (plot->parsed()) {
      std::ifstream in(pl_in);
      if (!in) throw DataError("missing CSV file " + pl_in);
      const CsvTable table = read_csv(in);
      const auto [xs, ys] = table.numeric_pairs(pl_x, pl_y);
      write_text(pl_out, scatter_svg(xs, ys, {pl_title, pl_x, pl_y}));
      std::cout << "plot: points=" << xs.size() << " out=" << pl_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
