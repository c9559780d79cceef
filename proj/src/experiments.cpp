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


#include "flatprior/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>

#include "flatprior/errors.hpp"
#include "flatprior/rescale.hpp"
#include "flatprior/seeding.hpp"
#include "flatprior/stats.hpp"
#include "parallel.hpp"

namespace flatprior {

namespace {

enum SeedStream : std::uint64_t {
  kTallyStream = 1,
  kInitStream,
  kSharpnessStream,
  kTrainStream,
  kSplitStream,
  kKernelStream,
  kOvertrainStream,
  kLanczosStream,
};

bool tally_before(const FunctionTally& a, const FunctionTally& b) {
  if (a.count != b.count) return a.count > b.count;
  return a.function.to_string() < b.function.to_string();
}

std::string correlation_run_id(int repetition, std::size_t attack) {
  return "r" + std::to_string(repetition) + "-a" + std::to_string(attack);
}

struct SplitContext {
  Split split;
  InputMatrix fingerprint_inputs;
  KernelMatrix kernel;       // jittered, over S + E
  double log_evidence = 0.0;  // ln P(S)
};

SplitContext prepare_split(const LabeledSet& full, std::size_t train, std::size_t attack, std::size_t test,
                           const NetworkSpec& spec, const PriorConfig& prior, bool with_prior, std::uint64_t seed) {
  SplitContext ctx;
  ctx.split = make_split(full, SplitConfig{train, attack, test, derive_seed(seed, {kSplitStream})});
  ctx.fingerprint_inputs = ctx.split.fingerprint_inputs();
  if (with_prior) {
    ctx.kernel = with_jitter(prior_kernel(ctx.fingerprint_inputs, spec, prior, derive_seed(seed, {kKernelStream})),
                             prior.ep.jitter);
    const KernelMatrix ks = leading_block(ctx.kernel, static_cast<Eigen::Index>(train));
    ctx.log_evidence = log_prior(ks, ctx.split.train.label_fingerprint(), prior.ep);
  }
  return ctx;
}

// Prior, posterior and bound columns for a fingerprint on S + E.
void fill_prior_columns(ExperimentRecord& record, const SplitContext& ctx, const FunctionFingerprint& f,
                        double log_prior_value, std::optional<double> bound_delta) {
  record.log_prior = log_prior_value;
  const FunctionFingerprint train_labels = ctx.split.train.label_fingerprint();
  if (f.prefix(train_labels.size()) == train_labels) {
    record.log_posterior = log_posterior_given_evidence(log_prior_value, ctx.log_evidence);
  }
  if (bound_delta) {
    record.bound_value = bound_value(std::min(0.0, log_prior_value),
                                     static_cast<double>(std::max<std::size_t>(1, ctx.split.train.size())),
                                     *bound_delta);
  }
}

}  // namespace

NetworkSpec make_spec(int input_dim, const std::vector<int>& hidden, double sigma_w, double sigma_b) {
  NetworkSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(1);
  spec.sigma_w = sigma_w;
  spec.sigma_b = sigma_b;
  spec.validate();
  return spec;
}

KernelMatrix prior_kernel(const InputMatrix& inputs, const NetworkSpec& spec, const PriorConfig& config,
                          std::uint64_t seed) {
  if (config.kernel == KernelKind::kAnalytic) {
    return arccos_kernel(inputs, spec.hidden_layers(), spec.sigma_w, spec.sigma_b);
  }
  const std::size_t samples =
      config.mc_samples > 0 ? config.mc_samples
                            : std::max<std::size_t>(1, static_cast<std::size_t>(0.1 * static_cast<double>(inputs.rows())));
  return mc_empirical_kernel(spec, inputs, samples, seed);
}

std::vector<FunctionTally> sample_function_tally(const NetworkSpec& spec, const InputMatrix& inputs,
                                                 std::size_t n_samples, std::uint64_t seed, int jobs) {
  spec.validate();
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  using Counts = std::unordered_map<FunctionFingerprint, std::size_t, FingerprintHash>;
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(chunks, static_cast<std::size_t>(std::max(1, jobs))));
  std::vector<Counts> local(workers);
  std::atomic<std::size_t> next{0};

  detail::parallel_for(workers, static_cast<int>(workers), [&](std::size_t w) {
    for (std::size_t c = next++; c < chunks; c = next++) {
      Rng rng(derive_seed(seed, {kTallyStream, c}));
      const std::size_t stop = std::min(n_samples, (c + 1) * kChunk);
      for (std::size_t s = c * kChunk; s < stop; ++s) {
        ++local[w][fingerprint(sample_params(spec, rng), inputs)];
      }
    }
  });

  Counts total;
  for (auto& counts : local) {
    for (auto& [f, n] : counts) total[f] += n;
  }
  std::vector<FunctionTally> out;
  out.reserve(total.size());
  for (auto& [f, n] : total) out.push_back({f, n});
  std::sort(out.begin(), out.end(), tally_before);
  return out;
}

BooleanResult run_boolean(const BooleanConfig& config) {
  config.spec.validate();
  const int n = config.spec.input_dim();
  const InputMatrix inputs = boolean_inputs(n, config.encoding);

  BooleanResult result;
  result.total_samples = config.n_samples;
  result.tally = sample_function_tally(config.spec, inputs, config.n_samples, config.seed, config.jobs);
  const std::size_t targets = std::min(config.top_functions, result.tally.size());
  if (targets == 0) return result;

  struct RunOutcome {
    bool converged = false;
    double sharpness = 0.0;
    std::optional<double> spectral;
  };
  std::vector<RunOutcome> outcomes(config.n_sgd_runs);

  detail::parallel_for(config.n_sgd_runs, config.jobs, [&](std::size_t r) {
    const FunctionTally& target = result.tally[r % targets];
    const LabeledSet data = boolean_dataset(n, target.function, config.encoding);
    const Params init = init_params(config.spec, derive_seed(config.seed, {kInitStream, r}));
    const TrainResult trained =
        train_to_zero_error(init, data, config.optimizer, config.train, derive_seed(config.seed, {kTrainStream, r}));
    if (!trained.converged) return;
    RunOutcome& out = outcomes[r];
    out.converged = true;
    out.sharpness = sharpness(trained.params_at_zero_error, data, config.sharpness,
                              derive_seed(config.seed, {kSharpnessStream, r}));
    if (config.spectral) {
      const HessianResult h = hessian(trained.params_at_zero_error, data);
      SpectralOptions so;
      so.seed = derive_seed(config.seed, {kLanczosStream, r});
      out.spectral = spectral_norm(h.matrix, so);
    }
  });

  for (std::size_t t = 0; t < targets; ++t) {
    BooleanRecord rec;
    rec.fingerprint = result.tally[t].function;
    rec.sample_frequency = result.tally[t].count;
    rec.log_prior_empirical =
        std::log(static_cast<double>(rec.sample_frequency) / static_cast<double>(config.n_samples));
    double sharp_sum = 0.0;
    double spec_sum = 0.0;
    for (std::size_t r = t; r < config.n_sgd_runs; r += targets) {
      if (!outcomes[r].converged) {
        ++result.skipped_runs;
        continue;
      }
      ++rec.sgd_runs;
      sharp_sum += outcomes[r].sharpness;
      if (outcomes[r].spectral) spec_sum += *outcomes[r].spectral;
    }
    if (rec.sgd_runs == 0) continue;
    rec.sharpness = sharp_sum / rec.sgd_runs;
    if (config.spectral) rec.spectral_norm = spec_sum / rec.sgd_runs;
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::array<double, 4> run_perceptron_control(std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("perceptron control needs samples");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<std::size_t, 4> counts{};
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double w = normal(rng);
    const double b = normal(rng);
    const bool f0 = b >= 0.0;
    const bool f1 = w + b >= 0.0;
    const std::size_t index = f0 == f1 ? (f0 ? 1 : 0) : (f1 ? 2 : 3);
    ++counts[index];
  }
  std::array<double, 4> p{};
  for (std::size_t i = 0; i < 4; ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(n_samples);
  return p;
}

CorrelationResult run_correlation(const LabeledSet& full, const CorrelationConfig& config) {
  full.validate();
  if (config.attack_sizes.empty()) throw std::invalid_argument("no attack sizes given");
  if (config.repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  const std::size_t max_attack = *std::max_element(config.attack_sizes.begin(), config.attack_sizes.end());
  const NetworkSpec spec = make_spec(full.input_dim(), config.hidden, config.sigma_w, config.sigma_b);

  // One split per repetition with the largest attack set; smaller attack sets
  // are its prefixes, so S and E are shared by every run of a repetition.
  std::vector<SplitContext> contexts(static_cast<std::size_t>(config.repetitions));
  detail::parallel_for(contexts.size(), config.jobs, [&](std::size_t rep) {
    contexts[rep] = prepare_split(full, config.train_size, max_attack, config.test_size, spec, config.prior, true,
                                  derive_seed(config.seed, {rep}));
  });

  const bool with_hessian = config.hessian_metrics && spec.parameter_count() <= config.hessian.max_params;
  const std::size_t tasks = contexts.size() * config.attack_sizes.size();
  std::vector<std::vector<ExperimentRecord>> per_task(tasks);
  std::vector<RunStatus> statuses(tasks);

  detail::parallel_for(tasks, config.jobs, [&](std::size_t task) {
    const std::size_t rep = task / config.attack_sizes.size();
    const std::size_t attack = config.attack_sizes[task % config.attack_sizes.size()];
    const SplitContext& ctx = contexts[rep];
    const std::uint64_t run_seed = derive_seed(config.seed, {rep, attack});

    std::vector<std::size_t> attack_rows(attack);
    std::iota(attack_rows.begin(), attack_rows.end(), 0);
    const LabeledSet train_set = LabeledSet::concat(ctx.split.train, ctx.split.attack.subset(attack_rows));

    RunStatus& status = statuses[task];
    status.run_id = correlation_run_id(static_cast<int>(rep), attack);
    status.attack_size = attack;
    status.repetition = static_cast<int>(rep);

    const Params init = init_params(spec, derive_seed(run_seed, {kInitStream}));
    const TrainResult trained =
        train_to_zero_error(init, train_set, config.optimizer, config.train, derive_seed(run_seed, {kTrainStream}));
    status.status = trained.status;
    status.message = trained.message;
    if (!trained.converged) return;

    auto measure = [&](const Params& params, int epoch, const std::string& run_id) {
      ExperimentRecord rec;
      rec.run_id = run_id;
      rec.optimizer = std::string(to_string(config.optimizer.kind));
      rec.attack_size = attack;
      rec.epoch = epoch;
      rec.train_error = classification_error(params, train_set);
      rec.test_error = classification_error(params, ctx.split.test);
      rec.sharpness = sharpness(params, train_set, config.sharpness,
                                derive_seed(run_seed, {kSharpnessStream, static_cast<std::uint64_t>(epoch)}));
      if (with_hessian) {
        HessianOptions ho = config.hessian;
        ho.threads = 1;
        const HessianResult h = hessian(params, train_set, ho);
        const HessianSpectrum spectrum = hessian_spectrum(h.matrix);
        rec.spectral_norm = std::max(std::abs(spectrum.eigenvalues.front()), std::abs(spectrum.eigenvalues.back()));
        try {
          rec.top_k_log_product = top_k_log_product(spectrum, config.top_k).value;
        } catch (const std::domain_error&) {
        }
      }
      const FunctionFingerprint f = fingerprint(params, ctx.fingerprint_inputs);
      fill_prior_columns(rec, ctx, f, log_prior(ctx.kernel, f, config.prior.ep), config.bound_delta);
      return rec;
    };

    per_task[task].push_back(measure(trained.params_at_zero_error, trained.epochs_to_zero_error, status.run_id));

    if (!config.overtrain_offsets.empty()) {
      std::vector<int> offsets = config.overtrain_offsets;
      std::sort(offsets.begin(), offsets.end());
      Trainer trainer(trained.params_at_zero_error, train_set, config.optimizer,
                      derive_seed(run_seed, {kOvertrainStream}));
      for (int offset : offsets) {
        while (trainer.epoch() < offset) trainer.run_epoch();
        per_task[task].push_back(measure(trainer.params(), trained.epochs_to_zero_error + offset,
                                         status.run_id + "+o" + std::to_string(offset)));
      }
    }
  });

  CorrelationResult result;
  for (std::size_t t = 0; t < tasks; ++t) {
    for (auto& rec : per_task[t]) result.records.push_back(std::move(rec));
    result.runs.push_back(std::move(statuses[t]));
  }
  std::stable_sort(result.records.begin(), result.records.end(), [](const auto& a, const auto& b) {
    return std::tuple(a.run_id.substr(0, a.run_id.find('-')), a.attack_size, a.epoch) <
           std::tuple(b.run_id.substr(0, b.run_id.find('-')), b.attack_size, b.epoch);
  });
  return result;
}

CorrelationSummary summarize_correlation(const std::vector<ExperimentRecord>& records) {
  std::vector<double> neg_prior;
  std::vector<double> prior;
  std::vector<double> error;
  std::vector<double> accuracy;
  std::vector<double> sharp;
  std::vector<double> log_flat;
  for (const auto& r : records) {
    if (r.train_error != 0.0 || !r.log_prior || r.run_id.find("+o") != std::string::npos) continue;
    neg_prior.push_back(-*r.log_prior);
    prior.push_back(*r.log_prior);
    error.push_back(r.test_error);
    accuracy.push_back(1.0 - r.test_error);
    sharp.push_back(r.sharpness);
    log_flat.push_back(r.sharpness > 0.0 ? -std::log(r.sharpness) : std::numeric_limits<double>::infinity());
  }
  CorrelationSummary s;
  s.points = error.size();
  auto guarded = [](auto&& f) -> std::optional<double> {
    try {
      return f();
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  s.spearman_prior_error = guarded([&] { return spearman(neg_prior, error); });
  s.pearson_prior_accuracy = guarded([&] { return pearson(prior, accuracy); });
  s.spearman_sharpness_error = guarded([&] { return spearman(sharp, error); });
  s.spearman_flatness_accuracy = guarded([&] { return spearman(log_flat, accuracy); });
  return s;
}

TemporalResult run_temporal(const LabeledSet& full, const TemporalConfig& config) {
  full.validate();
  if (config.total_epochs < 1) throw std::invalid_argument("total_epochs must be at least 1");
  if (config.scale_after_zero_error) {
    if (*config.scale_after_zero_error < 1) throw std::invalid_argument("scale_after_zero_error must be at least 1");
  } else if (config.scale_epoch < 0 || config.scale_epoch >= config.total_epochs) {
    throw std::invalid_argument("scale_epoch must lie in [0, total_epochs)");
  }
  if (config.prior_every < 1) throw std::invalid_argument("prior_every must be at least 1");
  const NetworkSpec spec = make_spec(full.input_dim(), config.hidden, config.sigma_w, config.sigma_b);
  const SplitContext ctx = prepare_split(full, config.train_size, config.attack_size, config.test_size, spec,
                                         config.prior, config.measure_prior, config.seed);
  const LabeledSet train_set = ctx.split.train_with_attack();

  std::unordered_map<FunctionFingerprint, double, FingerprintHash> prior_cache;
  TemporalResult result;
  Trainer trainer(init_params(spec, derive_seed(config.seed, {kInitStream})), train_set, config.optimizer,
                  derive_seed(config.seed, {kTrainStream}));

  auto planned_scale_epoch = [&]() -> int {
    if (!config.scale_after_zero_error) return config.scale_epoch > 0 ? config.scale_epoch : -1;
    return result.zero_error_epoch < 0 ? -1 : result.zero_error_epoch + *config.scale_after_zero_error;
  };

  auto measure = [&](int epoch) {
    const Params& params = trainer.params();
    ExperimentRecord rec;
    rec.run_id = "temporal";
    rec.optimizer = std::string(to_string(config.optimizer.kind));
    rec.attack_size = config.attack_size;
    rec.epoch = epoch;
    rec.train_error = classification_error(params, train_set);
    rec.test_error = ctx.split.test.empty() ? 0.0 : classification_error(params, ctx.split.test);
    rec.sharpness = sharpness(params, train_set, config.sharpness,
                              derive_seed(config.seed, {kSharpnessStream, static_cast<std::uint64_t>(epoch)}));
    FunctionFingerprint f = fingerprint(params, ctx.fingerprint_inputs);
    const int planned = planned_scale_epoch();
    const bool near_event = planned >= 0 && std::abs(epoch - planned) <= 1;
    if (config.measure_prior && (epoch % config.prior_every == 0 || near_event)) {
      auto it = prior_cache.find(f);
      if (it == prior_cache.end()) it = prior_cache.emplace(f, log_prior(ctx.kernel, f, config.prior.ep)).first;
      fill_prior_columns(rec, ctx, f, it->second, std::nullopt);
    }
    result.records.push_back(std::move(rec));
    result.fingerprints.push_back(std::move(f));
  };

  measure(0);
  if (result.records.back().train_error == 0.0) result.zero_error_epoch = 0;
  for (int epoch = 1; epoch <= config.total_epochs; ++epoch) {
    const EpochTrace t = trainer.run_epoch();
    if (!std::isfinite(t.train_loss)) throw NumericalError("training loss diverged at epoch " + std::to_string(epoch));
    if (result.zero_error_epoch < 0 && t.train_error == 0.0) result.zero_error_epoch = epoch;
    if (result.scale_epoch < 0 && epoch == planned_scale_epoch()) {
      result.scale_epoch = epoch;
      result.pre_scale_fingerprint = fingerprint(trainer.params(), ctx.fingerprint_inputs);
      if (config.alpha != 1.0) trainer.set_params(alpha_scale(trainer.params(), {config.scale_layer, config.alpha}));
    }
    measure(epoch);
  }
  return result;
}

}  // namespace flatprior
