// Copyright 2026 The ethnipipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ethnipipe/training.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ethnipipe/error.hpp"
#include "ethnipipe/kernels/kernels.hpp"
#include "ethnipipe/loss.hpp"

namespace ethnipipe {

void TrainConfig::Validate() const {
  if (epochs < 1) throw BadConfig("epochs must be >= 1");
  if (batch_size < 1) throw BadConfig("batch size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw BadConfig("learning rate must be a finite value >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw BadConfig("momentum must be in [0, 1)");
  if (balance && !(noise_sigma > 0.0)) throw BadConfig("noise sigma must be > 0");
}

OptimizerState OptimizerState::ZerosLike(const ModelState<float>& state) {
  OptimizerState opt;
  for (const auto& p : state.params) opt.velocity.emplace_back(p.value.shape);
  return opt;
}

template <typename T>
void SgdUpdate(std::span<T> weights, std::span<const T> grads, std::span<T> velocity, T lr,
               T momentum) {
  if (weights.size() != grads.size() || weights.size() != velocity.size()) {
    throw BadConfig("SGD update: weight, gradient and velocity sizes differ");
  }
  kernels::MomentumUpdate(weights.size(), lr, momentum, grads.data(), velocity.data(),
                          weights.data());
}

template void SgdUpdate<float>(std::span<float>, std::span<const float>, std::span<float>,
                               float, float);
template void SgdUpdate<double>(std::span<double>, std::span<const double>, std::span<double>,
                                double, double);

void SgdStep(ModelState<float>& state, const Gradients<float>& grads, OptimizerState& opt,
             float lr, float momentum) {
  if (grads.size() != state.params.size() || opt.velocity.size() != state.params.size()) {
    throw BadConfig("SGD step: gradient/velocity count does not match parameters");
  }
  for (std::size_t i = 0; i < state.params.size(); ++i) {
    auto& p = state.params[i];
    if (grads[i].shape != p.value.shape || opt.velocity[i].shape != p.value.shape) {
      throw BadConfig("SGD step: shape mismatch for '" + p.name + "': parameter " +
                      ShapeString(p.value.shape) + ", gradient " + ShapeString(grads[i].shape));
    }
    if (!p.trainable) continue;
    SgdUpdate<float>(p.value.data, grads[i].data, opt.velocity[i].data, lr, momentum);
  }
}

bool TrainLog::SameMetrics(const TrainLog& other) const {
  if (epochs.size() != other.epochs.size()) return false;
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = other.epochs[i];
    if (a.epoch != b.epoch || !same(a.train_loss, b.train_loss) ||
        !same(a.val_loss, b.val_loss) || !same(a.val_accuracy, b.val_accuracy)) {
      return false;
    }
  }
  return true;
}

std::string FormatTrainLogJsonl(const TrainLog& log) {
  std::string out;
  for (const auto& e : log.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["val_loss"] = e.val_loss;
    j["val_acc"] = e.val_accuracy;
    j["seconds"] = e.seconds;
    out += j.dump() + "\n";
  }
  return out;
}

std::string FormatTrainLogTable(const TrainLog& log) {
  std::ostringstream out;
  out << "epoch | train_loss | val_loss | val_acc | seconds\n";
  out << std::fixed;
  for (const auto& e : log.epochs) {
    out << std::setw(5) << e.epoch << " | " << std::setprecision(5) << std::setw(10)
        << e.train_loss << " | " << std::setw(8) << e.val_loss << " | " << std::setprecision(4)
        << std::setw(7) << e.val_accuracy << " | " << std::setprecision(2) << e.seconds << "\n";
  }
  return out.str();
}

NormStats ComputeNormStats(const PreprocessedCache& cache, const std::vector<std::string>& ids) {
  NormStats stats;
  if (ids.empty()) return stats;
  std::array<double, 3> sum{}, sq{};
  std::size_t n = 0;
  for (const std::string& id : ids) {
    const auto& v = cache.At(id).values;
    for (std::size_t i = 0; i < v.size(); i += 3) {
      for (int c = 0; c < 3; ++c) {
        sum[c] += v[i + c];
        sq[c] += static_cast<double>(v[i + c]) * v[i + c];
      }
    }
    n += v.size() / 3;
  }
  for (int c = 0; c < 3; ++c) {
    const double mean = sum[c] / static_cast<double>(n);
    const double var = std::max(sq[c] / static_cast<double>(n) - mean * mean, 0.0);
    stats.mean[c] = static_cast<float>(mean);
    stats.stddev[c] = static_cast<float>(std::max(std::sqrt(var), 1e-6));
  }
  return stats;
}

SampleSource::SampleSource(const Manifest& manifest, const PreprocessedCache& cache,
                           double noise_sigma)
    : manifest_(manifest), cache_(cache), noise_sigma_(noise_sigma) {}

NetInput SampleSource::Input(const std::string& id) const {
  const SampleRecord& r = manifest_.At(id);
  if (r.augmented()) {
    return AugmentNetInput(cache_.At(*r.augmented_from), noise_sigma_, *r.noise_seed);
  }
  return cache_.At(id);
}

int SampleSource::Label(const std::string& id) const { return LabelCode(manifest_.At(id).label); }

void SampleSource::CheckAvailable(const std::vector<std::string>& ids) const {
  for (const std::string& id : ids) {
    const SampleRecord& r = manifest_.At(id);
    const std::string& key = r.augmented() ? *r.augmented_from : id;
    if (!cache_.Contains(key)) throw MissingInput("cache miss for id '" + key + "'");
  }
}

namespace {

void Gather(const SampleSource& source, std::span<const std::string> ids,
            std::vector<float>& inputs, std::vector<int>& labels) {
  inputs.resize(ids.size() * kNetInputSize);
  labels.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const NetInput in = source.Input(ids[i]);
    std::copy(in.values.begin(), in.values.end(),
              inputs.begin() + static_cast<std::ptrdiff_t>(i * kNetInputSize));
    labels[i] = source.Label(ids[i]);
  }
}

std::uint64_t FoldSeed(std::uint64_t seed, int fold) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold), 0x7a11u};
  std::mt19937_64 rng(seq);
  return rng();
}

}  // namespace

SubsetMetrics EvaluateSubset(const ModelState<float>& state, const SampleSource& source,
                             const std::vector<std::string>& ids, int batch_size) {
  SubsetMetrics metrics;
  if (ids.empty()) {
    metrics.loss = std::numeric_limits<double>::quiet_NaN();
    metrics.accuracy = std::numeric_limits<double>::quiet_NaN();
    return metrics;
  }
  const int classes = state.spec.num_classes;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<float> inputs;
  std::vector<int> labels;
  for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min<std::size_t>(batch_size, ids.size() - start);
    Gather(source, std::span(ids).subspan(start, n), inputs, labels);
    const auto probs = Forward<float>(state, inputs, Mode::kEval);
    loss_sum += static_cast<double>(CrossEntropy<float>(probs, labels, classes)) * n;
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = probs.data() + i * classes;
      const int pred = static_cast<int>(std::max_element(row, row + classes) - row);
      if (pred == labels[i]) ++correct;
    }
  }
  metrics.loss = loss_sum / static_cast<double>(ids.size());
  metrics.accuracy = static_cast<double>(correct) / static_cast<double>(ids.size());
  return metrics;
}

TrainResult Train(ModelState<float> initial, const SplitPlan& plan, const Manifest& manifest,
                  const PreprocessedCache& cache, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.Validate();
  if (plan.train_ids.empty()) throw BadConfig("fold " + std::to_string(plan.fold_index) +
                                              " has no training samples");
  for (const std::string& layer : cfg.frozen_layers) {
    (void)initial.spec.layer(layer);
    for (auto& p : initial.params) {
      if (p.layer == layer) p.trainable = false;
    }
  }

  const std::uint64_t fold_seed = FoldSeed(cfg.seed, plan.fold_index);
  TrainResult result;
  std::vector<std::string> train_ids = plan.train_ids;
  Manifest working = manifest;
  if (cfg.balance) {
    BalanceResult balanced = BalanceClasses(manifest, plan.train_ids, cfg.noise_sigma, fold_seed);
    working = manifest.WithAdded(balanced.added);
    train_ids = std::move(balanced.train_ids);
    result.augmented = std::move(balanced.added);
  }
  for (const std::string& id : plan.val_ids) {
    if (working.At(id).augmented()) {
      throw BadConfig("augmented record '" + id + "' in validation subset");
    }
  }
  SampleSource source(working, cache, cfg.noise_sigma);
  source.CheckAvailable(train_ids);
  source.CheckAvailable(plan.val_ids);

  ModelState<float> state = std::move(initial);
  std::vector<std::string> originals;
  for (const std::string& id : plan.train_ids) {
    if (!manifest.At(id).augmented()) originals.push_back(id);
  }
  state.norm = ComputeNormStats(cache, originals);

  OptimizerState opt = OptimizerState::ZerosLike(state);
  std::mt19937_64 shuffle_rng(fold_seed);
  const auto lr = static_cast<float>(cfg.learning_rate);
  const auto momentum = static_cast<float>(cfg.momentum);

  std::optional<EpochRecord> best;
  std::vector<float> inputs;
  std::vector<int> labels;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> order = train_ids;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - s);
      Gather(source, std::span(order).subspan(s, n), inputs, labels);
      LossGradients<float> lg = ForwardBackward<float>(state, inputs, labels);
      if (!std::isfinite(lg.loss)) {
        throw RuntimeFailure("training diverged: non-finite loss in epoch " +
                             std::to_string(epoch));
      }
      SgdStep(state, lg.grads, opt, lr, momentum);
      loss_sum += static_cast<double>(lg.loss) * n;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    const SubsetMetrics val = EvaluateSubset(state, source, plan.val_ids, cfg.batch_size);
    record.val_loss = val.loss;
    record.val_accuracy = val.accuracy;
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(record);

    const bool improved =
        !best || plan.val_ids.empty() || record.val_accuracy > best->val_accuracy ||
        (record.val_accuracy == best->val_accuracy && record.val_loss < best->val_loss);
    if (improved) {
      best = record;
      result.best_state = state;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(record);
  }
  result.final_state = std::move(state);
  return result;
}

// ------------------------------------------------------------ Grid search

std::string GridCandidate::Serialize() const {
  std::string out;
  for (const auto& [key, value] : values) {
    if (!out.empty()) out += ";";
    out += key + "=" + value;
  }
  return out;
}

namespace {

void ApplyGridValue(GridCandidate& c, const std::string& key, const std::string& value) {
  try {
    if (key == "lr") {
      c.config.learning_rate = std::stod(value);
    } else if (key == "momentum") {
      c.config.momentum = std::stod(value);
    } else if (key == "epochs") {
      c.config.epochs = std::stoi(value);
    } else if (key == "batch_size") {
      c.config.batch_size = std::stoi(value);
    } else if (key == "sigma") {
      c.config.noise_sigma = std::stod(value);
    } else if (key == "width") {
      c.head_width = std::stoi(value);
    } else if (key == "activation") {
      if (value != "relu") throw BadConfig("unsupported activation '" + value + "'");
    } else if (key == "loss") {
      if (value != "categorical_crossentropy") throw BadConfig("unsupported loss '" + value + "'");
    } else {
      throw BadConfig("unknown grid hyper-parameter '" + key + "'");
    }
  } catch (const std::invalid_argument&) {
    throw BadConfig("bad value '" + value + "' for grid hyper-parameter '" + key + "'");
  } catch (const std::out_of_range&) {
    throw BadConfig("value '" + value + "' out of range for '" + key + "'");
  }
}

}  // namespace

std::vector<GridCandidate> ExpandGrid(const HyperGrid& grid, const TrainConfig& base,
                                      int base_head_width) {
  if (grid.empty()) throw BadConfig("hyper-parameter grid is empty");
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw BadConfig("grid hyper-parameter '" + key + "' has no candidates");
  }
  std::vector<GridCandidate> out;
  std::vector<std::size_t> digits(grid.size(), 0);
  while (true) {
    GridCandidate c;
    c.config = base;
    c.head_width = base_head_width;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& value = grid[i].second[digits[i]];
      ApplyGridValue(c, grid[i].first, value);
      c.values.emplace_back(grid[i].first, value);
    }
    c.config.Validate();
    out.push_back(std::move(c));
    std::size_t pos = grid.size();
    while (pos > 0) {
      --pos;
      if (++digits[pos] < grid[pos].second.size()) break;
      digits[pos] = 0;
      if (pos == 0) return out;
    }
  }
}

std::vector<GridResult> GridSearch(const HyperGrid& grid, const TrainConfig& base,
                                   const BackboneBlocks& blocks, int base_head_width,
                                   const ModelFactory& factory,
                                   const std::vector<SplitPlan>& folds,
                                   const Manifest& manifest, const PreprocessedCache& cache) {
  if (folds.empty()) throw BadConfig("grid search needs at least one fold");
  const auto candidates = ExpandGrid(grid, base, base_head_width);
  std::vector<GridResult> results;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    GridResult r;
    r.candidate = candidates[i];
    r.order = i;
    const ModelSpec spec = BuildModelSpec(blocks, r.candidate.head_width);
    double acc_sum = 0.0;
    double loss_sum = 0.0;
    for (const SplitPlan& fold : folds) {
      TrainResult t = Train(factory(spec), fold, manifest, cache, r.candidate.config);
      const EpochRecord& best = t.log.epochs[static_cast<std::size_t>(t.best_epoch - 1)];
      r.fold_val_accuracy.push_back(best.val_accuracy);
      acc_sum += best.val_accuracy;
      loss_sum += best.val_loss;
    }
    r.mean_val_accuracy = acc_sum / static_cast<double>(folds.size());
    r.mean_val_loss = loss_sum / static_cast<double>(folds.size());
    results.push_back(std::move(r));
  }
  std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    return a.mean_val_accuracy > b.mean_val_accuracy;
  });
  return results;
}

// ---------------------------------------------------------- Gradient check

std::vector<ParamCoordinate> SampleCoordinates(const ModelState<double>& state,
                                               std::size_t count, std::uint64_t seed,
                                               bool head_only) {
  std::vector<std::size_t> tensors;
  std::size_t capacity = 0;
  for (std::size_t i = 0; i < state.params.size(); ++i) {
    if (head_only && !state.spec.layer(state.params[i].layer).head) continue;
    tensors.push_back(i);
    capacity += state.params[i].value.size();
  }
  if (tensors.empty()) throw BadConfig("no parameters to sample");
  count = std::min(count, capacity);

  std::mt19937_64 rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<ParamCoordinate> coords;
  std::size_t cursor = 0;
  while (coords.size() < count) {
    const std::size_t p = tensors[cursor++ % tensors.size()];
    const std::size_t n = state.params[p].value.size();
    std::size_t used = 0;
    for (auto it = seen.lower_bound({p, 0}); it != seen.end() && it->first == p; ++it) ++used;
    if (used == n) continue;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t idx = pick(rng);
    while (seen.count({p, idx})) idx = (idx + 1) % n;
    seen.insert({p, idx});
    coords.push_back({p, idx});
  }
  return coords;
}

double RelativeError(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

namespace {

// One entry per ReLU input (positive or not) and per max-pool window (winner
// offset), over the whole batch.
std::vector<std::uint8_t> ActivationPattern(const ModelSpec& spec, const ForwardTrace<double>& trace) {
  std::vector<std::uint8_t> pattern;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const std::vector<double>& in = i == 0 ? trace.input : trace.outputs[i - 1];
    if (layer.kind == LayerKind::kRelu) {
      for (double v : in) pattern.push_back(v > 0.0);
    } else if (layer.kind == LayerKind::kMaxPool2x2) {
      const FeatureShape is = layer.input, os = layer.output;
      for (int b = 0; b < trace.batch; ++b)
        for (int y = 0; y < os.height; ++y)
          for (int x = 0; x < os.width; ++x)
            for (int c = 0; c < os.channels; ++c) {
              std::uint8_t best = 0;
              double best_v = -std::numeric_limits<double>::infinity();
              for (std::uint8_t k = 0; k < 4; ++k) {
                const int yy = 2 * y + k / 2, xx = 2 * x + k % 2;
                const double v = in[((static_cast<std::size_t>(b) * is.height + yy) * is.width + xx) *
                                        is.channels + c];
                if (v > best_v) {
                  best_v = v;
                  best = k;
                }
              }
              pattern.push_back(best);
            }
    }
  }
  return pattern;
}

}  // namespace

GradientCheckResult GradientCheck(const ModelState<double>& state, std::span<const double> batch,
                                  std::span<const int> labels, double epsilon,
                                  const std::vector<ParamCoordinate>& coords) {
  if (!(epsilon > 0.0)) throw BadConfig("epsilon must be > 0");
  const int classes = state.spec.num_classes;
  auto loss_of = [&](const ModelState<double>& s, std::vector<std::uint8_t>* pattern) {
    ForwardTrace<double> trace;
    const auto probs = Forward<double>(s, batch, Mode::kEval, &trace);
    const double loss = CrossEntropy<double>(probs, labels, classes);
    if (!std::isfinite(loss)) throw RuntimeFailure("gradient check: non-finite loss");
    *pattern = ActivationPattern(s.spec, trace);
    return loss;
  };
  std::vector<std::uint8_t> base_pattern, probe_pattern;
  (void)loss_of(state, &base_pattern);

  const LossGradients<double> lg = ForwardBackward<double>(state, batch, labels);
  if (!std::isfinite(lg.loss)) throw RuntimeFailure("gradient check: non-finite loss");

  GradientCheckResult result;
  ModelState<double> probe = state;
  for (const ParamCoordinate& c : coords) {
    if (c.param >= probe.params.size() || c.index >= probe.params[c.param].value.size()) {
      throw BadConfig("gradient check coordinate out of range");
    }
    double& w = probe.params[c.param].value.data[c.index];
    const double saved = w;
    w = saved + epsilon;
    const double plus = loss_of(probe, &probe_pattern);
    bool kink = probe_pattern != base_pattern;
    w = saved - epsilon;
    const double minus = loss_of(probe, &probe_pattern);
    kink = kink || probe_pattern != base_pattern;
    w = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double analytic = lg.grads[c.param].data[c.index];
    result.analytic.push_back(analytic);
    result.numeric.push_back(numeric);
    result.crossed_kink.push_back(kink);
    if (kink) continue;
    ++result.checked;
    result.max_relative_error =
        std::max(result.max_relative_error, RelativeError(analytic, numeric));
  }
  return result;
}

}  // namespace ethnipipe
