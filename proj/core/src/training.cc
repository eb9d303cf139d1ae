#include "wvsc/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "wvsc/checkpoint.h"
#include "wvsc/errors.h"

namespace wvsc {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train.steps must be >= 1");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) {
    throw ConfigError("learning rates need lr_start >= lr_end > 0");
  }
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (gop_size < 1) throw ConfigError("train.gop_size must be >= 1");
  if (!(snr_low_db <= snr_high_db)) throw ConfigError("SNR range needs low <= high");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
}

double learning_rate_at(const TrainConfig& config, long step) {
  if (config.lr_start <= config.lr_end) return config.lr_end;
  // Relative slack so that an exact power-of-two ratio needs no extra halving.
  const int halvings =
      static_cast<int>(std::ceil(std::log2(config.lr_start / config.lr_end) - 1e-9));
  const long clamped = std::clamp(step, 0L, config.steps - 1);
  const long segment = clamped * (halvings + 1) / config.steps;
  if (segment >= halvings) return config.lr_end;
  return std::max(config.lr_end, config.lr_start * std::ldexp(1.0, -static_cast<int>(segment)));
}

double sample_snr_db(const TrainConfig& config, long step) {
  if (config.snr_low_db == config.snr_high_db) return config.snr_low_db;
  Rng rng(derive_seed(config.seed, 0x5a17000000ULL + static_cast<uint64_t>(step)));
  std::uniform_real_distribution<double> dist(config.snr_low_db, config.snr_high_db);
  return dist(rng);
}

void Adam::step(const std::vector<NamedParam>& params, double lr) {
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, var] : params) {
    const Tensor g = var.grad();
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_.emplace(name, Moments{Tensor(g.shape(), 0.0), Tensor(g.shape(), 0.0)}).first;
    }
    Tensor& m = it->second.m;
    Tensor& v = it->second.v;
    ad::Var leaf = var;
    Tensor& p = leaf.mutable_value();
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + eps_);
    }
  }
}

double reconstruction_loss(const std::vector<VideoGoP>& reconstructed,
                           const std::vector<VideoGoP>& original) {
  if (reconstructed.size() != original.size()) {
    throw ShapeError("loss needs matching GoP counts, got " + std::to_string(reconstructed.size()) +
                     " and " + std::to_string(original.size()));
  }
  if (original.empty()) throw ShapeError("loss needs at least one GoP");
  double total = 0.0;
  long frames = 0;
  for (size_t n = 0; n < original.size(); ++n) {
    const auto& a = reconstructed[n].frames;
    const auto& b = original[n].frames;
    if (a.size() != b.size()) throw ShapeError("loss needs matching GoP lengths");
    for (size_t i = 0; i < a.size(); ++i) {
      const Tensor x = a[i].to_chw(), y = b[i].to_chw();
      require_same_shape(x.shape(), y.shape(), "reconstruction_loss");
      double s = 0.0;
      for (size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
      total += s / static_cast<double>(x.size());
      ++frames;
    }
  }
  return total / static_cast<double>(frames);
}

StepResult train_step(WvscModel& model, Adam& optimizer, const std::vector<VideoGoP>& batch,
                      const RatePlan& plan, const TrainConfig& config, long step_index) {
  if (batch.empty()) throw InputError("empty training batch");
  model.zero_grad();
  StepResult r;
  r.snr_db = sample_snr_db(config, step_index);
  r.lr = learning_rate_at(config, step_index);

  std::vector<ad::Var> terms;
  for (size_t j = 0; j < batch.size(); ++j) {
    const uint64_t channel_seed =
        derive_seed(config.seed, static_cast<uint64_t>(step_index) * batch.size() + j);
    GopForward fwd = forward_gop(batch[j], model, plan, r.snr_db, channel_seed);
    for (size_t i = 0; i < fwd.decoded.size(); ++i) {
      terms.push_back(ad::mse(fwd.decoded[i], ad::constant(batch[j].frames[i].to_chw())));
    }
  }
  ad::Var loss = ad::scale(ad::sum(ad::concat(terms, 0)), 1.0 / static_cast<double>(terms.size()));
  r.loss = loss.value()[0];
  if (!std::isfinite(r.loss)) {
    throw DivergenceError("non-finite training loss at step " + std::to_string(step_index),
                          step_index);
  }
  ad::backward(loss);
  optimizer.step(model.parameters(), r.lr);
  return r;
}

std::vector<VideoGoP> batch_for_step(const VideoSequence& dataset, const TrainConfig& config,
                                     long step) {
  if (dataset.gops.empty()) throw InputError("empty training dataset");
  const size_t n = dataset.gops.size();
  std::vector<VideoGoP> batch;
  for (int j = 0; j < config.batch_size; ++j) {
    batch.push_back(dataset.gops[(static_cast<size_t>(step) * config.batch_size + j) % n]);
  }
  return batch;
}

RatePlan training_plan(const VideoSequence& dataset, const WvscModel& model,
                       const TrainConfig& config) {
  if (dataset.gops.empty()) throw InputError("empty training dataset");
  const VideoFrame& f = dataset.gops.front().frames.front();
  const int g = latent_granularity(f.height(), f.width());
  RatePlan plan = plan_rates(config.target_cbr, config.ratio, f.height(), f.width(),
                             dataset.gops.front().gop_size(), g);
  check_plan_fits(plan, model);
  return plan;
}

Checkpoint make_checkpoint(const WvscModel& model, const Adam& optimizer,
                           const TrainConfig& config, long step, const LossStats& stats) {
  Checkpoint c;
  c.model_config = model.config();
  c.model_state = model.state();
  c.train_config = config;
  c.step = step;
  c.adam_t = optimizer.t();
  c.adam_moments = optimizer.moments();
  c.stats = stats;
  return c;
}

WvscModel model_from_checkpoint(const Checkpoint& checkpoint) {
  WvscModel model(checkpoint.model_config);
  model.load_state(checkpoint.model_state);
  return model;
}

namespace {

std::string step_checkpoint_name(long step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%08ld.ckpt", step);
  return buf;
}

std::string format_log_row(long step, const StepResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", step, r.lr, r.snr_db, r.loss);
  return buf;
}

// Keeps the header and rows for steps < `keep_below`.
void rewrite_log(const fs::path& path, long keep_below) {
  std::ostringstream kept;
  kept << "step,lr,snr_db,loss\n";
  std::ifstream in(path);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    if (std::stol(line.substr(0, line.find(','))) < keep_below) kept << line << '\n';
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write training log " + path.string());
  out << kept.str();
}

}  // namespace

Checkpoint train_run(const VideoSequence& dataset, const ModelConfig& model_config,
                     const TrainConfig& config, const TrainRunOptions& options) {
  config.validate();
  if (dataset.gops.empty()) throw InputError("empty training dataset");
  std::error_code ec;
  fs::create_directories(options.output_dir, ec);
  if (ec) throw IoError("cannot create " + options.output_dir.string() + ": " + ec.message());

  const fs::path latest = options.output_dir / "latest.ckpt";
  const fs::path log_path = options.output_dir / "train_log.csv";

  std::optional<Checkpoint> resumed;
  if (options.resume && fs::exists(latest)) {
    resumed = load_checkpoint(latest);
    if (train_config_json(resumed->train_config) != train_config_json(config)) {
      throw ConfigError("resume config differs from the one in " + latest.string());
    }
  }
  WvscModel model(resumed ? resumed->model_config : model_config);
  Adam optimizer(config.adam_beta1, config.adam_beta2, config.adam_eps);
  long start = 0;
  LossStats stats;
  if (resumed) {
    model.load_state(resumed->model_state);
    optimizer.restore(resumed->adam_t, resumed->adam_moments);
    start = resumed->step;
    stats = resumed->stats;
    rewrite_log(log_path, start);
  } else {
    rewrite_log(log_path, 0);
  }

  const RatePlan plan = training_plan(dataset, model, config);
  const long end = options.stop_at >= 0 ? std::min(options.stop_at, config.steps) : config.steps;
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw IoError("cannot append to training log " + log_path.string());

  long saved_at = -1;
  for (long s = start; s < end; ++s) {
    const StepResult r = train_step(model, optimizer, batch_for_step(dataset, config, s), plan,
                                    config, s);
    ++stats.count;
    stats.sum += r.loss;
    stats.last = r.loss;
    log << format_log_row(s, r);
    log.flush();
    if (options.on_step) options.on_step(s, r);
    if ((s + 1) % config.checkpoint_every == 0) {
      const Checkpoint c = make_checkpoint(model, optimizer, config, s + 1, stats);
      save_checkpoint(c, options.output_dir / step_checkpoint_name(s + 1));
      save_checkpoint(c, latest);
      saved_at = s + 1;
    }
  }
  Checkpoint final_state = make_checkpoint(model, optimizer, config, std::max(start, end), stats);
  if (saved_at != final_state.step) save_checkpoint(final_state, latest);
  return final_state;
}

}  // namespace wvsc
