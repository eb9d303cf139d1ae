#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wvsc/model.h"
#include "wvsc/pipeline.h"
#include "wvsc/videoio.h"

namespace wvsc {

struct TrainConfig {
  long steps = 2000;
  double lr_start = 1e-4;
  double lr_end = 2e-5;
  int batch_size = 1;
  int gop_size = 5;
  double snr_low_db = 0.0;
  double snr_high_db = 15.0;
  uint64_t seed = 0;
  long checkpoint_every = 500;
  // Rate plan used for every training GoP.
  double target_cbr = 0.1;
  Rational ratio{1, 1};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

// Step decay: halve at evenly spaced milestones, never below lr_end. The
// number of halvings is the smallest that reaches lr_end, so the last segment
// always runs at exactly lr_end.
double learning_rate_at(const TrainConfig& config, long step);

// SNR drawn for the batch at `step`; uniform over the configured range.
double sample_snr_db(const TrainConfig& config, long step);

class Adam {
 public:
  struct Moments {
    Tensor m;
    Tensor v;
  };

  Adam() = default;
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update to every parameter from its accumulated gradient.
  void step(const std::vector<NamedParam>& params, double lr);

  long t() const { return t_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }
  void restore(long t, std::map<std::string, Moments> moments) {
    t_ = t;
    moments_ = std::move(moments);
  }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::map<std::string, Moments> moments_;
};

// Mean per-pixel squared error averaged over frames and GoPs.
double reconstruction_loss(const std::vector<VideoGoP>& reconstructed,
                           const std::vector<VideoGoP>& original);

struct StepResult {
  double loss = 0.0;
  double snr_db = 0.0;
  double lr = 0.0;
};

// One optimizer update on `batch`. Gradients stop at the batch's GoP
// boundaries. Throws DivergenceError on a non-finite loss.
StepResult train_step(WvscModel& model, Adam& optimizer, const std::vector<VideoGoP>& batch,
                      const RatePlan& plan, const TrainConfig& config, long step_index);

// GoPs consumed by `step`: consecutive GoPs of the dataset, wrapping around.
std::vector<VideoGoP> batch_for_step(const VideoSequence& dataset, const TrainConfig& config,
                                     long step);

RatePlan training_plan(const VideoSequence& dataset, const WvscModel& model,
                       const TrainConfig& config);

struct LossStats {
  long count = 0;
  double sum = 0.0;
  double last = 0.0;
};

struct Checkpoint {
  ModelConfig model_config;
  StateDict model_state;
  TrainConfig train_config;
  long step = 0;  // completed optimizer steps
  long adam_t = 0;
  std::map<std::string, Adam::Moments> adam_moments;
  LossStats stats;
};

struct TrainRunOptions {
  std::filesystem::path output_dir;
  // Continue from output_dir/latest.ckpt if present.
  bool resume = false;
  // Stop (and checkpoint) once this many steps are complete; < 0 runs to the end.
  long stop_at = -1;
  std::function<void(long step, const StepResult&)> on_step;
};

// Trains from scratch or from the latest checkpoint, writing
// output_dir/step_XXXXXXXX.ckpt every checkpoint_every steps, latest.ckpt,
// and train_log.csv (step, lr, snr_db, loss).
Checkpoint train_run(const VideoSequence& dataset, const ModelConfig& model_config,
                     const TrainConfig& config, const TrainRunOptions& options);

Checkpoint make_checkpoint(const WvscModel& model, const Adam& optimizer,
                           const TrainConfig& config, long step, const LossStats& stats);
WvscModel model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace wvsc
