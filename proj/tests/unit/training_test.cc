#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "wvsc/checkpoint.h"
#include "wvsc/errors.h"
#include "wvsc/training.h"

namespace wvsc {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("wvsc-training-" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ModelConfig small_model() {
  ModelConfig m;
  m.codec.hidden_channels = 8;
  m.motion_hidden = 8;
  m.offset_channels = 4;
  m.attention_dim = 4;
  m.seed = 1;
  return m;
}

TrainConfig small_train(long steps) {
  TrainConfig t;
  t.steps = steps;
  t.gop_size = 3;
  t.seed = 4;
  t.checkpoint_every = 4;
  return t;
}

VideoGoP offset_gop(double base, double offset) {
  VideoGoP g;
  for (int i = 0; i < 2; ++i) g.frames.emplace_back(8, 8, base + offset);
  return g;
}

TEST(ReconstructionLoss, Examples) {
  const std::vector<VideoGoP> a{offset_gop(0.3, 0.0)};
  EXPECT_EQ(reconstruction_loss(a, a), 0.0);
  const std::vector<VideoGoP> b{offset_gop(0.3, 0.1)};
  EXPECT_NEAR(reconstruction_loss(b, a), 0.01, 1e-15);
  const std::vector<VideoGoP> a2{offset_gop(0.3, 0.0), offset_gop(0.6, 0.0)};
  const std::vector<VideoGoP> b2{offset_gop(0.3, 0.1), offset_gop(0.6, 0.3)};
  const std::vector<VideoGoP> a4{a2[0], a2[1], a2[0], a2[1]};
  const std::vector<VideoGoP> b4{b2[0], b2[1], b2[0], b2[1]};
  EXPECT_NEAR(reconstruction_loss(b4, a4), reconstruction_loss(b2, a2), 1e-15);
  EXPECT_THROW(reconstruction_loss(b2, a), ShapeError);
}

TEST(Schedule, DecaysToEndValue) {
  TrainConfig t;
  EXPECT_EQ(learning_rate_at(t, 0), 1e-4);
  EXPECT_EQ(learning_rate_at(t, t.steps - 1), 2e-5);
  double prev = 1.0;
  for (long s = 0; s < t.steps; ++s) {
    const double lr = learning_rate_at(t, s);
    EXPECT_LE(lr, prev);
    EXPECT_GE(lr, 2e-5);
    prev = lr;
  }
}

TEST(Schedule, SnrStaysInRange) {
  TrainConfig t;
  t.snr_low_db = 2.0;
  t.snr_high_db = 7.0;
  for (long s = 0; s < 1000; ++s) {
    const double snr = sample_snr_db(t, s);
    EXPECT_GE(snr, 2.0);
    EXPECT_LE(snr, 7.0);
  }
  EXPECT_EQ(sample_snr_db(t, 17), sample_snr_db(t, 17));
}

TEST(Schedule, ValidateRejectsBadRanges) {
  TrainConfig t;
  t.lr_end = 2e-4;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.snr_low_db = 5.0;
  t.snr_high_db = 1.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(TrainStep, OverfitsOneGop) {
  const auto data = synthesize_moving_shapes(2, 1, 3, 16, 16);
  WvscModel model(small_model());
  TrainConfig cfg = small_train(100);
  cfg.lr_start = cfg.lr_end = 2e-3;
  Adam adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  const RatePlan plan = training_plan(data, model, cfg);
  double first = 0.0, last = 0.0;
  for (long s = 0; s < 100; ++s) {
    const auto r = train_step(model, adam, data.gops, plan, cfg, s);
    if (s == 0) first = r.loss;
    last = r.loss;
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(TrainStep, DeterministicTrajectories) {
  const auto data = synthesize_moving_shapes(2, 3, 3, 16, 16);
  const TrainConfig cfg = small_train(5);
  std::vector<double> losses[2];
  for (auto& run : losses) {
    WvscModel model(small_model());
    Adam adam;
    const RatePlan plan = training_plan(data, model, cfg);
    for (long s = 0; s < cfg.steps; ++s) {
      run.push_back(train_step(model, adam, batch_for_step(data, cfg, s), plan, cfg, s).loss);
    }
  }
  EXPECT_EQ(losses[0], losses[1]);
}

TEST(TrainStep, EveryParameterGroupGetsGradient) {
  const auto data = synthesize_moving_shapes(2, 3, 3, 16, 16);
  WvscModel model(small_model());
  TrainConfig cfg = small_train(6);
  cfg.lr_start = cfg.lr_end = 1e-3;
  Adam adam;
  const RatePlan plan = training_plan(data, model, cfg);
  std::map<std::string, double> seen;
  for (long s = 0; s < cfg.steps; ++s) {
    train_step(model, adam, batch_for_step(data, cfg, s), plan, cfg, s);
    for (const auto& [name, p] : model.parameters()) {
      const std::string group = name.substr(0, name.find('.'));
      const Tensor grad = p.grad();
      for (double g : grad.storage()) seen[group] += std::fabs(g);
      if (name == "mfa.gamma") {
        for (double g : grad.storage()) seen["gamma"] += std::fabs(g);
      }
    }
  }
  for (const char* group : {"codec", "tx", "rx", "residual", "mfa", "gamma"}) {
    EXPECT_GT(seen[group], 0.0) << group;
  }
}

TEST(TrainStep, DivergenceNamesStep) {
  const auto data = synthesize_moving_shapes(2, 1, 3, 16, 16);
  WvscModel model(small_model());
  ad::Var leaf = model.parameters().front().second;
  leaf.mutable_value()[0] = NAN;
  const TrainConfig cfg = small_train(1);
  Adam adam;
  const RatePlan plan = training_plan(data, model, cfg);
  try {
    train_step(model, adam, data.gops, plan, cfg, 7);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 7);
  }
}

TEST(TrainRun, ResumeMatchesUninterruptedRun) {
  const auto data = synthesize_moving_shapes(3, 4, 3, 16, 16);
  const TrainConfig cfg = small_train(10);
  TempDir straight, split;
  std::vector<double> full, resumed;
  TrainRunOptions o1;
  o1.output_dir = straight.path();
  o1.on_step = [&](long, const StepResult& r) { full.push_back(r.loss); };
  const Checkpoint a = train_run(data, small_model(), cfg, o1);

  TrainRunOptions o2;
  o2.output_dir = split.path();
  o2.stop_at = 4;
  o2.on_step = [&](long, const StepResult& r) { resumed.push_back(r.loss); };
  const Checkpoint mid = train_run(data, small_model(), cfg, o2);
  EXPECT_EQ(mid.step, 4);
  o2.stop_at = -1;
  o2.resume = true;
  const Checkpoint b = train_run(data, small_model(), cfg, o2);

  EXPECT_EQ(full, resumed);
  EXPECT_EQ(a.step, 10);
  EXPECT_EQ(a.model_state, b.model_state);
  EXPECT_TRUE(fs::exists(split.path() / "step_00000008.ckpt"));
  EXPECT_TRUE(fs::exists(split.path() / "latest.ckpt"));

  std::ifstream log(split.path() / "train_log.csv");
  std::string line;
  int rows = 0;
  std::getline(log, line);
  EXPECT_EQ(line, "step,lr,snr_db,loss");
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 10);

  TrainConfig changed = cfg;
  changed.seed = 99;
  EXPECT_THROW(train_run(data, small_model(), changed, o2), ConfigError);
}

TEST(Checkpoint, RoundTripReproducesForward) {
  const auto data = synthesize_moving_shapes(3, 2, 3, 16, 16);
  WvscModel model(small_model());
  TrainConfig cfg = small_train(2);
  Adam adam;
  const RatePlan plan = training_plan(data, model, cfg);
  train_step(model, adam, data.gops, plan, cfg, 0);
  LossStats stats{1, 0.5, 0.5};
  TempDir dir;
  save_checkpoint(make_checkpoint(model, adam, cfg, 1, stats), dir.path() / "c.ckpt");
  const Checkpoint back = load_checkpoint(dir.path() / "c.ckpt");
  EXPECT_EQ(back.step, 1);
  EXPECT_EQ(back.adam_t, 1);
  EXPECT_EQ(back.stats.sum, 0.5);
  EXPECT_EQ(back.train_config.seed, cfg.seed);
  const WvscModel restored = model_from_checkpoint(back);
  const auto x = transmit_gop(data.gops[1], model, plan, 4.0, 2);
  const auto y = transmit_gop(data.gops[1], restored, plan, 4.0, 2);
  EXPECT_EQ(x.reconstructed.frames, y.reconstructed.frames);
  EXPECT_FALSE(fs::exists(dir.path() / "c.ckpt.tmp"));
}

TEST(Checkpoint, RejectsGarbage) {
  TempDir dir;
  std::ofstream(dir.path() / "bad.ckpt") << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(dir.path() / "bad.ckpt"), Error);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace wvsc
