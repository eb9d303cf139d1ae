#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wvsc/model.h"
#include "wvsc/pipeline.h"
#include "wvsc/training.h"
#include "wvsc/videoio.h"

namespace wvsc::cli {

struct DataSection {
  std::string path;  // empty: synthesize
  uint64_t synthetic_seed = 0;
  int synthetic_gops = 24;
  int height = 32;
  int width = 32;
  int gop_size = 5;
  std::optional<CropSize> crop;
  double train_ratio = 5.0 / 6.0;
  uint64_t crop_seed = 0;
};

struct RatesSection {
  double target_cbr = 0.1;
  Rational ratio{1, 1};
  std::vector<double> cbr_list{0.03, 0.05, 0.07, 0.1};
};

struct ChannelSection {
  double snr_db = 10.0;
  std::vector<double> snr_list{0, 2, 4, 6, 8, 10, 12, 14};
  double cbr_sweep_snr_db = 12.0;
  uint64_t seed = 0;
};

struct BaselineSection {
  std::string code_file;  // alist; empty: generate a regular code
  int code_n = 4096;
  int code_dv = 3;
  int code_dc = 6;
  uint64_t code_seed = 1;
  int constellation = 16;
  int quality = 5;
  std::vector<int> quality_list{1, 3, 5, 7, 10};
  uint64_t seed = 0;
  std::string external_encode;
  std::string external_decode;
};

struct EvaluateSection {
  std::string checkpoint;  // empty: <output>/train/latest.ckpt
  std::vector<int> gop_sizes{5, 10, 20};
  ReceiverMode mode = ReceiverMode::kFull;
  int jobs = 1;
};

struct RunConfig {
  DataSection data;
  ModelConfig model;
  RatesSection rates;
  ChannelSection channel;
  TrainConfig train;
  BaselineSection baseline;
  EvaluateSection evaluate;
  std::string output = "runs/default";
};

// Parses JSON text; any unknown key (at any level) is a ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
// Fully resolved config as canonical JSON (sorted keys).
std::string to_json(const RunConfig& config);

std::string mode_name(ReceiverMode mode);
ReceiverMode parse_mode(const std::string& name);

}  // namespace wvsc::cli
