#include "run_config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wvsc/errors.h"

namespace wvsc::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key " + where + "." + key);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key " + where + "." + key + " has the wrong type");
  }
}

}  // namespace

std::string mode_name(ReceiverMode mode) {
  switch (mode) {
    case ReceiverMode::kFull: return "full";
    case ReceiverMode::kNoCompensation: return "no-compensation";
    case ReceiverMode::kReferenceRepetition: return "repetition";
  }
  return "full";
}

ReceiverMode parse_mode(const std::string& name) {
  if (name == "full") return ReceiverMode::kFull;
  if (name == "no-compensation") return ReceiverMode::kNoCompensation;
  if (name == "repetition") return ReceiverMode::kReferenceRepetition;
  throw ConfigError("unknown receiver mode '" + name + "' (full, no-compensation, repetition)");
}

RunConfig parse_run_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, "", {"data", "model", "rates", "channel", "train", "baseline", "evaluate",
                            "output"});
  RunConfig c;
  if (root.contains("data")) {
    const json& d = root["data"];
    reject_unknown(d, "data", {"path", "synthetic", "gop_size", "crop", "train_ratio", "crop_seed"});
    read(d, "path", c.data.path, "data");
    read(d, "gop_size", c.data.gop_size, "data");
    read(d, "train_ratio", c.data.train_ratio, "data");
    read(d, "crop_seed", c.data.crop_seed, "data");
    if (d.contains("crop") && !d["crop"].is_null()) {
      std::vector<int> crop;
      read(d, "crop", crop, "data");
      if (crop.size() != 2) throw ConfigError("data.crop must be [height, width]");
      c.data.crop = CropSize{crop[0], crop[1]};
    }
    if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      reject_unknown(s, "data.synthetic", {"seed", "n_gops", "height", "width"});
      read(s, "seed", c.data.synthetic_seed, "data.synthetic");
      read(s, "n_gops", c.data.synthetic_gops, "data.synthetic");
      read(s, "height", c.data.height, "data.synthetic");
      read(s, "width", c.data.width, "data.synthetic");
    }
  }
  if (root.contains("model")) {
    const json& m = root["model"];
    reject_unknown(m, "model", {"profile", "hidden_channels", "latent_channels",
                                "residual_channels", "offset_channels", "motion_hidden",
                                "attention_dim", "history_window", "window", "stages",
                                "blocks_per_stage", "seed"});
    std::string profile = profile_name(c.model.codec.profile);
    read(m, "profile", profile, "model");
    c.model.codec.profile = parse_profile(profile);
    read(m, "hidden_channels", c.model.codec.hidden_channels, "model");
    read(m, "latent_channels", c.model.codec.latent_channels, "model");
    read(m, "window", c.model.codec.window, "model");
    read(m, "stages", c.model.codec.stages, "model");
    read(m, "blocks_per_stage", c.model.codec.blocks_per_stage, "model");
    read(m, "residual_channels", c.model.residual_channels, "model");
    read(m, "offset_channels", c.model.offset_channels, "model");
    read(m, "motion_hidden", c.model.motion_hidden, "model");
    read(m, "attention_dim", c.model.attention_dim, "model");
    read(m, "history_window", c.model.history_window, "model");
    read(m, "seed", c.model.seed, "model");
  }
  if (root.contains("rates")) {
    const json& r = root["rates"];
    reject_unknown(r, "rates", {"target_cbr", "ratio", "cbr_list"});
    read(r, "target_cbr", c.rates.target_cbr, "rates");
    std::string ratio = c.rates.ratio.str();
    read(r, "ratio", ratio, "rates");
    c.rates.ratio = parse_ratio(ratio);
    read(r, "cbr_list", c.rates.cbr_list, "rates");
  }
  if (root.contains("channel")) {
    const json& ch = root["channel"];
    reject_unknown(ch, "channel", {"snr_db", "snr_list", "cbr_sweep_snr_db", "seed"});
    read(ch, "snr_db", c.channel.snr_db, "channel");
    read(ch, "snr_list", c.channel.snr_list, "channel");
    read(ch, "cbr_sweep_snr_db", c.channel.cbr_sweep_snr_db, "channel");
    read(ch, "seed", c.channel.seed, "channel");
  }
  if (root.contains("train")) {
    const json& t = root["train"];
    reject_unknown(t, "train", {"steps", "lr_start", "lr_end", "batch_size", "snr_low_db",
                                "snr_high_db", "seed", "checkpoint_every", "adam_beta1",
                                "adam_beta2", "adam_eps"});
    read(t, "steps", c.train.steps, "train");
    read(t, "lr_start", c.train.lr_start, "train");
    read(t, "lr_end", c.train.lr_end, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "snr_low_db", c.train.snr_low_db, "train");
    read(t, "snr_high_db", c.train.snr_high_db, "train");
    read(t, "seed", c.train.seed, "train");
    read(t, "checkpoint_every", c.train.checkpoint_every, "train");
    read(t, "adam_beta1", c.train.adam_beta1, "train");
    read(t, "adam_beta2", c.train.adam_beta2, "train");
    read(t, "adam_eps", c.train.adam_eps, "train");
  }
  if (root.contains("baseline")) {
    const json& b = root["baseline"];
    reject_unknown(b, "baseline", {"code_file", "code_n", "code_dv", "code_dc", "code_seed",
                                   "constellation", "quality", "quality_list", "seed",
                                   "external_encode", "external_decode"});
    read(b, "code_file", c.baseline.code_file, "baseline");
    read(b, "code_n", c.baseline.code_n, "baseline");
    read(b, "code_dv", c.baseline.code_dv, "baseline");
    read(b, "code_dc", c.baseline.code_dc, "baseline");
    read(b, "code_seed", c.baseline.code_seed, "baseline");
    read(b, "constellation", c.baseline.constellation, "baseline");
    read(b, "quality", c.baseline.quality, "baseline");
    read(b, "quality_list", c.baseline.quality_list, "baseline");
    read(b, "seed", c.baseline.seed, "baseline");
    read(b, "external_encode", c.baseline.external_encode, "baseline");
    read(b, "external_decode", c.baseline.external_decode, "baseline");
  }
  if (root.contains("evaluate")) {
    const json& e = root["evaluate"];
    reject_unknown(e, "evaluate", {"checkpoint", "gop_sizes", "mode", "jobs"});
    read(e, "checkpoint", c.evaluate.checkpoint, "evaluate");
    read(e, "gop_sizes", c.evaluate.gop_sizes, "evaluate");
    std::string mode = mode_name(c.evaluate.mode);
    read(e, "mode", mode, "evaluate");
    c.evaluate.mode = parse_mode(mode);
    read(e, "jobs", c.evaluate.jobs, "evaluate");
  }
  if (root.contains("output")) {
    const json& o = root["output"];
    reject_unknown(o, "output", {"directory"});
    read(o, "directory", c.output, "output");
  }
  // The training GoP length always follows the data section.
  c.train.gop_size = c.data.gop_size;
  c.train.target_cbr = c.rates.target_cbr;
  c.train.ratio = c.rates.ratio;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& c) {
  json crop = nullptr;
  if (c.data.crop) crop = json::array({c.data.crop->height, c.data.crop->width});
  json j{
      {"data",
       {{"path", c.data.path},
        {"synthetic",
         {{"seed", c.data.synthetic_seed},
          {"n_gops", c.data.synthetic_gops},
          {"height", c.data.height},
          {"width", c.data.width}}},
        {"gop_size", c.data.gop_size},
        {"crop", crop},
        {"train_ratio", c.data.train_ratio},
        {"crop_seed", c.data.crop_seed}}},
      {"model",
       {{"profile", profile_name(c.model.codec.profile)},
        {"hidden_channels", c.model.codec.hidden_channels},
        {"latent_channels", c.model.codec.latent_channels},
        {"window", c.model.codec.window},
        {"stages", c.model.codec.stages},
        {"blocks_per_stage", c.model.codec.blocks_per_stage},
        {"residual_channels", c.model.residual_channels},
        {"offset_channels", c.model.offset_channels},
        {"motion_hidden", c.model.motion_hidden},
        {"attention_dim", c.model.attention_dim},
        {"history_window", c.model.history_window},
        {"seed", c.model.seed}}},
      {"rates",
       {{"target_cbr", c.rates.target_cbr},
        {"ratio", c.rates.ratio.str()},
        {"cbr_list", c.rates.cbr_list}}},
      {"channel",
       {{"snr_db", c.channel.snr_db},
        {"snr_list", c.channel.snr_list},
        {"cbr_sweep_snr_db", c.channel.cbr_sweep_snr_db},
        {"seed", c.channel.seed}}},
      {"train",
       {{"steps", c.train.steps},
        {"lr_start", c.train.lr_start},
        {"lr_end", c.train.lr_end},
        {"batch_size", c.train.batch_size},
        {"snr_low_db", c.train.snr_low_db},
        {"snr_high_db", c.train.snr_high_db},
        {"seed", c.train.seed},
        {"checkpoint_every", c.train.checkpoint_every},
        {"adam_beta1", c.train.adam_beta1},
        {"adam_beta2", c.train.adam_beta2},
        {"adam_eps", c.train.adam_eps}}},
      {"baseline",
       {{"code_file", c.baseline.code_file},
        {"code_n", c.baseline.code_n},
        {"code_dv", c.baseline.code_dv},
        {"code_dc", c.baseline.code_dc},
        {"code_seed", c.baseline.code_seed},
        {"constellation", c.baseline.constellation},
        {"quality", c.baseline.quality},
        {"quality_list", c.baseline.quality_list},
        {"seed", c.baseline.seed},
        {"external_encode", c.baseline.external_encode},
        {"external_decode", c.baseline.external_decode}}},
      {"evaluate",
       {{"checkpoint", c.evaluate.checkpoint},
        {"gop_sizes", c.evaluate.gop_sizes},
        {"mode", mode_name(c.evaluate.mode)},
        {"jobs", c.evaluate.jobs}}},
      {"output", {{"directory", c.output}}}};
  return j.dump();
}

}  // namespace wvsc::cli
