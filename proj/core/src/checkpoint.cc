#include "wvsc/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "wvsc/errors.h"

namespace wvsc {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host order");

namespace {

json model_to_json(const ModelConfig& c) {
  return json{{"codec",
               {{"profile", profile_name(c.codec.profile)},
                {"hidden_channels", c.codec.hidden_channels},
                {"latent_channels", c.codec.latent_channels},
                {"window", c.codec.window},
                {"stages", c.codec.stages},
                {"blocks_per_stage", c.codec.blocks_per_stage}}},
              {"residual_channels", c.residual_channels},
              {"offset_channels", c.offset_channels},
              {"motion_hidden", c.motion_hidden},
              {"attention_dim", c.attention_dim},
              {"history_window", c.history_window},
              {"seed", c.seed}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig c;
  const json& k = j.at("codec");
  c.codec.profile = parse_profile(k.at("profile").get<std::string>());
  c.codec.hidden_channels = k.at("hidden_channels").get<int>();
  c.codec.latent_channels = k.at("latent_channels").get<int>();
  c.codec.window = k.at("window").get<int>();
  c.codec.stages = k.at("stages").get<int>();
  c.codec.blocks_per_stage = k.at("blocks_per_stage").get<int>();
  c.residual_channels = j.at("residual_channels").get<int>();
  c.offset_channels = j.at("offset_channels").get<int>();
  c.motion_hidden = j.at("motion_hidden").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.history_window = j.at("history_window").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

json train_to_json(const TrainConfig& c) {
  return json{{"steps", c.steps},
              {"lr_start", c.lr_start},
              {"lr_end", c.lr_end},
              {"batch_size", c.batch_size},
              {"gop_size", c.gop_size},
              {"snr_low_db", c.snr_low_db},
              {"snr_high_db", c.snr_high_db},
              {"seed", c.seed},
              {"checkpoint_every", c.checkpoint_every},
              {"target_cbr", c.target_cbr},
              {"ratio", c.ratio.str()},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.steps = j.at("steps").get<long>();
  c.lr_start = j.at("lr_start").get<double>();
  c.lr_end = j.at("lr_end").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.gop_size = j.at("gop_size").get<int>();
  c.snr_low_db = j.at("snr_low_db").get<double>();
  c.snr_high_db = j.at("snr_high_db").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.checkpoint_every = j.at("checkpoint_every").get<long>();
  c.target_cbr = j.at("target_cbr").get<double>();
  c.ratio = parse_ratio(j.at("ratio").get<std::string>());
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  return c;
}

struct TableEntry {
  std::string group;
  std::string name;
  const Tensor* tensor;
};

}  // namespace

std::string model_config_json(const ModelConfig& config) { return model_to_json(config).dump(); }
std::string train_config_json(const TrainConfig& config) { return train_to_json(config).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return model_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config: ") + e.what());
  }
}

TrainConfig train_config_from_json(const std::string& text) {
  try {
    return train_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad train config: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const fs::path& path) {
  std::vector<TableEntry> table;
  for (const auto& [name, t] : checkpoint.model_state) table.push_back({"model", name, &t});
  for (const auto& [name, mv] : checkpoint.adam_moments) {
    table.push_back({"adam_m", name, &mv.m});
    table.push_back({"adam_v", name, &mv.v});
  }
  json header{{"model_config", model_to_json(checkpoint.model_config)},
              {"train_config", train_to_json(checkpoint.train_config)},
              {"step", checkpoint.step},
              {"adam_t", checkpoint.adam_t},
              {"stats",
               {{"count", checkpoint.stats.count},
                {"sum", checkpoint.stats.sum},
                {"last", checkpoint.stats.last}}},
              {"tensors", json::array()}};
  for (const auto& e : table) {
    header["tensors"].push_back({{"group", e.group}, {"name", e.name}, {"shape", e.tensor->shape()}});
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    const uint32_t version = kCheckpointVersion;
    const uint64_t header_len = text.size();
    out.write(kCheckpointMagic, 8);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : table) {
      out.write(reinterpret_cast<const char*>(e.tensor->data()),
                static_cast<std::streamsize>(e.tensor->size() * sizeof(double)));
    }
    if (!out) throw IoError("short write to checkpoint " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  uint32_t version = 0;
  uint64_t header_len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw IoError("not a checkpoint file: " + path.string());
  }
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " +
                  path.string());
  }
  if (header_len > (1ULL << 30)) throw IoError("corrupt checkpoint header in " + path.string());
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IoError("truncated checkpoint header in " + path.string());

  Checkpoint c;
  try {
    const json header = json::parse(text);
    c.model_config = model_from_json(header.at("model_config"));
    c.train_config = train_from_json(header.at("train_config"));
    c.step = header.at("step").get<long>();
    c.adam_t = header.at("adam_t").get<long>();
    c.stats.count = header.at("stats").at("count").get<long>();
    c.stats.sum = header.at("stats").at("sum").get<double>();
    c.stats.last = header.at("stats").at("last").get<double>();
    for (const auto& e : header.at("tensors")) {
      Tensor t(e.at("shape").get<std::vector<int>>(), 0.0);
      in.read(reinterpret_cast<char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
      if (!in) throw IoError("truncated checkpoint payload in " + path.string());
      const std::string group = e.at("group").get<std::string>();
      const std::string name = e.at("name").get<std::string>();
      if (group == "model") {
        c.model_state[name] = std::move(t);
      } else if (group == "adam_m") {
        c.adam_moments[name].m = std::move(t);
      } else if (group == "adam_v") {
        c.adam_moments[name].v = std::move(t);
      } else {
        throw IoError("unknown tensor group '" + group + "' in " + path.string());
      }
    }
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  return c;
}

}  // namespace wvsc
