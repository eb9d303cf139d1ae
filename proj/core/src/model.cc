#include "wvsc/model.h"

namespace wvsc {

VideoCoderConfig ModelConfig::video_config() const {
  VideoCoderConfig v;
  v.latent_channels = codec.latent_channels;
  v.residual_channels = residual_channels;
  v.offset_channels = offset_channels;
  v.hidden_channels = motion_hidden;
  return v;
}

MfaConfig ModelConfig::mfa_config() const {
  MfaConfig m;
  m.latent_channels = codec.latent_channels;
  m.attention_dim = attention_dim;
  m.history_window = history_window;
  return m;
}

WvscModel::WvscModel(const ModelConfig& config)
    : config_(config),
      codec_(config.codec, config.seed),
      tx_motion_("tx", config.video_config(), config.seed),
      rx_motion_("rx", config.video_config(), config.seed),
      residual_("residual", config.video_config(), config.seed),
      mfa_("mfa", config.mfa_config(), config.seed) {}

std::vector<NamedParam> WvscModel::parameters() const {
  std::vector<NamedParam> all;
  for (const auto* group : {&codec_.parameters(), &tx_motion_.parameters(),
                            &rx_motion_.parameters(), &residual_.parameters(),
                            &mfa_.parameters()}) {
    all.insert(all.end(), group->begin(), group->end());
  }
  return all;
}

WvscModel WvscModel::clone() const {
  WvscModel copy(config_);
  copy.load_state(state());
  return copy;
}

void WvscModel::zero_grad() {
  for (auto& [_, v] : parameters()) {
    ad::Var leaf = v;
    leaf.zero_grad();
  }
}

}  // namespace wvsc
