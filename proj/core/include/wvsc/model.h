#pragma once

#include <cstdint>
#include <vector>

#include "wvsc/mfc.h"
#include "wvsc/nn.h"
#include "wvsc/semcodec.h"
#include "wvsc/semvideo.h"

namespace wvsc {

struct ModelConfig {
  SemanticCodecConfig codec;
  int residual_channels = 4;
  int offset_channels = 16;
  int motion_hidden = 32;
  int attention_dim = 16;
  int history_window = 3;
  uint64_t seed = 0;

  int latent_channels() const { return codec.latent_channels; }
  VideoCoderConfig video_config() const;
  MfaConfig mfa_config() const;
};

// Every learnable component of the transceiver. Parameters are shared leaves,
// so a model is move-only; use clone() for an independent copy.
class WvscModel {
 public:
  explicit WvscModel(const ModelConfig& config);
  WvscModel(const WvscModel&) = delete;
  WvscModel& operator=(const WvscModel&) = delete;
  WvscModel(WvscModel&&) = default;

  const ModelConfig& config() const { return config_; }

  const SemanticCodec& codec() const { return codec_; }
  SemanticCodec& codec() { return codec_; }
  const MotionCoder& tx_motion() const { return tx_motion_; }  // V_c1
  const MotionCoder& rx_motion() const { return rx_motion_; }  // V_c2
  const ResidualCodec& residual() const { return residual_; }  // h_s / h_p
  const MfaModule& mfa() const { return mfa_; }
  MfaModule& mfa() { return mfa_; }

  // All parameters with fully qualified names, in a fixed order.
  std::vector<NamedParam> parameters() const;
  StateDict state() const { return state_of(parameters()); }
  void load_state(const StateDict& state) { load_state_into(parameters(), state); }
  WvscModel clone() const;
  void zero_grad();

 private:
  ModelConfig config_;
  SemanticCodec codec_;
  MotionCoder tx_motion_;
  MotionCoder rx_motion_;
  ResidualCodec residual_;
  MfaModule mfa_;
};

}  // namespace wvsc
