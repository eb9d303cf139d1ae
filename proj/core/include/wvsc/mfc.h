#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "wvsc/latent.h"
#include "wvsc/nn.h"

namespace wvsc {

struct MfaConfig {
  int latent_channels = 4;
  int attention_dim = 16;
  int history_window = 3;
};

// Channel state summary fed to the compensator.
struct ChannelDescriptor {
  double mean_fading_power = 1.0;
  double noise_variance = 0.0;
};

// Previously reconstructed P frames of the current GoP, most recent first,
// capped at `window` entries.
class FrameHistory {
 public:
  explicit FrameHistory(int window = 3) : window_(window) {}

  void push(LatentFrame frame);
  const std::deque<LatentFrame>& frames() const { return frames_; }
  int size() const { return static_cast<int>(frames_.size()); }
  bool empty() const { return frames_.empty(); }
  int window() const { return window_; }

 private:
  int window_;
  std::deque<LatentFrame> frames_;
};

// Single-head attention: softmax_rows(q k^T) v.
ad::Var cross_attend(const ad::Var& q, const ad::Var& k, const ad::Var& v);

// Multi-frame fusion attention. Tokens are spatial positions of a latent with
// its channels as the embedding. The reference stream (received I frame plus
// the embedded channel descriptor) and the history stream (all history frames'
// tokens stacked) each produce Q/K/V; each stream's attention map is applied to
// the other stream's values, the two results are concatenated and projected
// back to the latent width, and the output is reference + gamma * fused.
class MfaModule {
 public:
  MfaModule(const std::string& prefix, const MfaConfig& config, uint64_t seed);
  MfaModule(const MfaModule&) = delete;
  MfaModule& operator=(const MfaModule&) = delete;
  MfaModule(MfaModule&&) = default;

  // Empty history falls back to {reference}.
  ad::Var compensate(const ad::Var& reference, const std::vector<ad::Var>& history,
                     const ChannelDescriptor& csi) const;

  // Same computation but returns the fused term before the gamma scaling.
  ad::Var fused(const ad::Var& reference, const std::vector<ad::Var>& history,
                const ChannelDescriptor& csi) const;

  const ad::Var& gamma() const { return gamma_; }
  void set_gamma(double g);

  const std::vector<NamedParam>& parameters() const { return store_.entries(); }
  const MfaConfig& config() const { return config_; }

 private:
  MfaConfig config_;
  ParamStore store_;
  Linear csi_embed_;
  Linear q_ref_, k_ref_, v_ref_;
  Linear q_pre_, k_pre_, v_pre_;
  Linear fuse_;
  ad::Var gamma_;
};

LatentFrame compensate_reference(const LatentFrame& reference, const FrameHistory& history,
                                 const ChannelDescriptor& csi, const MfaModule& mfa);

}  // namespace wvsc
