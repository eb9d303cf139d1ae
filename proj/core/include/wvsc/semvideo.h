#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wvsc/latent.h"
#include "wvsc/nn.h"

namespace wvsc {

struct VideoCoderConfig {
  int latent_channels = 4;
  int residual_channels = 4;
  int offset_channels = 16;
  int hidden_channels = 32;
};

// Motion estimation & compensation on semantic frames. The transmitter (V_c1)
// and receiver (V_c2) each own one instance with identical structure and
// independent weights.
//
// Untrained state is the identity predictor: the compensator adds a
// zero-initialised branch onto the reference. The estimator starts random so
// that the compensator's first layer sees non-zero offsets from step one;
// with zero offsets the receiver-side reference enters only through the
// identity path and multi-frame compensation gets almost no gradient.
class MotionCoder {
 public:
  MotionCoder(const std::string& prefix, const VideoCoderConfig& config, uint64_t seed);
  MotionCoder(const MotionCoder&) = delete;
  MotionCoder& operator=(const MotionCoder&) = delete;
  MotionCoder(MotionCoder&&) = default;

  // (c,h,w) x (c,h,w) -> (offset_channels, h, w)
  ad::Var estimate(const ad::Var& current, const ad::Var& reference) const;
  // reference + branch(concat(reference, offsets))
  ad::Var compensate(const ad::Var& reference, const ad::Var& offsets) const;
  ad::Var predict(const ad::Var& current, const ad::Var& reference) const {
    return compensate(reference, estimate(current, reference));
  }

  const std::vector<NamedParam>& parameters() const { return store_.entries(); }
  const VideoCoderConfig& config() const { return config_; }

 private:
  VideoCoderConfig config_;
  ParamStore store_;
  Conv me0_, me1_, me_out_;
  Conv mc_in_, mc_out_;
  std::vector<ResBlock> mc_res_;
};

// Residual codec h_s / h_p: 1x1 convolutions between c and c_res channels,
// initialised as channel selection / re-insertion (identity when c_res == c).
class ResidualCodec {
 public:
  ResidualCodec(const std::string& prefix, const VideoCoderConfig& config, uint64_t seed);
  ResidualCodec(const ResidualCodec&) = delete;
  ResidualCodec& operator=(const ResidualCodec&) = delete;
  ResidualCodec(ResidualCodec&&) = default;

  ad::Var encode(const ad::Var& residual) const;
  // Accepts up to residual_channels channels; missing ones are zero-filled.
  ad::Var decode(const ad::Var& compressed) const;

  const std::vector<NamedParam>& parameters() const { return store_.entries(); }
  const VideoCoderConfig& config() const { return config_; }

 private:
  VideoCoderConfig config_;
  ParamStore store_;
  Conv enc_, dec_;
};

// ---- operation-level API on LatentFrame -------------------------------------------

LatentFrame estimate_motion(const LatentFrame& current, const LatentFrame& reference,
                            const MotionCoder& coder);
LatentFrame compensate_motion(const LatentFrame& reference, const LatentFrame& offsets,
                              const MotionCoder& coder);
// r = current - predicted.
LatentFrame compute_residual(const LatentFrame& current, const LatentFrame& predicted);
LatentFrame encode_residual(const LatentFrame& residual, const ResidualCodec& codec);
LatentFrame decode_residual(const LatentFrame& compressed, const ResidualCodec& codec);

}  // namespace wvsc
