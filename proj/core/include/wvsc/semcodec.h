#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wvsc/latent.h"
#include "wvsc/nn.h"
#include "wvsc/videoio.h"

namespace wvsc {

enum class CodecProfile { kTiny, kWindowedAttention };

std::string profile_name(CodecProfile p);
CodecProfile parse_profile(const std::string& name);

struct SemanticCodecConfig {
  CodecProfile profile = CodecProfile::kTiny;
  int hidden_channels = 32;
  // Channels of the semantic frame; rate plans may use fewer (leading ones).
  int latent_channels = 4;
  // Windowed-attention profile only.
  int window = 4;
  int stages = 4;
  int blocks_per_stage = 2;
};

// Semantic encoder f_e and decoder g_a. Frames enter and leave channel-first
// (3, H, W); latents are (latent_channels, H/4, W/4).
class SemanticCodec {
 public:
  SemanticCodec(const SemanticCodecConfig& config, uint64_t seed);
  SemanticCodec(const SemanticCodec&) = delete;
  SemanticCodec& operator=(const SemanticCodec&) = delete;
  SemanticCodec(SemanticCodec&&) = default;

  const SemanticCodecConfig& config() const { return config_; }

  ad::Var encode(const ad::Var& frame_chw) const;
  // Unclamped reconstruction. Latents with fewer channels than configured are
  // zero-extended, which is how truncated (lower-rate) latents are decoded.
  ad::Var decode(const ad::Var& latent) const;

  const std::vector<NamedParam>& parameters() const { return store_.entries(); }

  // Zeroes every bias (test mode: a zero latent then decodes to zeros).
  void zero_biases();

 private:
  struct AttentionBlock {
    Linear q, k, v, proj, mlp_in, mlp_out;
    bool shifted = false;
  };

  ad::Var encode_tiny(const ad::Var& x) const;
  ad::Var decode_tiny(const ad::Var& z) const;
  ad::Var encode_windowed(const ad::Var& x) const;
  ad::Var decode_windowed(const ad::Var& z) const;
  ad::Var run_attention(const ad::Var& tokens, int h, int w,
                        const std::vector<AttentionBlock>& blocks) const;

  SemanticCodecConfig config_;
  ParamStore store_;

  // Tiny profile.
  Conv enc_down0_, enc_down1_, enc_out_;
  std::vector<ResBlock> enc_res0_, enc_res1_;
  Conv dec_in_, dec_up0_, dec_up1_;
  std::vector<ResBlock> dec_res0_, dec_res1_;

  // Windowed-attention profile.
  Conv patch_embed_;
  Linear enc_head_, dec_embed_, dec_head_;
  std::vector<AttentionBlock> enc_blocks_, dec_blocks_;
};

// f_e for one frame, keeping the leading `out_channels` channels.
LatentFrame encode_frame(const VideoFrame& frame, const SemanticCodec& codec, int out_channels);

// g_a for one latent; the returned frame is clamped to [0,1].
VideoFrame decode_frame(const LatentFrame& latent, const SemanticCodec& codec);

}  // namespace wvsc
