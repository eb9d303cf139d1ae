#include "wvsc/semvideo.h"

#include "wvsc/errors.h"

namespace wvsc {

namespace {

void require_latent(const ad::Var& v, int channels, const char* what) {
  if (v.value().rank() != 3 || v.dim(0) != channels) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(channels) +
                     " channels, got " + shape_string(v.shape()));
  }
}

uint64_t hash_name(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

}  // namespace

MotionCoder::MotionCoder(const std::string& prefix, const VideoCoderConfig& config, uint64_t seed)
    : config_(config), store_(prefix) {
  if (config_.latent_channels < 1 || config_.offset_channels < 1 || config_.hidden_channels < 1) {
    throw ConfigError("motion coder channel counts must be positive");
  }
  Rng rng(derive_seed(seed, hash_name(prefix)));
  const int c = config_.latent_channels, m = config_.hidden_channels;
  me0_ = Conv::create(store_, "me.0", 2 * c, m, 3, 1, rng);
  me1_ = Conv::create(store_, "me.1", m, m, 3, 1, rng);
  me_out_ = Conv::create(store_, "me.out", m, config_.offset_channels, 3, 1, rng, Init::kHe);
  mc_in_ = Conv::create(store_, "mc.in", c + config_.offset_channels, m, 3, 1, rng);
  for (int i = 0; i < 2; ++i) {
    mc_res_.push_back(ResBlock::create(store_, "mc.res." + std::to_string(i), m, rng));
  }
  mc_out_ = Conv::create(store_, "mc.out", m, c, 3, 1, rng, Init::kZero);
}

ad::Var MotionCoder::estimate(const ad::Var& current, const ad::Var& reference) const {
  require_same_shape(current.shape(), reference.shape(), "estimate_motion");
  require_latent(current, config_.latent_channels, "estimate_motion");
  ad::Var h = ad::leaky_relu(me0_(ad::concat({current, reference}, 0)), kLeakySlope);
  h = ad::leaky_relu(me1_(h), kLeakySlope);
  return me_out_(h);
}

ad::Var MotionCoder::compensate(const ad::Var& reference, const ad::Var& offsets) const {
  require_latent(reference, config_.latent_channels, "compensate_motion");
  require_latent(offsets, config_.offset_channels, "compensate_motion offsets");
  if (offsets.dim(1) != reference.dim(1) || offsets.dim(2) != reference.dim(2)) {
    throw ShapeError("compensate_motion: offset map " + shape_string(offsets.shape()) +
                     " does not match reference " + shape_string(reference.shape()));
  }
  ad::Var h = ad::leaky_relu(mc_in_(ad::concat({reference, offsets}, 0)), kLeakySlope);
  for (const auto& r : mc_res_) h = r(h);
  return ad::add(reference, mc_out_(h));
}

ResidualCodec::ResidualCodec(const std::string& prefix, const VideoCoderConfig& config,
                             uint64_t seed)
    : config_(config), store_(prefix) {
  if (config_.residual_channels < 1) throw ConfigError("residual channels must be positive");
  if (config_.residual_channels > config_.latent_channels) {
    throw ConfigError("residual channels (" + std::to_string(config_.residual_channels) +
                      ") exceed latent channels (" + std::to_string(config_.latent_channels) +
                      ")");
  }
  Rng rng(derive_seed(seed, hash_name(prefix)));
  enc_ = Conv::create(store_, "hs", config_.latent_channels, config_.residual_channels, 1, 1, rng,
                      Init::kIdentity);
  dec_ = Conv::create(store_, "hp", config_.residual_channels, config_.latent_channels, 1, 1, rng,
                      Init::kIdentity);
}

ad::Var ResidualCodec::encode(const ad::Var& residual) const {
  require_latent(residual, config_.latent_channels, "encode_residual");
  return enc_(residual);
}

ad::Var ResidualCodec::decode(const ad::Var& compressed) const {
  if (compressed.value().rank() != 3 || compressed.dim(0) < 1 ||
      compressed.dim(0) > config_.residual_channels) {
    throw ShapeError("decode_residual: expected up to " +
                     std::to_string(config_.residual_channels) + " channels, got " +
                     shape_string(compressed.shape()));
  }
  return dec_(ad::pad_to(compressed, 0, config_.residual_channels));
}

LatentFrame estimate_motion(const LatentFrame& current, const LatentFrame& reference,
                            const MotionCoder& coder) {
  return LatentFrame(coder.estimate(current.var(), reference.var()));
}

LatentFrame compensate_motion(const LatentFrame& reference, const LatentFrame& offsets,
                              const MotionCoder& coder) {
  return LatentFrame(coder.compensate(reference.var(), offsets.var()));
}

LatentFrame compute_residual(const LatentFrame& current, const LatentFrame& predicted) {
  require_same_shape(current.var().shape(), predicted.var().shape(), "compute_residual");
  return LatentFrame(ad::sub(current.var(), predicted.var()));
}

LatentFrame encode_residual(const LatentFrame& residual, const ResidualCodec& codec) {
  return LatentFrame(codec.encode(residual.var()));
}

LatentFrame decode_residual(const LatentFrame& compressed, const ResidualCodec& codec) {
  return LatentFrame(codec.decode(compressed.var()));
}

}  // namespace wvsc
