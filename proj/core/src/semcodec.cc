#include "wvsc/semcodec.h"

#include <cmath>
#include <numeric>

#include "wvsc/errors.h"

namespace wvsc {

std::string profile_name(CodecProfile p) {
  return p == CodecProfile::kTiny ? "tiny" : "windowed-attention";
}

CodecProfile parse_profile(const std::string& name) {
  if (name == "tiny") return CodecProfile::kTiny;
  if (name == "windowed-attention") return CodecProfile::kWindowedAttention;
  throw ConfigError("unknown codec profile '" + name + "' (tiny | windowed-attention)");
}

namespace {

constexpr int kPatch = kDownsampleFactor;

// (C, H, W) <-> (H*W, C) token views.
ad::Var to_tokens(const ad::Var& x) {
  return ad::transpose2d(ad::reshape(x, {x.dim(0), x.dim(1) * x.dim(2)}));
}

ad::Var from_tokens(const ad::Var& t, int h, int w) {
  return ad::reshape(ad::transpose2d(t), {t.dim(1), h, w});
}

// Row permutation that lists tokens window by window, optionally after a
// cyclic shift of half a window.
std::vector<int> window_order(int h, int w, int wh, int ww, bool shifted) {
  const int sy = shifted ? wh / 2 : 0, sx = shifted ? ww / 2 : 0;
  std::vector<int> order;
  order.reserve(static_cast<size_t>(h) * w);
  for (int by = 0; by < h / wh; ++by) {
    for (int bx = 0; bx < w / ww; ++bx) {
      for (int iy = 0; iy < wh; ++iy) {
        for (int ix = 0; ix < ww; ++ix) {
          const int y = (by * wh + iy + sy) % h;
          const int x = (bx * ww + ix + sx) % w;
          order.push_back(y * w + x);
        }
      }
    }
  }
  return order;
}

ad::Var permute_rows(const ad::Var& t, const std::vector<int>& rows) {
  const int d = t.dim(1);
  std::vector<int> index;
  index.reserve(rows.size() * static_cast<size_t>(d));
  for (int r : rows) {
    for (int j = 0; j < d; ++j) index.push_back(r * d + j);
  }
  return ad::gather(t, std::move(index), {static_cast<int>(rows.size()), d});
}

}  // namespace

SemanticCodec::SemanticCodec(const SemanticCodecConfig& config, uint64_t seed)
    : config_(config), store_("codec") {
  if (config_.latent_channels < 1 || config_.hidden_channels < 1) {
    throw ConfigError("codec channel counts must be positive");
  }
  Rng rng(derive_seed(seed, 0xC0DEC));
  const int c = config_.hidden_channels, z = config_.latent_channels;
  if (config_.profile == CodecProfile::kTiny) {
    enc_down0_ = Conv::create(store_, "enc.down0", 3, c, 3, 2, rng);
    for (int i = 0; i < 2; ++i) {
      enc_res0_.push_back(ResBlock::create(store_, "enc.res0." + std::to_string(i), c, rng));
    }
    enc_down1_ = Conv::create(store_, "enc.down1", c, c, 3, 2, rng);
    for (int i = 0; i < 2; ++i) {
      enc_res1_.push_back(ResBlock::create(store_, "enc.res1." + std::to_string(i), c, rng));
    }
    enc_out_ = Conv::create(store_, "enc.out", c, z, 1, 1, rng);

    dec_in_ = Conv::create(store_, "dec.in", z, c, 1, 1, rng);
    for (int i = 0; i < 2; ++i) {
      dec_res0_.push_back(ResBlock::create(store_, "dec.res0." + std::to_string(i), c, rng));
    }
    dec_up0_ = Conv::create(store_, "dec.up0", c, c, 3, 1, rng);
    for (int i = 0; i < 2; ++i) {
      dec_res1_.push_back(ResBlock::create(store_, "dec.res1." + std::to_string(i), c, rng));
    }
    dec_up1_ = Conv::create(store_, "dec.up1", c, 3, 3, 1, rng);
    dec_up1_.bias.mutable_value().fill(0.5);
  } else {
    patch_embed_ = Conv::create(store_, "enc.patch", 3, c, kPatch, kPatch, rng);
    patch_embed_.pad = 0;
    auto make_blocks = [&](const std::string& prefix) {
      std::vector<AttentionBlock> blocks;
      for (int s = 0; s < config_.stages; ++s) {
        for (int b = 0; b < config_.blocks_per_stage; ++b) {
          const std::string n = prefix + "." + std::to_string(s) + "." + std::to_string(b);
          AttentionBlock blk;
          blk.q = Linear::create(store_, n + ".q", c, c, rng, false);
          blk.k = Linear::create(store_, n + ".k", c, c, rng, false);
          blk.v = Linear::create(store_, n + ".v", c, c, rng, false);
          blk.proj = Linear::create(store_, n + ".proj", c, c, rng, true, Init::kSmall);
          blk.mlp_in = Linear::create(store_, n + ".mlp_in", c, 2 * c, rng);
          blk.mlp_out = Linear::create(store_, n + ".mlp_out", 2 * c, c, rng, true, Init::kSmall);
          blk.shifted = (b % 2) == 1;
          blocks.push_back(std::move(blk));
        }
      }
      return blocks;
    };
    enc_blocks_ = make_blocks("enc.stage");
    enc_head_ = Linear::create(store_, "enc.head", c, z, rng);
    dec_embed_ = Linear::create(store_, "dec.embed", z, c, rng);
    dec_blocks_ = make_blocks("dec.stage");
    dec_head_ = Linear::create(store_, "dec.head", c, 3 * kPatch * kPatch, rng);
    dec_head_.bias.mutable_value().fill(0.5);
  }
}

void SemanticCodec::zero_biases() {
  for (const auto& [name, v] : store_.entries()) {
    if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0) {
      ad::Var leaf = v;
      leaf.mutable_value().fill(0.0);
    }
  }
}

ad::Var SemanticCodec::encode(const ad::Var& frame_chw) const {
  if (frame_chw.value().rank() != 3 || frame_chw.dim(0) != 3 ||
      frame_chw.dim(1) % kDownsampleFactor || frame_chw.dim(2) % kDownsampleFactor ||
      frame_chw.dim(1) == 0 || frame_chw.dim(2) == 0) {
    throw ShapeError("semantic encoder needs (3,H,W) with H,W multiples of " +
                     std::to_string(kDownsampleFactor) + ", got " +
                     shape_string(frame_chw.shape()));
  }
  return config_.profile == CodecProfile::kTiny ? encode_tiny(frame_chw)
                                                : encode_windowed(frame_chw);
}

ad::Var SemanticCodec::decode(const ad::Var& latent) const {
  if (latent.value().rank() != 3 || latent.dim(0) < 1 ||
      latent.dim(0) > config_.latent_channels) {
    throw ShapeError("semantic decoder expects up to " + std::to_string(config_.latent_channels) +
                     " latent channels, got " + shape_string(latent.shape()));
  }
  ad::Var z = ad::pad_to(latent, 0, config_.latent_channels);
  return config_.profile == CodecProfile::kTiny ? decode_tiny(z) : decode_windowed(z);
}

ad::Var SemanticCodec::encode_tiny(const ad::Var& x) const {
  ad::Var h = ad::leaky_relu(enc_down0_(x), kLeakySlope);
  for (const auto& r : enc_res0_) h = r(h);
  h = ad::leaky_relu(enc_down1_(h), kLeakySlope);
  for (const auto& r : enc_res1_) h = r(h);
  return enc_out_(h);
}

ad::Var SemanticCodec::decode_tiny(const ad::Var& z) const {
  ad::Var h = ad::leaky_relu(dec_in_(z), kLeakySlope);
  for (const auto& r : dec_res0_) h = r(h);
  h = ad::leaky_relu(dec_up0_(ad::upsample2x(h)), kLeakySlope);
  for (const auto& r : dec_res1_) h = r(h);
  return dec_up1_(ad::upsample2x(h));
}

ad::Var SemanticCodec::run_attention(const ad::Var& tokens, int h, int w,
                                     const std::vector<AttentionBlock>& blocks) const {
  int wh = config_.window, ww = config_.window;
  if (wh <= 0 || h % wh) wh = h;
  if (ww <= 0 || w % ww) ww = w;
  const int per_window = wh * ww;
  const int windows = (h / wh) * (w / ww);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(tokens.dim(1)));

  ad::Var x = tokens;
  for (const auto& blk : blocks) {
    const std::vector<int> order = window_order(h, w, wh, ww, blk.shifted && wh > 1);
    std::vector<int> inverse(order.size());
    for (size_t j = 0; j < order.size(); ++j) inverse[static_cast<size_t>(order[j])] = static_cast<int>(j);

    ad::Var grouped = permute_rows(x, order);
    ad::Var q = blk.q(grouped), k = blk.k(grouped), v = blk.v(grouped);
    std::vector<ad::Var> outs;
    outs.reserve(static_cast<size_t>(windows));
    for (int wi = 0; wi < windows; ++wi) {
      const int start = wi * per_window;
      ad::Var qw = ad::slice(q, 0, start, per_window);
      ad::Var kw = ad::slice(k, 0, start, per_window);
      ad::Var vw = ad::slice(v, 0, start, per_window);
      ad::Var att = ad::softmax_rows(ad::scale(ad::matmul(qw, ad::transpose2d(kw)), inv_sqrt_d));
      outs.push_back(ad::matmul(att, vw));
    }
    ad::Var attended = permute_rows(ad::concat(outs, 0), inverse);
    x = ad::add(x, blk.proj(attended));
    x = ad::add(x, blk.mlp_out(ad::leaky_relu(blk.mlp_in(x), kLeakySlope)));
  }
  return x;
}

ad::Var SemanticCodec::encode_windowed(const ad::Var& x) const {
  ad::Var e = patch_embed_(x);
  const int h = e.dim(1), w = e.dim(2);
  ad::Var t = run_attention(to_tokens(e), h, w, enc_blocks_);
  return from_tokens(enc_head_(t), h, w);
}

ad::Var SemanticCodec::decode_windowed(const ad::Var& z) const {
  const int h = z.dim(1), w = z.dim(2);
  ad::Var t = run_attention(dec_embed_(to_tokens(z)), h, w, dec_blocks_);
  ad::Var patches = dec_head_(t);  // (h*w, 3*P*P)
  const int H = h * kPatch, W = w * kPatch, pp = kPatch * kPatch;
  std::vector<int> index(static_cast<size_t>(3) * H * W);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int xx = 0; xx < W; ++xx) {
        const int token = (y / kPatch) * w + xx / kPatch;
        const int col = c * pp + (y % kPatch) * kPatch + xx % kPatch;
        index[(static_cast<size_t>(c) * H + y) * W + xx] = token * 3 * pp + col;
      }
    }
  }
  return ad::gather(patches, std::move(index), {3, H, W});
}

LatentFrame encode_frame(const VideoFrame& frame, const SemanticCodec& codec, int out_channels) {
  if (out_channels < 1 || out_channels > codec.config().latent_channels) {
    throw ShapeError("out_channels " + std::to_string(out_channels) + " outside [1, " +
                     std::to_string(codec.config().latent_channels) + "]");
  }
  ad::Var z = codec.encode(ad::constant(frame.to_chw()));
  if (out_channels < z.dim(0)) z = ad::slice(z, 0, 0, out_channels);
  return LatentFrame(z);
}

VideoFrame decode_frame(const LatentFrame& latent, const SemanticCodec& codec) {
  return VideoFrame::from_chw(codec.decode(latent.var()).value(), true);
}

}  // namespace wvsc
