#include <gtest/gtest.h>

#include "gradcheck.h"
#include "wvsc/errors.h"
#include "wvsc/semcodec.h"

namespace wvsc {
namespace {

using testing::grad_check;
using testing::random_tensor;

SemanticCodecConfig small_config(CodecProfile profile) {
  SemanticCodecConfig c;
  c.profile = profile;
  c.hidden_channels = 8;
  c.latent_channels = 4;
  c.window = 2;
  c.stages = 2;
  c.blocks_per_stage = 1;
  return c;
}

class CodecProfiles : public ::testing::TestWithParam<CodecProfile> {};

TEST_P(CodecProfiles, ShapesFollowDownsampling) {
  SemanticCodec codec(small_config(GetParam()), 1);
  const ad::Var x = ad::constant(random_tensor({3, 16, 24}, 2, 0.3));
  const ad::Var z = codec.encode(x);
  EXPECT_EQ(z.shape(), (std::vector<int>{4, 4, 6}));
  EXPECT_EQ(codec.decode(z).shape(), (std::vector<int>{3, 16, 24}));
  // Truncated latents decode as if the missing channels were zero.
  const ad::Var head = ad::slice(z, 0, 0, 2);
  const Tensor a = codec.decode(head).value();
  const Tensor b = codec.decode(ad::pad_to(head, 0, 4)).value();
  EXPECT_EQ(a.storage(), b.storage());
}

TEST_P(CodecProfiles, GradientsMatchFiniteDifferences) {
  SemanticCodec codec(small_config(GetParam()), 3);
  ad::Var x(random_tensor({3, 16, 16}, 4, 0.5), true);
  const auto& params = codec.parameters();
  std::vector<ad::Var> leaves{x, params.front().second, params[params.size() / 2].second,
                              params.back().second};
  const auto r = grad_check([&] { return codec.decode(codec.encode(x)); }, leaves, 10, 5);
  EXPECT_LT(r.max_rel_error, 1e-4);
  EXPECT_EQ(r.checked, 40);
}

INSTANTIATE_TEST_SUITE_P(Both, CodecProfiles,
                         ::testing::Values(CodecProfile::kTiny, CodecProfile::kWindowedAttention),
                         [](const auto& info) {
                           return info.param == CodecProfile::kTiny ? std::string("Tiny")
                                                                    : std::string("Windowed");
                         });

TEST(SemanticCodec, RejectsBadInput) {
  SemanticCodec codec(small_config(CodecProfile::kTiny), 1);
  EXPECT_THROW(codec.encode(ad::constant(Tensor({3, 10, 16}))), ShapeError);
  EXPECT_THROW(codec.encode(ad::constant(Tensor({1, 16, 16}))), ShapeError);
  EXPECT_THROW(codec.decode(ad::constant(Tensor({5, 4, 4}))), ShapeError);
  EXPECT_THROW(parse_profile("swin"), ConfigError);
}

TEST(SemanticCodec, FrameHelpers) {
  SemanticCodec codec(small_config(CodecProfile::kTiny), 1);
  VideoFrame f(16, 16, 0.5);
  const LatentFrame z = encode_frame(f, codec, 3);
  EXPECT_EQ(z.channels(), 3);
  EXPECT_EQ(z.length(), 3u * 4 * 4);
  const VideoFrame back = decode_frame(z, codec);
  EXPECT_TRUE(back.valid());
  EXPECT_THROW(encode_frame(f, codec, 5), ShapeError);
}

TEST(SemanticCodec, ZeroBiasesMapZeroLatentToZero) {
  SemanticCodec codec(small_config(CodecProfile::kTiny), 1);
  codec.zero_biases();
  const Tensor out = codec.decode(ad::constant(Tensor({4, 4, 4}))).value();
  for (double v : out.storage()) EXPECT_EQ(v, 0.0);
}

TEST(SemanticCodec, SeedDeterminesWeights) {
  SemanticCodec a(small_config(CodecProfile::kTiny), 9), b(small_config(CodecProfile::kTiny), 9);
  EXPECT_EQ(state_of(a.parameters()), state_of(b.parameters()));
}

}  // namespace
}  // namespace wvsc
