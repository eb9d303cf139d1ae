#include <gtest/gtest.h>

#include <cmath>

#include "wvsc/baseline/sscc.h"

namespace wvsc {
namespace {

TEST(Sscc, SymbolAccounting) {
  // 98304 bits in 48 half-rate blocks of 4096, four bits per 16-QAM symbol.
  EXPECT_EQ(sscc_channel_symbols(98304, 2048, 4096, 4), 49152u);
  EXPECT_NEAR(sscc_cbr(49152, 10, 128, 128), 0.2, 1e-15);
  // A partial block still costs a full codeword; odd bit counts pad the last symbol.
  EXPECT_EQ(sscc_channel_symbols(1, 2048, 4096, 4), 1024u);
  EXPECT_EQ(sscc_channel_symbols(4, 4, 7, 4), 2u);
}

TEST(Sscc, InterleaverIsSeededPermutation) {
  const auto p = interleaver(1000, 3);
  EXPECT_EQ(p, interleaver(1000, 3));
  EXPECT_NE(p, interleaver(1000, 4));
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Sscc, NoiselessChannelMatchesSourceRoundTrip) {
  const auto seq = synthesize_moving_shapes(1, 1, 3, 32, 32);
  const LdpcCode code = make_regular_code(4096, 3, 6, 1);
  const auto qam = make_constellation(16);
  const auto res = run_sscc(seq.gops[0], INFINITY, code, qam, 5, 7);
  const auto bs = source_encode(seq.gops[0], 5);
  const auto ref = source_decode(bs.bytes, 32, 32, 3);
  EXPECT_EQ(res.reconstructed.frames, ref.gop.frames);
  EXPECT_FALSE(res.corrupted);
  EXPECT_EQ(res.failed_blocks, 0);
  EXPECT_EQ(res.source_bits, bs.bit_length());
  EXPECT_EQ(res.complex_symbols, sscc_channel_symbols(bs.bit_length(), 2048, 4096, 4));
  EXPECT_NEAR(res.cbr, sscc_cbr(res.complex_symbols, 3, 32, 32), 1e-15);
}

TEST(Sscc, HighSnrDecodesCleanlyAndLowSnrCollapses) {
  const auto seq = synthesize_moving_shapes(1, 1, 3, 32, 32);
  const LdpcCode code = make_regular_code(4096, 3, 6, 1);
  const auto qam = make_constellation(16);
  const auto clean = source_decode(source_encode(seq.gops[0], 5).bytes, 32, 32, 3).gop;
  const auto high = run_sscc(seq.gops[0], 30.0, code, qam, 5, 2);
  EXPECT_EQ(high.reconstructed.frames, clean.frames);
  const auto low = run_sscc(seq.gops[0], 0.0, code, qam, 5, 2);
  EXPECT_TRUE(low.corrupted);
  EXPECT_GT(low.failed_blocks, 0);
  for (const auto& f : low.reconstructed.frames) EXPECT_TRUE(f.valid());
}

TEST(Sscc, Deterministic) {
  const auto seq = synthesize_moving_shapes(1, 1, 3, 32, 32);
  const LdpcCode code = make_regular_code(4096, 3, 6, 1);
  const auto qam = make_constellation(16);
  const auto a = run_sscc(seq.gops[0], 9.0, code, qam, 5, 4);
  const auto b = run_sscc(seq.gops[0], 9.0, code, qam, 5, 4);
  EXPECT_EQ(a.reconstructed.frames, b.reconstructed.frames);
  EXPECT_EQ(a.failed_blocks, b.failed_blocks);
}

}  // namespace
}  // namespace wvsc
