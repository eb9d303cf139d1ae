#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wvsc/baseline/dct_codec.h"
#include "wvsc/baseline/ldpc.h"
#include "wvsc/baseline/qam.h"

namespace wvsc {

struct SsccResult {
  VideoGoP reconstructed;
  double cbr = 0.0;
  size_t source_bits = 0;
  size_t complex_symbols = 0;
  int blocks = 0;
  int failed_blocks = 0;  // LDPC blocks that did not converge
  bool corrupted = false;
};

// Complex symbols for `source_bits` split into k-bit LDPC blocks of length n
// and mapped at `bits_per_symbol` (the last symbol is zero-padded).
size_t sscc_channel_symbols(size_t source_bits, int k, int n, int bits_per_symbol);

// 2 * symbols / (frames * H * W * 3).
double sscc_cbr(size_t complex_symbols, int frames, int height, int width);

// Seeded Fisher-Yates permutation used as the bit interleaver.
std::vector<size_t> interleaver(size_t length, uint64_t seed);

// source_encode -> k-bit blocks (zero-padded) -> LDPC -> interleave -> QAM ->
// Rayleigh fading + noise -> coherent max-log LLRs -> deinterleave -> min-sum
// -> source_decode. A header lost to channel errors yields a grey GoP.
// `codec` defaults to the builtin DCT codec.
SsccResult run_sscc(const VideoGoP& gop, double snr_db, const LdpcCode& code,
                    const Constellation& constellation, int quality, uint64_t seed,
                    const SourceCodec* codec = nullptr);

}  // namespace wvsc
