#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wvsc/channel.h"

namespace wvsc {

// Gray-mapped square QAM with unit average energy. points[label] is the
// symbol for the bit label (first bit is the label's most significant bit).
// 4-QAM: bits (b0 b1) -> ((1-2 b0) + j (1-2 b1)) / sqrt(2).
// 16-QAM: I from (b0 b2), Q from (b1 b3), each axis (a b) -> (1-2a)(1+2b),
// scaled by 1/sqrt(10).
struct Constellation {
  int order = 4;
  int bits_per_symbol = 2;
  std::vector<Complex> points;
};

Constellation make_constellation(int order);

inline constexpr double kLlrClamp = 30.0;

SymbolBlock qam_modulate(std::span<const uint8_t> bits, const Constellation& constellation);

// Nearest-point decisions with no channel.
std::vector<uint8_t> qam_hard_demap(std::span<const Complex> symbols,
                                    const Constellation& constellation);

// Max-log LLRs for y = h x + n with known h (realization fading at
// offset + m) and noise variance sigma^2; positive means bit 0, clamped to
// +-kLlrClamp. With sigma^2 = 0 only the sign survives (at the clamp).
std::vector<double> qam_demodulate_llr(std::span<const Complex> received,
                                       const ChannelRealization& realization,
                                       const Constellation& constellation, size_t offset = 0);

}  // namespace wvsc
