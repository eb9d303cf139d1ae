#include "wvsc/baseline/qam.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wvsc/errors.h"

namespace wvsc {

Constellation make_constellation(int order) {
  Constellation c;
  c.order = order;
  if (order == 4) {
    c.bits_per_symbol = 2;
    const double s = 1.0 / std::sqrt(2.0);
    for (int label = 0; label < 4; ++label) {
      const int b0 = (label >> 1) & 1, b1 = label & 1;
      c.points.emplace_back((1 - 2 * b0) * s, (1 - 2 * b1) * s);
    }
  } else if (order == 16) {
    c.bits_per_symbol = 4;
    const double s = 1.0 / std::sqrt(10.0);
    for (int label = 0; label < 16; ++label) {
      const int b0 = (label >> 3) & 1, b1 = (label >> 2) & 1, b2 = (label >> 1) & 1, b3 = label & 1;
      c.points.emplace_back((1 - 2 * b0) * (1 + 2 * b2) * s, (1 - 2 * b1) * (1 + 2 * b3) * s);
    }
  } else {
    throw ConfigError("QAM order must be 4 or 16, got " + std::to_string(order));
  }
  return c;
}

SymbolBlock qam_modulate(std::span<const uint8_t> bits, const Constellation& constellation) {
  const size_t bps = static_cast<size_t>(constellation.bits_per_symbol);
  if (bits.size() % bps != 0) {
    throw InputError("QAM modulation needs a multiple of " + std::to_string(bps) + " bits, got " +
                     std::to_string(bits.size()));
  }
  SymbolBlock block;
  block.symbols.reserve(bits.size() / bps);
  for (size_t i = 0; i < bits.size(); i += bps) {
    int label = 0;
    for (size_t b = 0; b < bps; ++b) label = (label << 1) | (bits[i + b] & 1);
    block.symbols.push_back(constellation.points[static_cast<size_t>(label)]);
  }
  return block;
}

std::vector<uint8_t> qam_hard_demap(std::span<const Complex> symbols,
                                    const Constellation& constellation) {
  const int bps = constellation.bits_per_symbol;
  std::vector<uint8_t> bits;
  bits.reserve(symbols.size() * static_cast<size_t>(bps));
  for (const Complex& y : symbols) {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t p = 0; p < constellation.points.size(); ++p) {
      const double d = std::norm(y - constellation.points[p]);
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    for (int b = bps - 1; b >= 0; --b) bits.push_back(static_cast<uint8_t>((best >> b) & 1));
  }
  return bits;
}

std::vector<double> qam_demodulate_llr(std::span<const Complex> received,
                                       const ChannelRealization& realization,
                                       const Constellation& constellation, size_t offset) {
  if (offset + received.size() > realization.fading.size()) {
    throw CapacityError("LLR demapping runs past the channel realization");
  }
  const int bps = constellation.bits_per_symbol;
  const double sigma2 = realization.noise_variance;
  std::vector<double> llrs;
  llrs.reserve(received.size() * static_cast<size_t>(bps));
  std::vector<double> dist(constellation.points.size());
  for (size_t m = 0; m < received.size(); ++m) {
    const Complex h = realization.fading[offset + m];
    for (size_t p = 0; p < dist.size(); ++p) dist[p] = std::norm(received[m] - h * constellation.points[p]);
    for (int b = bps - 1; b >= 0; --b) {
      double d0 = std::numeric_limits<double>::infinity(), d1 = d0;
      for (size_t p = 0; p < dist.size(); ++p) {
        if ((p >> b) & 1) {
          d1 = std::min(d1, dist[p]);
        } else {
          d0 = std::min(d0, dist[p]);
        }
      }
      const double diff = d1 - d0;
      double llr;
      if (sigma2 > 0.0) {
        llr = std::clamp(diff / sigma2, -kLlrClamp, kLlrClamp);
      } else {
        llr = diff > 0.0 ? kLlrClamp : (diff < 0.0 ? -kLlrClamp : 0.0);
      }
      llrs.push_back(llr);
    }
  }
  return llrs;
}

}  // namespace wvsc
