#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "wvsc/autograd.h"

namespace wvsc {

using Complex = std::complex<double>;

// One GoP's block-fading draw: per-symbol Rayleigh coefficients and the
// noise samples that will be added to them. Noise is stored, not redrawn, so
// a realization fully determines every transmission that uses it.
struct ChannelRealization {
  std::vector<Complex> fading;
  std::vector<Complex> noise;
  double noise_variance = 0.0;
  double snr_db = 0.0;
  uint64_t seed = 0;

  size_t max_symbols() const { return fading.size(); }
  // Mean |h|^2 over the first `length` fading entries (all when 0).
  double mean_fading_power(size_t length = 0) const;
};

// Per-symbol MMSE equalizer: x_hat = gain_signal * x + gain_noise * n.
struct EqualizerGains {
  std::vector<double> gain_signal;
  std::vector<Complex> gain_noise;
};

// Unit-average-power complex symbols plus the factor that undoes the scaling.
struct SymbolBlock {
  std::vector<Complex> symbols;
  double scale = 1.0;
};

// Where a payload sits inside a realization. Fading and noise are addressed
// separately so several payloads can share fading entries with fresh noise.
struct ChannelSlot {
  size_t fading_offset = 0;
  size_t noise_offset = 0;
};

double noise_variance_from_snr(double snr_db);

ChannelRealization sample_channel(uint64_t seed, size_t max_symbols, double snr_db);

// A realization with caller-chosen fading and noise (tests, ideal channels).
ChannelRealization make_realization(std::vector<Complex> fading, std::vector<Complex> noise,
                                    double noise_variance);

EqualizerGains mmse_gains(const ChannelRealization& realization, size_t length,
                          size_t offset = 0);

// Pairs consecutive reals into I/Q symbols and scales to unit mean power.
// An all-zero payload keeps scale 1.
SymbolBlock pair_and_normalize(std::span<const double> payload);
std::vector<double> denormalize_and_unpair(const SymbolBlock& block);

// Full real-in/real-out link: pair, normalize, fade, add noise, MMSE-equalize,
// denormalize, unpair. Throws CapacityError if the payload overruns the
// realization.
std::vector<double> transmit_vector(std::span<const double> payload,
                                    const ChannelRealization& realization, size_t offset);
std::vector<double> transmit_vector(std::span<const double> payload,
                                    const ChannelRealization& realization, ChannelSlot slot);

// Differentiable form of transmit_vector; gradients flow to the payload
// (including through the power normalization), never to the channel.
ad::Var transmit(const ad::Var& payload, const ChannelRealization& realization, ChannelSlot slot);

// y[m] = h[offset+m] * x[m] + n[offset+m], no equalization (coherent receivers).
std::vector<Complex> apply_fading(std::span<const Complex> symbols,
                                  const ChannelRealization& realization, size_t offset = 0);

}  // namespace wvsc
