#include "wvsc/channel.h"

#include <cmath>
#include <random>
#include <string>

#include "wvsc/errors.h"

namespace wvsc {

double ChannelRealization::mean_fading_power(size_t length) const {
  const size_t n = (length == 0 || length > fading.size()) ? fading.size() : length;
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (size_t m = 0; m < n; ++m) acc += std::norm(fading[m]);
  return acc / static_cast<double>(n);
}

double noise_variance_from_snr(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

ChannelRealization sample_channel(uint64_t seed, size_t max_symbols, double snr_db) {
  if (max_symbols < 1) throw ConfigError("sample_channel needs max_symbols >= 1");
  ChannelRealization r;
  r.seed = seed;
  r.snr_db = snr_db;
  r.noise_variance = noise_variance_from_snr(snr_db);
  r.fading.resize(max_symbols);
  r.noise.resize(max_symbols);
  std::mt19937_64 rng(seed);
  // CN(0, v): independent real and imaginary parts with variance v/2 each.
  std::normal_distribution<double> half(0.0, std::sqrt(0.5));
  for (auto& h : r.fading) h = Complex(half(rng), half(rng));
  const double sigma = std::sqrt(r.noise_variance);
  for (auto& n : r.noise) n = sigma * Complex(half(rng), half(rng));
  return r;
}

ChannelRealization make_realization(std::vector<Complex> fading, std::vector<Complex> noise,
                                    double noise_variance) {
  if (fading.size() != noise.size()) throw ShapeError("fading and noise lengths differ");
  ChannelRealization r;
  r.fading = std::move(fading);
  r.noise = std::move(noise);
  r.noise_variance = noise_variance;
  r.snr_db = noise_variance > 0 ? -10.0 * std::log10(noise_variance) : INFINITY;
  return r;
}

EqualizerGains mmse_gains(const ChannelRealization& realization, size_t length, size_t offset) {
  if (offset + length > realization.max_symbols()) {
    throw CapacityError("equalizer span " + std::to_string(offset + length) +
                        " exceeds realization length " +
                        std::to_string(realization.max_symbols()));
  }
  EqualizerGains g;
  g.gain_signal.resize(length);
  g.gain_noise.resize(length);
  for (size_t m = 0; m < length; ++m) {
    const Complex h = realization.fading[offset + m];
    const double denom = std::norm(h) + realization.noise_variance;
    if (denom > 0.0) {
      g.gain_signal[m] = std::norm(h) / denom;
      g.gain_noise[m] = std::conj(h) / denom;
    }
  }
  return g;
}

SymbolBlock pair_and_normalize(std::span<const double> payload) {
  if (payload.size() % 2) throw ShapeError("payload length must be even for I/Q pairing");
  SymbolBlock b;
  const size_t m = payload.size() / 2;
  b.symbols.resize(m);
  double power = 0.0;
  for (double v : payload) power += v * v;
  if (m > 0 && power > 0.0) b.scale = std::sqrt(power / static_cast<double>(m));
  for (size_t i = 0; i < m; ++i) {
    b.symbols[i] = Complex(payload[2 * i], payload[2 * i + 1]) / b.scale;
  }
  return b;
}

std::vector<double> denormalize_and_unpair(const SymbolBlock& block) {
  std::vector<double> out(block.symbols.size() * 2);
  for (size_t i = 0; i < block.symbols.size(); ++i) {
    out[2 * i] = block.symbols[i].real() * block.scale;
    out[2 * i + 1] = block.symbols[i].imag() * block.scale;
  }
  return out;
}

namespace {

void check_capacity(size_t reals, const ChannelRealization& r, ChannelSlot slot) {
  if (reals % 2) throw ShapeError("payload length must be even for I/Q pairing");
  const size_t symbols = reals / 2;
  if (slot.fading_offset + symbols > r.max_symbols() ||
      slot.noise_offset + symbols > r.noise.size()) {
    throw CapacityError("payload of " + std::to_string(symbols) + " symbols at offsets (" +
                        std::to_string(slot.fading_offset) + ", " +
                        std::to_string(slot.noise_offset) + ") overruns realization of " +
                        std::to_string(r.max_symbols()) + " symbols");
  }
}

// Equalized output in real layout: out = H_s * x + s * (H_n * n), where s is
// the power-normalization scale. Also returns the noise term c = H_n * n so
// the backward pass can differentiate through s.
struct LinkTerms {
  std::vector<double> out;
  std::vector<double> noise_term;
  std::vector<double> gain_signal;  // per real, repeated for I and Q
  double scale = 1.0;
  bool zero_block = false;
};

LinkTerms run_link(std::span<const double> x, const ChannelRealization& r, ChannelSlot slot) {
  check_capacity(x.size(), r, slot);
  const size_t m = x.size() / 2;
  LinkTerms t;
  double power = 0.0;
  for (double v : x) power += v * v;
  t.zero_block = !(power > 0.0) || m == 0;
  t.scale = t.zero_block ? 1.0 : std::sqrt(power / static_cast<double>(m));
  t.out.resize(x.size());
  t.noise_term.resize(x.size());
  t.gain_signal.resize(x.size());
  for (size_t i = 0; i < m; ++i) {
    const Complex h = r.fading[slot.fading_offset + i];
    const double denom = std::norm(h) + r.noise_variance;
    double hs = 0.0;
    Complex hn(0.0, 0.0);
    if (denom > 0.0) {
      hs = std::norm(h) / denom;
      hn = std::conj(h) / denom;
    }
    const Complex c = hn * r.noise[slot.noise_offset + i];
    t.gain_signal[2 * i] = t.gain_signal[2 * i + 1] = hs;
    t.noise_term[2 * i] = c.real();
    t.noise_term[2 * i + 1] = c.imag();
    t.out[2 * i] = hs * x[2 * i] + t.scale * c.real();
    t.out[2 * i + 1] = hs * x[2 * i + 1] + t.scale * c.imag();
  }
  return t;
}

}  // namespace

std::vector<double> transmit_vector(std::span<const double> payload,
                                    const ChannelRealization& realization, size_t offset) {
  return transmit_vector(payload, realization, ChannelSlot{offset, offset});
}

std::vector<double> transmit_vector(std::span<const double> payload,
                                    const ChannelRealization& realization, ChannelSlot slot) {
  return run_link(payload, realization, slot).out;
}

ad::Var transmit(const ad::Var& payload, const ChannelRealization& realization,
                 ChannelSlot slot) {
  LinkTerms t = run_link(payload.value().values(), realization, slot);
  Tensor out(payload.shape(), std::move(t.out));
  const size_t m = payload.size() / 2;
  return ad::make_result(
      std::move(out), {payload},
      [gs = std::move(t.gain_signal), c = std::move(t.noise_term), s = t.scale,
       zero = t.zero_block, m](ad::Node& self) {
        const Tensor& x = self.parents[0]->value;
        Tensor g(x.shape());
        double gc = 0.0;
        for (size_t i = 0; i < g.size(); ++i) {
          g[i] = gs[i] * self.grad[i];
          gc += self.grad[i] * c[i];
        }
        // d s / d x_j = x_j / (m s)
        if (!zero) {
          const double k = gc / (static_cast<double>(m) * s);
          for (size_t i = 0; i < g.size(); ++i) g[i] += k * x[i];
        }
        if (self.parents[0]->requires_grad) {
          Tensor& buf = self.parents[0]->grad_buffer();
          for (size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
        }
      });
}

std::vector<Complex> apply_fading(std::span<const Complex> symbols,
                                  const ChannelRealization& realization, size_t offset) {
  if (offset + symbols.size() > realization.max_symbols()) {
    throw CapacityError("symbol block of " + std::to_string(symbols.size()) +
                        " overruns realization of " +
                        std::to_string(realization.max_symbols()));
  }
  std::vector<Complex> y(symbols.size());
  for (size_t i = 0; i < symbols.size(); ++i) {
    y[i] = realization.fading[offset + i] * symbols[i] + realization.noise[offset + i];
  }
  return y;
}

}  // namespace wvsc
