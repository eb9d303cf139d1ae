#include "wvsc/baseline/sscc.h"

#include <random>

#include "wvsc/errors.h"
#include "wvsc/nn.h"

namespace wvsc {

size_t sscc_channel_symbols(size_t source_bits, int k, int n, int bits_per_symbol) {
  if (k < 1 || n < k || bits_per_symbol < 1) throw ConfigError("bad SSCC code parameters");
  const size_t blocks = (source_bits + static_cast<size_t>(k) - 1) / static_cast<size_t>(k);
  const size_t coded = blocks * static_cast<size_t>(n);
  return (coded + static_cast<size_t>(bits_per_symbol) - 1) / static_cast<size_t>(bits_per_symbol);
}

double sscc_cbr(size_t complex_symbols, int frames, int height, int width) {
  return 2.0 * static_cast<double>(complex_symbols) /
         (static_cast<double>(frames) * height * width * 3.0);
}

std::vector<size_t> interleaver(size_t length, uint64_t seed) {
  std::vector<size_t> perm(length);
  for (size_t i = 0; i < length; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (size_t i = length; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
  return perm;
}

SsccResult run_sscc(const VideoGoP& gop, double snr_db, const LdpcCode& code,
                    const Constellation& constellation, int quality, uint64_t seed,
                    const SourceCodec* codec) {
  if (gop.frames.empty()) throw InputError("empty GoP");
  const DctCodec builtin;
  const SourceCodec& source = codec ? *codec : builtin;
  const int height = gop.frames.front().height(), width = gop.frames.front().width();
  const int frames = gop.gop_size();

  const Bitstream stream = source.encode(gop, quality);
  std::vector<uint8_t> bits;
  bits.reserve(stream.bit_length());
  for (uint8_t byte : stream.bytes) {
    for (int b = 7; b >= 0; --b) bits.push_back(static_cast<uint8_t>((byte >> b) & 1));
  }

  const size_t k = static_cast<size_t>(code.k()), n = static_cast<size_t>(code.n());
  const size_t blocks = (bits.size() + k - 1) / k;
  std::vector<uint8_t> coded;
  coded.reserve(blocks * n);
  std::vector<uint8_t> info(k);
  for (size_t blk = 0; blk < blocks; ++blk) {
    for (size_t i = 0; i < k; ++i) {
      const size_t at = blk * k + i;
      info[i] = at < bits.size() ? bits[at] : 0;
    }
    const auto cw = ldpc_encode(info, code);
    coded.insert(coded.end(), cw.begin(), cw.end());
  }
  const auto perm = interleaver(coded.size(), derive_seed(seed, 0x1e));
  const size_t bps = static_cast<size_t>(constellation.bits_per_symbol);
  std::vector<uint8_t> tx((coded.size() + bps - 1) / bps * bps, 0);
  for (size_t i = 0; i < coded.size(); ++i) tx[i] = coded[perm[i]];

  const SymbolBlock symbols = qam_modulate(tx, constellation);
  const ChannelRealization channel =
      sample_channel(derive_seed(seed, 0xc4), symbols.symbols.size(), snr_db);
  const auto received = apply_fading(symbols.symbols, channel);
  const auto llr_tx = qam_demodulate_llr(received, channel, constellation);

  std::vector<double> llrs(coded.size());
  for (size_t i = 0; i < coded.size(); ++i) llrs[perm[i]] = llr_tx[i];

  SsccResult out;
  out.source_bits = bits.size();
  out.complex_symbols = symbols.symbols.size();
  out.blocks = static_cast<int>(blocks);
  out.cbr = sscc_cbr(out.complex_symbols, frames, height, width);

  std::vector<uint8_t> rx_bits(blocks * k);
  const auto& info_pos = code.info_positions();
  for (size_t blk = 0; blk < blocks; ++blk) {
    const auto dec = ldpc_decode(std::span<const double>(llrs).subspan(blk * n, n), code);
    if (!dec.converged) ++out.failed_blocks;
    for (size_t i = 0; i < k; ++i) rx_bits[blk * k + i] = dec.bits[static_cast<size_t>(info_pos[i])];
  }
  std::vector<uint8_t> bytes(stream.bytes.size(), 0);
  for (size_t i = 0; i < bytes.size(); ++i) {
    uint8_t v = 0;
    for (size_t b = 0; b < 8; ++b) v = static_cast<uint8_t>((v << 1) | rx_bits[i * 8 + b]);
    bytes[i] = v;
  }

  try {
    SourceDecodeResult dec = source.decode(bytes, height, width, frames);
    out.reconstructed = std::move(dec.gop);
    out.corrupted = dec.corrupted;
  } catch (const StreamError&) {
    out.reconstructed = grey_gop(height, width, frames);
    out.corrupted = true;
  }
  return out;
}

}  // namespace wvsc
