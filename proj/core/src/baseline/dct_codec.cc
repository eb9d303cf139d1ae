#include "wvsc/baseline/dct_codec.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

#include "wvsc/errors.h"

namespace wvsc {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'W', 'D', 'C', 'T'};
constexpr char kExternalMagic[4] = {'W', 'E', 'X', 'T'};
constexpr uint8_t kVersion = 1;
constexpr int kMaxSize = 11;  // largest magnitude class any 8-bit residual reaches

// ---- bit I/O ----------------------------------------------------------------------

class BitWriter {
 public:
  void put(uint32_t value, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      acc_ = static_cast<uint8_t>((acc_ << 1) | ((value >> b) & 1U));
      if (++fill_ == 8) {
        bytes_.push_back(acc_);
        acc_ = 0;
        fill_ = 0;
      }
    }
  }
  std::vector<uint8_t> finish() {
    if (fill_ > 0) put(0, 8 - fill_);
    return std::move(bytes_);
  }

 private:
  std::vector<uint8_t> bytes_;
  uint8_t acc_ = 0;
  int fill_ = 0;
};

struct CorruptSegment {};

class BitReader {
 public:
  explicit BitReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}
  uint32_t bit() {
    if (pos_ >= bytes_.size() * 8) throw CorruptSegment{};
    const uint32_t b = (bytes_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1U;
    ++pos_;
    return b;
  }
  uint32_t get(int bits) {
    uint32_t v = 0;
    for (int i = 0; i < bits; ++i) v = (v << 1) | bit();
    return v;
  }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

// ---- canonical Huffman from a fixed frequency model ---------------------------------

struct Huffman {
  std::vector<uint32_t> code;
  std::vector<int> length;
  // Canonical decoding tables.
  std::vector<int> count_at;        // codes of each length
  std::vector<int> symbols_sorted;  // by (length, symbol)

  explicit Huffman(const std::vector<double>& freq) {
    const size_t n = freq.size();
    length.assign(n, 0);
    struct Item {
      double w;
      int id;
      bool operator>(const Item& o) const { return w != o.w ? w > o.w : id > o.id; }
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    std::vector<int> parent(2 * n, -1);
    for (size_t i = 0; i < n; ++i) pq.push({freq[i], static_cast<int>(i)});
    int next = static_cast<int>(n);
    while (pq.size() > 1) {
      const Item a = pq.top();
      pq.pop();
      const Item b = pq.top();
      pq.pop();
      parent[static_cast<size_t>(a.id)] = next;
      parent[static_cast<size_t>(b.id)] = next;
      pq.push({a.w + b.w, next++});
    }
    int max_len = 0;
    for (size_t i = 0; i < n; ++i) {
      int d = 0;
      for (int p = parent[i]; p != -1; p = parent[static_cast<size_t>(p)]) ++d;
      length[i] = d;
      max_len = std::max(max_len, d);
    }
    count_at.assign(static_cast<size_t>(max_len) + 1, 0);
    for (int l : length) ++count_at[static_cast<size_t>(l)];
    symbols_sorted.resize(n);
    for (size_t i = 0; i < n; ++i) symbols_sorted[i] = static_cast<int>(i);
    std::stable_sort(symbols_sorted.begin(), symbols_sorted.end(),
                     [&](int a, int b) { return length[static_cast<size_t>(a)] < length[static_cast<size_t>(b)]; });
    code.assign(n, 0);
    uint32_t c = 0;
    int prev = length[static_cast<size_t>(symbols_sorted[0])];
    for (size_t i = 0; i < n; ++i) {
      const int s = symbols_sorted[i];
      const int l = length[static_cast<size_t>(s)];
      c <<= (l - prev);
      prev = l;
      code[static_cast<size_t>(s)] = c++;
    }
  }

  void write(BitWriter& w, int symbol) const {
    w.put(code[static_cast<size_t>(symbol)], length[static_cast<size_t>(symbol)]);
  }

  int read(BitReader& r) const {
    uint32_t c = 0;
    uint32_t first = 0;
    int index = 0;
    for (size_t l = 1; l < count_at.size(); ++l) {
      c = (c << 1) | r.bit();
      first <<= 1;
      const int cnt = count_at[l];
      if (c < first + static_cast<uint32_t>(cnt)) return symbols_sorted[static_cast<size_t>(index) + (c - first)];
      index += cnt;
      first += static_cast<uint32_t>(cnt);
    }
    throw CorruptSegment{};
  }
};

// DC symbol = magnitude class 0..kMaxSize.
const Huffman& dc_table() {
  static const Huffman table = [] {
    std::vector<double> f;
    for (int s = 0; s <= kMaxSize; ++s) f.push_back(std::pow(0.55, s) + 1e-4);
    return Huffman(f);
  }();
  return table;
}

// AC symbol = run * kMaxSize + (size - 1) for size >= 1, then EOB and ZRL.
constexpr int kAcSymbols = 16 * kMaxSize + 2;
constexpr int kEob = 16 * kMaxSize;
constexpr int kZrl = 16 * kMaxSize + 1;

const Huffman& ac_table() {
  static const Huffman table = [] {
    std::vector<double> f(kAcSymbols);
    for (int run = 0; run < 16; ++run) {
      for (int size = 1; size <= kMaxSize; ++size) {
        f[static_cast<size_t>(run * kMaxSize + size - 1)] =
            std::pow(0.45, size) * std::pow(0.7, run) + 1e-5;
      }
    }
    f[kEob] = 0.6;
    f[kZrl] = 0.002;
    return Huffman(f);
  }();
  return table;
}

int magnitude_class(int v) {
  int a = std::abs(v), s = 0;
  while (a) {
    ++s;
    a >>= 1;
  }
  return s;
}

void put_value(BitWriter& w, int v, int size) {
  if (size == 0) return;
  const uint32_t bits = v >= 0 ? static_cast<uint32_t>(v)
                               : static_cast<uint32_t>(v + (1 << size) - 1);
  w.put(bits, size);
}

int get_value(BitReader& r, int size) {
  if (size == 0) return 0;
  const int raw = static_cast<int>(r.get(size));
  return raw >= (1 << (size - 1)) ? raw : raw - (1 << size) + 1;
}

void put_u16(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v));
}
void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<uint8_t>(v >> s));
}
uint32_t get_u16(std::span<const uint8_t> b, size_t at) {
  return (static_cast<uint32_t>(b[at]) << 8) | b[at + 1];
}
uint32_t get_u32(std::span<const uint8_t> b, size_t at) {
  return (static_cast<uint32_t>(b[at]) << 24) | (static_cast<uint32_t>(b[at + 1]) << 16) |
         (static_cast<uint32_t>(b[at + 2]) << 8) | b[at + 3];
}
uint32_t crc(std::span<const uint8_t> b) {
  return static_cast<uint32_t>(crc32(0L, b.data(), static_cast<uInt>(b.size())));
}

// 8-bit planes, channel-major.
using Planes = std::vector<std::vector<int>>;

Planes to_levels(const VideoFrame& f) {
  Planes p(3, std::vector<int>(static_cast<size_t>(f.height()) * f.width()));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        const double v = std::clamp(f.at(y, x, c), 0.0, 1.0);
        p[static_cast<size_t>(c)][static_cast<size_t>(y) * f.width() + x] =
            static_cast<int>(std::lround(v * 255.0));
      }
    }
  }
  return p;
}

VideoFrame from_levels(const Planes& p, int height, int width) {
  VideoFrame f(height, width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        f.at(y, x, c) = p[static_cast<size_t>(c)][static_cast<size_t>(y) * width + x] / 255.0;
      }
    }
  }
  return f;
}

// Codes one frame. `recon` holds the previous reconstruction (ignored for the
// I frame) and is replaced with this frame's reconstruction.
std::vector<uint8_t> encode_frame_levels(const Planes& cur, Planes& recon, bool intra, int height,
                                         int width, int quality) {
  BitWriter w;
  Planes next(3, std::vector<int>(static_cast<size_t>(height) * width));
  const auto& zz = zigzag_order();
  for (int c = 0; c < 3; ++c) {
    const auto& src = cur[static_cast<size_t>(c)];
    const auto& ref = recon[static_cast<size_t>(c)];
    auto& out = next[static_cast<size_t>(c)];
    int prev_dc = 0;
    for (int by = 0; by < height; by += 8) {
      for (int bx = 0; bx < width; bx += 8) {
        Block b{};
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            const int yy = std::min(by + y, height - 1), xx = std::min(bx + x, width - 1);
            const size_t i = static_cast<size_t>(yy) * width + xx;
            b[static_cast<size_t>(y * 8 + x)] = intra ? src[i] - 128.0 : src[i] - ref[i];
          }
        }
        const auto q = quantize_block(dct8x8(b), quality);
        const int diff = q[0] - prev_dc;
        prev_dc = q[0];
        const int dsz = magnitude_class(diff);
        dc_table().write(w, dsz);
        put_value(w, diff, dsz);
        int run = 0;
        for (int k = 1; k < 64; ++k) {
          const int v = q[static_cast<size_t>(zz[static_cast<size_t>(k)])];
          if (v == 0) {
            ++run;
            continue;
          }
          while (run > 15) {
            ac_table().write(w, kZrl);
            run -= 16;
          }
          const int sz = magnitude_class(v);
          ac_table().write(w, run * kMaxSize + sz - 1);
          put_value(w, v, sz);
          run = 0;
        }
        if (run > 0) ac_table().write(w, kEob);

        const Block rec = idct8x8(dequantize_block(q, quality));
        for (int y = 0; y < 8 && by + y < height; ++y) {
          for (int x = 0; x < 8 && bx + x < width; ++x) {
            const size_t i = static_cast<size_t>(by + y) * width + bx + x;
            const double base = intra ? 128.0 : ref[i];
            out[i] = static_cast<int>(
                std::clamp(std::lround(base + rec[static_cast<size_t>(y * 8 + x)]), 0L, 255L));
          }
        }
      }
    }
  }
  recon = std::move(next);
  return w.finish();
}

Planes decode_frame_levels(std::span<const uint8_t> payload, const Planes& recon, bool intra,
                           int height, int width, int quality) {
  BitReader r(payload);
  Planes next(3, std::vector<int>(static_cast<size_t>(height) * width));
  const auto& zz = zigzag_order();
  for (int c = 0; c < 3; ++c) {
    const auto& ref = recon[static_cast<size_t>(c)];
    auto& out = next[static_cast<size_t>(c)];
    int prev_dc = 0;
    for (int by = 0; by < height; by += 8) {
      for (int bx = 0; bx < width; bx += 8) {
        std::array<int, 64> q{};
        const int dsz = dc_table().read(r);
        prev_dc += get_value(r, dsz);
        q[0] = prev_dc;
        int k = 1;
        while (k < 64) {
          const int sym = ac_table().read(r);
          if (sym == kEob) break;
          if (sym == kZrl) {
            k += 16;
            if (k >= 64) throw CorruptSegment{};
            continue;
          }
          const int run = sym / kMaxSize, sz = sym % kMaxSize + 1;
          k += run;
          if (k >= 64) throw CorruptSegment{};
          q[static_cast<size_t>(zz[static_cast<size_t>(k)])] = get_value(r, sz);
          ++k;
        }
        const Block rec = idct8x8(dequantize_block(q, quality));
        for (int y = 0; y < 8 && by + y < height; ++y) {
          for (int x = 0; x < 8 && bx + x < width; ++x) {
            const size_t i = static_cast<size_t>(by + y) * width + bx + x;
            const double base = intra ? 128.0 : ref[i];
            out[i] = static_cast<int>(
                std::clamp(std::lround(base + rec[static_cast<size_t>(y * 8 + x)]), 0L, 255L));
          }
        }
      }
    }
  }
  return next;
}

// basis[u * 8 + x] = a(u) cos((2x + 1) u pi / 16).
const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> m{};
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        m[static_cast<size_t>(u * 8 + x)] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
    return m;
  }();
  return basis;
}

void check_quality(int quality) {
  if (quality < 1 || quality > 10) {
    throw ConfigError("source quality must be in [1, 10], got " + std::to_string(quality));
  }
}

}  // namespace

double ac_step(int quality) {
  check_quality(quality);
  return 4.0 * std::pow(1.5, 10 - quality);
}

Block dct8x8(const Block& p) {
  const auto& basis = dct_basis();
  Block tmp{}, out{};
  for (int y = 0; y < 8; ++y) {
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += basis[static_cast<size_t>(u * 8 + x)] * p[static_cast<size_t>(y * 8 + x)];
      tmp[static_cast<size_t>(y * 8 + u)] = s;
    }
  }
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += basis[static_cast<size_t>(v * 8 + y)] * tmp[static_cast<size_t>(y * 8 + u)];
      out[static_cast<size_t>(v * 8 + u)] = s;
    }
  }
  return out;
}

Block idct8x8(const Block& c) {
  const auto& basis = dct_basis();
  Block tmp{}, out{};
  for (int v = 0; v < 8; ++v) {
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += basis[static_cast<size_t>(u * 8 + x)] * c[static_cast<size_t>(v * 8 + u)];
      tmp[static_cast<size_t>(v * 8 + x)] = s;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += basis[static_cast<size_t>(v * 8 + y)] * tmp[static_cast<size_t>(v * 8 + x)];
      out[static_cast<size_t>(y * 8 + x)] = s;
    }
  }
  return out;
}

std::array<int, 64> quantize_block(const Block& coeffs, int quality) {
  const double step = ac_step(quality);
  std::array<int, 64> q{};
  q[0] = static_cast<int>(std::lround(coeffs[0] / kDcStep));
  for (size_t k = 1; k < 64; ++k) q[k] = static_cast<int>(std::lround(coeffs[k] / step));
  return q;
}

Block dequantize_block(const std::array<int, 64>& levels, int quality) {
  const double step = ac_step(quality);
  Block b{};
  b[0] = levels[0] * kDcStep;
  for (size_t k = 1; k < 64; ++k) b[k] = levels[k] * step;
  return b;
}

const std::array<int, 64>& zigzag_order() {
  static const std::array<int, 64> order = [] {
    std::array<int, 64> o{};
    int i = 0;
    for (int s = 0; s < 15; ++s) {
      for (int t = 0; t <= s; ++t) {
        const int y = s % 2 == 0 ? s - t : t;
        const int x = s - y;
        if (y < 8 && x < 8) o[static_cast<size_t>(i++)] = y * 8 + x;
      }
    }
    return o;
  }();
  return order;
}

// Header: magic, version, quality, width, height, frames (u16 each), one u32
// payload length per frame, u32 CRC of everything before it. Each frame
// segment is its payload followed by the payload's u32 CRC.
Bitstream DctCodec::encode(const VideoGoP& gop, int quality) const {
  check_quality(quality);
  if (gop.frames.empty()) throw InputError("cannot source-encode an empty GoP");
  const int height = gop.frames.front().height(), width = gop.frames.front().width();
  if (height > 65535 || width > 65535 || gop.frames.size() > 65535) {
    throw InputError("GoP too large for the builtin codec header");
  }
  std::vector<std::vector<uint8_t>> payloads;
  Planes recon;
  for (size_t i = 0; i < gop.frames.size(); ++i) {
    const auto& f = gop.frames[i];
    if (f.height() != height || f.width() != width) throw ShapeError("GoP frames differ in size");
    payloads.push_back(encode_frame_levels(to_levels(f), recon, i == 0, height, width, quality));
  }
  Bitstream bs;
  auto& b = bs.bytes;
  b.insert(b.end(), kMagic, kMagic + 4);
  b.push_back(kVersion);
  b.push_back(static_cast<uint8_t>(quality));
  put_u16(b, static_cast<uint32_t>(width));
  put_u16(b, static_cast<uint32_t>(height));
  put_u16(b, static_cast<uint32_t>(payloads.size()));
  for (const auto& p : payloads) put_u32(b, static_cast<uint32_t>(p.size()));
  put_u32(b, crc(b));
  for (const auto& p : payloads) {
    bs.frame_offsets.push_back(b.size());
    b.insert(b.end(), p.begin(), p.end());
    put_u32(b, crc(p));
  }
  return bs;
}

SourceDecodeResult DctCodec::decode(std::span<const uint8_t> s, int height, int width,
                                    int frames) const {
  constexpr size_t kFixed = 4 + 1 + 1 + 6;
  if (s.size() < kFixed) throw StreamError("bitstream header truncated");
  if (!std::equal(kMagic, kMagic + 4, s.begin())) throw StreamError("bad bitstream magic");
  if (s[4] != kVersion) throw StreamError("unsupported bitstream version");
  const int quality = s[5];
  const int w = static_cast<int>(get_u16(s, 6)), h = static_cast<int>(get_u16(s, 8));
  const int n = static_cast<int>(get_u16(s, 10));
  const size_t header_len = kFixed + 4 * static_cast<size_t>(n) + 4;
  if (s.size() < header_len) throw StreamError("bitstream header truncated");
  if (get_u32(s, header_len - 4) != crc(s.subspan(0, header_len - 4))) {
    throw StreamError("bitstream header checksum mismatch");
  }
  if (quality < 1 || quality > 10) throw StreamError("bitstream quality out of range");
  if (h != height || w != width || n != frames) {
    throw StreamError("bitstream describes " + std::to_string(n) + " frames of " +
                      std::to_string(h) + "x" + std::to_string(w) + ", expected " +
                      std::to_string(frames) + " of " + std::to_string(height) + "x" +
                      std::to_string(width));
  }

  SourceDecodeResult out;
  Planes recon;
  size_t at = header_len;
  for (int i = 0; i < n; ++i) {
    const size_t len = get_u32(s, kFixed + 4 * static_cast<size_t>(i));
    bool ok = at + len + 4 <= s.size();
    if (ok) {
      const auto payload = s.subspan(at, len);
      ok = get_u32(s, at + len) == crc(payload);
      if (ok) {
        try {
          recon = decode_frame_levels(payload, recon, i == 0, h, w, quality);
        } catch (const CorruptSegment&) {
          ok = false;
        }
      }
    }
    if (!ok) {
      out.corrupted = true;
      out.first_corrupt_frame = i;
      const VideoFrame frozen = i == 0 ? VideoFrame(h, w, 128.0 / 255.0) : out.gop.frames.back();
      while (out.gop.gop_size() < n) out.gop.frames.push_back(frozen);
      return out;
    }
    out.gop.frames.push_back(from_levels(recon, h, w));
    at += len + 4;
  }
  return out;
}

Bitstream source_encode(const VideoGoP& gop, int quality) { return DctCodec().encode(gop, quality); }

SourceDecodeResult source_decode(std::span<const uint8_t> stream, int height, int width,
                                 int frames) {
  return DctCodec().decode(stream, height, width, frames);
}

VideoGoP grey_gop(int height, int width, int frames) {
  VideoGoP g;
  g.frames.assign(static_cast<size_t>(frames), VideoFrame(height, width, 128.0 / 255.0));
  return g;
}

// ---- external adapter ------------------------------------------------------------------

namespace {

std::string substitute(std::string cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) {
    const std::string key = "{" + k + "}";
    for (size_t p = cmd.find(key); p != std::string::npos; p = cmd.find(key, p + v.size())) {
      cmd.replace(p, key.size(), v);
    }
  }
  return cmd;
}

fs::path make_temp_dir() {
  std::random_device rd;
  for (int attempt = 0; attempt < 16; ++attempt) {
    const fs::path p = fs::temp_directory_path() / ("wvsc-ext-" + std::to_string(rd()));
    std::error_code ec;
    if (fs::create_directory(p, ec)) return p;
  }
  throw IoError("cannot create a temporary directory under " + fs::temp_directory_path().string());
}

struct TempDir {
  fs::path path = make_temp_dir();
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void run(const std::string& cmd, std::vector<std::string>& log) {
  log.push_back(cmd);
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw IoError("external codec command failed (" + std::to_string(rc) + "): " + cmd);
}

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.ppm", i);
  return buf;
}

}  // namespace

ExternalCodecAdapter::ExternalCodecAdapter(std::string encode_command, std::string decode_command)
    : encode_command_(std::move(encode_command)), decode_command_(std::move(decode_command)) {
  if (encode_command_.empty() || decode_command_.empty()) {
    throw ConfigError("external codec needs both encode and decode commands");
  }
}

Bitstream ExternalCodecAdapter::encode(const VideoGoP& gop, int quality) const {
  check_quality(quality);
  if (gop.frames.empty()) throw InputError("cannot source-encode an empty GoP");
  TempDir tmp;
  const fs::path in_dir = tmp.path / "in";
  fs::create_directory(in_dir);
  for (int i = 0; i < gop.gop_size(); ++i) write_ppm(in_dir / frame_name(i), gop.frames[static_cast<size_t>(i)]);
  const fs::path out_file = tmp.path / "stream.bin";
  const auto& f = gop.frames.front();
  run(substitute(encode_command_, {{"input_dir", in_dir.string()},
                                   {"output_file", out_file.string()},
                                   {"quality", std::to_string(quality)},
                                   {"width", std::to_string(f.width())},
                                   {"height", std::to_string(f.height())},
                                   {"frames", std::to_string(gop.gop_size())}}),
      command_log_);
  std::ifstream in(out_file, std::ios::binary);
  if (!in) throw IoError("external encoder produced no output at " + out_file.string());
  const std::vector<uint8_t> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  Bitstream bs;
  bs.bytes.insert(bs.bytes.end(), kExternalMagic, kExternalMagic + 4);
  put_u32(bs.bytes, static_cast<uint32_t>(payload.size()));
  put_u32(bs.bytes, crc(bs.bytes));
  bs.frame_offsets.push_back(bs.bytes.size());
  bs.bytes.insert(bs.bytes.end(), payload.begin(), payload.end());
  put_u32(bs.bytes, crc(payload));
  return bs;
}

SourceDecodeResult ExternalCodecAdapter::decode(std::span<const uint8_t> s, int height, int width,
                                                int frames) const {
  if (s.size() < 12) throw StreamError("external bitstream header truncated");
  if (!std::equal(kExternalMagic, kExternalMagic + 4, s.begin())) {
    throw StreamError("bad external bitstream magic");
  }
  if (get_u32(s, 8) != crc(s.subspan(0, 8))) throw StreamError("external header checksum mismatch");
  const size_t len = get_u32(s, 4);
  SourceDecodeResult out;
  if (12 + len + 4 > s.size() || get_u32(s, 12 + len) != crc(s.subspan(12, len))) {
    out.corrupted = true;
    out.first_corrupt_frame = 0;
    out.gop = grey_gop(height, width, frames);
    return out;
  }
  TempDir tmp;
  const fs::path in_file = tmp.path / "stream.bin";
  {
    std::ofstream o(in_file, std::ios::binary);
    o.write(reinterpret_cast<const char*>(s.data() + 12), static_cast<std::streamsize>(len));
  }
  const fs::path out_dir = tmp.path / "out";
  fs::create_directory(out_dir);
  run(substitute(decode_command_, {{"input_file", in_file.string()},
                                   {"output_dir", out_dir.string()},
                                   {"width", std::to_string(width)},
                                   {"height", std::to_string(height)},
                                   {"frames", std::to_string(frames)}}),
      command_log_);
  for (int i = 0; i < frames; ++i) {
    const fs::path p = out_dir / frame_name(i);
    if (!fs::exists(p)) {
      out.corrupted = true;
      out.first_corrupt_frame = i;
      const VideoFrame frozen = i == 0 ? VideoFrame(height, width, 128.0 / 255.0) : out.gop.frames.back();
      while (out.gop.gop_size() < frames) out.gop.frames.push_back(frozen);
      return out;
    }
    out.gop.frames.push_back(read_image(p));
  }
  return out;
}

}  // namespace wvsc
