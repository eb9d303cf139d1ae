#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wvsc/videoio.h"

namespace wvsc {

// Serialized source bitstream. frame_offsets[i] is the byte offset of frame
// i's segment; the header carries the same table so a receiver never needs
// this struct, only `bytes`.
struct Bitstream {
  std::vector<uint8_t> bytes;
  std::vector<size_t> frame_offsets;

  size_t bit_length() const { return bytes.size() * 8; }
};

struct SourceDecodeResult {
  VideoGoP gop;
  bool corrupted = false;
  int first_corrupt_frame = -1;  // 0-based; -1 when intact
};

// Source codec interface shared by the builtin DCT codec and the external
// command adapter.
class SourceCodec {
 public:
  virtual ~SourceCodec() = default;
  virtual std::string name() const = 0;
  virtual Bitstream encode(const VideoGoP& gop, int quality) const = 0;
  // Throws StreamError when the header is truncated or unusable.
  virtual SourceDecodeResult decode(std::span<const uint8_t> stream, int height, int width,
                                    int frames) const = 0;
};

// ---- builtin codec ----------------------------------------------------------------
// Frames are rounded to 8-bit levels. Each RGB plane is cut into 8x8 blocks
// (edge-replicated); frame 1 codes level-shifted pixels, later frames code the
// difference to the previous reconstruction (closed loop). DC uses step 8 so
// 8-bit constant blocks are exact; AC uses 4 * 1.5^(10 - quality).
// Entropy coding: DPCM DC size classes, JPEG-style (run, size) AC symbols in
// zigzag order, fixed canonical Huffman tables. Every frame segment carries a
// CRC32; the first bad segment freezes the rest of the GoP on the last good
// frame (mid-grey if frame 1 is bad).

inline constexpr double kDcStep = 8.0;
double ac_step(int quality);

using Block = std::array<double, 64>;

// Orthonormal 2-D DCT-II and its inverse on a row-major 8x8 block.
Block dct8x8(const Block& pixels);
Block idct8x8(const Block& coeffs);

std::array<int, 64> quantize_block(const Block& coeffs, int quality);
Block dequantize_block(const std::array<int, 64>& levels, int quality);

const std::array<int, 64>& zigzag_order();

class DctCodec : public SourceCodec {
 public:
  std::string name() const override { return "builtin-dct"; }
  Bitstream encode(const VideoGoP& gop, int quality) const override;
  SourceDecodeResult decode(std::span<const uint8_t> stream, int height, int width,
                            int frames) const override;
};

Bitstream source_encode(const VideoGoP& gop, int quality);
SourceDecodeResult source_decode(std::span<const uint8_t> stream, int height, int width,
                                 int frames);

// ---- external codec adapter ----------------------------------------------------------
// Runs system commands over raw frames. Placeholders: {input_dir},
// {output_file}, {quality}, {width}, {height}, {frames} for encoding and
// {input_file}, {output_dir}, {width}, {height}, {frames} for decoding. Frames
// are exchanged as binary PPM files named frame_000000.ppm and up. The
// external payload is wrapped in a CRC-protected single segment.
class ExternalCodecAdapter : public SourceCodec {
 public:
  ExternalCodecAdapter(std::string encode_command, std::string decode_command);

  std::string name() const override { return "external"; }
  Bitstream encode(const VideoGoP& gop, int quality) const override;
  SourceDecodeResult decode(std::span<const uint8_t> stream, int height, int width,
                            int frames) const override;

  // Exact command lines executed so far, for the run manifest.
  const std::vector<std::string>& command_log() const { return command_log_; }

 private:
  std::string encode_command_;
  std::string decode_command_;
  mutable std::vector<std::string> command_log_;
};

// GoP of mid-grey (128/255) frames.
VideoGoP grey_gop(int height, int width, int frames);

}  // namespace wvsc
