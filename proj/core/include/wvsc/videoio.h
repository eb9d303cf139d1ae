#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "wvsc/tensor.h"

namespace wvsc {

// Spatial reduction of the semantic codec; frame sides must be multiples.
constexpr int kDownsampleFactor = 4;

// One RGB picture, height x width x 3, values in [0,1].
class VideoFrame {
 public:
  VideoFrame() = default;
  VideoFrame(int height, int width, double fill = 0.0);
  // Takes an (H, W, 3) tensor.
  explicit VideoFrame(Tensor pixels);

  // Converts from/to the channel-first layout used by the networks.
  static VideoFrame from_chw(const Tensor& chw, bool clamp_to_unit = true);
  Tensor to_chw() const;

  int height() const { return pixels_.dim(0); }
  int width() const { return pixels_.dim(1); }
  double& at(int y, int x, int c) {
    return pixels_[(static_cast<size_t>(y) * width() + x) * 3 + c];
  }
  double at(int y, int x, int c) const {
    return pixels_[(static_cast<size_t>(y) * width() + x) * 3 + c];
  }
  const Tensor& pixels() const { return pixels_; }
  Tensor& pixels() { return pixels_; }

  // Finite, inside [0,1], positive multiple-of-kDownsampleFactor sides.
  bool valid() const;

  bool operator==(const VideoFrame&) const = default;

 private:
  Tensor pixels_;
};

struct VideoGoP {
  std::vector<VideoFrame> frames;
  int gop_size() const { return static_cast<int>(frames.size()); }
};

struct VideoSequence {
  std::vector<VideoGoP> gops;
  int count() const { return static_cast<int>(gops.size()); }
  int gop_size() const { return gops.empty() ? 0 : gops.front().gop_size(); }
};

// Throws InputError unless every GoP has `gop_size` frames of identical,
// valid dimensions.
void validate_sequence(const VideoSequence& seq);

struct CropSize {
  int height = 0;
  int width = 0;
};

// Reads a lexicographically ordered directory of PNG or binary PPM images.
// Consecutive frames form GoPs; a trailing partial GoP is dropped. With a
// crop, one offset per GoP is drawn from `seed` and applied to all its frames.
VideoSequence load_sequence(const std::filesystem::path& dir, int gop_size,
                            std::optional<CropSize> crop, uint64_t seed);

struct SynthOptions {
  bool zero_motion = false;
};

// Deterministic moving-rectangles clips: each GoP draws 1-3 constant colour
// rectangles over a fixed gradient background, all translating with one
// integer velocity for the whole GoP.
VideoSequence synthesize_moving_shapes(uint64_t seed, int n_gops, int gop_size, int height,
                                       int width, SynthOptions options = {});

// GoP-level split; the first round(ratio*N) GoPs train, the rest test.
std::pair<VideoSequence, VideoSequence> split_train_test(const VideoSequence& seq, double ratio);

VideoFrame read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const VideoFrame& frame);
void write_ppm(const std::filesystem::path& path, const VideoFrame& frame);

// Writes every frame as frame_000000.png, ... in GoP order.
void write_sequence(const VideoSequence& seq, const std::filesystem::path& dir);

}  // namespace wvsc
