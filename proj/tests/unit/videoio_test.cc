#include <gtest/gtest.h>

#include <filesystem>
#include <algorithm>
#include <random>

#include "wvsc/errors.h"
#include "wvsc/videoio.h"

namespace wvsc {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("wvsc-videoio-" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

VideoFrame ramp(int h, int w, int index) {
  VideoFrame f(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) f.at(y, x, c) = ((x + y + index + c * 7) % 256) / 255.0;
    }
  }
  return f;
}

void write_frames(const fs::path& dir, int count, int h, int w) {
  char name[32];
  for (int i = 0; i < count; ++i) {
    std::snprintf(name, sizeof(name), "img_%04d.png", i);
    write_png(dir / name, ramp(h, w, i));
  }
}

TEST(LoadSequence, GroupsIntoWholeGops) {
  TempDir d;
  write_frames(d.path(), 50, 8, 8);
  const auto seq = load_sequence(d.path(), 10, std::nullopt, 0);
  ASSERT_EQ(seq.count(), 5);
  for (const auto& g : seq.gops) EXPECT_EQ(g.gop_size(), 10);
  // Lexicographic order is preserved.
  EXPECT_EQ(seq.gops[1].frames[0], ramp(8, 8, 10));
}

TEST(LoadSequence, DropsTrailingPartialGop) {
  TempDir d;
  write_frames(d.path(), 23, 8, 8);
  const auto seq = load_sequence(d.path(), 10, std::nullopt, 0);
  EXPECT_EQ(seq.count(), 2);
}

TEST(LoadSequence, CropAppliesOneOffsetPerGop) {
  TempDir d;
  write_frames(d.path(), 4, 256, 256);
  const auto seq = load_sequence(d.path(), 2, CropSize{128, 128}, 7);
  ASSERT_EQ(seq.count(), 2);
  for (const auto& g : seq.gops) {
    for (const auto& f : g.frames) {
      EXPECT_EQ(f.height(), 128);
      EXPECT_EQ(f.width(), 128);
    }
    // Both frames of a GoP come from the same window: the ramp differs by
    // exactly the frame index step at every pixel.
    const auto& a = g.frames[0];
    const auto& b = g.frames[1];
    int offset = static_cast<int>(std::lround((b.at(0, 0, 0) - a.at(0, 0, 0)) * 255.0));
    if (offset < 0) offset += 256;
    EXPECT_EQ(offset, 1);
  }
}

TEST(LoadSequence, Errors) {
  TempDir d;
  write_frames(d.path(), 3, 8, 8);
  EXPECT_THROW(load_sequence(d.path(), 5, std::nullopt, 0), InputError);
  write_png(d.path() / "img_9999.png", ramp(12, 8, 0));
  EXPECT_THROW(load_sequence(d.path(), 2, std::nullopt, 0), InputError);
  EXPECT_THROW(load_sequence(d.path() / "missing", 2, std::nullopt, 0), InputError);
}

TEST(LoadSequence, ReadsPpm) {
  TempDir d;
  write_ppm(d.path() / "a.ppm", ramp(8, 12, 0));
  write_ppm(d.path() / "b.ppm", ramp(8, 12, 1));
  const auto seq = load_sequence(d.path(), 2, std::nullopt, 0);
  ASSERT_EQ(seq.count(), 1);
  EXPECT_EQ(seq.gops[0].frames[1], ramp(8, 12, 1));
}

TEST(Synthesize, FrameShapesAndDeterminism) {
  const auto a = synthesize_moving_shapes(0, 1, 5, 32, 32);
  const auto b = synthesize_moving_shapes(0, 1, 5, 32, 32);
  ASSERT_EQ(a.count(), 1);
  ASSERT_EQ(a.gop_size(), 5);
  for (size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.gops[0].frames[i], b.gops[0].frames[i]);
    EXPECT_TRUE(a.gops[0].frames[i].valid());
  }
  const auto c = synthesize_moving_shapes(1, 1, 5, 32, 32);
  EXPECT_NE(a.gops[0].frames[0], c.gops[0].frames[0]);
}

// Shapes are the only pixels with a channel above 0.5.
bool is_shape(const VideoFrame& f, int y, int x) {
  return std::max({f.at(y, x, 0), f.at(y, x, 1), f.at(y, x, 2)}) > 0.5;
}

TEST(Synthesize, ShapesTranslateWithOneVelocityPerGop) {
  const auto seq = synthesize_moving_shapes(3, 4, 5, 32, 32);
  for (const auto& g : seq.gops) {
    // Some v in [-2, 2]^2 maps every shape pixel of frame t onto frame t+1
    // wherever the source stays inside the frame.
    int matches = 0;
    for (int vy = -2; vy <= 2; ++vy) {
      for (int vx = -2; vx <= 2; ++vx) {
        if (vy == 0 && vx == 0) continue;
        bool ok = true;
        for (int t = 0; ok && t + 1 < g.gop_size(); ++t) {
          const auto& f0 = g.frames[static_cast<size_t>(t)];
          const auto& f1 = g.frames[static_cast<size_t>(t + 1)];
          for (int y = 0; ok && y < 32; ++y) {
            for (int x = 0; ok && x < 32; ++x) {
              const int sy = y - vy, sx = x - vx;
              if (sy < 0 || sy >= 32 || sx < 0 || sx >= 32) continue;
              if (is_shape(f1, y, x) != is_shape(f0, sy, sx)) ok = false;
              for (int c = 0; ok && c < 3 && is_shape(f1, y, x); ++c) {
                ok = f1.at(y, x, c) == f0.at(sy, sx, c);
              }
            }
          }
        }
        matches += ok;
      }
    }
    EXPECT_EQ(matches, 1);
  }
}

TEST(Synthesize, ZeroMotionFlagFreezesFrames) {
  SynthOptions o;
  o.zero_motion = true;
  const auto seq = synthesize_moving_shapes(5, 2, 5, 16, 16, o);
  for (const auto& g : seq.gops) {
    for (const auto& f : g.frames) EXPECT_EQ(f, g.frames.front());
  }
}

TEST(Synthesize, RejectsBadDims) {
  EXPECT_THROW(synthesize_moving_shapes(0, 1, 5, 30, 32), InputError);
  EXPECT_THROW(synthesize_moving_shapes(0, 0, 5, 32, 32), InputError);
}

TEST(Split, FiveToOneAtGopLevel) {
  const auto seq = synthesize_moving_shapes(0, 12, 2, 8, 8);
  const auto [train, test] = split_train_test(seq, 5.0 / 6.0);
  EXPECT_EQ(train.count(), 10);
  EXPECT_EQ(test.count(), 2);
  EXPECT_EQ(train.gops.front().frames.front(), seq.gops.front().frames.front());
  EXPECT_EQ(test.gops.back().frames.back(), seq.gops.back().frames.back());
}

TEST(Split, KeepsBothSidesNonEmpty) {
  const auto seq = synthesize_moving_shapes(0, 2, 2, 8, 8);
  const auto [train, test] = split_train_test(seq, 0.99);
  EXPECT_EQ(train.count(), 1);
  EXPECT_EQ(test.count(), 1);
  EXPECT_THROW(split_train_test(synthesize_moving_shapes(0, 1, 2, 8, 8), 0.5), InputError);
}

TEST(VideoFrame, ChwRoundTripAndValidity) {
  const VideoFrame f = ramp(8, 4, 3);
  EXPECT_EQ(VideoFrame::from_chw(f.to_chw()), f);
  VideoFrame bad(8, 4, 0.5);
  bad.at(0, 0, 0) = 1.5;
  EXPECT_FALSE(bad.valid());
  EXPECT_FALSE(VideoFrame(6, 4, 0.5).valid());
}

}  // namespace
}  // namespace wvsc
