#include "wvsc/videoio.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "wvsc/errors.h"

namespace fs = std::filesystem;

namespace wvsc {

VideoFrame::VideoFrame(int height, int width, double fill) : pixels_({height, width, 3}, fill) {}

VideoFrame::VideoFrame(Tensor pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rank() != 3 || pixels_.dim(2) != 3) {
    throw ShapeError("VideoFrame expects (H,W,3), got " + shape_string(pixels_.shape()));
  }
}

VideoFrame VideoFrame::from_chw(const Tensor& chw, bool clamp_to_unit) {
  if (chw.rank() != 3 || chw.dim(0) != 3) {
    throw ShapeError("expected (3,H,W), got " + shape_string(chw.shape()));
  }
  VideoFrame f(chw.dim(1), chw.dim(2));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        double v = chw.at(c, y, x);
        f.at(y, x, c) = clamp_to_unit ? std::clamp(v, 0.0, 1.0) : v;
      }
    }
  }
  return f;
}

Tensor VideoFrame::to_chw() const {
  Tensor t({3, height(), width()});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height(); ++y) {
      for (int x = 0; x < width(); ++x) t.at(c, y, x) = at(y, x, c);
    }
  }
  return t;
}

bool VideoFrame::valid() const {
  if (pixels_.rank() != 3 || height() <= 0 || width() <= 0) return false;
  if (height() % kDownsampleFactor || width() % kDownsampleFactor) return false;
  return std::all_of(pixels_.values().begin(), pixels_.values().end(),
                     [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

void validate_sequence(const VideoSequence& seq) {
  if (seq.gops.empty()) throw InputError("video sequence has no GoPs");
  const int gop = seq.gop_size();
  const auto& ref = seq.gops.front().frames.front();
  for (size_t n = 0; n < seq.gops.size(); ++n) {
    if (seq.gops[n].gop_size() != gop) {
      throw InputError("GoP " + std::to_string(n) + " has " +
                       std::to_string(seq.gops[n].gop_size()) + " frames, expected " +
                       std::to_string(gop));
    }
    for (const auto& f : seq.gops[n].frames) {
      if (f.height() != ref.height() || f.width() != ref.width()) {
        throw InputError("frame dimensions differ within sequence");
      }
      if (!f.valid()) throw InputError("frame in GoP " + std::to_string(n) + " is invalid");
    }
  }
}

// ---- image files --------------------------------------------------------------

namespace {

VideoFrame read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw InputError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    throw InputError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  VideoFrame f(static_cast<int>(image.height), static_cast<int>(image.width));
  for (size_t i = 0; i < buf.size(); ++i) f.pixels()[i] = buf[i] / 255.0;
  return f;
}

VideoFrame read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic;
  auto skip_comments = [&in] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  skip_comments();
  in >> w;
  skip_comments();
  in >> h;
  skip_comments();
  in >> maxval;
  in.get();
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw InputError("unsupported PPM (need binary P6, maxval 255): " + path.string());
  }
  std::vector<unsigned char> buf(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw InputError("truncated PPM " + path.string());
  VideoFrame f(h, w);
  for (size_t i = 0; i < buf.size(); ++i) f.pixels()[i] = buf[i] / 255.0;
  return f;
}

std::vector<unsigned char> to_bytes(const VideoFrame& frame) {
  std::vector<unsigned char> buf(frame.pixels().size());
  for (size_t i = 0; i < buf.size(); ++i) {
    buf[i] = static_cast<unsigned char>(std::lround(std::clamp(frame.pixels()[i], 0.0, 1.0) * 255));
  }
  return buf;
}

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".ppm";
}

}  // namespace

VideoFrame read_image(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw InputError("unsupported image type: " + path.string());
}

void write_png(const fs::path& path, const VideoFrame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGB;
  auto buf = to_bytes(frame);
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

void write_ppm(const fs::path& path, const VideoFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  auto buf = to_bytes(frame);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void write_sequence(const VideoSequence& seq, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  int index = 0;
  for (const auto& gop : seq.gops) {
    for (const auto& f : gop.frames) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%06d.png", index++);
      write_png(dir / name, f);
    }
  }
}

// ---- sequence construction ---------------------------------------------------------

VideoSequence load_sequence(const fs::path& dir, int gop_size, std::optional<CropSize> crop,
                            uint64_t seed) {
  if (gop_size < 1) throw InputError("gop_size must be >= 1");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < static_cast<size_t>(gop_size)) {
    throw InputError(dir.string() + " holds " + std::to_string(files.size()) +
                     " frames, fewer than gop_size " + std::to_string(gop_size));
  }
  const size_t n_gops = files.size() / static_cast<size_t>(gop_size);

  std::mt19937_64 rng(seed);
  VideoSequence seq;
  int height = -1, width = -1;
  for (size_t n = 0; n < n_gops; ++n) {
    VideoGoP gop;
    int oy = 0, ox = 0;
    for (int i = 0; i < gop_size; ++i) {
      const auto& path = files[n * static_cast<size_t>(gop_size) + static_cast<size_t>(i)];
      VideoFrame f = read_image(path);
      if (height < 0) {
        height = f.height();
        width = f.width();
        if (crop && (crop->height > height || crop->width > width || crop->height <= 0 ||
                     crop->width <= 0)) {
          throw InputError("crop larger than frames in " + dir.string());
        }
      } else if (f.height() != height || f.width() != width) {
        throw InputError("image " + path.string() + " has size " + std::to_string(f.height()) +
                         "x" + std::to_string(f.width()) + ", expected " +
                         std::to_string(height) + "x" + std::to_string(width));
      }
      if (crop) {
        if (i == 0) {
          oy = std::uniform_int_distribution<int>(0, height - crop->height)(rng);
          ox = std::uniform_int_distribution<int>(0, width - crop->width)(rng);
        }
        VideoFrame c(crop->height, crop->width);
        for (int y = 0; y < crop->height; ++y) {
          for (int x = 0; x < crop->width; ++x) {
            for (int ch = 0; ch < 3; ++ch) c.at(y, x, ch) = f.at(y + oy, x + ox, ch);
          }
        }
        f = std::move(c);
      }
      gop.frames.push_back(std::move(f));
    }
    seq.gops.push_back(std::move(gop));
  }
  return seq;
}

VideoSequence synthesize_moving_shapes(uint64_t seed, int n_gops, int gop_size, int height,
                                       int width, SynthOptions options) {
  if (n_gops < 1 || gop_size < 1) throw InputError("n_gops and gop_size must be >= 1");
  if (height <= 0 || width <= 0 || height % kDownsampleFactor || width % kDownsampleFactor) {
    throw InputError("synthetic dims must be positive multiples of " +
                     std::to_string(kDownsampleFactor));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VideoSequence seq;
  for (int n = 0; n < n_gops; ++n) {
    // Fixed background: a gentle two-colour gradient.
    double bg0[3], bg1[3];
    for (int c = 0; c < 3; ++c) {
      bg0[c] = 0.1 + 0.4 * unit(rng);
      bg1[c] = 0.1 + 0.4 * unit(rng);
    }
    struct Rect {
      int y, x, h, w;
      double color[3];
    };
    const int count = std::uniform_int_distribution<int>(1, 3)(rng);
    const int min_side = std::max(2, std::min(height, width) / 5);
    const int max_side = std::max(min_side, std::min(height, width) * 2 / 5);
    std::vector<Rect> rects(static_cast<size_t>(count));
    for (auto& r : rects) {
      r.h = std::uniform_int_distribution<int>(min_side, max_side)(rng);
      r.w = std::uniform_int_distribution<int>(min_side, max_side)(rng);
      r.y = std::uniform_int_distribution<int>(0, height - r.h)(rng);
      r.x = std::uniform_int_distribution<int>(0, width - r.w)(rng);
      for (double& c : r.color) c = 0.55 + 0.45 * unit(rng);
      // One channel darkened so shapes differ in hue, not just brightness.
      r.color[std::uniform_int_distribution<int>(0, 2)(rng)] *= 0.3;
    }
    int vy = 0, vx = 0;
    while (!options.zero_motion && vy == 0 && vx == 0) {
      vy = std::uniform_int_distribution<int>(-2, 2)(rng);
      vx = std::uniform_int_distribution<int>(-2, 2)(rng);
    }

    VideoGoP gop;
    for (int t = 0; t < gop_size; ++t) {
      VideoFrame f(height, width);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double a = (static_cast<double>(x) + y) / (height + width);
          for (int c = 0; c < 3; ++c) f.at(y, x, c) = (1 - a) * bg0[c] + a * bg1[c];
        }
      }
      for (const auto& r : rects) {
        const int y0 = r.y + t * vy, x0 = r.x + t * vx;
        for (int y = std::max(0, y0); y < std::min(height, y0 + r.h); ++y) {
          for (int x = std::max(0, x0); x < std::min(width, x0 + r.w); ++x) {
            for (int c = 0; c < 3; ++c) f.at(y, x, c) = r.color[c];
          }
        }
      }
      gop.frames.push_back(std::move(f));
    }
    seq.gops.push_back(std::move(gop));
  }
  return seq;
}

std::pair<VideoSequence, VideoSequence> split_train_test(const VideoSequence& seq, double ratio) {
  if (seq.count() < 2) throw InputError("need at least 2 GoPs to split, got " +
                                        std::to_string(seq.count()));
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("train fraction must lie in (0,1)");
  const int n = seq.count();
  int n_train = static_cast<int>(std::lround(ratio * n));
  n_train = std::clamp(n_train, 1, n - 1);
  VideoSequence train, test;
  train.gops.assign(seq.gops.begin(), seq.gops.begin() + n_train);
  test.gops.assign(seq.gops.begin() + n_train, seq.gops.end());
  return {std::move(train), std::move(test)};
}

}  // namespace wvsc
