#include "wvsc/metrics.h"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "wvsc/errors.h"

namespace wvsc {

namespace fs = std::filesystem;

namespace {

void require_same_frame_shape(const VideoFrame& a, const VideoFrame& b, const char* what) {
  require_same_shape(a.pixels().shape(), b.pixels().shape(), what);
}

constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWindow>& gaussian_window() {
  static const std::array<double, kWindow> w = [] {
    std::array<double, kWindow> g{};
    double s = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - kWindow / 2;
      g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      s += g[static_cast<size_t>(i)];
    }
    for (auto& v : g) v /= s;
    return g;
  }();
  return w;
}

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

// Separable "valid" Gaussian filtering.
Plane filter(const Plane& p) {
  const auto& g = gaussian_window();
  Plane rows{p.h, p.w - kWindow + 1, {}};
  rows.v.resize(static_cast<size_t>(rows.h) * rows.w);
  for (int y = 0; y < rows.h; ++y) {
    for (int x = 0; x < rows.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<size_t>(k)] * p.at(y, x + k);
      rows.v[static_cast<size_t>(y) * rows.w + x] = s;
    }
  }
  Plane out{p.h - kWindow + 1, rows.w, {}};
  out.v.resize(static_cast<size_t>(out.h) * out.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<size_t>(k)] * rows.at(y + k, x);
      out.v[static_cast<size_t>(y) * out.w + x] = s;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane o{a.h, a.w, std::vector<double>(a.v.size())};
  for (size_t i = 0; i < a.v.size(); ++i) o.v[i] = a.v[i] * b.v[i];
  return o;
}

Plane pool2(const Plane& p) {
  Plane o{p.h / 2, p.w / 2, {}};
  o.v.resize(static_cast<size_t>(o.h) * o.w);
  for (int y = 0; y < o.h; ++y) {
    for (int x = 0; x < o.w; ++x) {
      o.v[static_cast<size_t>(y) * o.w + x] =
          0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) + p.at(2 * y + 1, 2 * x) +
                  p.at(2 * y + 1, 2 * x + 1));
    }
  }
  return o;
}

// Mean luminance term and mean contrast-structure term at one scale.
std::pair<double, double> ssim_terms(const Plane& x, const Plane& y, bool with_luminance) {
  const Plane mx = filter(x), my = filter(y);
  const Plane sxx = filter(product(x, x)), syy = filter(product(y, y)), sxy = filter(product(x, y));
  double cs_sum = 0.0, ssim_sum = 0.0;
  for (size_t i = 0; i < mx.v.size(); ++i) {
    const double ux = mx.v[i], uy = my.v[i];
    const double vx = sxx.v[i] - ux * ux, vy = syy.v[i] - uy * uy, cxy = sxy.v[i] - ux * uy;
    const double cs = (2.0 * cxy + kC2) / (vx + vy + kC2);
    cs_sum += cs;
    if (with_luminance) {
      // ux^2 + uy^2 written as (ux - uy)^2 + 2 ux uy so identical inputs give
      // exactly 1 even when the compiler fuses multiply-adds.
      const double num = 2.0 * ux * uy + kC1;
      const double d = ux - uy;
      ssim_sum += num / (d * d + num) * cs;
    }
  }
  const double n = static_cast<double>(mx.v.size());
  return {ssim_sum / n, cs_sum / n};
}

}  // namespace

double psnr(const VideoFrame& a, const VideoFrame& b) {
  require_same_frame_shape(a, b, "psnr");
  const auto& x = a.pixels();
  const auto& y = b.pixels();
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  const double mse = s / static_cast<double>(x.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

bool psnr_is_capped(double value) { return value >= kPsnrCap; }

int ms_ssim_scales(int height, int width) {
  const int side = std::min(height, width);
  int scales = 0;
  while (scales < 5 && (side >> scales) >= kWindow) ++scales;
  return scales;
}

double ms_ssim(const VideoFrame& a, const VideoFrame& b) {
  require_same_frame_shape(a, b, "ms_ssim");
  const int scales = ms_ssim_scales(a.height(), a.width());
  if (scales < 1) {
    throw ShapeError("ms_ssim needs frames of at least " + std::to_string(kWindow) + "x" +
                     std::to_string(kWindow));
  }
  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += kScaleWeights[static_cast<size_t>(s)];

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    Plane x{a.height(), a.width(), {}}, y{a.height(), a.width(), {}};
    for (int r = 0; r < a.height(); ++r) {
      for (int q = 0; q < a.width(); ++q) {
        x.v.push_back(a.at(r, q, c));
        y.v.push_back(b.at(r, q, c));
      }
    }
    double value = 1.0;
    for (int s = 0; s < scales; ++s) {
      const bool last = s == scales - 1;
      const auto [ssim, cs] = ssim_terms(x, y, last);
      const double term = std::max(0.0, last ? ssim : cs);
      value *= std::pow(term, kScaleWeights[static_cast<size_t>(s)] / weight_sum);
      if (!last) {
        x = pool2(x);
        y = pool2(y);
      }
    }
    total += value;
  }
  return total / 3.0;
}

std::vector<MetricRow> evaluate_gop(const VideoGoP& original, const VideoGoP& reconstructed,
                                    double axis, int gop_index, const LpipsAdapter* lpips) {
  if (original.gop_size() != reconstructed.gop_size()) {
    throw ShapeError("evaluate_gop needs GoPs of equal length");
  }
  std::vector<MetricRow> rows;
  MetricRow agg;
  agg.axis = axis;
  agg.gop_index = gop_index;
  double lp_sum = 0.0;
  for (int i = 0; i < original.gop_size(); ++i) {
    const auto& o = original.frames[static_cast<size_t>(i)];
    const auto& r = reconstructed.frames[static_cast<size_t>(i)];
    MetricRow row;
    row.axis = axis;
    row.gop_index = gop_index;
    row.frame_index = i + 1;
    row.psnr = psnr(o, r);
    row.psnr_capped = psnr_is_capped(row.psnr);
    row.ms_ssim = ms_ssim(o, r);
    if (lpips) {
      row.lpips = lpips->distance(o, r);
      lp_sum += *row.lpips;
    }
    agg.psnr += row.psnr;
    agg.ms_ssim += row.ms_ssim;
    agg.psnr_capped = agg.psnr_capped || row.psnr_capped;
    rows.push_back(row);
  }
  const double n = original.gop_size();
  agg.psnr /= n;
  agg.ms_ssim /= n;
  if (lpips) agg.lpips = lp_sum / n;
  rows.push_back(agg);
  return rows;
}

double mean_aggregate_psnr(const std::vector<MetricRow>& rows) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.frame_index == -1) {
      s += r.psnr;
      ++n;
    }
  }
  if (n == 0) throw InputError("no aggregate rows to average");
  return s / n;
}

std::string report_csv(const MetricsReport& report) {
  std::string out = std::string(kReportHeader) + "\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::string frame = r.frame_index < 0 ? "all" : std::to_string(r.frame_index);
    std::string lp;
    if (r.lpips) {
      std::snprintf(buf, sizeof(buf), "%.6f", *r.lpips);
      lp = buf;
    }
    std::snprintf(buf, sizeof(buf), "%.6g,%d,%s,%.6f,%.6f,%s\n", r.axis, r.gop_index,
                  frame.c_str(), r.psnr, r.ms_ssim, lp.c_str());
    out += buf;
  }
  return out;
}

void write_report(const MetricsReport& report, const fs::path& path) {
  using nlohmann::json;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report " + path.string());
    out << report_csv(report);
    if (!out) throw IoError("short write to report " + path.string());
  }
  json manifest;
  try {
    manifest = json::parse(report.manifest_json);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest extras are not JSON: ") + e.what());
  }
  manifest["axis"] = report.axis_name;
  manifest["csv"] = path.filename().string();
  manifest["psnr_cap_db"] = kPsnrCap;
  json capped = json::array();
  for (size_t i = 0; i < report.rows.size(); ++i) {
    if (report.rows[i].psnr_capped) capped.push_back(i);
  }
  manifest["psnr_capped_rows"] = capped;
  if (!report.config_json.empty()) {
    manifest["config"] = json::parse(report.config_json);
    manifest["config_hash"] = git_blob_hash(report.config_json);
  }
  fs::path sidecar = path;
  sidecar += ".manifest.json";
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + sidecar.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("short write to manifest " + sidecar.string());
}

std::string git_blob_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace wvsc
