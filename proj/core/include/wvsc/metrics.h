#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wvsc/videoio.h"

namespace wvsc {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(1 / MSE) on [0,1] pixels, capped at kPsnrCap (identical inputs).
double psnr(const VideoFrame& a, const VideoFrame& b);
bool psnr_is_capped(double value);

// Multi-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// 2x2 average-pool between scales. Uses the largest scale count S <= 5 with
// min(H, W) / 2^(S-1) >= 11 and renormalizes the first S weights. Computed
// per RGB channel and averaged; negative contrast-structure terms clamp to 0.
double ms_ssim(const VideoFrame& a, const VideoFrame& b);
int ms_ssim_scales(int height, int width);

// Perceptual distance plug-in (no network ships with the library).
class LpipsAdapter {
 public:
  virtual ~LpipsAdapter() = default;
  virtual double distance(const VideoFrame& a, const VideoFrame& b) const = 0;
};

struct MetricRow {
  double axis = 0.0;
  int gop_index = 0;
  int frame_index = -1;  // 1-based; -1 marks the GoP aggregate row
  double psnr = 0.0;
  bool psnr_capped = false;
  double ms_ssim = 0.0;
  std::optional<double> lpips;
};

struct MetricsReport {
  std::string axis_name;  // snr_db, cbr or gop_size
  std::vector<MetricRow> rows;
  // Fully resolved configuration (JSON text) echoed into the manifest.
  std::string config_json;
  // Extra manifest entries (JSON object text), e.g. seeds and plan.
  std::string manifest_json = "{}";
};

// Per-frame rows followed by one aggregate row holding per-frame means.
std::vector<MetricRow> evaluate_gop(const VideoGoP& original, const VideoGoP& reconstructed,
                                    double axis, int gop_index,
                                    const LpipsAdapter* lpips = nullptr);

// Mean PSNR over the aggregate rows.
double mean_aggregate_psnr(const std::vector<MetricRow>& rows);

inline constexpr char kReportHeader[] = "axis,gop_index,frame_index,psnr,ms_ssim,lpips";

std::string report_csv(const MetricsReport& report);
// Writes the CSV and a sidecar <path>.manifest.json.
void write_report(const MetricsReport& report, const std::filesystem::path& path);

// Git blob id ("blob <len>\0" + text, SHA-1, hex).
std::string git_blob_hash(const std::string& text);

}  // namespace wvsc
