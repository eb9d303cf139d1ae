#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wvsc/channel.h"
#include "wvsc/mfc.h"
#include "wvsc/model.h"
#include "wvsc/videoio.h"

namespace wvsc {

struct Rational {
  int num = 1;
  int den = 1;

  Rational reduced() const;
  std::string str() const { return std::to_string(num) + ":" + std::to_string(den); }
};

// Parses "4:1" or "4/1".
Rational parse_ratio(const std::string& text);

// Symbol budgets for one GoP. L and L1 count real channel uses; the
// granularity g is h'*w', so L = latent_channels * g and L1 =
// residual_channels * g.
struct RatePlan {
  double target_cbr = 0.0;
  Rational ratio;
  int granularity = 0;
  int gop_length = 0;
  int height = 0;
  int width = 0;
  int latent_channels = 0;    // c_I
  int residual_channels = 0;  // c_P
  long L = 0;
  long L1 = 0;
  double achieved_cbr = 0.0;

  // Real channel uses for a GoP of `frames` frames.
  long real_symbols(int frames) const { return L + static_cast<long>(frames - 1) * L1; }
};

// (L + (N-1) L1) / (N H W 3).
double compute_cbr(long L, long L1, int N, int height, int width);

// Largest (L, L1) with L/L1 = ratio, both multiples of the granularity, both
// even, and achieved CBR <= target. Throws InfeasibleError (carrying the
// smallest achievable CBR) when even one granularity step is too much.
RatePlan plan_rates(double target_cbr, Rational ratio, int height, int width, int N,
                    int granularity);

// Granularity of a model's latent grid for frames of the given size.
int latent_granularity(int height, int width);

// Throws ConfigError if the plan needs more channels than the model has.
void check_plan_fits(const RatePlan& plan, const WvscModel& model);

enum class ReceiverMode {
  kFull,                 // multi-frame compensation as trained
  kNoCompensation,       // gamma forced to 0 at evaluation
  kReferenceRepetition,  // only f_ref is sent; every frame decodes from it
};

// Called before each P frame's compensation with the history it will see.
using HistoryProbe = std::function<void(int frame_index, const FrameHistory& history)>;

struct TransmitOptions {
  ReceiverMode mode = ReceiverMode::kFull;
  HistoryProbe history_probe;
  // Realization length in complex symbols; 0 sizes it to the GoP's needs.
  size_t max_symbols = 0;
};

// Intermediates for one frame. P-frame-only fields are undefined for frame 1.
struct FrameTrace {
  LatentFrame encoded;              // f^i
  LatentFrame received;             // f_hat^i
  LatentFrame tx_prediction;        // f_bar^i
  LatentFrame residual;             // r^i
  LatentFrame residual_received;    // r_hat^i
  LatentFrame compensated;          // f_tilde^i
  LatentFrame rx_prediction;        // f_check^i
  int history_size = 0;
};

struct GopTransmissionResult {
  VideoGoP reconstructed;
  std::vector<FrameTrace> latents;
  ChannelRealization realization;
  RatePlan plan;
  long real_symbols_used = 0;
};

// Differentiable core of transmit_gop: returns the unclamped decoder outputs
// (3,H,W) per frame alongside the same bookkeeping.
struct GopForward {
  std::vector<ad::Var> decoded;
  std::vector<FrameTrace> traces;
  ChannelRealization realization;
  long real_symbols_used = 0;
};

GopForward forward_gop(const VideoGoP& gop, const WvscModel& model, const RatePlan& plan,
                       double snr_db, uint64_t seed, const TransmitOptions& options = {});

GopTransmissionResult transmit_gop(const VideoGoP& gop, const WvscModel& model,
                                   const RatePlan& plan, double snr_db, uint64_t seed,
                                   const TransmitOptions& options = {});

}  // namespace wvsc
