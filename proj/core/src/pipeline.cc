#include "wvsc/pipeline.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "wvsc/errors.h"
#include "wvsc/semcodec.h"

namespace wvsc {

Rational Rational::reduced() const {
  if (num <= 0 || den <= 0) throw ConfigError("rate ratio must be positive, got " + str());
  const int g = std::gcd(num, den);
  return Rational{num / g, den / g};
}

Rational parse_ratio(const std::string& text) {
  const auto sep = text.find_first_of(":/");
  if (sep == std::string::npos) throw ConfigError("ratio must look like 4:1, got '" + text + "'");
  try {
    size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, sep), b = text.substr(sep + 1);
    Rational r{std::stoi(a, &used_a), std::stoi(b, &used_b)};
    if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument(text);
    return r.reduced();
  } catch (const std::logic_error&) {
    throw ConfigError("ratio must look like 4:1, got '" + text + "'");
  }
}

double compute_cbr(long L, long L1, int N, int height, int width) {
  const double denom = static_cast<double>(N) * height * width * 3.0;
  return (static_cast<double>(L) + static_cast<double>(N - 1) * static_cast<double>(L1)) / denom;
}

int latent_granularity(int height, int width) {
  return (height / kDownsampleFactor) * (width / kDownsampleFactor);
}

RatePlan plan_rates(double target_cbr, Rational ratio, int height, int width, int N,
                    int granularity) {
  if (!(target_cbr > 0.0)) throw ConfigError("target CBR must be positive");
  if (N < 1 || height < 1 || width < 1 || granularity < 1) {
    throw ConfigError("plan_rates needs positive N, dims and granularity");
  }
  const Rational r = ratio.reduced();
  const double budget = target_cbr * static_cast<double>(N) * height * width * 3.0;
  // Real uses for multiplier t: t * (num + (N-1) den) * g.
  const double per_t = static_cast<double>(r.num + static_cast<long>(N - 1) * r.den) * granularity;
  const auto even = [&](long t) {
    return (r.num * t * granularity) % 2 == 0 && (r.den * t * granularity) % 2 == 0;
  };
  long t = static_cast<long>(std::floor(budget / per_t * (1.0 + 1e-12)));
  while (t >= 1 && !even(t)) --t;
  if (t < 1) {
    long t_min = 1;
    while (!even(t_min)) ++t_min;
    const double min_cbr = compute_cbr(r.num * t_min * granularity, r.den * t_min * granularity,
                                       N, height, width);
    std::ostringstream os;
    os << "no rate plan fits target CBR " << target_cbr << " at ratio " << r.str()
       << "; minimum achievable CBR is " << min_cbr;
    throw InfeasibleError(os.str(), min_cbr);
  }
  RatePlan p;
  p.target_cbr = target_cbr;
  p.ratio = r;
  p.granularity = granularity;
  p.gop_length = N;
  p.height = height;
  p.width = width;
  p.latent_channels = static_cast<int>(r.num * t);
  p.residual_channels = static_cast<int>(r.den * t);
  p.L = static_cast<long>(p.latent_channels) * granularity;
  p.L1 = static_cast<long>(p.residual_channels) * granularity;
  p.achieved_cbr = compute_cbr(p.L, p.L1, N, height, width);
  return p;
}

void check_plan_fits(const RatePlan& plan, const WvscModel& model) {
  const auto& cfg = model.config();
  if (plan.latent_channels > cfg.latent_channels() ||
      plan.residual_channels > cfg.residual_channels) {
    throw ConfigError("rate plan needs " + std::to_string(plan.latent_channels) + "/" +
                      std::to_string(plan.residual_channels) +
                      " latent/residual channels but the model has " +
                      std::to_string(cfg.latent_channels()) + "/" +
                      std::to_string(cfg.residual_channels));
  }
}

namespace {

ad::Var send(const ad::Var& latent, int channels, int full_channels,
             const ChannelRealization& realization, ChannelSlot slot) {
  ad::Var kept = channels < latent.dim(0) ? ad::slice(latent, 0, 0, channels) : latent;
  const std::vector<int> shape = kept.shape();
  ad::Var flat = ad::reshape(kept, {static_cast<int>(kept.size())});
  ad::Var rx = ad::reshape(transmit(flat, realization, slot), shape);
  return ad::pad_to(rx, 0, full_channels);
}

}  // namespace

GopForward forward_gop(const VideoGoP& gop, const WvscModel& model, const RatePlan& plan,
                       double snr_db, uint64_t seed, const TransmitOptions& options) {
  if (gop.frames.empty()) throw InputError("empty GoP");
  const int frames = gop.gop_size();
  const int height = gop.frames.front().height(), width = gop.frames.front().width();
  if (height != plan.height || width != plan.width) {
    throw ShapeError("GoP frames are " + std::to_string(height) + "x" + std::to_string(width) +
                     " but the rate plan is for " + std::to_string(plan.height) + "x" +
                     std::to_string(plan.width));
  }
  if (latent_granularity(height, width) != plan.granularity) {
    throw ConfigError("rate plan granularity does not match the latent grid");
  }
  check_plan_fits(plan, model);

  const bool repetition = options.mode == ReceiverMode::kReferenceRepetition;
  const size_t i_symbols = static_cast<size_t>(plan.L / 2);
  const size_t p_symbols = static_cast<size_t>(plan.L1 / 2);
  const size_t needed = i_symbols + (repetition ? 0 : static_cast<size_t>(frames - 1) * p_symbols);
  const size_t budget = options.max_symbols ? options.max_symbols : needed;
  if (i_symbols > budget || needed > budget) {
    throw CapacityError("GoP needs " + std::to_string(needed) +
                        " complex symbols but the realization holds " + std::to_string(budget));
  }

  GopForward out;
  out.realization = sample_channel(seed, budget, snr_db);
  const ChannelRealization& channel = out.realization;
  const ChannelDescriptor csi{channel.mean_fading_power(i_symbols), channel.noise_variance};
  const int c = model.config().latent_channels();

  // I frame.
  ad::Var f_ref = model.codec().encode(ad::constant(gop.frames[0].to_chw()));
  ad::Var f_ref_hat = send(f_ref, plan.latent_channels, c, channel, ChannelSlot{0, 0});
  out.decoded.push_back(model.codec().decode(f_ref_hat));
  FrameTrace first;
  first.encoded = LatentFrame(f_ref);
  first.received = LatentFrame(f_ref_hat);
  out.traces.push_back(std::move(first));
  out.real_symbols_used = 2 * static_cast<long>(i_symbols);

  FrameHistory history(model.config().history_window);
  for (int i = 1; i < frames; ++i) {
    FrameTrace trace;
    trace.encoded = LatentFrame(model.codec().encode(ad::constant(gop.frames[i].to_chw())));
    if (repetition) {
      trace.received = LatentFrame(f_ref_hat);
      out.decoded.push_back(model.codec().decode(f_ref_hat));
      out.traces.push_back(std::move(trace));
      continue;
    }

    // Transmitter: predict from the clean reference, send the compressed residual.
    ad::Var f_bar = model.tx_motion().predict(trace.encoded.var(), f_ref);
    ad::Var residual = ad::sub(trace.encoded.var(), f_bar);
    ad::Var compressed = model.residual().encode(residual);
    const ChannelSlot slot{0, i_symbols + static_cast<size_t>(i - 1) * p_symbols};
    ad::Var compressed_hat = send(compressed, plan.residual_channels,
                                  model.config().residual_channels, channel, slot);
    out.real_symbols_used += 2 * static_cast<long>(p_symbols);

    // Receiver: polish the reference with the history, predict, add residual.
    if (options.history_probe) options.history_probe(i + 1, history);
    trace.history_size = history.size();
    ad::Var compensated = f_ref_hat;
    if (options.mode == ReceiverMode::kFull) {
      std::vector<ad::Var> past;
      for (const auto& h : history.frames()) past.push_back(h.var());
      compensated = model.mfa().compensate(f_ref_hat, past, csi);
    }
    ad::Var f_check = model.rx_motion().predict(compensated, f_ref_hat);
    ad::Var residual_hat = model.residual().decode(compressed_hat);
    ad::Var f_hat = ad::add(f_check, residual_hat);
    out.decoded.push_back(model.codec().decode(f_hat));

    trace.tx_prediction = LatentFrame(f_bar);
    trace.residual = LatentFrame(residual);
    trace.residual_received = LatentFrame(residual_hat);
    trace.compensated = LatentFrame(compensated);
    trace.rx_prediction = LatentFrame(f_check);
    trace.received = LatentFrame(f_hat);
    history.push(trace.received);
    out.traces.push_back(std::move(trace));
  }
  return out;
}

GopTransmissionResult transmit_gop(const VideoGoP& gop, const WvscModel& model,
                                   const RatePlan& plan, double snr_db, uint64_t seed,
                                   const TransmitOptions& options) {
  ad::NoGradGuard no_grad;
  GopForward fwd = forward_gop(gop, model, plan, snr_db, seed, options);
  GopTransmissionResult result;
  for (const auto& d : fwd.decoded) {
    result.reconstructed.frames.push_back(VideoFrame::from_chw(d.value(), true));
  }
  result.latents = std::move(fwd.traces);
  result.realization = std::move(fwd.realization);
  result.plan = plan;
  result.real_symbols_used = fwd.real_symbols_used;
  return result;
}

}  // namespace wvsc
