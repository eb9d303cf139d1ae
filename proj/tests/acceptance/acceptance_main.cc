// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Criteria 6-9 and 11 share one 2000-step training run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.h"
#include "wvsc/baseline/ldpc.h"
#include "wvsc/baseline/qam.h"
#include "wvsc/baseline/sscc.h"
#include "wvsc/checkpoint.h"
#include "wvsc/metrics.h"
#include "wvsc/training.h"

#ifdef WVSC_HAVE_CLI
#include "cli.h"
#endif

namespace fs = std::filesystem;
using namespace wvsc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// Desk setup shared by the trained-model criteria.
constexpr uint64_t kDataSeed = 11;
constexpr int kGops = 24;
constexpr int kGopSize = 5;
constexpr int kSide = 32;
constexpr uint64_t kModelSeed = 3;
constexpr uint64_t kChannelSeed = 0;

ModelConfig desk_model() {
  ModelConfig m;
  m.seed = kModelSeed;
  return m;
}

TrainConfig desk_train() {
  TrainConfig t;
  t.steps = 2000;
  t.gop_size = kGopSize;
  t.target_cbr = 0.1;
  t.checkpoint_every = 500;
  return t;
}

struct Desk {
  VideoSequence train, test;
  RatePlan plan;
  fs::path dir;
  Checkpoint untrained, trained;
  std::vector<double> losses;
  bool ready = false;
};

Desk& desk() {
  static Desk d;
  return d;
}

double mean_psnr(const VideoSequence& test, const WvscModel& model, const RatePlan& plan,
                 double snr, ReceiverMode mode) {
  std::vector<MetricRow> rows;
  TransmitOptions opt;
  opt.mode = mode;
  for (int g = 0; g < test.count(); ++g) {
    const auto& gop = test.gops[static_cast<size_t>(g)];
    const auto r = transmit_gop(gop, model, plan, snr,
                                derive_seed(kChannelSeed, static_cast<uint64_t>(g)), opt);
    const auto m = evaluate_gop(gop, r.reconstructed, snr, g);
    rows.insert(rows.end(), m.begin(), m.end());
  }
  return mean_aggregate_psnr(rows);
}

// ---- criteria ---------------------------------------------------------------------------

Outcome noiseless_identity() {
  const WvscModel model(desk_model());
  double worst = 0.0;
  for (int frames : {2, 5, 10}) {
    const auto seq = synthesize_moving_shapes(1, 1, frames, kSide, kSide);
    const RatePlan plan = plan_rates(0.1, {1, 1}, kSide, kSide, frames,
                                     latent_granularity(kSide, kSide));
    if (plan.latent_channels != 4 || plan.residual_channels != 4) {
      return {false, "desk plan does not carry every latent channel"};
    }
    const auto res = transmit_gop(seq.gops[0], model, plan, INFINITY, 1);
    for (const auto& t : res.latents) {
      double diff = 0.0, mag = 0.0;
      for (size_t i = 0; i < t.encoded.length(); ++i) {
        diff = std::max(diff, std::fabs(t.received.tensor()[i] - t.encoded.tensor()[i]));
        mag = std::max(mag, std::fabs(t.encoded.tensor()[i]));
      }
      worst = std::max(worst, diff / mag);
    }
  }
  return {worst <= 1e-6, "max relative latent error " + fmt("%.2e", worst) + " over GoP 2, 5, 10"};
}

Outcome mmse_statistics() {
  const Complex h(0.8, -0.3);
  const size_t count = 100000;
  std::string detail;
  bool ok = true;
  for (double sigma2 : {0.1, 1.0}) {
    std::mt19937_64 rng(static_cast<uint64_t>(sigma2 * 1000));
    std::normal_distribution<double> half(0.0, std::sqrt(0.5));
    std::vector<Complex> x(count), n(count);
    for (auto& v : x) v = Complex(half(rng), half(rng));
    for (auto& v : n) v = std::sqrt(sigma2) * Complex(half(rng), half(rng));
    const auto r = make_realization(std::vector<Complex>(count, h), n, sigma2);
    const auto g = mmse_gains(r, count);
    double err = 0.0;
    for (size_t i = 0; i < count; ++i) {
      err += std::norm(g.gain_signal[i] * x[i] + g.gain_noise[i] * n[i] - x[i]);
    }
    // Same statistic through the public real-valued link.
    std::vector<double> payload(2 * count);
    for (size_t i = 0; i < count; ++i) {
      payload[2 * i] = x[i].real();
      payload[2 * i + 1] = x[i].imag();
    }
    const SymbolBlock sent = pair_and_normalize(payload);
    const auto out = transmit_vector(payload, r, 0);
    double link_err = 0.0;
    for (size_t i = 0; i < count; ++i) {
      const Complex got(out[2 * i] / sent.scale, out[2 * i + 1] / sent.scale);
      link_err += std::norm(got - sent.symbols[i]);
    }
    const double expected = sigma2 / (std::norm(h) + sigma2);
    const double ratio = err / count / expected, link_ratio = link_err / count / expected;
    ok = ok && std::fabs(ratio - 1.0) <= 0.02 && std::fabs(link_ratio - 1.0) <= 0.02;
    detail += "sigma2=" + fmt("%g", sigma2) + " MSE/theory " + fmt("%.4f", ratio) + " (link " +
              fmt("%.4f", link_ratio) + ") ";
  }
  detail.pop_back();
  return {ok, detail};
}

Outcome gradient_checks() {
  using testing::grad_check;
  using testing::random_tensor;
  const ModelConfig cfg = desk_model();
  WvscModel model(cfg);
  // Move the zero-initialised layers off zero so every branch carries gradient.
  for (const auto& [name, p] : model.parameters()) {
    if (name.find("mc.out") != std::string::npos) {
      ad::Var leaf = p;
      const Tensor noise = random_tensor(leaf.shape(), 5, 0.05);
      for (size_t i = 0; i < leaf.size(); ++i) leaf.mutable_value()[i] += noise[i];
    }
  }
  model.mfa().set_gamma(0.5);

  const auto leaf_of = [&](const std::string& name) {
    for (const auto& [n, p] : model.parameters()) {
      if (n == name) return p;
    }
    throw std::runtime_error("no parameter " + name);
  };
  const auto first_with = [&](const std::string& prefix, bool last) {
    ad::Var found;
    for (const auto& [n, p] : model.parameters()) {
      if (n.rfind(prefix, 0) == 0 && p.size() > 1) {
        found = p;
        if (!last) break;
      }
    }
    return found;
  };

  std::string detail;
  double worst = 0.0;
  int checked = 0;
  const auto run = [&](const std::string& what, const std::function<ad::Var()>& f,
                       std::vector<ad::Var> leaves, uint64_t seed) {
    const auto r = grad_check(f, std::move(leaves), 10, seed);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    detail += what + " " + fmt("%.1e", r.max_rel_error) + ", ";
  };

  ad::Var frame(random_tensor({3, 16, 16}, 1, 0.3), true);
  run("semcodec", [&] { return model.codec().decode(model.codec().encode(frame)); },
      {frame, first_with("codec.", false), first_with("codec.", true)}, 11);

  ad::Var cur(random_tensor({4, 4, 4}, 2), true), ref(random_tensor({4, 4, 4}, 3), true);
  run("motion", [&] { return model.tx_motion().predict(cur, ref); },
      {cur, ref, first_with("tx.", false), first_with("tx.", true)}, 12);

  ad::Var res(random_tensor({4, 4, 4}, 4), true);
  run("residual", [&] { return model.residual().decode(model.residual().encode(res)); },
      {res, first_with("residual.", false), first_with("residual.", true)}, 13);

  ad::Var h0(random_tensor({4, 4, 4}, 6), true), h1(random_tensor({4, 4, 4}, 7), true);
  run("mfc", [&] { return model.mfa().compensate(ref, {h0, h1}, {0.9, 0.2}); },
      {ref, h0, h1, leaf_of("mfa.gamma"), first_with("mfa.", false), first_with("mfa.", true)},
      14);

  detail += std::to_string(checked) + " coordinates";
  return {worst < 1e-4, detail};
}

Outcome mfa_identities() {
  MfaModule mfa("mfa", MfaConfig{}, 9);
  const ad::Var ref = ad::constant(testing::random_tensor({4, 8, 8}, 1));
  std::vector<ad::Var> hist;
  for (int i = 0; i < 3; ++i) hist.push_back(ad::constant(testing::random_tensor({4, 8, 8}, 2 + i)));
  mfa.set_gamma(0.0);
  const bool pass_through = mfa.compensate(ref, hist, {1.0, 0.1}).value().storage() ==
                            ref.value().storage();

  double worst_row = 0.0;
  const ad::Var q = ad::constant(testing::random_tensor({64, 16}, 7, 4.0));
  const ad::Var k = ad::constant(testing::random_tensor({192, 16}, 8, 4.0));
  Tensor eye({192, 192});
  for (int i = 0; i < 192; ++i) eye[static_cast<size_t>(i) * 192 + i] = 1.0;
  const Tensor map = cross_attend(q, k, ad::constant(eye)).value();
  for (int r = 0; r < 64; ++r) {
    double s = 0.0;
    for (int c = 0; c < 192; ++c) s += map[static_cast<size_t>(r) * 192 + c];
    worst_row = std::max(worst_row, std::fabs(s - 1.0));
  }

  mfa.set_gamma(0.9);
  const Tensor empty = mfa.compensate(ref, {}, {1.0, 0.1}).value();
  bool finite = empty.shape() == ref.shape();
  for (double v : empty.storage()) finite = finite && std::isfinite(v);

  return {pass_through && worst_row <= 1e-6 && finite,
          std::string("gamma=0 exact ") + (pass_through ? "yes" : "no") + ", max |row sum - 1| " +
              fmt("%.1e", worst_row) + ", empty history finite " + (finite ? "yes" : "no")};
}

Outcome rate_planning() {
  const RatePlan a = plan_rates(0.04, {1, 1}, 128, 128, 10, 256);
  const RatePlan b = plan_rates(0.04, {4, 1}, 128, 128, 10, 256);
  const double c1 = compute_cbr(2048, 2048, 10, 128, 128);
  const double c2 = compute_cbr(4096, 1024, 10, 128, 128);
  const double c3 = compute_cbr(4096, 1024, 1, 128, 128);
  const bool ok = a.L == 1792 && a.L1 == 1792 && b.L == 5120 && b.L1 == 1280 &&
                  std::fabs(a.achieved_cbr - 17920.0 / 491520.0) <= 1e-9 &&
                  std::fabs(b.achieved_cbr - 16640.0 / 491520.0) <= 1e-9 &&
                  std::fabs(c1 - 20480.0 / 491520.0) <= 1e-9 &&
                  std::fabs(c2 - 13312.0 / 491520.0) <= 1e-9 &&
                  std::fabs(c3 - 4096.0 / 49152.0) <= 1e-9;
  return {ok, "1:1 L=L1=" + std::to_string(a.L) + " cbr " + fmt("%.7f", a.achieved_cbr) +
                  "; 4:1 L=" + std::to_string(b.L) + " L1=" + std::to_string(b.L1) + " cbr " +
                  fmt("%.7f", b.achieved_cbr)};
}

void prepare_desk() {
  Desk& d = desk();
  if (d.ready) return;
  const auto seq = synthesize_moving_shapes(kDataSeed, kGops, kGopSize, kSide, kSide);
  std::tie(d.train, d.test) = split_train_test(seq, 5.0 / 6.0);
  d.dir = fs::temp_directory_path() / "wvsc-acceptance";
  fs::remove_all(d.dir);
  const TrainConfig tc = desk_train();
  WvscModel untrained(desk_model());
  d.plan = training_plan(d.train, untrained, tc);
  d.untrained = make_checkpoint(untrained, Adam(), tc, 0, {});
  TrainRunOptions opt;
  opt.output_dir = d.dir / "train";
  opt.on_step = [&](long step, const StepResult& r) {
    d.losses.push_back(r.loss);
    if ((step + 1) % 500 == 0) {
      std::printf("  training step %ld loss %.5f\n", step + 1, r.loss);
      std::fflush(stdout);
    }
  };
  d.trained = train_run(d.train, desk_model(), tc, opt);
  d.ready = true;
}

Outcome training_smoke() {
  prepare_desk();
  const Desk& d = desk();
  if (d.losses.size() != 2000) return {false, "training stopped early"};
  const auto window = [&](size_t start) {
    double s = 0.0;
    for (size_t i = start; i < start + 100; ++i) s += d.losses[i];
    return s / 100.0;
  };
  const double first = window(0), last = window(d.losses.size() - 100);
  const double before = mean_psnr(d.test, model_from_checkpoint(d.untrained), d.plan, 10.0,
                                  ReceiverMode::kFull);
  const double after = mean_psnr(d.test, model_from_checkpoint(d.trained), d.plan, 10.0,
                                 ReceiverMode::kFull);
  return {last < first && after - before >= 6.0,
          "loss window " + fmt("%.4f", first) + " -> " + fmt("%.4f", last) + ", test PSNR @10 dB " +
              fmt("%.2f", before) + " -> " + fmt("%.2f", after) + " dB (" + std::to_string(d.train.count()) +
              " train GoPs, achieved CBR " + fmt("%.4f", d.plan.achieved_cbr) + ")"};
}

Outcome repetition_benefit() {
  prepare_desk();
  const Desk& d = desk();
  const WvscModel m = model_from_checkpoint(d.trained);
  const double full = mean_psnr(d.test, m, d.plan, 10.0, ReceiverMode::kFull);
  const double rep = mean_psnr(d.test, m, d.plan, 10.0, ReceiverMode::kReferenceRepetition);
  return {full - rep >= 1.0, "full " + fmt("%.2f", full) + " dB vs repetition " +
                                 fmt("%.2f", rep) + " dB (+" + fmt("%.2f", full - rep) + ")"};
}

std::vector<double> sweep_snrs() { return {0, 2, 4, 6, 8, 10, 12, 14}; }

std::vector<double> wvsc_sweep;  // full-mode PSNR over sweep_snrs(), reused by criterion 9

Outcome mfc_ablation() {
  prepare_desk();
  const Desk& d = desk();
  const WvscModel m = model_from_checkpoint(d.trained);
  std::vector<double> snrs = sweep_snrs();
  snrs.insert(snrs.begin() + 3, 5.0);
  bool never_better = true, low_worse = true;
  double min_gap_low = 1e9, min_gap = 1e9;
  wvsc_sweep.clear();
  for (double snr : snrs) {
    const double full = mean_psnr(d.test, m, d.plan, snr, ReceiverMode::kFull);
    const double off = mean_psnr(d.test, m, d.plan, snr, ReceiverMode::kNoCompensation);
    if (snr != 5.0) wvsc_sweep.push_back(full);
    min_gap = std::min(min_gap, full - off);
    never_better = never_better && off <= full;
    if (snr <= 5.0) {
      low_worse = low_worse && off < full;
      min_gap_low = std::min(min_gap_low, full - off);
    }
  }
  return {never_better && low_worse,
          "min(full - no-compensation) " + fmt("%.4f", min_gap) + " dB over 0..14 dB, " +
              fmt("%.4f", min_gap_low) + " dB at SNR <= 5, gamma " +
              fmt("%.4f", m.mfa().gamma().value()[0])};
}

Outcome cliff_effect() {
  prepare_desk();
  const Desk& d = desk();
  if (wvsc_sweep.size() != sweep_snrs().size()) mfc_ablation();
  const LdpcCode code = make_regular_code(4096, 3, 6, 1);
  const Constellation qam = make_constellation(16);
  const int quality = 5;
  std::vector<double> sscc;
  double cbr = 0.0;
  for (double snr : sweep_snrs()) {
    std::vector<MetricRow> rows;
    for (int g = 0; g < d.test.count(); ++g) {
      const auto& gop = d.test.gops[static_cast<size_t>(g)];
      const auto r = run_sscc(gop, snr, code, qam, quality, derive_seed(0, static_cast<uint64_t>(g)));
      cbr = r.cbr;
      const auto m = evaluate_gop(gop, r.reconstructed, snr, g);
      rows.insert(rows.end(), m.begin(), m.end());
    }
    sscc.push_back(mean_aggregate_psnr(rows));
  }
  // Freeze floor: the clean source-decoded first frame held for the whole GoP.
  std::vector<MetricRow> frozen;
  for (int g = 0; g < d.test.count(); ++g) {
    const auto& gop = d.test.gops[static_cast<size_t>(g)];
    const auto dec = source_decode(source_encode(gop, quality).bytes, kSide, kSide, kGopSize);
    VideoGoP hold;
    hold.frames.assign(static_cast<size_t>(kGopSize), dec.gop.frames[0]);
    const auto m = evaluate_gop(gop, hold, 0, g);
    frozen.insert(frozen.end(), m.begin(), m.end());
  }
  const double floor = mean_aggregate_psnr(frozen);

  const auto max_drop = [](const std::vector<double>& v, size_t* at) {
    double best = -1e9;
    for (size_t i = 0; i + 1 < v.size(); ++i) {
      if (v[i + 1] - v[i] > best) {
        best = v[i + 1] - v[i];
        *at = i;
      }
    }
    return best;
  };
  size_t cliff = 0, unused = 0;
  const double sscc_drop = max_drop(sscc, &cliff);
  const double wvsc_drop = max_drop(wvsc_sweep, &unused);
  bool below = true;
  for (size_t i = 0; i <= cliff; ++i) below = below && sscc[i] < floor;

  std::string curve;
  for (size_t i = 0; i < sscc.size(); ++i) {
    curve += fmt("%.1f", sscc[i]) + (i + 1 < sscc.size() ? "/" : "");
  }
  const auto snrs = sweep_snrs();
  return {sscc_drop > wvsc_drop && below,
          "largest adjacent drop SSCC " + fmt("%.2f", sscc_drop) + " dB (" +
              fmt("%g", snrs[cliff]) + "->" + fmt("%g", snrs[cliff + 1]) + " dB) vs WVSC " +
              fmt("%.2f", wvsc_drop) + " dB; SSCC PSNR " + curve + "; freeze floor " +
              fmt("%.2f", floor) + " dB; SSCC CBR " + fmt("%.3f", cbr) + " vs WVSC " +
              fmt("%.3f", d.plan.achieved_cbr)};
}

Outcome ldpc_qam() {
  const LdpcCode ham = hamming74();
  int agree = 0, cases = 0;
  for (unsigned u = 0; u < 16; ++u) {
    std::vector<uint8_t> info(4);
    for (int i = 0; i < 4; ++i) info[static_cast<size_t>(i)] = (u >> (3 - i)) & 1u;
    const auto sent = ham.encode(info);
    for (size_t e = 0; e < 7; ++e) {
      std::vector<double> llr(7);
      for (size_t i = 0; i < 7; ++i) llr[i] = ((sent[i] ^ (i == e)) ? -1.0 : 1.0);
      // ML over all 16 codewords.
      std::vector<uint8_t> best;
      double best_metric = -1e9;
      for (unsigned v = 0; v < 16; ++v) {
        std::vector<uint8_t> vi(4);
        for (int i = 0; i < 4; ++i) vi[static_cast<size_t>(i)] = (v >> (3 - i)) & 1u;
        const auto c = ham.encode(vi);
        double m = 0.0;
        for (size_t i = 0; i < 7; ++i) m += c[i] ? -llr[i] : llr[i];
        if (m > best_metric) {
          best_metric = m;
          best = c;
        }
      }
      const auto dec = ldpc_decode(llr, ham);
      agree += dec.converged && dec.bits == best;
      ++cases;
    }
  }

  const LdpcCode code = make_regular_code(4096, 3, 6, 1);
  std::mt19937_64 rng(1);
  int round_trips = 0;
  for (int t = 0; t < 5; ++t) {
    std::vector<uint8_t> info(static_cast<size_t>(code.k()));
    for (auto& b : info) b = rng() & 1u;
    const auto c = code.encode(info);
    std::vector<double> llr(c.size());
    for (size_t i = 0; i < c.size(); ++i) llr[i] = c[i] ? -kLlrClamp : kLlrClamp;
    const auto dec = ldpc_decode(llr, code);
    round_trips += dec.converged && dec.bits == c;
  }

  const Constellation q = make_constellation(16);
  double energy = 0.0;
  for (const auto& p : q.points) energy += std::norm(p);
  energy /= 16.0;
  int gray_bad = 0, neighbours = 0;
  for (size_t a = 0; a < 16; ++a) {
    for (size_t b = a + 1; b < 16; ++b) {
      if (std::fabs(std::abs(q.points[a] - q.points[b]) - 2.0 / std::sqrt(10.0)) < 1e-12) {
        ++neighbours;
        gray_bad += __builtin_popcount(static_cast<unsigned>(a ^ b)) != 1;
      }
    }
  }
  const bool ok = agree == cases && round_trips == 5 && std::fabs(energy - 1.0) < 1e-15 &&
                  gray_bad == 0 && neighbours == 24;
  return {ok, "Hamming ML agreement " + std::to_string(agree) + "/" + std::to_string(cases) +
                  ", n=4096 round trips " + std::to_string(round_trips) + "/5 (k=" +
                  std::to_string(code.k()) + "), 16-QAM energy " + fmt("%.15f", energy) +
                  ", Gray violations " + std::to_string(gray_bad) + "/" +
                  std::to_string(neighbours)};
}

Outcome gop_sensitivity() {
#ifndef WVSC_HAVE_CLI
  return {false, "built without the command-line tool"};
#else
  prepare_desk();
  const Desk& d = desk();
  const fs::path cfg = d.dir / "gop.json";
  std::ofstream(cfg) << "{\"data\": {\"synthetic\": {\"seed\": " << kDataSeed
                     << ", \"n_gops\": " << kGops << ", \"height\": " << kSide
                     << ", \"width\": " << kSide << "}, \"gop_size\": " << kGopSize
                     << "}, \"model\": {\"seed\": " << kModelSeed
                     << "}, \"channel\": {\"snr_db\": 10, \"seed\": " << kChannelSeed
                     << "}, \"output\": {\"directory\": \"" << (d.dir / "cli").string() << "\"}}";
  const std::string ck = (d.dir / "train" / "latest.ckpt").string();
  const auto read_axis = [](const fs::path& csv) {
    std::map<int, std::pair<double, int>> agg;
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string axis, gop, frame, psnr;
      std::getline(ss, axis, ',');
      std::getline(ss, gop, ',');
      std::getline(ss, frame, ',');
      std::getline(ss, psnr, ',');
      if (frame != "all") continue;
      auto& e = agg[std::stoi(axis)];
      e.first += std::stod(psnr);
      ++e.second;
    }
    std::map<int, double> mean;
    for (const auto& [k, v] : agg) mean[k] = v.first / v.second;
    return mean;
  };
  std::map<int, double> full, rep;
  for (const char* mode : {"full", "repetition"}) {
    const fs::path out = d.dir / "cli" / mode;
    const int rc = cli::run_command({"wvsc", "sweep-gop", "--config", cfg.string(), "--checkpoint",
                                     ck, "--mode", mode, "--output", out.string()});
    if (rc != 0) return {false, std::string("sweep-gop exited with ") + std::to_string(rc)};
    (std::string(mode) == "full" ? full : rep) = read_axis(out / "sweep_gop" / "sweep_gop.csv");
  }
  const bool three = full.size() == 3 && full.count(5) && full.count(10) && full.count(20) &&
                     rep.count(20);
  if (!three) return {false, "sweep CSV does not hold GoP sizes 5, 10, 20"};
  return {full[20] >= rep[20], "PSNR at GoP 5/10/20: " + fmt("%.2f", full[5]) + "/" +
                                   fmt("%.2f", full[10]) + "/" + fmt("%.2f", full[20]) +
                                   " dB; repetition at GoP 20 " + fmt("%.2f", rep[20]) + " dB"};
#endif
}

Outcome metric_examples() {
  const double p = psnr(VideoFrame(16, 16, 0.2), VideoFrame(16, 16, 0.3));
  const VideoFrame a = synthesize_moving_shapes(1, 1, 1, 32, 32).gops[0].frames[0];
  const double self = ms_ssim(a, a);
  const double constant = ms_ssim(VideoFrame(176, 176, 0.25), VideoFrame(176, 176, 0.75));
  return {std::fabs(p - 20.0) < 1e-9 && self == 1.0 && std::fabs(constant - 0.9342) <= 1e-3,
          "psnr(MSE 0.01) " + fmt("%.10f", p) + " dB, ms_ssim(a,a) " + fmt("%.6f", self) +
              ", constant case " + fmt("%.5f", constant)};
}

}  // namespace

int main() {
  report(1, "noiseless end-to-end identity", noiseless_identity);
  report(2, "MMSE channel statistics", mmse_statistics);
  report(3, "gradient correctness", gradient_checks);
  report(4, "MFA identities", mfa_identities);
  report(5, "rate planning", rate_planning);
  report(6, "training smoke", training_smoke);
  report(7, "reference-substitution benefit", repetition_benefit);
  report(8, "MFC ablation", mfc_ablation);
  report(9, "cliff effect", cliff_effect);
  report(10, "LDPC/QAM correctness", ldpc_qam);
  report(11, "GoP-size sensitivity", gop_sensitivity);
  report(12, "metrics", metric_examples);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
