#include "cli.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.h"
#include "wvsc/baseline/sscc.h"
#include "wvsc/checkpoint.h"
#include "wvsc/errors.h"
#include "wvsc/metrics.h"
#include "wvsc/pipeline.h"
#include "wvsc/training.h"

namespace wvsc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"generate-data", "train",    "evaluate",
                                            "sweep-snr",     "sweep-cbr", "sweep-gop",
                                            "baseline",      "gen-ldpc"};

struct Overrides {
  std::string config;
  std::string output;
  std::string checkpoint;
  std::string mode;
  std::optional<double> snr;
  std::optional<long> steps;
  std::optional<int> jobs;
  bool resume = false;
  std::string sweep = "snr";
  // gen-ldpc
  int n = 4096, dv = 3, dc = 6;
  uint64_t seed = 1;
  std::string out;
};

struct Context {
  RunConfig cfg;
  fs::path root;
  std::string command;
};

Context make_context(const std::string& command, const Overrides& o) {
  Context ctx;
  ctx.command = command;
  ctx.cfg = o.config.empty() ? parse_run_config("{}") : load_run_config(o.config);
  if (const char* env = std::getenv("WVSC_OUTPUT_ROOT"); env && *env) ctx.cfg.output = env;
  if (!o.output.empty()) ctx.cfg.output = o.output;
  if (!o.checkpoint.empty()) ctx.cfg.evaluate.checkpoint = o.checkpoint;
  if (!o.mode.empty()) ctx.cfg.evaluate.mode = parse_mode(o.mode);
  if (o.snr) ctx.cfg.channel.snr_db = *o.snr;
  if (o.steps) ctx.cfg.train.steps = *o.steps;
  if (o.jobs) ctx.cfg.evaluate.jobs = *o.jobs;
  if (ctx.cfg.evaluate.jobs < 1) throw ConfigError("evaluate.jobs must be >= 1");
  ctx.root = ctx.cfg.output;
  std::error_code ec;
  fs::create_directories(ctx.root, ec);
  if (ec) throw IoError("cannot create output root " + ctx.root.string() + ": " + ec.message());
  return ctx;
}

VideoSequence load_data(const RunConfig& c, int gop_size) {
  VideoSequence seq;
  if (!c.data.path.empty()) {
    seq = load_sequence(c.data.path, gop_size, c.data.crop, c.data.crop_seed);
  } else {
    seq = synthesize_moving_shapes(c.data.synthetic_seed, c.data.synthetic_gops, gop_size,
                                   c.data.height, c.data.width);
  }
  validate_sequence(seq);
  return seq;
}

VideoSequence train_split(const RunConfig& c) {
  return split_train_test(load_data(c, c.data.gop_size), c.data.train_ratio).first;
}

VideoSequence test_split(const RunConfig& c, int gop_size) {
  return split_train_test(load_data(c, gop_size), c.data.train_ratio).second;
}

fs::path checkpoint_path(const Context& ctx) {
  return ctx.cfg.evaluate.checkpoint.empty() ? ctx.root / "train" / "latest.ckpt"
                                             : fs::path(ctx.cfg.evaluate.checkpoint);
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return git_blob_hash(ss.str());
}

json plan_json(const RatePlan& p) {
  return {{"target_cbr", p.target_cbr}, {"ratio", p.ratio.str()},
          {"granularity", p.granularity}, {"gop_length", p.gop_length},
          {"height", p.height},           {"width", p.width},
          {"latent_channels", p.latent_channels},
          {"residual_channels", p.residual_channels},
          {"L", p.L},                     {"L1", p.L1},
          {"achieved_cbr", p.achieved_cbr}};
}

RatePlan plan_for(const VideoSequence& seq, double target_cbr, Rational ratio) {
  const VideoFrame& f = seq.gops.front().frames.front();
  return plan_rates(target_cbr, ratio, f.height(), f.width(), seq.gop_size(),
                    latent_granularity(f.height(), f.width()));
}

std::vector<MetricRow> evaluate_point(const VideoSequence& test, const WvscModel& model,
                                      const RatePlan& plan, double snr_db, ReceiverMode mode,
                                      uint64_t channel_seed, double axis) {
  check_plan_fits(plan, model);
  std::vector<MetricRow> rows;
  TransmitOptions options;
  options.mode = mode;
  for (int g = 0; g < test.count(); ++g) {
    const auto& gop = test.gops[static_cast<size_t>(g)];
    const auto result = transmit_gop(gop, model, plan, snr_db,
                                     derive_seed(channel_seed, static_cast<uint64_t>(g)), options);
    const auto r = evaluate_gop(gop, result.reconstructed, axis, g);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

struct PointResult {
  std::vector<MetricRow> rows;
  json info;
};

// Runs every point (optionally in parallel), writes point files under
// <dir>/points/, then concatenates their bodies into <dir>/<name>.csv.
void run_sweep(const Context& ctx, const std::string& name, const std::string& axis_name,
               std::vector<std::function<PointResult()>> points, json extras) {
  const fs::path dir = ctx.root / name;
  const fs::path point_dir = dir / "points";
  fs::create_directories(point_dir);
  std::vector<PointResult> results(points.size());
  std::vector<std::string> errors(points.size());
  const int jobs = std::min<int>(ctx.cfg.evaluate.jobs, static_cast<int>(points.size()));
  std::mutex next_mutex;
  size_t next = 0;
  const auto worker = [&]() {
    for (;;) {
      size_t i;
      {
        std::lock_guard lock(next_mutex);
        if (next >= points.size()) return;
        i = next++;
      }
      try {
        results[i] = points[i]();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw Error("sweep point " + std::to_string(i) + ": " + errors[i]);
  }

  const std::string config = to_json(ctx.cfg);
  std::string merged = std::string(kReportHeader) + "\n";
  MetricsReport all;
  all.axis_name = axis_name;
  all.config_json = config;
  extras["command"] = ctx.command;
  extras["points"] = json::array();
  for (size_t i = 0; i < results.size(); ++i) {
    MetricsReport point;
    point.axis_name = axis_name;
    point.rows = results[i].rows;
    point.config_json = config;
    json pe = extras;
    pe.erase("points");
    pe["point"] = results[i].info;
    point.manifest_json = pe.dump();
    char file[32];
    std::snprintf(file, sizeof(file), "point_%03zu.csv", i);
    write_report(point, point_dir / file);
    const std::string body = report_csv(point);
    merged += body.substr(body.find('\n') + 1);
    all.rows.insert(all.rows.end(), point.rows.begin(), point.rows.end());
    extras["points"].push_back(results[i].info);
  }
  all.manifest_json = extras.dump();
  const fs::path csv = dir / (name + ".csv");
  write_report(all, csv);
  if (report_csv(all) != merged) throw Error("merged sweep CSV differs from its point files");
  std::cout << "wrote " << csv.string() << " (" << all.rows.size() << " rows)\n";
}

json seeds_json(const RunConfig& c) {
  return {{"data", c.data.synthetic_seed}, {"crop", c.data.crop_seed}, {"model", c.model.seed},
          {"train", c.train.seed},         {"channel", c.channel.seed},
          {"baseline", c.baseline.seed}};
}

json checkpoint_json(const fs::path& path, const Checkpoint& ck) {
  return {{"path", path.string()}, {"step", ck.step}, {"sha1", file_hash(path)}};
}

// ---- commands --------------------------------------------------------------------------

int cmd_generate_data(const Context& ctx, const Overrides& o) {
  const RunConfig& c = ctx.cfg;
  const VideoSequence seq = synthesize_moving_shapes(c.data.synthetic_seed, c.data.synthetic_gops,
                                                     c.data.gop_size, c.data.height, c.data.width);
  const fs::path dir = o.out.empty() ? ctx.root / "data" : fs::path(o.out);
  write_sequence(seq, dir);
  json manifest{{"command", ctx.command}, {"config", json::parse(to_json(c))},
                {"config_hash", git_blob_hash(to_json(c))}, {"seeds", seeds_json(c)},
                {"frames", seq.count() * seq.gop_size()}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << "wrote " << seq.count() * seq.gop_size() << " frames to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const Context& ctx, const Overrides& o) {
  const RunConfig& c = ctx.cfg;
  const VideoSequence train = train_split(c);
  TrainRunOptions options;
  options.output_dir = ctx.root / "train";
  options.resume = o.resume;
  options.on_step = [&](long step, const StepResult& r) {
    if ((step + 1) % 100 == 0 || step + 1 == c.train.steps) {
      std::printf("step %ld/%ld loss %.6f lr %.3g snr %.2f\n", step + 1, c.train.steps, r.loss,
                  r.lr, r.snr_db);
      std::fflush(stdout);
    }
  };
  const Checkpoint ck = train_run(train, c.model, c.train, options);
  const fs::path latest = options.output_dir / "latest.ckpt";
  json manifest{{"command", ctx.command},
                {"config", json::parse(to_json(c))},
                {"config_hash", git_blob_hash(to_json(c))},
                {"seeds", seeds_json(c)},
                {"train_gops", train.count()},
                {"checkpoint", checkpoint_json(latest, ck)},
                {"final_loss", ck.stats.last},
                {"mean_loss", ck.stats.count ? ck.stats.sum / ck.stats.count : 0.0}};
  std::ofstream(options.output_dir / "manifest.json") << manifest.dump(2) << '\n';
  return kExitOk;
}

int cmd_evaluate(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const fs::path ck_path = checkpoint_path(ctx);
  const Checkpoint ck = load_checkpoint(ck_path);
  const WvscModel model = model_from_checkpoint(ck);
  const VideoSequence test = test_split(c, c.data.gop_size);
  const RatePlan plan = plan_for(test, c.rates.target_cbr, c.rates.ratio);
  json extras{{"seeds", seeds_json(c)},
              {"checkpoint", checkpoint_json(ck_path, ck)},
              {"mode", mode_name(c.evaluate.mode)}};
  run_sweep(ctx, "evaluate", "snr_db",
            {[&] {
              return PointResult{evaluate_point(test, model, plan, c.channel.snr_db,
                                                c.evaluate.mode, c.channel.seed, c.channel.snr_db),
                                 {{"snr_db", c.channel.snr_db}, {"plan", plan_json(plan)}}};
            }},
            extras);
  return kExitOk;
}

int cmd_sweep_snr(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const fs::path ck_path = checkpoint_path(ctx);
  const Checkpoint ck = load_checkpoint(ck_path);
  const WvscModel model = model_from_checkpoint(ck);
  const VideoSequence test = test_split(c, c.data.gop_size);
  const RatePlan plan = plan_for(test, c.rates.target_cbr, c.rates.ratio);
  std::vector<std::function<PointResult()>> points;
  for (double snr : c.channel.snr_list) {
    points.push_back([&, snr] {
      return PointResult{
          evaluate_point(test, model, plan, snr, c.evaluate.mode, c.channel.seed, snr),
          {{"snr_db", snr}, {"plan", plan_json(plan)}}};
    });
  }
  run_sweep(ctx, "sweep_snr", "snr_db", std::move(points),
            {{"seeds", seeds_json(c)},
             {"checkpoint", checkpoint_json(ck_path, ck)},
             {"mode", mode_name(c.evaluate.mode)}});
  return kExitOk;
}

int cmd_sweep_cbr(const Context& ctx, const Overrides& o) {
  const RunConfig& c = ctx.cfg;
  const double snr = o.snr ? *o.snr : c.channel.cbr_sweep_snr_db;
  const fs::path ck_path = checkpoint_path(ctx);
  const Checkpoint ck = load_checkpoint(ck_path);
  const WvscModel model = model_from_checkpoint(ck);
  const VideoSequence test = test_split(c, c.data.gop_size);
  std::vector<std::function<PointResult()>> points;
  for (double target : c.rates.cbr_list) {
    points.push_back([&, target] {
      const RatePlan plan = plan_for(test, target, c.rates.ratio);
      return PointResult{evaluate_point(test, model, plan, snr, c.evaluate.mode, c.channel.seed,
                                        plan.achieved_cbr),
                         {{"target_cbr", target}, {"snr_db", snr}, {"plan", plan_json(plan)}}};
    });
  }
  run_sweep(ctx, "sweep_cbr", "cbr", std::move(points),
            {{"seeds", seeds_json(c)},
             {"checkpoint", checkpoint_json(ck_path, ck)},
             {"mode", mode_name(c.evaluate.mode)}});
  return kExitOk;
}

int cmd_sweep_gop(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const fs::path ck_path = checkpoint_path(ctx);
  const Checkpoint ck = load_checkpoint(ck_path);
  const WvscModel model = model_from_checkpoint(ck);
  std::vector<std::function<PointResult()>> points;
  for (int gop : c.evaluate.gop_sizes) {
    points.push_back([&, gop] {
      const VideoSequence test = test_split(c, gop);
      const RatePlan plan = plan_for(test, c.rates.target_cbr, c.rates.ratio);
      return PointResult{evaluate_point(test, model, plan, c.channel.snr_db, c.evaluate.mode,
                                        c.channel.seed, gop),
                         {{"gop_size", gop},
                          {"snr_db", c.channel.snr_db},
                          {"trained_gop_size", ck.train_config.gop_size},
                          {"plan", plan_json(plan)}}};
    });
  }
  run_sweep(ctx, "sweep_gop", "gop_size", std::move(points),
            {{"seeds", seeds_json(c)},
             {"checkpoint", checkpoint_json(ck_path, ck)},
             {"mode", mode_name(c.evaluate.mode)}});
  return kExitOk;
}

int cmd_baseline(const Context& ctx, const Overrides& o) {
  const RunConfig& c = ctx.cfg;
  const BaselineSection& b = c.baseline;
  const LdpcCode code = b.code_file.empty() ? make_regular_code(b.code_n, b.code_dv, b.code_dc,
                                                                b.code_seed)
                                            : read_alist(b.code_file);
  const Constellation constellation = make_constellation(b.constellation);
  std::unique_ptr<SourceCodec> external;
  if (!b.external_encode.empty() || !b.external_decode.empty()) {
    external = std::make_unique<ExternalCodecAdapter>(b.external_encode, b.external_decode);
  }
  const SourceCodec* codec = external.get();

  const auto run_point = [&, codec](const VideoSequence& test, double snr, int quality,
                                    std::optional<double> axis) {
    PointResult pr;
    double cbr_sum = 0.0;
    int failed = 0, corrupted = 0;
    std::vector<SsccResult> runs;
    for (int g = 0; g < test.count(); ++g) {
      runs.push_back(run_sscc(test.gops[static_cast<size_t>(g)], snr, code, constellation, quality,
                              derive_seed(b.seed, static_cast<uint64_t>(g)), codec));
      cbr_sum += runs.back().cbr;
      failed += runs.back().failed_blocks;
      corrupted += runs.back().corrupted ? 1 : 0;
    }
    const double mean_cbr = cbr_sum / test.count();
    for (int g = 0; g < test.count(); ++g) {
      const auto r = evaluate_gop(test.gops[static_cast<size_t>(g)],
                                  runs[static_cast<size_t>(g)].reconstructed,
                                  axis ? *axis : mean_cbr, g);
      pr.rows.insert(pr.rows.end(), r.begin(), r.end());
    }
    pr.info = {{"snr_db", snr},          {"quality", quality},
               {"mean_cbr", mean_cbr},   {"failed_ldpc_blocks", failed},
               {"corrupted_gops", corrupted}};
    return pr;
  };

  std::vector<std::function<PointResult()>> points;
  std::string name, axis;
  if (o.sweep == "snr") {
    name = "baseline_snr";
    axis = "snr_db";
    for (double snr : c.channel.snr_list) {
      points.push_back([&, snr] {
        return run_point(test_split(c, c.data.gop_size), snr, b.quality, snr);
      });
    }
  } else if (o.sweep == "cbr") {
    name = "baseline_cbr";
    axis = "cbr";
    const double snr = o.snr ? *o.snr : c.channel.cbr_sweep_snr_db;
    for (int q : b.quality_list) {
      points.push_back([&, q, snr] {
        return run_point(test_split(c, c.data.gop_size), snr, q, std::nullopt);
      });
    }
  } else if (o.sweep == "gop") {
    name = "baseline_gop";
    axis = "gop_size";
    for (int gop : c.evaluate.gop_sizes) {
      points.push_back([&, gop] {
        return run_point(test_split(c, gop), c.channel.snr_db, b.quality, gop);
      });
    }
  } else {
    throw ConfigError("unknown baseline sweep '" + o.sweep + "' (snr, cbr, gop)");
  }
  json extras{{"seeds", seeds_json(c)},
              {"code", {{"n", code.n()}, {"k", code.k()}, {"m", code.m()},
                        {"source", b.code_file.empty() ? "regular" : b.code_file}}},
              {"constellation", b.constellation},
              {"source_codec", codec ? codec->name() : DctCodec().name()},
              {"interleaver_seed", b.seed}};
  run_sweep(ctx, name, axis, std::move(points), extras);
  if (external) {
    json log = json::array();
    for (const auto& cmd : static_cast<const ExternalCodecAdapter&>(*external).command_log()) {
      log.push_back(cmd);
    }
    std::ofstream(ctx.root / name / "external_commands.json") << log.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_gen_ldpc(const Overrides& o) {
  if (o.out.empty()) throw ConfigError("gen-ldpc needs --out <file.alist>");
  const LdpcCode code = make_regular_code(o.n, o.dv, o.dc, o.seed);
  write_alist(code, o.out);
  std::cout << "wrote (" << o.dv << "," << o.dc << ")-regular code n=" << code.n()
            << " k=" << code.k() << " to " << o.out << "\n";
  return kExitOk;
}

std::string usage() {
  std::string u = "usage: wvsc <command> [--config FILE] [options]\ncommands:";
  for (const auto& c : kCommands) u += " " + c;
  return u + "\n";
}

}  // namespace

int run_command(const std::vector<std::string>& argv) {
  if (argv.size() < 2) {
    std::cerr << "wvsc: error: no command given\n" << usage();
    return kExitUsage;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h") {
    std::cout << usage();
    return kExitOk;
  }
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    std::cerr << "wvsc: error: unknown command '" << command << "'\n" << usage();
    return kExitUsage;
  }

  CLI::App app{"wvsc " + command, "wvsc " + command};
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--output", o.output, "output root (overrides config and WVSC_OUTPUT_ROOT)");
  if (command == "evaluate" || command.starts_with("sweep-")) {
    app.add_option("--checkpoint", o.checkpoint, "checkpoint file");
    app.add_option("--mode", o.mode, "receiver mode: full, no-compensation, repetition");
  }
  if (command != "gen-ldpc" && command != "generate-data" && command != "train") {
    app.add_option("--snr", o.snr, "channel SNR in dB");
    app.add_option("--jobs", o.jobs, "sweep points evaluated in parallel");
  }
  if (command == "train") {
    app.add_option("--steps", o.steps, "training steps");
    app.add_flag("--resume", o.resume, "continue from <output>/train/latest.ckpt");
  }
  if (command == "baseline") app.add_option("--sweep", o.sweep, "snr, cbr or gop");
  if (command == "gen-ldpc" || command == "generate-data") {
    app.add_option("--out", o.out, "output path");
  }
  if (command == "gen-ldpc") {
    app.add_option("--n", o.n, "code length");
    app.add_option("--dv", o.dv, "variable degree");
    app.add_option("--dc", o.dc, "check degree");
    app.add_option("--seed", o.seed, "construction seed");
  }

  std::vector<std::string> rest(argv.begin() + 2, argv.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "wvsc: error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (command == "gen-ldpc") return cmd_gen_ldpc(o);
    const Context ctx = make_context(command, o);
    if (command == "generate-data") return cmd_generate_data(ctx, o);
    if (command == "train") return cmd_train(ctx, o);
    if (command == "evaluate") return cmd_evaluate(ctx);
    if (command == "sweep-snr") return cmd_sweep_snr(ctx);
    if (command == "sweep-cbr") return cmd_sweep_cbr(ctx, o);
    if (command == "sweep-gop") return cmd_sweep_gop(ctx);
    if (command == "baseline") return cmd_baseline(ctx, o);
  } catch (const ConfigError& e) {
    std::cerr << "wvsc: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "wvsc: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "wvsc: error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace wvsc::cli
