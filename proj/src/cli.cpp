#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "streamcqr/cli_io.hpp"
#include "streamcqr/errors.hpp"

namespace streamcqr {

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kState = 4;

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !(f << text) || !f.flush()) throw DataError("cannot write '" + path + "'");
}

struct InitArgs {
  std::string config, checkpoint, validation;
  bool force = false;
};

struct UpdateArgs {
  std::string checkpoint;
  std::vector<std::string> chunks;
  std::int64_t seq = -1;
  bool drop_nonfinite = false;
};

struct EstimateArgs {
  std::string checkpoint, what = "mean", mode, out;
  bool lenient = false;
};

struct SimulateArgs {
  std::string scenario, out;
  std::size_t replications = 0;
};

int do_init(const InitArgs& a, std::ostream& out) {
  const EngineConfig config = load_config(a.config);
  CheckpointLock lock(a.checkpoint);
  if (!a.force && std::filesystem::exists(a.checkpoint)) {
    throw CheckpointError("checkpoint '" + a.checkpoint + "' already exists (use --force to replace it)");
  }
  Session session;
  if (!a.validation.empty()) {
    const CsvChunk v = ingest_chunk(a.validation);
    session = new_session(config, &v.chunk);
  } else {
    session = new_session(config);
  }
  save_checkpoint(a.checkpoint, session);
  out << "initialized " << a.checkpoint;
  if (session.state) out << " (C_h = " << session.C_h << ")";
  out << '\n';
  return 0;
}

int do_update(const UpdateArgs& a, std::ostream& out, std::ostream& err) {
  CheckpointLock lock(a.checkpoint);
  Session session = load_checkpoint(a.checkpoint);
  std::optional<std::int64_t> seq;
  if (a.seq >= 0) seq = a.seq;
  for (const auto& path : a.chunks) {
    const CsvChunk c = ingest_chunk(path, a.drop_nonfinite);
    if (c.dropped) err << path << ": dropped " << c.dropped << " non-finite rows\n";
    const bool was_active = session.state.has_value();
    session_update(session, c.chunk, seq);
    // Each chunk is durable before the next is read.
    save_checkpoint(a.checkpoint, session);
    out << "applied " << path << " (seq " << *session.last_seq << ", N = "
        << (session.state ? session.state->N : 0) << ")\n";
    if (!was_active && session.state) out << "grids fixed, C_h = " << session.C_h << '\n';
    if (seq) ++*seq;
  }
  return 0;
}

int do_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const Session session = load_checkpoint(a.checkpoint);
  std::string mode = a.mode;
  if (mode.empty()) mode = a.what == "sd" ? "rtsd" : (session.config.symmetric_model ? "ntm" : "bctm");
  const EstimateKind kind = parse_estimate_kind(a.what, mode);
  const CurveEstimate curve = session_estimate(session, kind, a.lenient);
  for (std::size_t k = 0; k < curve.skipped.size(); ++k) {
    err << "skipped grid point " << curve.skipped[k];
    if (k < curve.skip_reasons.size()) err << ": " << curve.skip_reasons[k];
    err << '\n';
  }
  write_text(a.out, format_estimate_csv(curve), out);
  return 0;
}

int do_simulate(const SimulateArgs& a, bool bench, std::ostream& out, std::ostream& err) {
  ScenarioConfig config = load_scenario(a.scenario);
  if (a.replications > 0) config.replications = a.replications;
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioResult result = run_scenario(config);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(a.out, report_csv(result.rows), out);
  if (bench) {
    const std::size_t reps = config.replications * config.chunk_sizes.size();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: %.3f s total, %.3f s per replication and chunk size\n", config.name.c_str(),
                  secs, secs / static_cast<double>(reps));
    err << buf;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming weighted composite quantile regression"};
  app.require_subcommand(1);

  InitArgs init;
  auto* init_cmd = app.add_subcommand("init", "Create a fresh checkpoint from a configuration file");
  init_cmd->add_option("--config,-c", init.config, "Engine configuration")->required()->check(CLI::ExistingFile);
  init_cmd->add_option("--checkpoint,-k", init.checkpoint, "Checkpoint path")->required();
  init_cmd->add_option("--validation", init.validation, "Validation CSV that fixes the grids and C_h")
      ->check(CLI::ExistingFile);
  init_cmd->add_flag("--force", init.force, "Replace an existing checkpoint");

  UpdateArgs update;
  auto* update_cmd = app.add_subcommand("update", "Apply chunk CSV files in order");
  update_cmd->add_option("--checkpoint,-k", update.checkpoint, "Checkpoint path")->required();
  update_cmd->add_option("--seq", update.seq, "Sequence number of the first chunk")->check(CLI::NonNegativeNumber);
  update_cmd->add_flag("--drop-nonfinite", update.drop_nonfinite, "Skip rows with NaN or Inf");
  update_cmd->add_option("chunks", update.chunks, "Chunk CSV files")->required();

  EstimateArgs estimate;
  auto* estimate_cmd = app.add_subcommand("estimate", "Write a mean or sd curve as CSV");
  estimate_cmd->add_option("--checkpoint,-k", estimate.checkpoint, "Checkpoint path")->required();
  estimate_cmd->add_option("--what", estimate.what, "mean or sd")->check(CLI::IsMember({"mean", "sd"}));
  estimate_cmd->add_option("--mode", estimate.mode, "ntm|bctm for mean, ntsd|rtsd for sd")
      ->check(CLI::IsMember({"ntm", "bctm", "ntsd", "rtsd"}));
  estimate_cmd->add_option("--out,-o", estimate.out, "Output CSV (default stdout)");
  estimate_cmd->add_flag("--lenient", estimate.lenient, "Skip failing grid points instead of aborting");

  SimulateArgs simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a simulation scenario and print the RASE report");
  simulate_cmd->add_option("--scenario,-s", simulate.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out,-o", simulate.out, "Report CSV (default stdout)");
  simulate_cmd->add_option("--replications", simulate.replications, "Override the replication count");

  SimulateArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a scenario and report wall time on stderr");
  bench_cmd->add_option("--scenario,-s", bench.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out,-o", bench.out, "Report CSV (default stdout)");
  bench_cmd->add_option("--replications", bench.replications, "Override the replication count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*init_cmd) return do_init(init, out);
    if (*update_cmd) return do_update(update, out, err);
    if (*estimate_cmd) return do_estimate(estimate, out, err);
    if (*simulate_cmd) return do_simulate(simulate, false, out, err);
    if (*bench_cmd) return do_simulate(bench, true, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const StateError& e) {
    err << "error: " << e.what() << '\n';
    return kState;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace streamcqr
