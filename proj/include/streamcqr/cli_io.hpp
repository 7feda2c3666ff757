#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamcqr/renewable.hpp"
#include "streamcqr/simbench.hpp"
#include "streamcqr/wcqr.hpp"

namespace streamcqr {

/// Engine settings read from a flat `key = value` file. `#` starts a comment.
///
/// Keys: interval_lo, interval_hi (required), grid_size, alpha, lpi_degree, tau_count, kernel,
/// bandwidth_mode (renewable|oracle), N_total (oracle mode), C_h (> 0 skips cross-validation),
/// cv_candidates (comma list), cv_folds, validation_size, neighbour_fraction, symmetric_model.
struct EngineConfig {
  Interval domain;
  std::size_t grid_size = 100;
  double alpha = 0.1;
  int lpi_degree = 3;
  std::size_t tau_count = 99;
  Kernel kernel;
  BandwidthMode bandwidth_mode = BandwidthMode::Renewable;
  std::uint64_t N_total = 0;
  double C_h = 0.0;
  std::vector<double> cv_candidates;
  std::size_t cv_folds = 10;
  std::size_t validation_size = 2000;
  double neighbour_fraction = 0.1;
  bool symmetric_model = false;
};

/// Throws InvalidArgument naming the offending line.
EngineConfig parse_config(std::string_view text);
EngineConfig load_config(const std::string& path);
/// Canonical text of every field, doubles in hexadecimal; parse_config(format_config(c)) == c.
std::string format_config(const EngineConfig& config);
/// FNV-1a over format_config.
std::uint64_t engine_fingerprint(const EngineConfig& config);

struct CsvChunk {
  Chunk chunk;
  std::size_t dropped = 0;  ///< rows with non-finite values skipped under drop_nonfinite
};

/// Header `x,y`, then one `x,y` row per line. A zero-byte input is an empty chunk. Blank lines are
/// ignored. Throws ParseError with the 1-based line number.
CsvChunk parse_chunk_csv(std::string_view text, bool drop_nonfinite = false);
/// Throws DataError if the file cannot be read.
CsvChunk ingest_chunk(const std::string& path, bool drop_nonfinite = false);

/// A streaming session: configuration, the renewable state once the pilot grids exist, and the
/// chunks buffered until the validation sample (the first validation_size observations) is complete.
struct Session {
  EngineConfig config;
  std::optional<RenewableState> state;
  std::vector<Chunk> pending;
  std::optional<std::int64_t> last_seq;
  std::uint64_t chunks = 0;   ///< chunks applied or buffered
  double C_h = 0.0;           ///< resolved bandwidth constant; 0 until the grids exist
};

/// Fresh session. With a validation sample the grids and C_h are fixed immediately and the
/// validation rows are not ingested; otherwise the first validation_size streamed rows play that role.
Session new_session(const EngineConfig& config, const Chunk* validation = nullptr);

/// Applies (or buffers) one chunk. seq defaults to last_seq + 1; an explicit seq must exceed last_seq
/// (StateError otherwise).
void session_update(Session& session, const Chunk& chunk, std::optional<std::int64_t> seq = std::nullopt);

enum class EstimateKind { Ntm, Bctm, Ntsd, Rtsd };
EstimateKind parse_estimate_kind(std::string_view what, std::string_view mode);

/// Throws StateError while the validation sample is incomplete.
CurveEstimate session_estimate(const Session& session, EstimateKind kind, bool lenient = false);

/// `x,estimate` with 17 significant digits; skipped points print `nan`.
std::string format_estimate_csv(const CurveEstimate& curve);

inline constexpr int kCheckpointVersion = 1;

/// Checkpoint document without the timestamp; equal sessions give equal bytes.
std::string checkpoint_payload(const Session& session);
std::string serialize_checkpoint(const Session& session, const std::string& written_at);
/// Throws CheckpointError on malformed documents, version mismatch or a fingerprint that does not
/// match the stored configuration.
Session parse_checkpoint(std::string_view text);

/// Atomic replace through a temporary file and rename.
void save_checkpoint(const std::string& path, const Session& session);
Session load_checkpoint(const std::string& path);

/// Exclusive advisory lock on `<path>.lock`; throws CheckpointError if another writer holds it.
class CheckpointLock {
public:
  explicit CheckpointLock(const std::string& checkpoint_path);
  ~CheckpointLock();
  CheckpointLock(const CheckpointLock&) = delete;
  CheckpointLock& operator=(const CheckpointLock&) = delete;

private:
  int fd_ = -1;
};

/// Scenario file in the same `key = value` format.
///
/// Keys: name, model, error, lambda, sigma_scale, N_T, chunk_sizes, seed, replications,
/// validation_size, grid_size, tau_count, lpi_degree, alpha, folds, cv_candidates, C_h, C_nw,
/// symmetric (auto|true|false), pairs.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::string& path);

/// Exit codes: 0 success, 2 usage error, 3 data error, 4 state or compatibility error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace streamcqr
