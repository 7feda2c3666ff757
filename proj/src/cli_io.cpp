#include "streamcqr/cli_io.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "streamcqr/cv.hpp"
#include "streamcqr/errors.hpp"
#include "streamcqr/pilot_grid.hpp"

namespace streamcqr {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

// Full-string strtod; accepts decimal, scientific and hexadecimal floats.
bool parse_real(std::string_view s, double& out) {
  const std::string tmp(trim(s));
  if (tmp.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && errno != ERANGE;
}

bool parse_unsigned(std::string_view s, std::uint64_t& out) {
  const std::string tmp(trim(s));
  if (tmp.empty() || tmp.front() == '-' || tmp.front() == '+') return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoull(tmp.c_str(), &end, 10);
  return end == tmp.c_str() + tmp.size() && errno != ERANGE;
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

struct Entry {
  std::size_t line;
  std::string value;
};

std::map<std::string, Entry> parse_key_values(std::string_view text, const char* what) {
  std::map<std::string, Entry> out;
  std::size_t line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string_view line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument(std::string(what) + " line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw InvalidArgument(std::string(what) + " line " + std::to_string(line_no) + ": empty key");
    if (out.count(key)) {
      throw InvalidArgument(std::string(what) + " line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    out.emplace(key, Entry{line_no, std::string(trim(line.substr(eq + 1)))});
  }
  return out;
}

class KeyReader {
public:
  KeyReader(std::map<std::string, Entry> kv, const char* what) : kv_(std::move(kv)), what_(what) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw InvalidArgument(std::string(what_) + " line " + std::to_string(kv_.at(key).line) + ": " + key + ": " + msg);
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  const std::string& raw(const std::string& key) {
    used_.push_back(key);
    return kv_.at(key).value;
  }

  void real(const std::string& key, double& out) {
    if (!has(key)) return;
    if (!parse_real(raw(key), out) || !std::isfinite(out)) fail(key, "expected a finite number");
  }
  template <class T>
  void count(const std::string& key, T& out) {
    if (!has(key)) return;
    std::uint64_t v = 0;
    if (!parse_unsigned(raw(key), v)) fail(key, "expected a nonnegative integer");
    out = static_cast<T>(v);
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    if (!parse_bool(raw(key), out)) fail(key, "expected true or false");
  }
  void reals(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    out.clear();
    for (auto item : split(raw(key), ',')) {
      double v = 0.0;
      if (!parse_real(item, v) || !std::isfinite(v)) fail(key, "expected a comma-separated list of numbers");
      out.push_back(v);
    }
  }
  void finish() const {
    for (const auto& [k, e] : kv_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
        throw InvalidArgument(std::string(what_) + " line " + std::to_string(e.line) + ": unknown key '" + k + "'");
      }
    }
  }

private:
  std::map<std::string, Entry> kv_;
  const char* what_;
  std::vector<std::string> used_;
};

std::string read_file(const std::string& path, bool& ok) {
  std::ifstream in(path, std::ios::binary);
  ok = static_cast<bool>(in);
  if (!ok) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- configuration

EngineConfig parse_config(std::string_view text) {
  KeyReader r(parse_key_values(text, "config"), "config");
  EngineConfig c;
  if (!r.has("interval_lo") || !r.has("interval_hi")) throw InvalidArgument("config: interval_lo and interval_hi are required");
  r.real("interval_lo", c.domain.lo);
  r.real("interval_hi", c.domain.hi);
  if (!(c.domain.lo < c.domain.hi)) r.fail("interval_hi", "must exceed interval_lo");
  r.count("grid_size", c.grid_size);
  if (c.grid_size == 0 && r.has("grid_size")) r.fail("grid_size", "must be positive");
  r.real("alpha", c.alpha);
  if (!(c.alpha > 0.0 && c.alpha < 0.5) && r.has("alpha")) r.fail("alpha", "must lie in (0, 0.5)");
  if (r.has("lpi_degree")) {
    std::uint64_t d = 0;
    if (!parse_unsigned(r.raw("lpi_degree"), d) || d < 1 || d > 10) r.fail("lpi_degree", "expected an integer in [1, 10]");
    c.lpi_degree = static_cast<int>(d);
  }
  r.count("tau_count", c.tau_count);
  if (c.tau_count == 0 && r.has("tau_count")) r.fail("tau_count", "must be positive");
  if (r.has("kernel")) {
    try {
      c.kernel = Kernel::from_name(r.raw("kernel"));
    } catch (const Error& e) {
      r.fail("kernel", e.what());
    }
  }
  if (r.has("bandwidth_mode")) {
    const auto& m = r.raw("bandwidth_mode");
    if (m == "renewable") {
      c.bandwidth_mode = BandwidthMode::Renewable;
    } else if (m == "oracle") {
      c.bandwidth_mode = BandwidthMode::Oracle;
    } else {
      r.fail("bandwidth_mode", "expected renewable or oracle");
    }
  }
  r.count("N_total", c.N_total);
  r.real("C_h", c.C_h);
  if (c.C_h < 0.0) r.fail("C_h", "must be nonnegative");
  r.reals("cv_candidates", c.cv_candidates);
  for (double v : c.cv_candidates)
    if (!(v > 0.0)) r.fail("cv_candidates", "candidates must be positive");
  r.count("cv_folds", c.cv_folds);
  if (c.cv_folds < 2) r.fail("cv_folds", "need at least two folds");
  r.count("validation_size", c.validation_size);
  if (c.validation_size == 0 && r.has("validation_size")) r.fail("validation_size", "must be positive");
  r.real("neighbour_fraction", c.neighbour_fraction);
  if (!(c.neighbour_fraction > 0.0 && c.neighbour_fraction <= 1.0) && r.has("neighbour_fraction")) {
    r.fail("neighbour_fraction", "must lie in (0, 1]");
  }
  r.boolean("symmetric_model", c.symmetric_model);
  if (c.bandwidth_mode == BandwidthMode::Oracle && c.N_total == 0) {
    throw InvalidArgument("config: bandwidth_mode = oracle requires N_total > 0");
  }
  r.finish();
  return c;
}

EngineConfig load_config(const std::string& path) {
  bool ok = false;
  const std::string text = read_file(path, ok);
  if (!ok) throw InvalidArgument("cannot read config file '" + path + "'");
  return parse_config(text);
}

std::string format_config(const EngineConfig& c) {
  std::ostringstream os;
  os << "interval_lo = " << hex(c.domain.lo) << '\n';
  os << "interval_hi = " << hex(c.domain.hi) << '\n';
  os << "grid_size = " << c.grid_size << '\n';
  os << "alpha = " << hex(c.alpha) << '\n';
  os << "lpi_degree = " << c.lpi_degree << '\n';
  os << "tau_count = " << c.tau_count << '\n';
  os << "kernel = " << c.kernel.name() << '\n';
  os << "bandwidth_mode = " << (c.bandwidth_mode == BandwidthMode::Oracle ? "oracle" : "renewable") << '\n';
  os << "N_total = " << c.N_total << '\n';
  os << "C_h = " << hex(c.C_h) << '\n';
  if (!c.cv_candidates.empty()) {
    os << "cv_candidates = ";
    for (std::size_t k = 0; k < c.cv_candidates.size(); ++k) os << (k ? "," : "") << hex(c.cv_candidates[k]);
    os << '\n';
  }
  os << "cv_folds = " << c.cv_folds << '\n';
  os << "validation_size = " << c.validation_size << '\n';
  os << "neighbour_fraction = " << hex(c.neighbour_fraction) << '\n';
  os << "symmetric_model = " << (c.symmetric_model ? "true" : "false") << '\n';
  return os.str();
}

std::uint64_t engine_fingerprint(const EngineConfig& config) { return fnv1a(format_config(config)); }

// ---------------------------------------------------------------- chunk CSV

CsvChunk parse_chunk_csv(std::string_view text, bool drop_nonfinite) {
  CsvChunk out;
  if (text.empty()) return out;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!header) {
      const auto cols = split(line, ',');
      if (cols.size() != 2 || cols[0] != "x" || cols[1] != "y") throw ParseError(line_no, "expected header 'x,y'");
      header = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 2) throw ParseError(line_no, "expected two comma-separated values");
    double x = 0.0, y = 0.0;
    if (!parse_real(cols[0], x)) throw ParseError(line_no, "cannot parse x value '" + std::string(cols[0]) + "'");
    if (!parse_real(cols[1], y)) throw ParseError(line_no, "cannot parse y value '" + std::string(cols[1]) + "'");
    if (!std::isfinite(x) || !std::isfinite(y)) {
      if (!drop_nonfinite) throw ParseError(line_no, "non-finite value");
      ++out.dropped;
      continue;
    }
    out.chunk.push_back(x, y);
  }
  if (!header) throw ParseError(1, "expected header 'x,y'");
  return out;
}

CsvChunk ingest_chunk(const std::string& path, bool drop_nonfinite) {
  bool ok = false;
  const std::string text = read_file(path, ok);
  if (!ok) throw DataError("cannot read chunk file '" + path + "'");
  try {
    return parse_chunk_csv(text, drop_nonfinite);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
}

// ---------------------------------------------------------------- session

namespace {

StateConfig state_config(const EngineConfig& c) { return StateConfig{c.domain, c.kernel, c.lpi_degree, c.alpha, {}}; }

void activate(Session& s, const Chunk& validation, bool ingest_pending) {
  const EngineConfig& c = s.config;
  PilotConfig pilot;
  pilot.domain = c.domain;
  pilot.grid_size = c.grid_size;
  pilot.taus = uniform_taus(c.tau_count);
  pilot.degree = c.lpi_degree;
  pilot.neighbour_fraction = c.neighbour_fraction;
  const PilotGrids grids = build_grids(validation, pilot);
  const StateConfig sc = state_config(c);
  s.C_h = c.C_h > 0.0 ? c.C_h
                      : estimate_Ch(validation, grids, sc, c.cv_folds, c.cv_candidates,
                                    c.symmetric_model ? MeanMode::Ntm : MeanMode::Bctm)
                            .C_h;
  BandwidthState bw;
  bw.mode = c.bandwidth_mode;
  bw.C_h = s.C_h;
  bw.N_total = c.N_total;
  s.state = init_state(grids.grid, grids.nodes, sc, bw);
  if (ingest_pending) {
    for (const auto& chunk : s.pending) ingest(*s.state, chunk);
  }
  s.pending.clear();
}

}  // namespace

Session new_session(const EngineConfig& config, const Chunk* validation) {
  Session s;
  s.config = config;
  if (validation) {
    validate_chunk(*validation);
    activate(s, *validation, false);
  }
  return s;
}

void session_update(Session& s, const Chunk& chunk, std::optional<std::int64_t> seq) {
  validate_chunk(chunk);
  if (seq && s.last_seq && *seq <= *s.last_seq) {
    throw StateError("chunk sequence number " + std::to_string(*seq) + " does not exceed the last applied " +
                    std::to_string(*s.last_seq));
  }
  const std::int64_t assigned = seq ? *seq : (s.last_seq ? *s.last_seq + 1 : 0);
  if (s.state) {
    ingest(*s.state, chunk);
  } else {
    s.pending.push_back(chunk);
    std::size_t total = 0;
    for (const auto& c : s.pending) total += c.size();
    if (total >= s.config.validation_size) {
      Chunk val;
      for (const auto& c : s.pending)
        for (std::size_t j = 0; j < c.size() && val.size() < s.config.validation_size; ++j) val.push_back(c.x[j], c.y[j]);
      Session trial = s;
      activate(trial, val, true);
      s = std::move(trial);
    }
  }
  s.last_seq = assigned;
  ++s.chunks;
}

EstimateKind parse_estimate_kind(std::string_view what, std::string_view mode) {
  if (what == "mean") {
    if (mode == "ntm") return EstimateKind::Ntm;
    if (mode == "bctm") return EstimateKind::Bctm;
    throw InvalidArgument("mean estimates take mode ntm or bctm");
  }
  if (what == "sd") {
    if (mode == "ntsd") return EstimateKind::Ntsd;
    if (mode == "rtsd") return EstimateKind::Rtsd;
    throw InvalidArgument("sd estimates take mode ntsd or rtsd");
  }
  throw InvalidArgument("estimate target must be mean or sd");
}

CurveEstimate session_estimate(const Session& s, EstimateKind kind, bool lenient) {
  if (!s.state) {
    std::size_t total = 0;
    for (const auto& c : s.pending) total += c.size();
    throw StateError("no estimate available: " + std::to_string(total) + " of " +
                     std::to_string(s.config.validation_size) + " validation rows received");
  }
  Estimator est(*s.state, EstimatorOptions{s.config.symmetric_model, lenient});
  switch (kind) {
    case EstimateKind::Ntm:
      return est.mean(MeanMode::Ntm);
    case EstimateKind::Bctm:
      return est.mean(MeanMode::Bctm);
    case EstimateKind::Ntsd:
      return est.sd(SdMode::Ntsd);
    case EstimateKind::Rtsd:
      return est.sd(SdMode::Rtsd);
  }
  throw InvalidArgument("unknown estimate kind");
}

std::string format_estimate_csv(const CurveEstimate& curve) {
  std::string out = "x,estimate\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.grid[i], curve.values[i]);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------- checkpoint

namespace {

Json hex_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double d : v) a.push_back(hex(d));
  return a;
}

double real_of(const Json& j, const char* field) {
  if (!j.is_string()) throw CheckpointError(std::string("checkpoint field '") + field + "' must be a hex float string");
  double v = 0.0;
  if (!parse_real(j.get<std::string>(), v)) throw CheckpointError(std::string("checkpoint field '") + field + "' is malformed");
  return v;
}

std::vector<double> reals_of(const Json& j, const char* field) {
  if (!j.is_array()) throw CheckpointError(std::string("checkpoint field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(real_of(e, field));
  return out;
}

const Json& at(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw CheckpointError(std::string("checkpoint is missing field '") + key + "'");
  return j.at(key);
}

std::uint64_t uint_of(const Json& j, const char* field) {
  if (!j.is_number_unsigned()) throw CheckpointError(std::string("checkpoint field '") + field + "' must be an unsigned integer");
  return j.get<std::uint64_t>();
}

Json chunk_json(const Chunk& c) { return Json{{"x", hex_array(c.x)}, {"y", hex_array(c.y)}}; }

Chunk chunk_of(const Json& j) {
  Chunk c;
  c.x = reals_of(at(j, "x"), "x");
  c.y = reals_of(at(j, "y"), "y");
  if (c.x.size() != c.y.size()) throw CheckpointError("checkpoint chunk has mismatched columns");
  return c;
}

Json state_json(const RenewableState& st) {
  Json w = Json::array();
  for (const auto& p : st.config.W.pieces()) {
    w.push_back(Json{{"lo", hex(p.lo)},
                     {"hi", hex(p.hi)},
                     {"lo_closed", p.lo_closed},
                     {"center", hex(p.poly.center)},
                     {"coeffs", hex_array(p.poly.coeffs)}});
  }
  Json nodes = Json::array(), S = Json::array();
  for (const auto& n : st.nodes) nodes.push_back(hex_array(n));
  for (const auto& s : st.S) S.push_back(hex_array(s));
  const auto& b = st.bandwidth;
  return Json{{"config",
               {{"domain", Json::array({hex(st.config.domain.lo), hex(st.config.domain.hi)})},
                {"kernel", st.config.kernel.name()},
                {"degree", st.config.degree},
                {"alpha", hex(st.config.alpha)},
                {"W", w}}},
              {"grid", hex_array(st.grid)},
              {"nodes", nodes},
              {"N", st.N},
              {"fX", hex_array(st.fX)},
              {"S", S},
              {"E_WY", hex(st.E_WY)},
              {"E_WY2", hex(st.E_WY2)},
              {"bandwidth",
               {{"mode", b.mode == BandwidthMode::Oracle ? "oracle" : "renewable"},
                {"C_h", hex(b.C_h)},
                {"N_total", b.N_total},
                {"S_h", hex(b.S_h)},
                {"last_h", hex(b.last_h)},
                {"t", b.t},
                {"C_h_x", hex_array(b.C_h_x)},
                {"S_h_x", hex_array(b.S_h_x)},
                {"last_h_x", hex_array(b.last_h_x)}}},
              {"fingerprint", hex64(st.fingerprint)}};
}

RenewableState state_of(const Json& j) {
  const Json& cj = at(j, "config");
  StateConfig sc;
  const auto dom = reals_of(at(cj, "domain"), "domain");
  if (dom.size() != 2) throw CheckpointError("checkpoint domain must have two bounds");
  sc.domain = Interval{dom[0], dom[1]};
  if (!at(cj, "kernel").is_string()) throw CheckpointError("checkpoint kernel must be a name");
  try {
    sc.kernel = Kernel::from_name(at(cj, "kernel").get<std::string>());
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint kernel: ") + e.what());
  }
  if (!at(cj, "degree").is_number_integer()) throw CheckpointError("checkpoint degree must be an integer");
  sc.degree = at(cj, "degree").get<int>();
  sc.alpha = real_of(at(cj, "alpha"), "alpha");
  std::vector<PolyPiece> pieces;
  for (const auto& p : at(cj, "W")) {
    if (!at(p, "lo_closed").is_boolean()) throw CheckpointError("checkpoint W piece lo_closed must be boolean");
    pieces.push_back(PolyPiece{real_of(at(p, "lo"), "lo"), real_of(at(p, "hi"), "hi"), at(p, "lo_closed").get<bool>(),
                               ShiftedPolynomial{real_of(at(p, "center"), "center"), reals_of(at(p, "coeffs"), "coeffs")}});
  }
  try {
    sc.W = PiecewisePolynomial(std::move(pieces));
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint W: ") + e.what());
  }
  std::vector<std::vector<double>> nodes;
  for (const auto& n : at(j, "nodes")) nodes.push_back(reals_of(n, "nodes"));
  const Json& bj = at(j, "bandwidth");
  BandwidthState b;
  const Json& mode = at(bj, "mode");
  if (mode == "oracle") {
    b.mode = BandwidthMode::Oracle;
  } else if (mode == "renewable") {
    b.mode = BandwidthMode::Renewable;
  } else {
    throw CheckpointError("checkpoint bandwidth mode must be oracle or renewable");
  }
  b.C_h = real_of(at(bj, "C_h"), "C_h");
  b.N_total = uint_of(at(bj, "N_total"), "N_total");
  b.S_h = real_of(at(bj, "S_h"), "S_h");
  b.last_h = real_of(at(bj, "last_h"), "last_h");
  b.t = uint_of(at(bj, "t"), "t");
  b.C_h_x = reals_of(at(bj, "C_h_x"), "C_h_x");
  b.S_h_x = reals_of(at(bj, "S_h_x"), "S_h_x");
  b.last_h_x = reals_of(at(bj, "last_h_x"), "last_h_x");
  RenewableState st;
  try {
    st = init_state(reals_of(at(j, "grid"), "grid"), std::move(nodes), std::move(sc), std::move(b));
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint state is inconsistent: ") + e.what());
  }
  st.N = uint_of(at(j, "N"), "N");
  st.fX = reals_of(at(j, "fX"), "fX");
  st.S.clear();
  for (const auto& s : at(j, "S")) st.S.push_back(reals_of(s, "S"));
  st.E_WY = real_of(at(j, "E_WY"), "E_WY");
  st.E_WY2 = real_of(at(j, "E_WY2"), "E_WY2");
  if (st.fX.size() != st.grid.size() || st.S.size() != st.grid.size()) {
    throw CheckpointError("checkpoint accumulators do not match the grid");
  }
  for (std::size_t i = 0; i < st.S.size(); ++i)
    if (st.S[i].size() != st.nodes[i].size()) throw CheckpointError("checkpoint accumulators do not match the node sets");
  if (!at(j, "fingerprint").is_string() || at(j, "fingerprint").get<std::string>() != hex64(st.fingerprint)) {
    throw CheckpointError("checkpoint state fingerprint does not match its grids and settings");
  }
  return st;
}

Json session_json(const Session& s) {
  Json config = Json::object();
  const std::string text = format_config(s.config);
  for (auto line : split(text, '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    config[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  Json pending = Json::array();
  for (const auto& c : s.pending) pending.push_back(chunk_json(c));
  Json doc = Json::object();
  doc["format"] = "streamcqr-checkpoint";
  doc["format_version"] = kCheckpointVersion;
  doc["fingerprint"] = hex64(engine_fingerprint(s.config));
  doc["config"] = config;
  doc["chunks"] = s.chunks;
  doc["last_seq"] = s.last_seq ? Json(*s.last_seq) : Json(nullptr);
  doc["C_h"] = hex(s.C_h);
  doc["pending"] = pending;
  doc["state"] = s.state ? state_json(*s.state) : Json(nullptr);
  return doc;
}

}  // namespace

std::string checkpoint_payload(const Session& s) { return session_json(s).dump(1); }

std::string serialize_checkpoint(const Session& s, const std::string& written_at) {
  Json doc = session_json(s);
  Json out = Json::object();
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    out[it.key()] = it.value();
    if (it.key() == "format_version") out["written_at"] = written_at;
  }
  return out.dump(1) + "\n";
}

Session parse_checkpoint(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || doc.at("format") != "streamcqr-checkpoint") {
    throw CheckpointError("not a streamcqr checkpoint");
  }
  const Json& version = at(doc, "format_version");
  if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint format version " + version.dump() + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  std::string config_text;
  for (auto it = at(doc, "config").begin(); it != at(doc, "config").end(); ++it) {
    if (!it.value().is_string()) throw CheckpointError("checkpoint config values must be strings");
    config_text += it.key() + " = " + it.value().get<std::string>() + "\n";
  }
  Session s;
  try {
    s.config = parse_config(config_text);
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  if (!at(doc, "fingerprint").is_string() || at(doc, "fingerprint").get<std::string>() != hex64(engine_fingerprint(s.config))) {
    throw CheckpointError("checkpoint fingerprint does not match its configuration");
  }
  s.chunks = uint_of(at(doc, "chunks"), "chunks");
  const Json& ls = at(doc, "last_seq");
  if (!ls.is_null()) {
    if (!ls.is_number_integer()) throw CheckpointError("checkpoint last_seq must be an integer");
    s.last_seq = ls.get<std::int64_t>();
  }
  s.C_h = real_of(at(doc, "C_h"), "C_h");
  for (const auto& c : at(doc, "pending")) s.pending.push_back(chunk_of(c));
  if (!at(doc, "state").is_null()) s.state = state_of(at(doc, "state"));
  return s;
}

void save_checkpoint(const std::string& path, const Session& session) {
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  const std::string text = serialize_checkpoint(session, stamp);
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw CheckpointError("cannot write checkpoint '" + tmp + "': " + std::strerror(errno));
  std::size_t done = 0;
  while (done < text.size()) {
    const ssize_t w = ::write(fd, text.data() + done, text.size() - done);
    if (w < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      ::unlink(tmp.c_str());
      throw CheckpointError("cannot write checkpoint '" + tmp + "': " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(w);
  }
  ::fsync(fd);
  ::close(fd);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw CheckpointError("cannot replace checkpoint '" + path + "': " + std::strerror(errno));
  }
}

Session load_checkpoint(const std::string& path) {
  bool ok = false;
  const std::string text = read_file(path, ok);
  if (!ok) throw CheckpointError("no checkpoint at '" + path + "'");
  return parse_checkpoint(text);
}

CheckpointLock::CheckpointLock(const std::string& checkpoint_path) {
  const std::string lock = checkpoint_path + ".lock";
  fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT, 0644);
  if (fd_ < 0) throw CheckpointError("cannot open lock file '" + lock + "': " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw CheckpointError("checkpoint '" + checkpoint_path + "' is locked by another writer");
  }
}

CheckpointLock::~CheckpointLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// ---------------------------------------------------------------- scenarios

ScenarioConfig parse_scenario(std::string_view text) {
  KeyReader r(parse_key_values(text, "scenario"), "scenario");
  ScenarioConfig c;
  if (r.has("name")) c.name = r.raw("name");
  if (c.name.empty() || c.name.find_first_of(",\n") != std::string::npos) {
    throw InvalidArgument("scenario: name must be nonempty and free of commas");
  }
  if (r.has("model")) {
    const auto& m = r.raw("model");
    if (m == "1") {
      c.stream.model = 1;
    } else if (m == "2") {
      c.stream.model = 2;
    } else {
      r.fail("model", "expected 1 or 2");
    }
  }
  if (r.has("error")) {
    try {
      c.stream.error = parse_error_kind(r.raw("error"));
    } catch (const Error& e) {
      r.fail("error", e.what());
    }
  }
  r.real("lambda", c.stream.lambda);
  if (!(c.stream.lambda >= 1.0)) r.fail("lambda", "must be at least 1");
  r.real("sigma_scale", c.stream.sigma_scale);
  if (!(c.stream.sigma_scale > 0.0)) r.fail("sigma_scale", "must be positive");
  r.count("N_T", c.N_T);
  if (r.has("chunk_sizes")) {
    c.chunk_sizes.clear();
    for (auto item : split(r.raw("chunk_sizes"), ',')) {
      std::uint64_t v = 0;
      if (!parse_unsigned(item, v) || v == 0) r.fail("chunk_sizes", "expected positive integers");
      c.chunk_sizes.push_back(v);
    }
  }
  r.count("seed", c.seed);
  r.count("replications", c.replications);
  if (c.replications == 0) r.fail("replications", "must be positive");
  r.count("validation_size", c.validation_size);
  r.count("grid_size", c.grid_size);
  r.count("tau_count", c.tau_count);
  if (r.has("lpi_degree")) {
    std::uint64_t d = 0;
    if (!parse_unsigned(r.raw("lpi_degree"), d) || d < 1 || d > 10) r.fail("lpi_degree", "expected an integer in [1, 10]");
    c.degree = static_cast<int>(d);
  }
  r.real("alpha", c.alpha);
  if (!(c.alpha > 0.0 && c.alpha < 0.5)) r.fail("alpha", "must lie in (0, 0.5)");
  r.count("folds", c.folds);
  r.reals("cv_candidates", c.candidates);
  r.real("C_h", c.fixed_C_h);
  r.real("C_nw", c.fixed_C_nw);
  if (r.has("symmetric")) {
    const auto& v = r.raw("symmetric");
    bool b = false;
    if (v == "auto") {
      c.symmetric = -1;
    } else if (parse_bool(v, b)) {
      c.symmetric = b ? 1 : 0;
    } else {
      r.fail("symmetric", "expected auto, true or false");
    }
  }
  if (r.has("pairs")) {
    c.pairs.clear();
    for (auto item : split(r.raw("pairs"), ',')) c.pairs.emplace_back(item);
  }
  if (c.validation_size > c.N_T) throw InvalidArgument("scenario: validation_size exceeds N_T");
  r.finish();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  bool ok = false;
  const std::string text = read_file(path, ok);
  if (!ok) throw InvalidArgument("cannot read scenario file '" + path + "'");
  return parse_scenario(text);
}

}  // namespace streamcqr
