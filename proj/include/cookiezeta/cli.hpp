#pragma once

// Command runner behind the cookiezeta tool: reads a JSON run config,
// dispatches a command, writes CSV tables (17 significant digits, '#'
// provenance lines) and a JSON summary. Zeta level tables are cached on disk.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cookiezeta/dynamics.hpp"
#include "cookiezeta/error.hpp"
#include "cookiezeta/multifractal.hpp"
#include "cookiezeta/numeric.hpp"
#include "cookiezeta/potential.hpp"
#include "cookiezeta/thermo.hpp"
#include "cookiezeta/zeta.hpp"

namespace cookiezeta::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* version = "0.1.0";

inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the canonical (key-sorted, compact) dump.
inline std::string config_hash(const json& j) {
  const std::string s = j.dump();
  return hex(fnv1a(s.data(), s.size()));
}

struct Options {
  std::string config;
  std::string out = ".";
  std::string cache;  // empty: <out>/cache
  unsigned threads = 1;
};

struct RunConfig {
  json raw;
  std::string hash;
  CookieCutterMap map;
  Potential psi = Potential::zero();
  int depth = 10;
  int levels = 14;
  ZetaStrategy strategy = ZetaStrategy::automatic;
  std::vector<double> q{-3.0, -1.0, 0.0, 1.0, 2.0, 3.0};
  std::vector<int> tau_levels{12, 14};
  std::vector<double> alphas;
  int alpha_points = 21;
  std::optional<ZetaConfig> window;
  std::vector<double> sigma{0.8, 1.0, 1.5};
  std::vector<double> sigma_offsets{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1};
  std::optional<double> delta;
  int growth_levels = 2000;
  double abscissa_lo = 0.0, abscissa_hi = 2.0;
};

namespace detail {

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorKind::ConfigError, std::string("missing field '") + key + "'");
  return field<T>(j, key, T{});
}

inline CookieCutterMap parse_map(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "cantor") {
      return dynamics::build_map({BranchSpec::affine(1.0 / 3.0, 0.0), BranchSpec::affine(1.0 / 3.0, 2.0 / 3.0)});
    }
    fail(ErrorKind::ConfigError, "unknown map preset '" + name + "'");
  }
  if (!j.is_array()) fail(ErrorKind::ConfigError, "map must be a preset name or a list of branches");
  std::vector<BranchSpec> specs;
  for (const auto& b : j) {
    BranchSpec s;
    if (b.contains("affine")) {
      const auto p = field<std::vector<double>>(b, "affine", {});
      if (p.size() != 2) fail(ErrorKind::ConfigError, "affine branch needs [slope, intercept]");
      s = BranchSpec::affine(p[0], p[1]);
    } else if (b.contains("moebius")) {
      const auto p = field<std::vector<double>>(b, "moebius", {});
      if (p.size() != 4) fail(ErrorKind::ConfigError, "moebius branch needs [a, b, c, d]");
      s = BranchSpec::moebius(p[0], p[1], p[2], p[3]);
    } else {
      fail(ErrorKind::ConfigError, "branch needs an 'affine' or 'moebius' entry");
    }
    if (b.contains("image")) {
      const auto im = field<std::vector<double>>(b, "image", {});
      if (im.size() != 2) fail(ErrorKind::ConfigError, "image needs [lo, hi]");
      s = s.with_image(im[0], im[1]);
    }
    specs.push_back(s);
  }
  return dynamics::build_map(specs);
}

// {"bernoulli": [...]}, {"weights": [...]}, {"natural": true}, or
// {"phi": c, "weights": [...], "constant": c0}; "normalize": true subtracts P.
inline Potential parse_potential(const json& j, const CookieCutterMap& map, int depth) {
  if (!j.is_object()) fail(ErrorKind::ConfigError, "potential must be an object");
  Potential psi = Potential::zero();
  if (j.contains("bernoulli")) {
    psi = Potential::bernoulli(field<std::vector<double>>(j, "bernoulli", {}));
  } else if (field<bool>(j, "natural", false)) {
    psi = thermo::solve_bowen(map, depth) * Potential::log_derivative();
  } else {
    if (j.contains("weights")) psi = Potential::locally_constant(field<std::vector<double>>(j, "weights", {}));
    const double c = field<double>(j, "phi", 0.0);
    if (c != 0.0) psi = psi + c * Potential::log_derivative();
    psi = psi + field<double>(j, "constant", 0.0);
  }
  psi.validate(map);
  if (field<bool>(j, "normalize", false)) psi = thermo::normalize(map, psi, depth);
  return psi;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using detail::field;
  if (!j.is_object()) fail(ErrorKind::ConfigError, "config must be a JSON object");
  RunConfig c;
  c.raw = j;
  c.hash = config_hash(j);
  c.depth = field<int>(j, "depth", c.depth);
  c.levels = field<int>(j, "levels", c.levels);
  if (c.depth < 1) fail(ErrorKind::ConfigError, "depth must be positive");
  if (c.levels < 1) fail(ErrorKind::ConfigError, "levels must be positive");
  c.map = detail::parse_map(detail::required<json>(j, "map"));
  c.psi = j.contains("potential") ? detail::parse_potential(j.at("potential"), c.map, c.depth)
                                  : thermo::solve_bowen(c.map, c.depth) * Potential::log_derivative();
  const auto strategy = field<std::string>(j, "strategy", "automatic");
  if (strategy == "automatic") {
    c.strategy = ZetaStrategy::automatic;
  } else if (strategy == "enumerate") {
    c.strategy = ZetaStrategy::enumerate;
  } else if (strategy == "symbol_classes") {
    c.strategy = ZetaStrategy::symbol_classes;
  } else {
    fail(ErrorKind::ConfigError, "unknown strategy '" + strategy + "'");
  }
  c.q = field(j, "q", c.q);
  c.tau_levels = field(j, "tau_levels", c.tau_levels);
  c.alphas = field(j, "alphas", c.alphas);
  c.alpha_points = field(j, "alpha_points", c.alpha_points);
  if (j.contains("alpha")) {
    ZetaConfig w{field<double>(j, "alpha", 0.0), field<double>(j, "a", 0.1), field<double>(j, "b", 10.0)};
    w.validate();
    c.window = w;
  }
  c.sigma = field(j, "sigma", c.sigma);
  c.sigma_offsets = field(j, "sigma_offsets", c.sigma_offsets);
  if (j.contains("delta")) c.delta = field<double>(j, "delta", 0.0);
  c.growth_levels = field(j, "growth_levels", c.growth_levels);
  if (j.contains("abscissa_bracket")) {
    const auto br = field<std::vector<double>>(j, "abscissa_bracket", {});
    if (br.size() != 2) fail(ErrorKind::ConfigError, "abscissa_bracket needs [lo, hi]");
    c.abscissa_lo = br[0];
    c.abscissa_hi = br[1];
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---- output ---------------------------------------------------------------

struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;  // extra '#' lines

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) fail(ErrorKind::InvalidArgument, "row width differs from the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!std::isfinite(row[i])) {
        fail(ErrorKind::NoConvergence, "non-finite value in column '" + columns[i] + "' of " + name);
      }
    }
    rows.push_back(std::move(row));
  }
};

inline std::string render_csv(const ResultTable& t, const RunConfig& cfg, const std::string& command) {
  std::string out = "# cookiezeta " + std::string(version) + " " + command + "\n";
  out += "# config_hash " + cfg.hash + "\n";
  out += "# depth " + std::to_string(cfg.depth) + " levels " + std::to_string(cfg.levels) + "\n";
  for (const auto& n : t.notes) out += "# " + n + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  char buf[40];
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      if (i) out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) fail(ErrorKind::ConfigError, "cannot write " + path.string());
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---- level cache ----------------------------------------------------------

inline constexpr char cache_magic[8] = {'C', 'Z', 'L', 'E', 'V', 'E', 'L', '1'};
inline constexpr std::size_t cache_entry_limit = std::size_t{1} << 22;

inline std::string level_key(const RunConfig& cfg) {
  json k;
  k["map"] = cfg.raw.at("map");
  k["potential"] = cfg.raw.contains("potential") ? cfg.raw.at("potential") : json("natural");
  k["depth"] = cfg.depth;
  k["levels"] = cfg.levels;
  k["strategy"] = cfg.raw.contains("strategy") ? cfg.raw.at("strategy") : json("automatic");
  return config_hash(k);
}

inline void save_levels(const fs::path& path, const LevelTable& t) {
  std::string buf(cache_magic, sizeof cache_magic);
  auto put = [&](const void* p, std::size_t n) { buf.append(static_cast<const char*>(p), n); };
  const std::uint64_t n = t.levels.size();
  put(&n, sizeof n);
  for (const auto& level : t.levels) {
    const std::uint64_t m = level.size();
    put(&m, sizeof m);
    for (const auto& e : level) {
      put(&e.log_len, sizeof(double));
      put(&e.log_mu, sizeof(double));
      put(&e.log_mult, sizeof(double));
    }
  }
  const std::uint64_t sum = fnv1a(buf.data(), buf.size());
  put(&sum, sizeof sum);
  fs::create_directories(path.parent_path());
  write_file(path, buf);
}

inline LevelTable load_levels(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::size_t body = buf.size() >= 8 ? buf.size() - 8 : 0;
  std::uint64_t sum = 0;
  if (buf.size() < sizeof cache_magic + 16 || std::memcmp(buf.data(), cache_magic, sizeof cache_magic) != 0) {
    fail(ErrorKind::CacheCorrupt, "bad header in " + path.string());
  }
  std::memcpy(&sum, buf.data() + body, sizeof sum);
  if (sum != fnv1a(buf.data(), body)) fail(ErrorKind::CacheCorrupt, "checksum mismatch in " + path.string());
  std::size_t pos = sizeof cache_magic;
  auto get = [&](void* p, std::size_t n) {
    if (pos + n > body) fail(ErrorKind::CacheCorrupt, "truncated " + path.string());
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  };
  std::uint64_t n = 0;
  get(&n, sizeof n);
  LevelTable t;
  t.levels.resize(static_cast<std::size_t>(std::min<std::uint64_t>(n, body)));
  for (auto& level : t.levels) {
    std::uint64_t m = 0;
    get(&m, sizeof m);
    if (m > body) fail(ErrorKind::CacheCorrupt, "bad level size in " + path.string());
    level.resize(static_cast<std::size_t>(m));
    for (auto& e : level) {
      get(&e.log_len, sizeof(double));
      get(&e.log_mu, sizeof(double));
      get(&e.log_mult, sizeof(double));
    }
  }
  if (pos != body) fail(ErrorKind::CacheCorrupt, "trailing bytes in " + path.string());
  return t;
}

struct CachedLevels {
  LevelTable table;
  std::string status;  // hit, miss, recomputed, skipped
};

/// Full level table for the config, reusing the cache when it is intact.
inline std::optional<CachedLevels> cached_levels(const RunConfig& cfg, const fs::path& dir, const ZetaOptions& opt) {
  const bool classes = cfg.map.is_affine() && cfg.psi.locally_constant_on(cfg.map) &&
                       cfg.strategy != ZetaStrategy::enumerate;
  const double k = cfg.map.k();
  const double entries = classes ? 0.5 * cfg.levels * (cfg.levels + 3.0) * (cfg.map.k() == 2 ? 1.0 : cfg.levels)
                                 : std::pow(k, cfg.levels + 1);
  if (entries > static_cast<double>(cache_entry_limit)) return std::nullopt;
  const fs::path path = dir / ("levels-" + level_key(cfg) + ".bin");
  CachedLevels out;
  if (fs::exists(path)) {
    try {
      out.table = load_levels(path);
      out.status = "hit";
      return out;
    } catch (const Error& e) {
      out.status = std::string("recomputed after ") + e.what();
    }
  } else {
    out.status = "miss";
  }
  out.table = zeta::level_table(cfg.map, cfg.psi, cfg.levels, opt);
  save_levels(path, out.table);
  return out;
}

// ---- commands -------------------------------------------------------------

struct Outcome {
  std::vector<ResultTable> tables;
  json summary = json::object();
  bool passed = true;  // verify only
};

inline Outcome cmd_dim(const RunConfig& cfg) {
  Outcome o;
  ResultTable t{"dim", {"depth", "delta"}, {}, {}};
  double delta = 0.0;
  for (int d = 1; d <= cfg.depth; ++d) {
    delta = thermo::solve_bowen(cfg.map, d);
    t.add({static_cast<double>(d), delta});
  }
  o.summary["delta"] = delta;
  o.tables.push_back(std::move(t));
  return o;
}

inline Outcome cmd_pressure(const RunConfig& cfg) {
  Outcome o;
  ResultTable t{"pressure", {"depth", "pressure", "residual", "iterations"}, {}, {}};
  std::vector<double> diffs;
  double prev = 0.0;
  for (int d = 1; d <= cfg.depth; ++d) {
    const auto p = thermo::pressure(cfg.map, cfg.psi, d);
    t.add({static_cast<double>(d), p.value, p.residual, static_cast<double>(p.iterations)});
    if (d > 1) diffs.push_back(std::abs(p.value - prev));
    prev = p.value;
  }
  o.summary["pressure"] = prev;
  o.summary["depth_differences"] = diffs;
  o.tables.push_back(std::move(t));
  return o;
}

inline Outcome cmd_tau(const RunConfig& cfg, const Execution& exec) {
  Outcome o;
  const auto c = multifractal::tau_curve(cfg.map, cfg.psi, cfg.q, cfg.depth, cfg.tau_levels, exec);
  ResultTable t{"tau", {"q", "tau_pressure", "tau_partition", "sum"}, {}, {}};
  t.notes.push_back("tau_pressure: T(q) with P(T phi + q psi) = 0; tau_partition: box counting, equals -T(q)");
  for (std::size_t i = 0; i < c.q.size(); ++i) {
    t.add({c.q[i], c.pressure[i], c.partition[i], c.pressure[i] + c.partition[i]});
  }
  o.summary["convex"] = c.convex;
  o.summary["tau_levels"] = cfg.tau_levels;
  o.tables.push_back(std::move(t));
  return o;
}

inline std::vector<double> alpha_grid(const RunConfig& cfg) {
  if (!cfg.alphas.empty()) return cfg.alphas;
  const auto r = multifractal::alpha_range(cfg.map, cfg.psi, multifractal::default_period(cfg.map.k()));
  std::vector<double> g;
  const int n = std::max(cfg.alpha_points, 2);
  const double pad = 1e-3 * (r.max - r.min);
  for (int i = 0; i < n; ++i) g.push_back(r.min + pad + (r.max - r.min - 2.0 * pad) * i / (n - 1));
  return g;
}

inline Outcome cmd_spectrum(const RunConfig& cfg, const Execution& exec) {
  Outcome o;
  const auto alphas = alpha_grid(cfg);
  const auto c = multifractal::spectrum_curve(cfg.map, cfg.psi, alphas, cfg.depth, exec);
  ResultTable t{"spectrum", {"alpha", "xi", "delta"}, {}, {}};
  json failures = json::array();
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (c.points[i]) {
      t.add({alphas[i], c.points[i]->xi, c.points[i]->delta});
    } else {
      failures.push_back({{"alpha", alphas[i]}, {"error", c.errors[i]}});
    }
  }
  o.summary["concave"] = c.concave;
  o.summary["max_delta"] = finite_or_null(c.max_delta);
  o.summary["argmax_alpha"] = finite_or_null(c.argmax_alpha);
  o.summary["failures"] = failures;
  o.tables.push_back(std::move(t));
  return o;
}

inline const ZetaConfig& need_window(const RunConfig& cfg) {
  if (!cfg.window) fail(ErrorKind::ConfigError, "this command needs 'alpha' (and optionally 'a', 'b')");
  return *cfg.window;
}

inline Outcome cmd_zeta(const RunConfig& cfg, const fs::path& cache_dir, const Execution& exec) {
  Outcome o;
  const auto& w = need_window(cfg);
  ZetaOptions opt{cfg.depth, cfg.strategy, exec};
  LevelTable hits;
  if (auto cached = cached_levels(cfg, cache_dir, opt)) {
    hits = zeta::filter_hits(cached->table, w);
    o.summary["cache"] = cached->status;
  } else {
    hits = zeta::hit_table(cfg.map, cfg.psi, w, cfg.levels, opt);
    o.summary["cache"] = "skipped (table too large)";
  }
  ResultTable t{"zeta", {"sigma", "partial_sum", "last_term"}, {}, {}};
  json tails = json::array();
  for (double s : cfg.sigma) {
    const auto z = zeta::evaluate(hits, s);
    t.add({s, z.partial_sum, z.terms.back()});
    tails.push_back({{"sigma", s}, {"tail_ratio", finite_or_null(z.tail_ratio)},
                     {"tail_estimate", finite_or_null(z.tail_estimate)}});
  }
  const auto counts = zeta::evaluate(hits, 0.0).hits;
  ResultTable h{"zeta_hits", {"level", "hits"}, {}, {}};
  int last_hit = 0;
  for (std::size_t n = 0; n < counts.size(); ++n) {
    h.add({static_cast<double>(n + 1), counts[n]});
    if (counts[n] > 0.0) last_hit = static_cast<int>(n + 1);
  }
  const auto ia = multifractal::i_alpha(cfg.map, cfg.psi, w.alpha, multifractal::default_period(cfg.map.k()));
  o.summary["i_alpha"] = {ia.lo, ia.hi};
  o.summary["last_hit_level"] = last_hit;
  o.summary["tails"] = tails;
  if (!ia.contains_zero_strictly) {
    o.summary["regime"] = "entire regime";
    o.summary["note"] = "entire regime: 0 is not inside I_alpha, so only finitely many intervals hit";
  } else {
    o.summary["regime"] = "abscissa";
  }
  try {
    o.summary["abscissa"] = zeta::abscissa_estimate([&](double s) { return zeta::evaluate(hits, s).terms; },
                                                    cfg.abscissa_lo, cfg.abscissa_hi);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoSignChange) throw;
    o.summary["abscissa"] = nullptr;
    o.summary["abscissa_note"] = e.what();
  }
  o.tables.push_back(std::move(t));
  o.tables.push_back(std::move(h));
  return o;
}

inline Outcome cmd_growth(const RunConfig& cfg, const Execution& exec) {
  Outcome o;
  const auto& w = need_window(cfg);
  const double delta =
      cfg.delta ? *cfg.delta : multifractal::xi_alpha(cfg.map, cfg.psi, w.alpha, cfg.depth).delta;
  std::vector<double> sigmas;
  for (double off : cfg.sigma_offsets) sigmas.push_back(delta + off);
  ZetaOptions opt{cfg.depth, cfg.strategy, exec};
  const auto fit = zeta::growth_exponent_fit(cfg.map, cfg.psi, w, delta, sigmas, cfg.growth_levels, opt);
  ResultTable t{"growth", {"sigma", "offset", "zeta"}, {}, {}};
  for (std::size_t i = 0; i < fit.sigma.size(); ++i) t.add({fit.sigma[i], fit.sigma[i] - delta, fit.zeta[i]});
  o.summary["delta_alpha"] = delta;
  o.summary["kappa"] = fit.kappa;
  o.summary["c"] = fit.c;
  o.summary["residual"] = fit.residual;
  o.summary["levels"] = cfg.growth_levels;
  o.tables.push_back(std::move(t));
  return o;
}

/// Reads the config_hash line of every CSV in `dir` except verify.csv.
inline std::pair<int, int> check_hashes(const fs::path& dir, const std::string& hash) {
  int checked = 0, mismatched = 0;
  if (!fs::exists(dir)) return {0, 0};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv" && e.path().filename() != "verify.csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream f(p);
    std::string line, found;
    while (std::getline(f, line) && line.rfind("#", 0) == 0) {
      if (line.rfind("# config_hash ", 0) == 0) found = line.substr(14);
    }
    ++checked;
    if (found != hash) ++mismatched;
  }
  return {checked, mismatched};
}

inline Outcome cmd_verify(const RunConfig& cfg, const fs::path& out_dir, const Execution& exec) {
  Outcome o;
  ResultTable t{"verify", {"check", "value", "threshold", "passed"}, {}, {}};
  json names = json::array();
  auto record = [&](const std::string& name, double value, double threshold, bool ok) {
    t.notes.push_back("check " + std::to_string(t.rows.size() + 1) + ": " + name);
    t.add({static_cast<double>(t.rows.size() + 1), value, threshold, ok ? 1.0 : 0.0});
    names.push_back({{"check", name}, {"passed", ok}});
    o.passed = o.passed && ok;
  };

  const auto [checked, mismatched] = check_hashes(out_dir, cfg.hash);
  record("config hash matches existing CSVs (" + std::to_string(checked) + " files)", mismatched, 0.0,
         mismatched == 0);

  const int m = std::min(cfg.depth, thermo::max_depth(cfg.map.k()));
  const auto p = thermo::pressure(cfg.map, cfg.psi, m);
  record("pressure depth difference |P_m - P_(m-1)|", p.truncation_error, 1e-6, p.truncation_error < 1e-6);
  record("transfer eigenvector residual", p.residual, 1e-10, p.residual < 1e-10);

  const bool normalized = std::abs(p.value) <= 1e-8;
  if (normalized) {
    const int level = std::min(cfg.levels, 12);
    const auto g = thermo::gibbs_weights(cfg.map, cfg.psi, level, m);
    record("Gibbs normalization defect", g.normalization_defect, 1e-10, g.normalization_defect < 1e-10);
    record("Gibbs ratio spread ln(D/C)", std::log(g.ratio_upper / g.ratio_lower), 10.0,
           std::log(g.ratio_upper / g.ratio_lower) < 10.0);
    std::vector<double> qs;
    for (int i = -6; i <= 6; ++i) qs.push_back(0.5 * i);
    const auto tc = multifractal::tau_curve(cfg.map, cfg.psi, qs, m, {}, exec);
    record("T(q) convex on [-3, 3]", tc.convex ? 1.0 : 0.0, 1.0, tc.convex);
    record("T(1) = 0", std::abs(tc.pressure[8]), 1e-8, std::abs(tc.pressure[8]) < 1e-8);
  }

  if (cfg.window && normalized) {
    const auto& w = *cfg.window;
    const int n = std::min(cfg.levels, 16);
    ZetaOptions opt{m, cfg.strategy, exec};
    const auto hits = zeta::hit_table(cfg.map, cfg.psi, w, n, opt);
    bool sigma_mono = true, level_mono = true, bounded = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}) {
      const auto z = zeta::evaluate(hits, s);
      sigma_mono = sigma_mono && z.partial_sum <= prev;
      prev = z.partial_sum;
      for (double term : z.terms) level_mono = level_mono && term >= 0.0;
    }
    const auto counts = zeta::evaluate(hits, 0.0).hits;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      bounded = bounded && counts[i] <= std::pow(cfg.map.k(), static_cast<double>(i + 1));
    }
    record("zeta nonincreasing in sigma", sigma_mono, 1.0, sigma_mono);
    record("zeta nondecreasing in N", level_mono, 1.0, level_mono);
    record("hit counts at most k^n", bounded, 1.0, bounded);
    const ZetaConfig wider{w.alpha, w.a / 2.0, w.b * 2.0};
    const auto more = zeta::evaluate(zeta::hit_table(cfg.map, cfg.psi, wider, n, opt), 0.0).hits;
    bool window_mono = true;
    for (std::size_t i = 0; i < counts.size(); ++i) window_mono = window_mono && more[i] >= counts[i];
    record("wider window never loses hits", window_mono, 1.0, window_mono);
  }
  o.summary["checks"] = names;
  o.summary["passed"] = o.passed;
  o.tables.push_back(std::move(t));
  return o;
}

inline const char* command_help(const std::string& command) {
  if (command == "dim") return "Bowen dimension per depth. CSV: depth,delta";
  if (command == "pressure") return "P(psi) per depth. CSV: depth,pressure,residual,iterations";
  if (command == "tau") return "tau over the q grid, both conventions. CSV: q,tau_pressure,tau_partition,sum";
  if (command == "spectrum") return "xi_alpha and delta_alpha over the alpha grid. CSV: alpha,xi,delta";
  if (command == "zeta") {
    return "multifractal zeta over the sigma grid. CSV: sigma,partial_sum,last_term; zeta_hits.csv: level,hits";
  }
  if (command == "growth") return "fit zeta ~ c (sigma - delta)^-kappa. CSV: sigma,offset,zeta";
  if (command == "verify") return "invariant suite. CSV: check,value,threshold,passed";
  return "";
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"dim", "pressure", "tau", "spectrum", "zeta", "growth", "verify"};
  return c;
}

/// Runs one command; returns the process exit code (0, 2 validation, 3 numeric).
inline int run(const std::string& command, const Options& opt, std::ostream& err = std::cerr) {
  try {
    const auto cfg = load_config(opt.config);
    const fs::path out_dir = opt.out.empty() ? fs::path(".") : fs::path(opt.out);
    fs::path cache_dir = opt.cache.empty() ? out_dir / "cache" : fs::path(opt.cache);
    if (const char* env = std::getenv("COOKIEZETA_CACHE"); env && *env) cache_dir = env;
    const Execution exec{std::max(1u, opt.threads)};

    Outcome o;
    if (command == "dim") {
      o = cmd_dim(cfg);
    } else if (command == "pressure") {
      o = cmd_pressure(cfg);
    } else if (command == "tau") {
      o = cmd_tau(cfg, exec);
    } else if (command == "spectrum") {
      o = cmd_spectrum(cfg, exec);
    } else if (command == "zeta") {
      o = cmd_zeta(cfg, cache_dir, exec);
    } else if (command == "growth") {
      o = cmd_growth(cfg, exec);
    } else if (command == "verify") {
      o = cmd_verify(cfg, out_dir, exec);
    } else {
      fail(ErrorKind::ConfigError, "unknown command '" + command + "'");
    }

    fs::create_directories(out_dir);
    for (const auto& t : o.tables) write_file(out_dir / (t.name + ".csv"), render_csv(t, cfg, command));
    o.summary["command"] = command;
    o.summary["config_hash"] = cfg.hash;
    o.summary["version"] = version;
    write_file(out_dir / (command + ".json"), o.summary.dump(2) + "\n");
    if (!o.passed) {
      err << "error: verify: invariant checks failed\n";
      return 3;
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_validation_error(e.kind()) ? 2 : 3;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cookiezeta::cli
