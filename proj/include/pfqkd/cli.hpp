#pragma once

// Run configuration and the command driver behind the pfqkd tool. Kept in
// the library so the tests can run commands in-process.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "pfqkd/keyrate.hpp"
#include "pfqkd/oracle.hpp"

namespace pfqkd {

/// Bad configuration or arguments. Maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

/// Shortest round-trip decimal form, independent of locale.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) throw UsageError("invalid number for '" + key + "': '" + text + "'");
  return v;
}

inline std::vector<HeraldClass> parse_classes(const std::string& text) {
  std::vector<HeraldClass> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bool found = false;
    for (HeraldClass c : HeraldClass::all()) {
      if (c.name() == item || c.label() == item) {
        out.push_back(c);
        found = true;
        break;
      }
    }
    if (!found) throw UsageError("classes: unknown herald class '" + item + "'");
  }
  if (out.empty()) throw UsageError("classes: empty class list");
  return out;
}

struct RunConfig {
  std::string command = "sweep";

  double lambda = 0.001;
  double lambda_min = 1e-4;
  double lambda_max = 0.3;
  int lambda_steps = 0;  ///< sweep: 0 uses `lambda`; optimize: grid size (0 means 40)
  double eta_h = 0.65;
  double dark_h = 1e-6;
  int n_cut = 10;
  double tail_eps = 1e-10;

  double alpha = 0.2;
  double eta_d = 0.65;
  double dark_b = 1e-6;
  double e_d = 0.015;
  double distance_min = 0.0;
  double distance_max = 250.0;
  double distance_step = 10.0;

  double q = 0.5;
  double f = 1.16;
  double pulse_rate = 1e6;
  std::string classes = "H,V,+,-";

  std::string out;  ///< empty writes to stdout

  /// Applies one key=value setting. Keys use '-' or '_' interchangeably.
  void set(std::string key, const std::string& value) {
    for (auto& ch : key)
      if (ch == '_') ch = '-';
    auto num = [&] { return parse_number(key, value); };
    auto integer = [&] {
      const double v = num();
      if (v != static_cast<double>(static_cast<int>(v))) throw UsageError("'" + key + "' must be an integer");
      return static_cast<int>(v);
    };
    if (key == "command") command = value;
    else if (key == "lambda") lambda = num();
    else if (key == "lambda-min") lambda_min = num();
    else if (key == "lambda-max") lambda_max = num();
    else if (key == "lambda-steps") lambda_steps = integer();
    else if (key == "eta-h") eta_h = num();
    else if (key == "dark") dark_h = dark_b = num();
    else if (key == "dark-h") dark_h = num();
    else if (key == "dark-b") dark_b = num();
    else if (key == "n-cut") n_cut = integer();
    else if (key == "tail-eps") tail_eps = num();
    else if (key == "alpha") alpha = num();
    else if (key == "eta-d") eta_d = num();
    else if (key == "e-d") e_d = num();
    else if (key == "distance-min") distance_min = num();
    else if (key == "distance-max") distance_max = num();
    else if (key == "distance-step") distance_step = num();
    else if (key == "q") q = num();
    else if (key == "f") f = num();
    else if (key == "pulse-rate") pulse_rate = num();
    else if (key == "classes") classes = value;
    else if (key == "out") out = value;
    else throw UsageError("unknown configuration key '" + key + "'");
  }

  /// Resolved settings in a fixed order, for the output header.
  std::vector<std::pair<std::string, std::string>> entries() const {
    return {{"command", command},
            {"lambda", format_number(lambda)},
            {"lambda-min", format_number(lambda_min)},
            {"lambda-max", format_number(lambda_max)},
            {"lambda-steps", std::to_string(lambda_steps)},
            {"eta-h", format_number(eta_h)},
            {"dark-h", format_number(dark_h)},
            {"n-cut", std::to_string(n_cut)},
            {"tail-eps", format_number(tail_eps)},
            {"alpha", format_number(alpha)},
            {"eta-d", format_number(eta_d)},
            {"dark-b", format_number(dark_b)},
            {"e-d", format_number(e_d)},
            {"distance-min", format_number(distance_min)},
            {"distance-max", format_number(distance_max)},
            {"distance-step", format_number(distance_step)},
            {"q", format_number(q)},
            {"f", format_number(f)},
            {"pulse-rate", format_number(pulse_rate)},
            {"classes", classes}};
  }

  std::vector<double> distance_grid() const {
    if (!(distance_step > 0.0) || !(distance_max >= distance_min) || !(distance_min >= 0.0)) {
      throw UsageError("distance grid is empty: need 0 <= distance-min <= distance-max and distance-step > 0 (got " +
                       format_number(distance_min) + ".." + format_number(distance_max) + " step " +
                       format_number(distance_step) + ")");
    }
    std::vector<double> grid;
    const auto count = static_cast<long>((distance_max - distance_min) / distance_step + 1e-9) + 1;
    for (long i = 0; i < count; ++i) grid.push_back(distance_min + static_cast<double>(i) * distance_step);
    return grid;
  }

  SourceParams source(double lam) const {
    Tolerance tol;
    tol.tail_eps = tail_eps;
    return SourceParams(lam, eta_h, dark_h, n_cut, tol);
  }

  /// Like source(), but raises n_cut as needed to meet tail-eps at this λ.
  SourceParams source_auto(double lam) const {
    Tolerance tol;
    tol.tail_eps = tail_eps;
    const int n = required_n_cut(lam, tail_eps, n_cut);
    return SourceParams(lam, eta_h, dark_h, n, tol);
  }

  ChannelParams channel() const {
    ChannelParams ch;
    ch.alpha = alpha;
    ch.eta_d = eta_d;
    ch.dark = dark_b;
    ch.e_d = e_d;
    return ch;
  }

  ProtocolParams protocol() const {
    ProtocolParams p;
    p.q = q;
    p.f = f;
    p.pulse_rate = pulse_rate;
    p.keygen_classes = parse_classes(classes);
    return p;
  }
};

/// Reads `key = value` lines; '#' starts a comment.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

namespace detail {

inline void write_header(std::ostream& out, const RunConfig& cfg) {
  out << "# pfqkd " << cfg.command << "\n";
  for (const auto& [k, v] : cfg.entries()) out << "# " << k << " = " << v << "\n";
  out << "# decoy: each key class uses its own basis; errors counted against the class's nominal state\n";
}

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << "\n";
}

inline void validate(const RunConfig& cfg) {
  try {
    cfg.channel().validate();
    cfg.protocol().validate();
    if (cfg.n_cut < 2) throw DomainError("n-cut must be >= 2");
    if (!(cfg.tail_eps > 0.0 && cfg.tail_eps < 1e-3)) throw DomainError("tail-eps must lie in (0, 1e-3)");
    if (!(cfg.eta_h >= 0.0 && cfg.eta_h <= 1.0)) throw DomainError("eta-h must lie in [0,1]");
    if (!(cfg.dark_h >= 0.0 && cfg.dark_h < 1.0)) throw DomainError("dark-h must lie in [0,1)");
    if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw DomainError("lambda must lie in (0,1]");
    if (!(cfg.lambda_min > 0.0 && cfg.lambda_max <= 1.0 && cfg.lambda_min <= cfg.lambda_max))
      throw DomainError("lambda-min/lambda-max must satisfy 0 < min <= max <= 1");
    if (cfg.lambda_steps < 0) throw DomainError("lambda-steps must be >= 0");
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

inline void run_sweep(const RunConfig& cfg, std::ostream& out) {
  const auto grid = cfg.distance_grid();
  const auto p = cfg.protocol();
  const auto ch = cfg.channel();
  const auto lambdas = cfg.lambda_steps > 0 ? log_grid(cfg.lambda_min, cfg.lambda_max, cfg.lambda_steps)
                                            : std::vector<double>{cfg.lambda};
  std::vector<std::string> header{"distance_km", "lambda",         "n_cut",      "per_pulse_rate",
                                  "throughput_bps", "heralded_rate", "keygen_prob"};
  for (auto c : p.keygen_classes) {
    for (const char* col : {"Q_", "E_", "p1y1_lower_", "e1_upper_", "R_"}) header.push_back(col + c.label());
  }
  write_row(out, header);
  for (double lam : lambdas) {
    const SourceParams src = cfg.source_auto(lam);
    const RateModel model(src);
    for (double L : grid) {
      const auto pt = model.evaluate(ch.at_distance(L), p);
      std::vector<std::string> row{format_number(L),
                                   format_number(lam),
                                   std::to_string(src.n_cut),
                                   format_number(pt.per_pulse_rate),
                                   format_number(pt.throughput),
                                   format_number(pt.heralded_rate),
                                   format_number(pt.keygen_prob)};
      for (const auto& c : pt.classes) {
        for (double v : {c.stats.gain, c.stats.qber, c.bounds.p1y1_lower, c.bounds.e1_upper, c.rate})
          row.push_back(format_number(v));
      }
      write_row(out, row);
    }
  }
}

inline void run_optimize(const RunConfig& cfg, std::ostream& out) {
  const auto grid = cfg.distance_grid();
  const auto p = cfg.protocol();
  const auto ch = cfg.channel();
  LambdaRange range;
  range.lo = cfg.lambda_min;
  range.hi = cfg.lambda_max;
  range.grid_points = cfg.lambda_steps > 0 ? cfg.lambda_steps : 40;
  if (range.grid_points < 3) throw UsageError("lambda-steps must be >= 3 for optimize");
  const SourceParams tmpl = cfg.source_auto(cfg.lambda_min);
  write_row(out, {"distance_km", "lambda_star", "throughput_bps", "mean_pairs", "per_pulse_rate", "all_zero"});
  for (double L : grid) {
    const auto opt = optimize_lambda(ch.at_distance(L), p, range, tmpl);
    write_row(out, {format_number(L), format_number(opt.lambda), format_number(opt.point.throughput),
                    format_number(2.0 * opt.lambda), format_number(opt.point.per_pulse_rate),
                    opt.all_zero ? "1" : "0"});
  }
}

inline void run_baseline(const RunConfig& cfg, std::ostream& out) {
  const auto grid = cfg.distance_grid();
  const auto p = cfg.protocol();
  const auto ch = cfg.channel();
  write_row(out, {"distance_km", "mu_star", "rate"});
  for (double L : grid) {
    const auto w = optimal_wcp_baseline(ch.at_distance(L), p);
    write_row(out, {format_number(L), format_number(w.mu), format_number(w.rate)});
  }
}

/// Returns false when some class exceeds the 1e-9 agreement threshold.
inline bool run_verify(const RunConfig& cfg, std::ostream& out) {
  if (cfg.n_cut > kOracleMaxN) throw UsageError("n-cut must be <= 8 for verify (oracle limit)");
  const auto rows = verify_against_oracle(cfg.source(cfg.lambda));
  double worst = 0.0;
  write_row(out, {"basis", "class", "max_abs_discrepancy"});
  for (const auto& r : rows) {
    write_row(out, {to_string(r.basis), r.cls.label(), format_number(r.max_abs)});
    worst = std::max(worst, r.max_abs);
  }
  out << "# max discrepancy " << format_number(worst) << (worst <= 1e-9 ? " (ok)" : " (FAIL)") << "\n";
  return worst <= 1e-9;
}

inline void run_dists(const RunConfig& cfg, std::ostream& out) {
  const HeraldedSource src(cfg.source(cfg.lambda));
  write_row(out, {"basis", "class", "m", "k", "probability"});
  for (Basis b : {Basis::z, Basis::x}) {
    for (const auto& d : src.distributions(b)) {
      for (int n = 0; n <= d.n_cut(); ++n)
        for (int m = 0; m <= n; ++m)
          write_row(out, {to_string(b), d.herald_class().label(), std::to_string(m), std::to_string(n - m),
                          format_number(d.at(m, n - m))});
    }
  }
}

}  // namespace detail

/// Executes cfg.command, writing CSV to `out` and diagnostics to `err`.
/// Returns the process exit status.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    detail::validate(cfg);
    std::ostringstream buf;
    detail::write_header(buf, cfg);
    bool ok = true;
    if (cfg.command == "sweep") detail::run_sweep(cfg, buf);
    else if (cfg.command == "optimize") detail::run_optimize(cfg, buf);
    else if (cfg.command == "baseline") detail::run_baseline(cfg, buf);
    else if (cfg.command == "verify") ok = detail::run_verify(cfg, buf);
    else if (cfg.command == "dists") detail::run_dists(cfg, buf);
    else throw UsageError("unknown command '" + cfg.command + "'");
    out << buf.str();
    if (!ok) {
      err << "error: oracle discrepancy above 1e-9\n";
      return kExitComputation;
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
}

}  // namespace pfqkd
