#include "depin/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "depin/errors.hpp"

namespace depin {

std::string to_string(Equation e) {
  switch (e) {
    case Equation::twin: return "twin";
    case Equation::dislocation: return "dislocation";
    case Equation::qew1: return "qew1";
    case Equation::qew2: return "qew2";
    case Equation::qew3: return "qew3";
  }
  return "twin";
}

Equation parse_equation(const std::string& s) {
  if (s == "twin") return Equation::twin;
  if (s == "dislocation") return Equation::dislocation;
  if (s == "qew1") return Equation::qew1;
  if (s == "qew2") return Equation::qew2;
  if (s == "qew3") return Equation::qew3;
  throw ValidationError("equation", "expected twin, dislocation, qew1, qew2 or qew3, got '" + s + "'");
}

DefectKind defect_kind(Equation e) {
  switch (e) {
    case Equation::twin: return DefectKind::twin;
    case Equation::dislocation: return DefectKind::dislocation;
    default: return DefectKind::qew;
  }
}

int qew_dim(Equation e) {
  switch (e) {
    case Equation::qew2: return 2;
    case Equation::qew3: return 3;
    default: return 1;
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ValidationError(key, "expected a finite number, got '" + v + "'");
  }
  return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError(key, "expected an integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ValidationError(key, "expected a comma-separated list");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

#define DEPIN_DOUBLE(field)                                                                      \
  Key {                                                                                          \
    #field, [](RunConfig& c, const std::string& v) { c.field = parse_double(#field, v); },      \
        [](const RunConfig& c) { return format_double(c.field); }                                \
  }
#define DEPIN_INT(field)                                                                         \
  Key {                                                                                          \
    #field, [](RunConfig& c, const std::string& v) { c.field = parse_int<int>(#field, v); },    \
        [](const RunConfig& c) { return std::to_string(c.field); }                               \
  }
#define DEPIN_BOOL(field)                                                                        \
  Key {                                                                                          \
    #field, [](RunConfig& c, const std::string& v) { c.field = parse_bool(#field, v); },        \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }               \
  }
#define DEPIN_STRING(field)                                                                      \
  Key {                                                                                          \
    #field, [](RunConfig& c, const std::string& v) { c.field = v; },                             \
        [](const RunConfig& c) { return c.field; }                                               \
  }

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = {
      Key{"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_int<std::uint64_t>("seed", v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }},
      DEPIN_STRING(out),
      DEPIN_INT(threads),
      DEPIN_INT(verbosity),
      DEPIN_DOUBLE(R),
      DEPIN_DOUBLE(lambda),
      DEPIN_DOUBLE(beta),
      DEPIN_DOUBLE(phi_lower),
      DEPIN_DOUBLE(phi_upper),
      DEPIN_INT(count),
      DEPIN_DOUBLE(y_window),
      DEPIN_INT(torus_dim),
      Key{"layout",
          [](RunConfig& c, const std::string& v) {
            if (v == "random") c.layout = Layout::random;
            else if (v == "column") c.layout = Layout::column;
            else throw ValidationError("layout", "expected random or column, got '" + v + "'");
          },
          [](const RunConfig& c) { return std::string(c.layout == Layout::random ? "random" : "column"); }},
      Key{"strength_mode",
          [](RunConfig& c, const std::string& v) {
            if (v == "upper") c.strength_mode = StrengthMode::upper;
            else if (v == "uniform") c.strength_mode = StrengthMode::uniform;
            else throw ValidationError("strength_mode", "expected upper or uniform, got '" + v + "'");
          },
          [](const RunConfig& c) {
            return std::string(c.strength_mode == StrengthMode::upper ? "upper" : "uniform");
          }},
      DEPIN_DOUBLE(epsilon),
      Key{"equation", [](RunConfig& c, const std::string& v) { c.equation = parse_equation(v); },
          [](const RunConfig& c) { return to_string(c.equation); }},
      DEPIN_DOUBLE(alpha),
      DEPIN_DOUBLE(force),
      DEPIN_DOUBLE(dt),
      DEPIN_INT(n_grid),
      DEPIN_DOUBLE(t_max),
      DEPIN_DOUBLE(sample_interval),
      Key{"varpi",
          [](RunConfig& c, const std::string& v) {
            c.varpi = v == "auto" ? std::numeric_limits<double>::quiet_NaN() : parse_double("varpi", v);
          },
          [](const RunConfig& c) { return std::isnan(c.varpi) ? std::string("auto") : format_double(c.varpi); }},
      DEPIN_BOOL(classify),
      DEPIN_STRING(resume),
      DEPIN_DOUBLE(v_min_factor),
      DEPIN_DOUBLE(v_pin_factor),
      DEPIN_DOUBLE(t_dwell),
      DEPIN_INT(k_min),
      DEPIN_BOOL(extrapolate),
      Key{"R_list", [](RunConfig& c, const std::string& v) { c.R_list = parse_list("R_list", v); },
          [](const RunConfig& c) { return join(c.R_list); }},
      DEPIN_INT(n_seeds),
      DEPIN_DOUBLE(tol_fraction),
      DEPIN_DOUBLE(delta),
      DEPIN_INT(budget),
      DEPIN_INT(sweep_k_min),
      DEPIN_STRING(fault),
      DEPIN_BOOL(verify_full),
  };
  return keys;
}

#undef DEPIN_DOUBLE
#undef DEPIN_INT
#undef DEPIN_BOOL
#undef DEPIN_STRING

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& k : schema()) {
    if (k.name == key) {
      k.set(*this, value);
      return;
    }
  }
  throw ValidationError(key, "unknown configuration key");
}

void RunConfig::validate() const {
  require(threads >= 1, "threads", "must be at least 1");
  require(!out.empty(), "out", "must not be empty");
  require(count >= 0, "count", "must be non-negative");
  precipitate_params().validate();
  require(std::isfinite(epsilon) && epsilon < 1.0, "epsilon", "must be < 1 (<= 0 selects the default)");
  if (epsilon > 0.0) require(epsilon <= 1.0 - lambda || lambda == 1.0, "epsilon", "must not exceed 1 - lambda");
  const int implied = equation == Equation::twin || equation == Equation::dislocation ? 2 : qew_dim(equation);
  require(torus_dim <= 0 || torus_dim == implied, "torus_dim",
          "does not match the equation (" + to_string(equation) + " needs " + std::to_string(implied) + ")");
  evolver_spec().validate();
  require(sample_interval >= 0.0, "sample_interval", "must be >= 0");
  require(v_min_factor > 0.0, "v_min_factor", "must be positive");
  require(v_pin_factor > 0.0, "v_pin_factor", "must be positive");
  require(t_dwell >= 0.0, "t_dwell", "must be >= 0");
  require(k_min >= 0, "k_min", "must be >= 0");
  require(sweep_k_min >= 0, "sweep_k_min", "must be >= 0");
  require(budget >= 2, "budget", "must allow at least two probes");
  sweep_options().validate();
  require(fault == "none" || fault == "alpha", "fault", "expected none or alpha");
}

PrecipitateParams RunConfig::precipitate_params() const {
  PrecipitateParams p;
  p.R = R;
  p.lambda = lambda;
  p.beta = beta;
  p.phi_lower = phi_lower;
  p.phi_upper = phi_upper;
  p.count = count;
  p.torus_dim = torus_dim > 0 ? torus_dim
                : equation == Equation::twin || equation == Equation::dislocation ? 2
                                                                                  : qew_dim(equation);
  p.layout = layout;
  p.strength_mode = strength_mode;
  p.seed = seed;
  if (y_window > 0.0) {
    p.y_window = y_window;
  } else {
    p.y_window = 3.0 * R + (count > 1 ? count - 1 : 0) * p.min_spacing() + 1.0;
  }
  return p;
}

EvolverSpec RunConfig::evolver_spec() const {
  EvolverSpec s;
  switch (equation) {
    case Equation::twin: s.op = OperatorKind::fractional; break;
    case Equation::dislocation: s.op = OperatorKind::mean_curvature; break;
    default: s.op = OperatorKind::laplacian; break;
  }
  s.alpha = alpha;
  s.force = force;
  s.dt = dt;
  s.n_grid = n_grid;
  s.t_max = t_max;
  return s;
}

Thresholds RunConfig::thresholds() const {
  Thresholds t;
  t.v_min_factor = v_min_factor;
  t.v_pin_factor = v_pin_factor;
  t.t_dwell = t_dwell;
  t.k_min = k_min;
  t.extrapolate = extrapolate;
  return t;
}

SweepOptions RunConfig::sweep_options() const {
  SweepOptions o;
  o.kind = defect_kind(equation);
  o.qew_dim = qew_dim(equation);
  o.R_list = R_list;
  o.n_seeds = n_seeds;
  o.seed = seed;
  o.lambda = lambda;
  o.phi_lower = phi_lower;
  o.phi_upper = phi_upper;
  o.beta = beta;
  o.epsilon = epsilon;
  o.count = count < 1 ? 1 : count;
  o.alpha = alpha;
  o.n_grid = n_grid;
  o.dt = dt;
  o.tol_fraction = tol_fraction;
  o.delta = delta;
  o.budget = budget;
  o.threads = threads;
  o.thresholds = thresholds();
  o.thresholds.k_min = sweep_k_min;
  return o;
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("line " + std::to_string(lineno), "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ValidationError(key, "duplicate key");
    base.set(key, value);
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path.string());
  return parse_config(in, std::move(base));
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const auto& k : schema()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::string>{}(path.string() + std::to_string(content.size())));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string precipitates_csv(const PrecipitateConfig& config) {
  const bool three = config.params.torus_dim == 3;
  std::string out = three ? "index,x1,x2,x3,y,strength\n" : "index,x1,x2,y,strength\n";
  for (std::size_t i = 0; i < config.centers.size(); ++i) {
    const auto& c = config.centers[i];
    out += std::to_string(i) + "," + format_double(c.x[0]) + "," + format_double(c.x[1]) + ",";
    if (three) out += format_double(c.x[2]) + ",";
    out += format_double(c.y) + "," + format_double(c.strength) + "\n";
  }
  return out;
}

std::string trajectory_csv(std::span<const TrajectorySample> samples) {
  std::string out = "t,min,mean,max,mean_velocity,max_velocity\n";
  for (const auto& s : samples) {
    out += format_double(s.t) + "," + format_double(s.min) + "," + format_double(s.mean) + "," +
           format_double(s.max) + "," + format_double(s.mean_velocity) + "," +
           format_double(s.max_velocity) + "\n";
  }
  return out;
}

std::string fourier_csv(const FourierProfile& profile) {
  std::string out = "n,m,coeff\n";
  for (int n = 0; n <= profile.n_max; ++n) {
    for (int m = 0; m <= profile.n_max; ++m) {
      out += std::to_string(n) + "," + std::to_string(m) + "," +
             format_double(profile.coefficient(n, m)) + "\n";
    }
  }
  return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out =
      "kind,R,seed,F_lo,F_hi,midpoint,analytic_lower,analytic_upper,bounds_feasible,excluded,"
      "sandwich_ok,verdict_trace\n";
  auto flag = [](bool b) { return std::string(b ? "1" : "0"); };
  for (const auto& r : rows) {
    out += to_string(r.kind) + "," + format_double(r.R) + "," + std::to_string(r.seed) + "," +
           format_double(r.F_lo) + "," + format_double(r.F_hi) + "," + format_double(r.midpoint()) +
           "," + format_double(r.analytic_lower) + "," + format_double(r.analytic_upper) + "," +
           flag(r.bounds_feasible) + "," + flag(r.excluded) + "," + flag(r.sandwich_ok) + "," +
           r.verdict_trace + "\n";
  }
  return out;
}

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["kind"] = to_string(r.kind);
  j["params"] = {{"n", r.n},           {"R", r.R},
                 {"lambda", r.lambda}, {"phi_lower", r.phi_lower},
                 {"phi_upper", r.phi_upper}, {"beta", r.beta}};
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["feasible"] = r.feasible();
  j["feasible_lower"] = r.feasible_lower;
  j["feasible_upper"] = r.feasible_upper;
  j["amplitude_consistent"] = r.amplitude_consistent;
  j["constants"] = {{"C_alpha", r.C_alpha}};
  return j;
}

nlohmann::json to_json(const FitResult& fit) {
  return {{"slope", fit.slope},
          {"stderr", fit.stderr_slope},
          {"intercept", fit.intercept},
          {"n_rows", fit.n_rows},
          {"excluded", fit.excluded}};
}

nlohmann::json to_json(const Classification& c) {
  return {{"verdict", to_string(c.verdict)},
          {"max_displacement", c.max_displacement},
          {"trailing_velocity", c.trailing_velocity},
          {"crossed", c.crossed},
          {"simulated_time", c.simulated_time},
          {"wall_seconds", c.wall_seconds}};
}

// ---------------------------------------------------------------------------

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
  auto p = base;
  p += suffix;
  return p;
}

}  // namespace

void write_state(const std::filesystem::path& base, const InterfaceState& state) {
  const auto values = state.values();
  std::string bytes(values.size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) {
      bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  write_atomic(with_suffix(base, ".bin"), bytes);
  write_atomic(with_suffix(base, ".hdr"), "n = " + std::to_string(state.dim()) + "\nN = " +
                                              std::to_string(state.n()) + "\nt = " +
                                              format_double(state.t()) + "\n");
}

InterfaceState read_state(const std::filesystem::path& base) {
  std::ifstream hdr(with_suffix(base, ".hdr"));
  if (!hdr) throw ValidationError("resume", "cannot open " + with_suffix(base, ".hdr").string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(hdr, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* k : {"n", "N", "t"}) {
    if (!kv.count(k)) throw ValidationError("resume", std::string("header lacks '") + k + "'");
  }
  const int dim = parse_int<int>("resume", kv["n"]);
  const int n = parse_int<int>("resume", kv["N"]);
  const double t = parse_double("resume", kv["t"]);
  require(dim >= 1 && dim <= 3 && n >= 1, "resume", "header has invalid dimensions");

  std::size_t size = 1;
  for (int d = 0; d < dim; ++d) size *= static_cast<std::size_t>(n);
  std::ifstream bin(with_suffix(base, ".bin"), std::ios::binary);
  if (!bin) throw ValidationError("resume", "cannot open " + with_suffix(base, ".bin").string());
  std::string bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  require(bytes.size() == size * 8, "resume", "binary size does not match the header");
  std::vector<double> values(size);
  for (std::size_t i = 0; i < size; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)]))
              << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return InterfaceState(dim, n, t, std::move(values));
}

}  // namespace depin
