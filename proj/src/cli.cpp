#include "arpersist/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "arpersist/arproc.hpp"
#include "arpersist/error.hpp"
#include "arpersist/persist.hpp"
#include "arpersist/regime.hpp"

namespace arp::cli {

using json = nlohmann::ordered_json;

namespace {

std::atomic<bool> g_interrupt{false};

extern "C" void on_sigint(int) { g_interrupt.store(true); }

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool pending_sep = false;  // a comma seen with no item since the previous one
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(cur), pending_sep = false;
      cur.clear();
    } else if (ch == ',' || ch == ';') {
      if (!cur.empty()) out.push_back(cur);
      else if (pending_sep || out.empty()) throw PreconditionError("empty item in list '" + s + "'");
      cur.clear();
      pending_sep = true;
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  else if (pending_sep) throw PreconditionError("empty item in list '" + s + "'");
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  if (t.empty()) throw PreconditionError("empty " + what);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) throw PreconditionError("cannot parse " + what + " '" + s + "'");
  return v;
}

struct ExprState {
  const std::string& s;
  std::size_t i = 0;
  double value = 1.0;
  int pi_power = 0;
  bool integral = true;
  long long num = 1, den = 1;
};

// factor := number | pi | sqrt2 | sqrt(number)
double parse_factor(ExprState& st, bool& is_pi, bool& is_int, long long& ival) {
  const std::string& s = st.s;
  is_pi = false;
  is_int = false;
  if (s.compare(st.i, 2, "pi") == 0) {
    st.i += 2;
    is_pi = true;
    return 3.14159265358979323846;
  }
  if (s.compare(st.i, 5, "sqrt(") == 0) {
    std::size_t close = s.find(')', st.i);
    if (close == std::string::npos) throw PreconditionError("unbalanced sqrt( in '" + s + "'");
    double v = to_double(s.substr(st.i + 5, close - st.i - 5), "sqrt argument");
    st.i = close + 1;
    if (v < 0) throw PreconditionError("sqrt of a negative number");
    return std::sqrt(v);
  }
  if (s.compare(st.i, 4, "sqrt") == 0) {
    std::size_t j = st.i + 4, b = j;
    while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
    if (j == b) throw PreconditionError("expected a number after sqrt in '" + s + "'");
    double v = to_double(s.substr(b, j - b), "sqrt argument");
    st.i = j;
    return std::sqrt(v);
  }
  const char* start = s.c_str() + st.i;
  char* end = nullptr;
  double v = std::strtod(start, &end);
  if (end == start) throw PreconditionError("cannot parse expression '" + s + "' at position " + std::to_string(st.i));
  std::string tok(start, static_cast<const char*>(end));
  st.i += tok.size();
  if (tok.find_first_of(".eE") == std::string::npos && std::abs(v) < 1e15) {
    is_int = true;
    ival = static_cast<long long>(v);
  }
  return v;
}

}  // namespace

Angle parse_angle(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw PreconditionError("empty angle");
  ExprState st{s};
  double sign = 1.0;
  if (s[0] == '-' || s[0] == '+') {
    sign = s[0] == '-' ? -1.0 : 1.0;
    st.i = 1;
  }
  char op = '*';
  while (true) {
    bool is_pi, is_int;
    long long iv = 0;
    double v = parse_factor(st, is_pi, is_int, iv);
    if (op == '*') {
      st.value *= v;
      if (is_pi) ++st.pi_power;
      else if (is_int) st.num *= iv;
      else st.integral = false;
    } else {
      if (v == 0.0) throw PreconditionError("division by zero in '" + s + "'");
      st.value /= v;
      if (is_pi) --st.pi_power;
      else if (is_int) st.den *= iv;
      else st.integral = false;
    }
    if (st.i >= s.size()) break;
    op = s[st.i];
    if (op != '*' && op != '/') throw PreconditionError("unexpected '" + std::string(1, op) + "' in '" + s + "'");
    ++st.i;
  }
  Angle a;
  a.value = sign * st.value;
  if (!std::isfinite(a.value)) throw PreconditionError("angle is not finite");
  if (st.integral && st.pi_power == 1 && st.den > 0) a.exact = rational_angle(static_cast<long long>(sign) * st.num, st.den);
  return a;
}

double parse_scalar(const std::string& s) { return parse_angle(s).value; }

cplx parse_complex(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw PreconditionError("empty complex number");
  if (s.back() != 'i' && s.back() != 'j') return {to_double(s, "zero"), 0.0};
  s.pop_back();
  // Split at the last sign that is not a leading sign or an exponent sign.
  std::size_t cut = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;)
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      cut = k;
      break;
    }
  std::string re = cut == std::string::npos ? "" : s.substr(0, cut);
  std::string im = cut == std::string::npos ? s : s.substr(cut);
  double imv;
  if (im.empty() || im == "+") imv = 1.0;
  else if (im == "-") imv = -1.0;
  else imv = to_double(im, "imaginary part");
  return {re.empty() ? 0.0 : to_double(re, "real part"), imv};
}

ZeroSet parse_zeros(const std::string& s) {
  std::vector<ZeroEntry> e;
  for (const auto& tok : split_list(s)) {
    const auto colon = tok.find(':');
    ZeroEntry z;
    z.root = parse_complex(tok.substr(0, colon));
    if (colon != std::string::npos) {
      const double m = to_double(tok.substr(colon + 1), "multiplicity");
      if (m < 1 || m != std::floor(m)) throw PreconditionError("multiplicity must be a positive integer in '" + tok + "'");
      z.mult = static_cast<int>(m);
    }
    e.push_back(z);
  }
  if (e.empty()) throw PreconditionError("--zeros needs at least one zero");
  return make_zero_set(std::move(e));
}

std::vector<double> parse_coeffs(const std::string& s) {
  std::vector<double> a;
  for (const auto& tok : split_list(s)) a.push_back(to_double(tok, "coefficient"));
  if (a.empty()) throw PreconditionError("--coeffs needs at least one coefficient");
  return a;
}

std::vector<int> parse_int_grid(const std::string& s) {
  auto as_int = [](const std::string& t) -> long long {
    const auto caret = t.find('^');
    if (caret != std::string::npos) {
      const double b = to_double(t.substr(0, caret), "grid base"), e = to_double(t.substr(caret + 1), "grid exponent");
      return std::llround(std::pow(b, e));
    }
    const double v = to_double(t, "grid value");
    if (v != std::floor(v)) throw PreconditionError("grid values must be integers: '" + t + "'");
    return static_cast<long long>(v);
  };
  std::vector<long long> out;
  for (const auto& tok : split_list(s)) {
    const auto dots = tok.find("..");
    if (dots != std::string::npos) {
      const std::string a = tok.substr(0, dots), b = tok.substr(dots + 2);
      if (a.rfind("2^", 0) != 0 || b.rfind("2^", 0) != 0) throw PreconditionError("range '" + tok + "' must look like 2^a..2^b");
      const long long e0 = as_int(a.substr(2)), e1 = as_int(b.substr(2));
      for (long long e = e0; e <= e1; ++e) out.push_back(1LL << e);
      continue;
    }
    if (std::count(tok.begin(), tok.end(), ':') == 2) {
      const auto c1 = tok.find(':'), c2 = tok.find(':', c1 + 1);
      const long long a = as_int(tok.substr(0, c1)), b = as_int(tok.substr(c1 + 1, c2 - c1 - 1)),
                      st = as_int(tok.substr(c2 + 1));
      if (st <= 0) throw PreconditionError("grid step must be positive");
      for (long long v = a; v <= b; v += st) out.push_back(v);
      continue;
    }
    out.push_back(as_int(tok));
  }
  if (out.empty()) throw PreconditionError("empty N grid");
  std::vector<int> r;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 1 || out[i] > (1LL << 30)) throw PreconditionError("grid values must lie in [1, 2^30]");
    if (i > 0 && out[i] <= out[i - 1]) throw PreconditionError("N grid must be strictly increasing");
    r.push_back(static_cast<int>(out[i]));
  }
  return r;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void request_interrupt(bool on) { g_interrupt.store(on); }

namespace {

struct PolyInput {
  std::string coeffs, zeros;
};

struct Loaded {
  GeneratingPolynomial poly;
  ZeroSet zeros;
  json config;
};

Loaded load_poly(const PolyInput& in) {
  const bool hc = !in.coeffs.empty(), hz = !in.zeros.empty();
  if (hc == hz) throw PreconditionError("supply exactly one of --coeffs or --zeros");
  if (hc) {
    GeneratingPolynomial p(parse_coeffs(in.coeffs));
    json cfg;
    cfg["coeffs"] = p.coeffs();
    return {p, find_roots(p), cfg};
  }
  ZeroSet z = parse_zeros(in.zeros);
  GeneratingPolynomial p = from_zero_set(z);
  json cfg;
  json zs = json::array();
  for (const auto& e : z.entries) zs.push_back({{"re", e.root.real()}, {"im", e.root.imag()}, {"mult", e.mult}});
  cfg["zeros"] = zs;
  return {p, z, cfg};
}

json zeros_json(const ZeroSet& z) {
  json a = json::array();
  for (const auto& e : z.entries) a.push_back({{"re", e.root.real()}, {"im", e.root.imag()}, {"mult", e.mult}});
  return a;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json estimate_json(const PersistenceEstimate& e) {
  return {{"N", e.N},
          {"p_hat", e.p_hat},
          {"log_p_hat", num(e.log_p_hat)},
          {"stderr_log", num(e.stderr_log)},
          {"method", to_string(e.method)},
          {"budget", e.budget},
          {"seed", e.seed},
          {"extinct", e.extinct}};
}

json fit_json(const ExponentFit& f) {
  return {{"model", to_string(f.model)}, {"slope", f.slope},       {"intercept", f.intercept},
          {"r_squared", f.r_squared},    {"slope_stderr", f.slope_stderr}, {"exponent", f.exponent()},
          {"n_min", f.n_min},            {"n_max", f.n_max},       {"points", f.points}};
}

json eigen_json(const EigenResult& r) {
  return {{"lambda", r.lambda},
          {"beta", r.beta},
          {"survival_exponent", r.survival_exponent},
          {"resolution", std::to_string(r.res.n_polar) + "x" + std::to_string(r.res.n_azimuth)},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"inside_nodes", r.inside_nodes}};
}

json rationality_json(const Rationality& r) {
  json j{{"rational", r.rational}, {"q_cap", r.q_cap}};
  if (r.rational) {
    j["p"] = r.p;
    j["q"] = r.q;
  }
  return j;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// CSV sink: appends to path when given, else writes to fallback; disabled when both are absent.
class CsvSink {
 public:
  CsvSink(const std::string& path, std::ostream* fallback, const std::string& hash, std::uint64_t seed,
          const std::string& header) {
    if (!path.empty()) {
      file_.open(path, std::ios::app | std::ios::binary);
      if (!file_) throw PreconditionError("cannot open output file '" + path + "'");
      os_ = &file_;
    } else {
      os_ = fallback ? fallback : &null_;
    }
    *os_ << "# config_hash=" << hash << " seed=" << seed << "\n" << header << "\n";
  }
  std::ostream& row() { return *os_; }
  void end_row() {
    *os_ << "\n";
    os_->flush();
  }
  void truncated() {
    *os_ << "# truncated\n";
    os_->flush();
  }
  bool to_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::ostringstream null_;
  std::ostream* os_;
};

struct Common {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out;
};

json header(const std::string& cmd, json config, const Common& c) {
  config["command"] = cmd;
  config["seed"] = c.seed;
  const std::string hash = hex64(fnv1a(config.dump()));
  return {{"command", cmd}, {"config_hash", hash}, {"seed", c.seed}, {"config", config}};
}

Resolution parse_resolution(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw PreconditionError("resolution must look like 128x256");
  const double a = to_double(s.substr(0, x), "resolution"), b = to_double(s.substr(x + 1), "resolution");
  if (a != std::floor(a) || b != std::floor(b) || a < 8 || b < 8) throw PreconditionError("bad resolution '" + s + "'");
  return {static_cast<int>(a), static_cast<int>(b)};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Persistence regimes of Gaussian auto-regressive processes"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may also follow the subcommand
  Common com;
  app.add_option("--seed", com.seed, "master seed")->capture_default_str();
  app.add_option("--threads", com.threads, "worker threads (0 = hardware)")->capture_default_str();
  app.add_option("--out", com.out, "append CSV output to this file");

  PolyInput pin;
  auto add_poly = [&](CLI::App* sc) {
    sc->add_option("--coeffs", pin.coeffs, "recurrence coefficients a1,...,aL");
    sc->add_option("--zeros", pin.zeros, "zeros re+imi[:mult], conjugates completed");
  };

  auto* c_classify = app.add_subcommand("classify", "decay regime from the zero set");
  add_poly(c_classify);

  int N = 0;
  auto* c_sim = app.add_subcommand("simulate", "one seeded path, CSV n,value");
  add_poly(c_sim);
  c_sim->add_option("--N", N, "path length")->required();
  auto* c_imp = app.add_subcommand("impulse", "impulse response h_0..h_N, CSV n,value");
  add_poly(c_imp);
  c_imp->add_option("--N", N, "last index")->required();

  std::string grid, method = "splitting", model_name;
  long long samples = 100000;
  int particles = 10000, replicates = 8;
  auto* c_persist = app.add_subcommand("persist", "persistence estimates over an N grid plus exponent fit");
  add_poly(c_persist);
  c_persist->add_option("--N-grid,--N", grid, "horizons, e.g. 2^6..2^14 or 10:60:5")->required();
  c_persist->add_option("--method", method, "naive | splitting | oracle")->capture_default_str();
  c_persist->add_option("--samples", samples, "naive Monte Carlo paths")->capture_default_str();
  c_persist->add_option("--particles", particles, "splitting particles per stage")->capture_default_str();
  c_persist->add_option("--replicates", replicates, "independent splitting replicates")->capture_default_str();
  c_persist->add_option("--model", model_name, "power | exponential | stretched | bounded (default from regime)");

  std::string in_path;
  auto* c_fit = app.add_subcommand("fit", "refit estimates from a persist CSV");
  c_fit->add_option("--in", in_path, "CSV written by persist")->required();
  c_fit->add_option("--model", model_name, "power | exponential | stretched | bounded")->required();

  std::string theta_s, res_s = "128x256", offsets_s, mask_out;
  double eps = 0.0;
  auto* c_cone = app.add_subcommand("cone-exponent", "AR3 persistence power through the cone eigenvalue");
  c_cone->add_option("--theta", theta_s, "angle: pi/2, 2*pi/3, 1.23")->required();
  c_cone->add_option("--resolution", res_s, "n_polar x n_azimuth")->capture_default_str();
  c_cone->add_option("--eps", eps, "use c0 (1 + eps)")->capture_default_str();
  c_cone->add_option("--mask-out", mask_out, "write the domain mask CSV here");
  auto* c_sweep = app.add_subcommand("sweep", "discontinuity sweep around a rational angle");
  c_sweep->add_option("--theta", theta_s, "rational angle, e.g. pi/2")->required();
  c_sweep->add_option("--offsets", offsets_s, "comma list, e.g. 1e-2*sqrt2,-1e-3*sqrt2")->required();
  c_sweep->add_option("--resolution", res_s, "n_polar x n_azimuth")->capture_default_str();

  std::vector<std::string> argv_s{"arpersist"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_s) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kPrecondition;
  }

  g_interrupt.store(false);
  auto old_handler = std::signal(SIGINT, on_sigint);
  struct Restore {
    decltype(old_handler) h;
    ~Restore() { std::signal(SIGINT, h); }
  } restore{old_handler};

  try {
    if (c_classify->parsed()) {
      auto L = load_poly(pin);
      json j = header("classify", L.config, com);
      Regime r = classify(spectral_summary(L.zeros));
      j["zeros"] = zeros_json(L.zeros);
      json rj{{"tag", to_string(r.tag)}, {"case", std::string(1, regime_letter(r.tag))}};
      if (r.alpha) rj["alpha"] = *r.alpha;
      rj["r_star"] = r.summary.r_star;
      rj["m_star"] = r.summary.m_star;
      rj["m_rstar"] = r.summary.m_rstar;
      rj["warnings"] = r.warnings;
      j["regime"] = rj;
      j["decay_model"] = to_string(decay_model(r));
      if (auto th = ar3_angle(L.zeros)) j["ar3_theta"] = *th;
      out << j.dump(2) << "\n";
      return kOk;
    }
    if (c_sim->parsed() || c_imp->parsed()) {
      const bool sim = c_sim->parsed();
      auto L = load_poly(pin);
      json cfg = L.config;
      cfg["N"] = N;
      json j = header(sim ? "simulate" : "impulse", cfg, com);
      std::vector<double> v;
      bool saturated = false;
      if (sim) {
        auto p = simulate(L.poly, N, com.seed);
        v = p.xs;
        saturated = p.saturated;
      } else {
        if (N < 0) throw PreconditionError("--N must be >= 0");
        v = impulse_response(L.poly, N);
      }
      CsvSink csv(com.out, &out, j["config_hash"], com.seed, "n,value");
      for (std::size_t n = 0; n < v.size(); ++n) {
        csv.row() << n << "," << fmt(v[n]);
        csv.end_row();
      }
      if (csv.to_file()) {
        j["points"] = v.size();
        if (sim) j["saturated"] = saturated;
        j["out"] = com.out;
        out << j.dump(2) << "\n";
      }
      return kOk;
    }
    if (c_persist->parsed()) {
      auto L = load_poly(pin);
      const auto Ns = parse_int_grid(grid);
      Regime reg = classify(spectral_summary(L.zeros));
      DecayModel model = decay_model(reg);
      if (!model_name.empty()) {
        auto m = parse_decay_model(model_name);
        if (!m) throw PreconditionError("unknown --model '" + model_name + "'");
        model = *m;
      }
      json cfg = L.config;
      cfg["N_grid"] = Ns;
      cfg["method"] = method;
      cfg["model"] = to_string(model);
      if (method == "naive") cfg["samples"] = samples;
      else if (method == "splitting") {
        cfg["particles"] = particles;
        cfg["replicates"] = replicates;
      } else if (method != "oracle") {
        throw PreconditionError("unknown --method '" + method + "'");
      }
      json j = header("persist", cfg, com);
      j["regime"] = to_string(reg.tag);
      CsvSink csv(com.out, nullptr, j["config_hash"], com.seed, "N,p_hat,log_p_hat,stderr_log,method,seed");
      std::vector<PersistenceEstimate> est;
      json warnings = json::array();
      auto emit = [&](const PersistenceEstimate& e) {
        est.push_back(e);
        csv.row() << e.N << "," << fmt(e.p_hat) << "," << fmt(e.log_p_hat) << "," << fmt(e.stderr_log) << ","
                  << to_string(e.method) << "," << e.seed;
        csv.end_row();
        if (e.extinct)
          warnings.push_back("extinction at N=" + std::to_string(e.N) +
                             ": increase --particles or use a finer checkpoint grid");
      };
      bool truncated = false;
      if (method == "naive") {
        for (const auto& e : naive_persistence_profile(L.poly, Ns, samples, com.seed, com.threads)) {
          if (g_interrupt.load()) {
            truncated = true;
            break;
          }
          emit(e);
        }
      } else if (method == "oracle") {
        for (int n : Ns) {
          if (g_interrupt.load()) {
            truncated = true;
            break;
          }
          auto e = orthant_oracle(L.poly, n);
          e.seed = com.seed;
          emit(e);
        }
      } else {
        SplittingConfig sc;
        sc.checkpoints = checkpoints_for(model, Ns);
        sc.particles = particles;
        sc.replicates = replicates;
        std::size_t next = 0;
        auto rep = splitting_profile(L.poly, sc, com.seed, com.threads, [&](const PersistenceEstimate& e) {
          if (next < Ns.size() && e.N == Ns[next]) {
            emit(e);
            ++next;
          }
          return !g_interrupt.load();
        });
        truncated = rep.truncated;
      }
      if (truncated) csv.truncated();
      json rows = json::array();
      for (const auto& e : est) rows.push_back(estimate_json(e));
      j["estimates"] = rows;
      try {
        j["fit"] = fit_json(fit_exponent(est, model));
      } catch (const PreconditionError& e) {
        j["fit"] = nullptr;
        warnings.push_back(std::string("no fit: ") + e.what());
      }
      j["warnings"] = warnings;
      j["truncated"] = truncated;
      out << j.dump(2) << "\n";
      return truncated ? kInterrupted : kOk;
    }
    if (c_fit->parsed()) {
      auto m = parse_decay_model(model_name);
      if (!m) throw PreconditionError("unknown --model '" + model_name + "'");
      std::ifstream f(in_path);
      if (!f) throw PreconditionError("cannot read '" + in_path + "'");
      std::vector<PersistenceEstimate> est;
      std::string line;
      int lineno = 0;
      while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("N,", 0) == 0) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (cells.size() < 4) throw PreconditionError(in_path + ":" + std::to_string(lineno) + ": expected N,p_hat,log_p_hat,stderr_log,...");
        PersistenceEstimate e;
        try {
          e.N = std::stoi(cells[0]);
          e.p_hat = std::stod(cells[1]);
          e.log_p_hat = std::stod(cells[2]);
          e.stderr_log = std::stod(cells[3]);
        } catch (const std::exception&) {
          throw PreconditionError(in_path + ":" + std::to_string(lineno) + ": bad number");
        }
        est.push_back(e);
      }
      json cfg{{"in", in_path}, {"model", model_name}};
      json j = header("fit", cfg, com);
      j["fit"] = fit_json(fit_exponent(est, *m));
      out << j.dump(2) << "\n";
      return kOk;
    }
    if (c_cone->parsed()) {
      const Angle a = parse_angle(theta_s);
      const Resolution res = parse_resolution(res_s);
      json cfg{{"theta", theta_s}, {"resolution", res_s}, {"eps", eps}};
      json j = header("cone-exponent", cfg, com);
      PhiSpec spec = modal_constants_ar3(a.value, a.exact);
      SphericalDomain dom = build_domain(spec, res, eps);
      EigenResult r = principal_eigenvalue(dom);
      j["theta"] = a.value;
      j["rationality"] = rationality_json(spec.rationality);
      j["c0"] = spec.c0;
      j["c1"] = spec.c1;
      j["phase"] = spec.phase;
      j["domain_area"] = dom.area();
      j["eigen"] = eigen_json(r);
      if (!mask_out.empty()) {
        CsvSink csv(mask_out, nullptr, j["config_hash"], com.seed, "polar_index,azimuth_index,inside");
        for (int i = 0; i < res.n_polar; ++i)
          for (int k = 0; k < res.n_azimuth; ++k) {
            csv.row() << i << "," << k << "," << (dom.inside(i, k) ? 1 : 0);
            csv.end_row();
          }
        j["mask_out"] = mask_out;
      }
      out << j.dump(2) << "\n";
      return kOk;
    }
    if (c_sweep->parsed()) {
      const Angle a = parse_angle(theta_s);
      const Rationality rat = a.exact ? *a.exact : classify_angle(a.value);
      const Resolution res = parse_resolution(res_s);
      std::vector<double> offs;
      for (const auto& t : split_list(offsets_s)) offs.push_back(parse_scalar(t));
      json cfg{{"theta", theta_s}, {"offsets", offs}, {"resolution", res_s}};
      json j = header("sweep", cfg, com);
      if (!rat.rational) throw PreconditionError("sweep --theta must be a rational multiple of 2pi");
      CsvSink csv(com.out, nullptr, j["config_hash"], com.seed, "theta,offset,lambda,beta,gap");
      json rows = json::array();
      auto rep = discontinuity_sweep(a.value, rat, offs, res, {}, [&](const SweepRow& row) {
        rows.push_back({{"theta", row.theta}, {"offset", row.offset}, {"lambda", row.result.lambda},
                        {"beta", row.result.beta}, {"survival_exponent", row.result.survival_exponent},
                        {"gap", row.gap}});
        csv.row() << fmt(row.theta) << "," << fmt(row.offset) << "," << fmt(row.result.lambda) << ","
                  << fmt(row.result.beta) << "," << fmt(row.gap);
        csv.end_row();
        return !g_interrupt.load();
      });
      const bool truncated = rep.truncated;
      const EigenResult& base = rep.base;
      const double min_gap = rep.min_gap;
      if (truncated) csv.truncated();
      j["base"] = eigen_json(base);
      j["base"]["theta"] = a.value;
      j["rows"] = rows;
      j["min_gap"] = num(min_gap);
      j["truncated"] = truncated;
      out << j.dump(2) << "\n";
      return truncated ? kInterrupted : kOk;
    }
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kPrecondition;
}

}  // namespace arp::cli
