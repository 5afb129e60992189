#include "arpersist/cone.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "arpersist/arproc.hpp"
#include "arpersist/error.hpp"
#include "arpersist/polyalg.hpp"
#include "arpersist/rng.hpp"

namespace arp {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

Rationality classify_angle(double theta, int q_cap, double tol) {
  Rationality r;
  r.q_cap = q_cap;
  double x = theta / kTwoPi;
  x -= std::floor(x);
  // Continued-fraction convergents of x.
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double rem = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(rem);
    const long long ai = static_cast<long long>(a);
    const long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (q2 > q_cap) break;
    if (q2 > 0 && std::abs(x - static_cast<double>(p2) / q2) <= tol) {
      r.rational = true;
      r.p = p2 % q2;
      r.q = q2;
      return r;
    }
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = rem - a;
    if (frac < 1e-15) break;
    rem = 1.0 / frac;
  }
  return r;
}

Rationality rational_angle(long long num, long long den) {
  if (den <= 0) throw PreconditionError("angle denominator must be positive");
  // theta / 2pi = num / (2 den)
  long long p = num, q = 2 * den;
  p %= q;
  if (p < 0) p += q;
  const long long g = std::gcd(p, q);
  Rationality r;
  r.rational = true;
  r.p = p / g;
  r.q = q / g;
  return r;
}

namespace {

double orbit_angle(const PhiSpec& s, long long i) {
  if (s.rationality.rational) {
    const long long k = static_cast<long long>((static_cast<__int128>(i) * s.rationality.p) % s.rationality.q);
    return kTwoPi * static_cast<double>(k) / s.rationality.q + s.phase;
  }
  return std::fmod(static_cast<double>(i) * s.theta, kTwoPi) + s.phase;
}

double rotated_first(const Vec2& t, double ang) { return std::cos(ang) * t[0] - std::sin(ang) * t[1]; }

}  // namespace

double phi_K(const Vec2& t, const PhiSpec& spec, long long K) {
  if (K < 0) throw PreconditionError("phi_K needs K >= 0");
  double m = std::numeric_limits<double>::infinity();
  for (long long i = 0; i <= K; ++i) m = std::min(m, spec.c1 * rotated_first(t, orbit_angle(spec, i)));
  return m;
}

double phi_limit(const Vec2& t, const PhiSpec& spec) {
  if (spec.rationality.rational) return phi_K(t, spec, spec.rationality.q - 1);
  return -std::abs(spec.c1) * std::hypot(t[0], t[1]);
}

PhiSpec modal_constants_ar3(double theta, std::optional<Rationality> rat) {
  if (!(theta > 0.0 && theta < kPi)) throw PreconditionError("theta must lie in (0, pi)");
  if (std::abs(std::sin(theta)) < 1e-6) throw NumericError("theta too close to 0 or pi: modal system ill-conditioned");
  const cplx w = std::polar(1.0, theta);
  ZeroSet z = make_zero_set({{cplx(1.0, 0.0), 1}, {w, 1}});
  GeneratingPolynomial poly = from_zero_set(z);
  auto h = impulse_response(poly, 2);
  auto d = modal_decomposition(z, h);
  PhiSpec s;
  s.theta = theta;
  for (const auto& t : d.terms) {
    if (t.lambda.imag() == 0.0) s.c0 = t.beta[0].real();
    else if (t.lambda.imag() > 0.0) {
      s.c1 = t.amplitude(0);
      s.phase = t.phase(0);
    }
  }
  s.rationality = rat ? *rat : classify_angle(theta);
  return s;
}

Vec3 grid_point(const Resolution& r, int i, int j) {
  const double th = (i + 0.5) * kPi / r.n_polar, ph = (j + 0.5) * kTwoPi / r.n_azimuth;
  return {std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph)};
}

Vec3 SphericalDomain::node(int i, int j) const { return grid_point(res, i, j); }

int SphericalDomain::count() const { return static_cast<int>(std::count(mask.begin(), mask.end(), 1)); }

double SphericalDomain::area() const {
  const double dth = kPi / res.n_polar, dph = kTwoPi / res.n_azimuth;
  double a = 0.0;
  for (int i = 0; i < res.n_polar; ++i) {
    const double cell = dph * (std::cos(i * dth) - std::cos((i + 1) * dth));
    for (int j = 0; j < res.n_azimuth; ++j)
      if (inside(i, j)) a += cell;
  }
  return a;
}

SphericalDomain domain_from_level(Level level, Resolution res, std::string kind) {
  if (res.n_polar < 8 || res.n_azimuth < 8) throw PreconditionError("resolution too small");
  SphericalDomain d;
  d.res = res;
  d.level = std::move(level);
  d.kind = std::move(kind);
  d.mask.assign(static_cast<std::size_t>(res.n_polar) * res.n_azimuth, 0);
  for (int i = 0; i < res.n_polar; ++i)
    for (int j = 0; j < res.n_azimuth; ++j)
      d.mask[static_cast<std::size_t>(i) * res.n_azimuth + j] = d.level(grid_point(res, i, j)) >= 0.0;
  const int c = d.count();
  if (c == 0) throw PreconditionError("domain mask is empty");
  if (c == static_cast<int>(d.mask.size())) throw PreconditionError("domain mask covers the whole sphere");
  return d;
}

SphericalDomain build_domain(const PhiSpec& spec, Resolution res, double eps) {
  if (res.n_polar < 32 || res.n_azimuth < 64) throw PreconditionError("build_domain needs resolution >= 32x64");
  const double c0 = spec.c0 * (1.0 + eps);
  const double inv = 1.0 / std::sqrt(2.0);
  Level f = [spec, c0, inv](const Vec3& x) { return c0 * x[0] + phi_limit({x[1] * inv, x[2] * inv}, spec); };
  return domain_from_level(std::move(f), res, "ar3");
}

SphericalDomain hemisphere_domain(Resolution res) {
  return domain_from_level([](const Vec3& x) { return x[0]; }, res, "hemisphere");
}

SphericalDomain cap_domain(double alpha, Resolution res) {
  const double c = std::cos(alpha);
  return domain_from_level([c](const Vec3& x) { return x[0] - c; }, res, "cap");
}

SphericalDomain quarter_space_domain(Resolution res) {
  return domain_from_level([](const Vec3& x) { return std::min(x[0], x[1]); }, res, "quarter");
}

double beta_from_lambda(double lambda) { return std::sqrt(lambda + 0.25) / 2.0; }
double survival_exponent_from_lambda(double lambda) { return (std::sqrt(lambda + 0.25) - 0.5) / 2.0; }

namespace {

// Fraction s in (0,1] of the way from an inside node to an outside one where the level crosses 0.
double crossing_fraction(const Level& f, const Resolution& r, int i, int j, int di, int dj) {
  const double th0 = (i + 0.5) * kPi / r.n_polar, ph0 = (j + 0.5) * kTwoPi / r.n_azimuth;
  const double dth = di * kPi / r.n_polar, dph = dj * kTwoPi / r.n_azimuth;
  auto at = [&](double t) {
    const double th = th0 + t * dth, ph = ph0 + t * dph;
    return f({std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph)});
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid) >= 0.0) lo = mid;
    else hi = mid;
  }
  return std::max(0.5 * (lo + hi), 1e-3);
}

}  // namespace

EigenResult principal_eigenvalue(const SphericalDomain& d, const EigenOptions& opt) {
  const int np = d.res.n_polar, na = d.res.n_azimuth;
  const double dth = kPi / np, dph = kTwoPi / na;
  std::vector<int> id(static_cast<std::size_t>(np) * na, -1);
  int n = 0;
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < na; ++j)
      if (d.inside(i, j)) id[static_cast<std::size_t>(i) * na + j] = n++;
  if (n == 0) throw PreconditionError("empty domain");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  Eigen::VectorXd mass(n);
  std::vector<double> diag(n, 0.0);
  for (int i = 0; i < np; ++i) {
    const double sin_i = std::sin((i + 0.5) * dth);
    const double w_up = std::sin(i * dth) * dph / dth;         // face toward i-1
    const double w_dn = std::sin((i + 1) * dth) * dph / dth;   // face toward i+1
    const double w_az = dth / (sin_i * dph);
    const double cell = dph * (std::cos(i * dth) - std::cos((i + 1) * dth));
    for (int j = 0; j < na; ++j) {
      const int p = id[static_cast<std::size_t>(i) * na + j];
      if (p < 0) continue;
      mass[p] = cell;
      auto link = [&](int ii, int jj, int di, int dj, double w) {
        if (w == 0.0) return;  // pole face
        jj = (jj + na) % na;
        const int q = id[static_cast<std::size_t>(ii) * na + jj];
        if (q >= 0) {
          diag[p] += w;
          trip.emplace_back(p, q, -w);
        } else {
          diag[p] += w / crossing_fraction(d.level, d.res, i, j, di, dj);
        }
      };
      if (i > 0) link(i - 1, j, -1, 0, w_up);
      if (i + 1 < np) link(i + 1, j, 1, 0, w_dn);
      link(i, j - 1, 0, -1, w_az);
      link(i, j + 1, 0, 1, w_az);
    }
  }
  for (int p = 0; p < n; ++p) trip.emplace_back(p, p, diag[p]);
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) throw NumericError("factorisation of the discrete Laplacian failed");
  Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
  double lam = 0.0, prev = std::numeric_limits<double>::infinity();
  EigenResult r;
  r.res = d.res;
  r.inside_nodes = n;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    Eigen::VectorXd v = solver.solve(mass.cwiseProduct(u));
    v /= std::sqrt(v.dot(mass.cwiseProduct(v)));
    u = v;
    lam = u.dot(K * u);  // u is M-normalised
    if (std::abs(lam - prev) <= opt.tol * std::abs(lam)) break;
    prev = lam;
  }
  Eigen::VectorXd res = K * u - lam * mass.cwiseProduct(u);
  r.residual = std::sqrt(res.dot(mass.cwiseInverse().cwiseProduct(res))) / std::abs(lam);
  r.iterations = it + 1;
  if (it >= opt.max_iter) throw NumericError("inverse iteration did not converge", r.residual);
  r.lambda = lam;
  r.beta = beta_from_lambda(lam);
  r.survival_exponent = survival_exponent_from_lambda(lam);
  return r;
}

EigenResult exponent_ar3(double theta, Resolution res, std::optional<Rationality> rat, const EigenOptions& opt) {
  return principal_eigenvalue(build_domain(modal_constants_ar3(theta, rat), res), opt);
}

SweepReport discontinuity_sweep(double theta, const Rationality& rat, const std::vector<double>& offsets,
                                Resolution res, const EigenOptions& opt,
                                const std::function<bool(const SweepRow&)>& on_row) {
  if (!rat.rational) throw PreconditionError("sweep base angle must be a rational multiple of 2pi");
  if (offsets.empty()) throw PreconditionError("sweep needs at least one offset");
  SweepReport rep;
  rep.theta = theta;
  rep.base = exponent_ar3(theta, res, rat, opt);
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (double off : offsets) {
    if (off == 0.0) throw PreconditionError("sweep offsets must be non-zero");
    if (!classify_angle(theta + off, rat.q_cap).rational) continue;
    throw PreconditionError("perturbed angle classifies as rational; choose an irrational offset");
  }
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double off = offsets[k];
    const double th = theta + off;
    const Rationality r = classify_angle(th, rat.q_cap);
    SweepRow row;
    row.theta = th;
    row.offset = off;
    row.result = exponent_ar3(th, res, r, opt);
    row.gap = row.result.beta - rep.base.beta;
    rep.min_gap = std::min(rep.min_gap, row.gap);
    rep.rows.push_back(row);
    if (on_row && !on_row(row)) {
      rep.truncated = k + 1 < offsets.size();
      break;
    }
  }
  return rep;
}

ConeSurvivalFit cone_survival_mc(const Level& level, double T, long long n_paths, std::uint64_t seed,
                                 const ConeMcOptions& opt) {
  const Vec3 x0 = opt.start;
  const double r0 = std::sqrt(x0[0] * x0[0] + x0[1] * x0[1] + x0[2] * x0[2]);
  if (!(r0 > 0.0) || !(level({x0[0] / r0, x0[1] / r0, x0[2] / r0}) > 0.0))
    throw PreconditionError("start point must lie strictly inside the cone");
  if (!(opt.dt > 0.0) || !(T > opt.t_min) || n_paths < 1 || opt.grid_points < 4)
    throw PreconditionError("cone_survival_mc needs dt > 0, T > t_min, n_paths >= 1 and >= 4 grid points");
  const long long steps = static_cast<long long>(std::ceil(T / opt.dt));
  const double sq = std::sqrt(opt.dt);
  std::vector<long long> life(n_paths);
  parallel_for(n_paths, opt.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      NormalSource g(Rng(seed, {static_cast<std::uint64_t>(p)}));
      Vec3 x = x0;
      long long s = 0;
      for (; s < steps; ++s) {
        x[0] += sq * g();
        x[1] += sq * g();
        x[2] += sq * g();
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (r == 0.0 || level({x[0] / r, x[1] / r, x[2] / r}) < 0.0) break;
      }
      life[p] = s;  // survived steps
    }
  });
  std::sort(life.begin(), life.end());
  ConeSurvivalFit f;
  f.paths = n_paths;
  std::vector<double> lx, ly, w;
  for (int k = 0; k < opt.grid_points; ++k) {
    const double t = opt.t_min * std::pow(T / opt.t_min, static_cast<double>(k) / (opt.grid_points - 1));
    const long long need = static_cast<long long>(std::floor(t / opt.dt));
    const long long surv = life.end() - std::lower_bound(life.begin(), life.end(), need);
    const double S = static_cast<double>(surv) / n_paths;
    f.t.push_back(t);
    f.survival.push_back(S);
    if (surv > 0) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(S));
      w.push_back(static_cast<double>(surv) / (1.0 - S + 1.0 / n_paths));
    }
  }
  if (lx.size() < 4) throw NumericError("too few surviving paths to fit a tail exponent");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sw += w[i];
    sx += w[i] * lx[i];
    sy += w[i] * ly[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += w[i] * (lx[i] - mx) * (lx[i] - mx);
    sxy += w[i] * (lx[i] - mx) * (ly[i] - my);
    syy += w[i] * (ly[i] - my) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  f.exponent = -slope;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double rr = ly[i] - (my + slope * (lx[i] - mx));
    ss += w[i] * rr * rr;
  }
  f.r_squared = syy > 0 ? 1.0 - ss / syy : 1.0;
  return f;
}

ConeSurvivalFit cone_survival_mc(const SphericalDomain& domain, double T, long long n_paths, std::uint64_t seed,
                                 const ConeMcOptions& opt) {
  return cone_survival_mc(domain.level, T, n_paths, seed, opt);
}

}  // namespace arp
