#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace arp {

// theta / 2pi = p / q in lowest terms, or irrational (no such q up to the cap).
struct Rationality {
  bool rational = false;
  long long p = 0, q = 0;
  int q_cap = 720;
};

Rationality classify_angle(double theta, int q_cap = 720, double tol = 1e-9);
// Exact classification of theta = num*pi/den.
Rationality rational_angle(long long num, long long den);

struct PhiSpec {
  double theta = 0.0;
  double c0 = 0.0, c1 = 0.0, phase = 0.0;
  Rationality rationality;
};

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

// min_{0<=i<=K} c1 [cos(i theta + phase) t1 - sin(i theta + phase) t2]
double phi_K(const Vec2& t, const PhiSpec& spec, long long K);
double phi_limit(const Vec2& t, const PhiSpec& spec);

// Constants of h_n = c0 + c1 cos(n theta + phase) for Q = (z-1)(z-e^{i theta})(z-e^{-i theta}).
PhiSpec modal_constants_ar3(double theta, std::optional<Rationality> rat = std::nullopt);

struct Resolution {
  int n_polar = 128;
  int n_azimuth = 256;
};

// Level function on the unit sphere; the domain is {x : level(x) >= 0}.
using Level = std::function<double(const Vec3&)>;

struct SphericalDomain {
  Resolution res;
  std::vector<char> mask;  // index i * n_azimuth + j, polar axis along x1
  Level level;
  std::string kind;

  bool inside(int i, int j) const { return mask[static_cast<std::size_t>(i) * res.n_azimuth + j] != 0; }
  int count() const;
  double area() const;  // quadrature of the mask
  Vec3 node(int i, int j) const;
};

Vec3 grid_point(const Resolution& r, int i, int j);

SphericalDomain domain_from_level(Level level, Resolution res, std::string kind);
// c0 (1 + eps) x1 + phi_limit((x2, x3) / sqrt 2) >= 0
SphericalDomain build_domain(const PhiSpec& spec, Resolution res, double eps = 0.0);
SphericalDomain hemisphere_domain(Resolution res);
// Polar cap {angle(x, e1) <= alpha}.
SphericalDomain cap_domain(double alpha, Resolution res);
SphericalDomain quarter_space_domain(Resolution res);

struct EigenOptions {
  double tol = 1e-8;
  int max_iter = 10000;
};

struct EigenResult {
  double lambda = 0.0;
  double beta = 0.0;               // sqrt(lambda + 1/4) / 2
  double survival_exponent = 0.0;  // (sqrt(lambda + 1/4) - 1/2) / 2
  Resolution res;
  double residual = 0.0;
  int iterations = 0;
  int inside_nodes = 0;
};

double beta_from_lambda(double lambda);
double survival_exponent_from_lambda(double lambda);

EigenResult principal_eigenvalue(const SphericalDomain& domain, const EigenOptions& opt = {});
EigenResult exponent_ar3(double theta, Resolution res, std::optional<Rationality> rat = std::nullopt,
                         const EigenOptions& opt = {});

struct SweepRow {
  double theta = 0.0;
  double offset = 0.0;
  EigenResult result;
  double gap = 0.0;  // beta(theta + offset) - beta(theta)
};

struct SweepReport {
  double theta = 0.0;
  EigenResult base;
  std::vector<SweepRow> rows;
  double min_gap = 0.0;
  bool truncated = false;
};

// on_row sees each perturbed result as it is computed; returning false stops the sweep.
SweepReport discontinuity_sweep(double theta, const Rationality& rat, const std::vector<double>& offsets,
                                Resolution res, const EigenOptions& opt = {},
                                const std::function<bool(const SweepRow&)>& on_row = {});

struct ConeMcOptions {
  double dt = 1e-3;
  Vec3 start{1.0, 0.0, 0.0};
  double t_min = 10.0;  // fit window starts here
  int grid_points = 12;
  unsigned threads = 1;
};

struct ConeSurvivalFit {
  std::vector<double> t;
  std::vector<double> survival;
  double exponent = 0.0;  // -slope of log S(t) against log t
  double r_squared = 0.0;
  long long paths = 0;
};

ConeSurvivalFit cone_survival_mc(const Level& level, double T, long long n_paths, std::uint64_t seed,
                                 const ConeMcOptions& opt = {});
ConeSurvivalFit cone_survival_mc(const SphericalDomain& domain, double T, long long n_paths, std::uint64_t seed,
                                 const ConeMcOptions& opt = {});

}  // namespace arp
