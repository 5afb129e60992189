#include "arpersist/arproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "arpersist/error.hpp"
#include "arpersist/rng.hpp"

namespace arp {

namespace {

PathSample run_recurrence(const GeneratingPolynomial& poly, int N, auto&& noise) {
  const int L = poly.degree();
  const auto& a = poly.coeffs();
  PathSample out;
  out.xs.assign(N, 0.0);
  for (int n = 0; n < N; ++n) {
    double x = noise(n);
    for (int j = 1; j <= L && j <= n; ++j) x += a[j - 1] * out.xs[n - j];
    if (std::isnan(x)) {
      // inf - inf: the dominant term decides; fall back to the sign of the largest-weight term.
      double best = 0.0;
      for (int j = 1; j <= L && j <= n; ++j) {
        double t = a[j - 1] * out.xs[n - j];
        if (std::isinf(t)) {
          best = t;
          break;
        }
      }
      x = best;
    }
    if (std::isinf(x)) out.saturated = true;
    out.xs[n] = x;
  }
  return out;
}

}  // namespace

PathSample simulate(const GeneratingPolynomial& poly, int N, std::uint64_t seed) {
  if (N < 1) throw PreconditionError("simulate needs N >= 1");
  NormalSource g(Rng(seed, {0}));
  auto p = run_recurrence(poly, N, [&](int) { return g(); });
  p.seed = seed;
  return p;
}

PathSample simulate_with_noise(const GeneratingPolynomial& poly, std::span<const double> noise) {
  if (noise.empty()) throw PreconditionError("simulate needs N >= 1");
  return run_recurrence(poly, static_cast<int>(noise.size()), [&](int n) { return noise[n]; });
}

std::vector<double> impulse_response(const GeneratingPolynomial& poly, int N) {
  if (N < 0) throw PreconditionError("impulse_response needs N >= 0");
  const int L = poly.degree();
  std::vector<double> h(N + 1, 0.0);
  h[0] = 1.0;
  for (int n = 1; n <= N; ++n) {
    double s = 0.0;
    for (int j = 1; j <= L && j <= n; ++j) s += poly.coeffs()[j - 1] * h[n - j];
    h[n] = s;
  }
  return h;
}

double ModalTerm::amplitude(int j) const {
  const double m = std::abs(beta.at(j));
  return lambda.imag() != 0.0 ? 2.0 * m : m;
}

double ModalTerm::phase(int j) const { return std::arg(beta.at(j)); }

ModalDecomposition modal_decomposition(const ZeroSet& zeros, std::span<const double> init) {
  const int L = zeros.degree();
  if (static_cast<int>(init.size()) != L)
    throw PreconditionError("init length must equal the total multiplicity");
  Eigen::MatrixXcd V(L, L);
  int col = 0;
  for (const auto& e : zeros.entries)
    for (int j = 0; j < e.mult; ++j, ++col)
      for (int l = 0; l < L; ++l) {
        double lj = j == 0 ? 1.0 : std::pow(static_cast<double>(l), j);
        V(l, col) = std::pow(e.root, l) * lj;
      }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
  const double rc = lu.rcond();
  if (!(rc > 1e-12))
    throw NumericError("confluent Vandermonde system is ill-conditioned (rcond " + std::to_string(rc) +
                           "); increase root separation",
                       rc);
  Eigen::VectorXcd q(L);
  for (int l = 0; l < L; ++l) q[l] = init[l];
  Eigen::VectorXcd b = lu.solve(q);
  ModalDecomposition d;
  col = 0;
  for (const auto& e : zeros.entries) {
    ModalTerm t;
    t.lambda = e.root;
    for (int j = 0; j < e.mult; ++j) t.beta.push_back(b[col++]);
    d.terms.push_back(std::move(t));
  }
  // Enforce the conjugate pairing the real data implies.
  for (auto& t : d.terms) {
    if (t.lambda.imag() == 0.0)
      for (auto& v : t.beta) v = v.real();
  }
  return d;
}

double eval_modal(const ModalDecomposition& d, std::uint64_t ell) {
  cplx s = 0.0;
  double mag = 0.0;
  for (const auto& t : d.terms) {
    cplx lp = std::pow(t.lambda, static_cast<double>(ell));
    if (ell == 0) lp = 1.0;
    for (std::size_t j = 0; j < t.beta.size(); ++j) {
      double lj = j == 0 ? 1.0 : std::pow(static_cast<double>(ell), static_cast<double>(j));
      cplx term = t.beta[j] * lp * lj;
      s += term;
      mag = std::max(mag, std::abs(term));
    }
  }
  if (std::abs(s.imag()) > 1e-9 * std::max(1.0, mag))
    throw NumericError("modal evaluation has an imaginary residue", std::abs(s.imag()));
  return s.real();
}

double triangle_coeff(int n, int i, int M) {
  if (i < 1 || i > n || M < 0) throw PreconditionError("triangle_coeff needs 1 <= i <= n, M >= 0");
  // row[t] holds b_{i+t, i, order} for the current order, t = 0..n-i.
  std::vector<double> row(n - i + 1, 1.0);
  for (int order = 1; order <= M; ++order) {
    std::vector<double> next(row.size());
    double prev = 0.0;  // b_{i-1, i, order} = 0
    for (std::size_t t = 0; t < row.size(); ++t) {
      next[t] = prev + row[t];
      prev = next[t];
    }
    row = std::move(next);
  }
  const double r = row.back();
  if (r != triangle_coeff_closed(n, i, M)) throw NumericError("triangle recursion disagrees with C(n-i+M, M)");
  return r;
}

double triangle_coeff_closed(int n, int i, int M) { return binomial(n - i + M, M); }

RotatedComponent rotated_components(std::span<const double> noise, double theta, double phase, int k) {
  if (noise.empty()) throw PreconditionError("rotated_components needs N >= 1");
  if (k < 0) throw PreconditionError("order k must be >= 0");
  RotatedComponent rc;
  rc.theta = theta;
  rc.phase = phase;
  rc.k = k;
  const int N = static_cast<int>(noise.size());
  rc.T.assign(N, 0.0);
  rc.Tp.assign(N, 0.0);
  for (int n = 0; n < N; ++n) {
    double t = 0.0, tp = 0.0;
    for (int i = 0; i <= n; ++i) {
      double w = binomial(n - i + k, k) * noise[i];
      double ang = (n - i) * theta + phase;
      t += w * std::cos(ang);
      tp += w * std::sin(ang);
    }
    rc.T[n] = t;
    rc.Tp[n] = tp;
  }
  return rc;
}

RotState rotate(RotState s, double theta, int power) {
  const double c = std::cos(power * theta), sn = std::sin(power * theta);
  return {c * s.T - sn * s.Tp, sn * s.T + c * s.Tp};
}

RotState rotation_step(RotState s, double theta, RotState injection) {
  RotState r = rotate(s, theta);
  return {r.T + injection.T, r.Tp + injection.Tp};
}

Eigen::MatrixXd path_covariance(const GeneratingPolynomial& poly, int N) {
  if (N < 1) throw PreconditionError("path_covariance needs N >= 1");
  auto h = impulse_response(poly, N);
  Eigen::MatrixXd S(N, N);
  for (int p = 0; p < N; ++p)
    for (int q = p; q < N; ++q) {
      double s = 0.0;
      for (int i = 0; i <= p; ++i) s += h[p - i] * h[q - i];
      S(p, q) = S(q, p) = s;
    }
  return S;
}

Eigen::MatrixXd covariance_window(const GeneratingPolynomial& poly, int n) {
  const int L = poly.degree();
  if (n < L) throw PreconditionError("covariance_window needs n >= L");
  auto h = impulse_response(poly, n);
  Eigen::MatrixXd S(L, L);
  for (int a = 0; a < L; ++a)
    for (int b = a; b < L; ++b) {
      const int p = n - L + 1 + a, q = n - L + 1 + b;
      double s = 0.0;
      for (int i = 0; i <= p; ++i) s += h[p - i] * h[q - i];
      S(a, b) = S(b, a) = s;
    }
  return S;
}

ConditionalGaussian conditional_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                         const std::vector<int>& observed,
                                         const Eigen::VectorXd& values) {
  const int n = static_cast<int>(mean.size());
  if (cov.rows() != n || cov.cols() != n) throw PreconditionError("mean/covariance size mismatch");
  if (static_cast<int>(observed.size()) != values.size())
    throw PreconditionError("observed indices and values differ in length");
  std::vector<char> is_obs(n, 0);
  for (int i : observed) {
    if (i < 0 || i >= n || is_obs[i]) throw PreconditionError("bad observed index set");
    is_obs[i] = 1;
  }
  ConditionalGaussian out;
  for (int i = 0; i < n; ++i)
    if (!is_obs[i]) out.free_index.push_back(i);
  const int m = static_cast<int>(observed.size()), f = static_cast<int>(out.free_index.size());
  Eigen::MatrixXd Soo(m, m), Sfo(f, m), Sff(f, f);
  Eigen::VectorXd mo(m), mf(f);
  for (int a = 0; a < m; ++a) {
    mo[a] = mean[observed[a]];
    for (int b = 0; b < m; ++b) Soo(a, b) = cov(observed[a], observed[b]);
  }
  for (int a = 0; a < f; ++a) {
    mf[a] = mean[out.free_index[a]];
    for (int b = 0; b < m; ++b) Sfo(a, b) = cov(out.free_index[a], observed[b]);
    for (int b = 0; b < f; ++b) Sff(a, b) = cov(out.free_index[a], out.free_index[b]);
  }
  if (m == 0) {
    out.mean = mf;
    out.cov = Sff;
    return out;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Soo);
  if (llt.info() != Eigen::Success) throw PreconditionError("observed covariance block is singular");
  const double dmin = llt.matrixL().toDenseMatrix().diagonal().minCoeff();
  if (!(dmin > 1e-12 * std::sqrt(std::max(1e-300, Soo.diagonal().maxCoeff()))))
    throw PreconditionError("observed covariance block is singular");
  out.mean = mf + Sfo * llt.solve(values - mo);
  out.cov = Sff - Sfo * llt.solve(Sfo.transpose());
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

double oscillation_constant(double psi) {
  const double s = std::abs(std::sin(0.5 * psi));
  return s == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / s;
}

WitnessResult rotation_negativity_witness(std::span<const double> thetas, std::span<const double> rs,
                                          std::span<const double> gammas) {
  const std::size_t l = thetas.size();
  if (l == 0 || rs.size() != l || gammas.size() != l)
    throw PreconditionError("witness search needs matching non-empty angle, radius and phase lists");
  constexpr double pi = 3.14159265358979323846;
  double C = 0.0;
  for (std::size_t j = 0; j < l; ++j) {
    const double t = thetas[j];
    if (!(t > 0.0 && t <= pi)) throw PreconditionError("angles must lie in (0, pi]");
    if (t == pi && std::abs(std::sin(gammas[j])) > 1e-12)
      throw PreconditionError("phase must be 0 or pi when the angle is pi");
    C = std::max(C, oscillation_constant(t));
    if (t != pi) C = std::max(C, oscillation_constant(2.0 * t));
    for (std::size_t i = 0; i < j; ++i) {
      C = std::max(C, oscillation_constant(t - thetas[i]));
      C = std::max(C, oscillation_constant(t + thetas[i]));
    }
  }
  if (!std::isfinite(C) || C > 1e6) throw PreconditionError("angles must be distinct");
  double rmax = 0.0;
  for (double r : rs) rmax = std::max(rmax, std::abs(r));
  WitnessResult w;
  w.bound_constant = C;
  const double c1 = std::max(C, 1.0);
  w.cap = static_cast<long long>(std::ceil(12.0 * l * l * c1 * c1));
  for (long long i = 0; i <= w.cap; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < l; ++j) s += rs[j] * std::cos(i * thetas[j] + gammas[j]);
    if (s <= -rmax / 4.0) {
      w.index = static_cast<int>(i);
      return w;
    }
  }
  throw NumericError("no negativity witness below the cap", static_cast<double>(w.cap));
}

}  // namespace arp
