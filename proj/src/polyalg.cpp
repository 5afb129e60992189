#include "arpersist/polyalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "arpersist/error.hpp"

namespace arp {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = 3.14159265358979323846;

// Horner on descending coefficients; returns p(z), p'(z) and the rounding scale sum |c_j| |z|^{L-j}.
struct HornerOut {
  cplx p, dp;
  double scale;
};

HornerOut horner(const std::vector<double>& c, cplx z) {
  cplx p = c[0], dp = 0.0;
  double s = std::abs(c[0]);
  const double az = std::abs(z);
  for (std::size_t i = 1; i < c.size(); ++i) {
    dp = dp * z + p;
    p = p * z + c[i];
    s = s * az + std::abs(c[i]);
  }
  return {p, dp, s};
}

// Taylor coefficients of p around x0: p(x0 + t) = sum_k t_k t^k.
std::vector<cplx> taylor_shift(const std::vector<double>& c, cplx x0) {
  std::vector<cplx> w(c.begin(), c.end());
  const std::size_t n = w.size() - 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 1; i <= n - k; ++i) w[i] += x0 * w[i - 1];
  std::reverse(w.begin(), w.end());
  return w;
}

struct AberthResult {
  std::vector<cplx> roots;
  bool converged = false;
  double residual = 0.0;
};

AberthResult aberth(const std::vector<double>& c) {
  const int L = static_cast<int>(c.size()) - 1;
  AberthResult out;
  out.roots.resize(L);
  const cplx center = -c[1] / static_cast<double>(L);
  // Radius from the shifted polynomial's constant term (geometric mean of |root - center|).
  auto sh = taylor_shift(c, center);
  double rad = std::pow(std::max(std::abs(sh[0]), 1e-300), 1.0 / L);
  if (!(rad > 1e-12)) rad = 1.0;
  for (int k = 0; k < L; ++k) {
    double ang = 2.0 * kPi * k / L + 0.4;
    out.roots[k] = center + rad * cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<char> done(L, 0);
  const int max_sweeps = 800;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool all = true;
    for (int k = 0; k < L; ++k) {
      if (done[k]) continue;
      auto h = horner(c, out.roots[k]);
      if (std::abs(h.p) <= 4.0 * kEps * h.scale) {
        done[k] = 1;
        continue;
      }
      all = false;
      cplx ratio = h.p / h.dp;
      if (!std::isfinite(ratio.real()) || !std::isfinite(ratio.imag())) {
        // Stationary point: nudge off it.
        out.roots[k] += cplx(1e-3, 1e-3) * (1.0 + std::abs(out.roots[k]));
        continue;
      }
      cplx sum = 0.0;
      for (int j = 0; j < L; ++j)
        if (j != k) sum += 1.0 / (out.roots[k] - out.roots[j]);
      cplx delta = ratio / (1.0 - ratio * sum);
      if (!std::isfinite(delta.real()) || !std::isfinite(delta.imag())) delta = ratio;
      out.roots[k] -= delta;
    }
    if (all) {
      out.converged = true;
      break;
    }
  }
  double res = 0.0;
  for (int k = 0; k < L; ++k) {
    auto h = horner(c, out.roots[k]);
    res = std::max(res, std::abs(h.p) / h.scale);
  }
  out.residual = res;
  if (!out.converged) out.converged = res <= 16.0 * kEps;
  return out;
}

std::vector<cplx> companion_eigenvalues(const GeneratingPolynomial& poly) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion_matrix(poly), false);
  if (es.info() != Eigen::Success) throw NumericError("companion eigenvalue fallback failed");
  std::vector<cplx> r(poly.degree());
  for (int i = 0; i < poly.degree(); ++i) r[i] = es.eigenvalues()[i];
  return r;
}

struct Cluster {
  cplx center;
  int mult;
};

// Groups raw roots. A group of k roots is accepted when its spread is within cluster_tol, or within
// the radius by which rounding can split a k-fold root of this polynomial.
std::vector<Cluster> cluster_roots(const std::vector<double>& c, const std::vector<cplx>& roots,
                                   double tol) {
  const int L = static_cast<int>(roots.size());
  std::vector<char> used(L, 0);
  std::vector<Cluster> out;
  for (int i = 0; i < L; ++i) {
    if (used[i]) continue;
    std::vector<int> others;
    for (int j = 0; j < L; ++j)
      if (!used[j] && j != i) others.push_back(j);
    std::sort(others.begin(), others.end(), [&](int a, int b) {
      return std::abs(roots[a] - roots[i]) < std::abs(roots[b] - roots[i]);
    });
    std::vector<int> best{i};
    cplx best_center = roots[i];
    std::vector<int> members{i};
    cplx sum = roots[i];
    for (int idx : others) {
      members.push_back(idx);
      sum += roots[idx];
      const int k = static_cast<int>(members.size());
      cplx cen = sum / static_cast<double>(k);
      double spread = 0.0;
      for (int m : members) spread = std::max(spread, std::abs(roots[m] - cen));
      bool accept = spread <= tol;
      if (!accept) {
        auto t = taylor_shift(c, cen);
        double scale = horner(c, cen).scale;
        double tk = std::abs(t[k]);
        if (tk > 0.0) {
          double delta = 16.0 * L * kEps * scale;
          double rk = std::pow(delta / tk, 1.0 / k);
          accept = spread <= 2.0 * rk;
        }
      }
      if (accept) {
        best = members;
        best_center = cen;
      }
      if (spread > 1e-2 * (1.0 + std::abs(cen))) break;
    }
    for (int m : best) used[m] = 1;
    const int k = static_cast<int>(best.size());
    if (k > 1) {
      // Newton on the (k-1)-th derivative, which has a simple zero at a k-fold root.
      double spread = 0.0;
      for (int m : best) spread = std::max(spread, std::abs(roots[m] - best_center));
      cplx z = best_center;
      for (int it = 0; it < 4; ++it) {
        auto t = taylor_shift(c, z);
        if (t[k] == 0.0) break;
        z -= t[k - 1] / (static_cast<double>(k) * t[k]);
      }
      if (std::abs(z - best_center) <= spread) best_center = z;
    }
    out.push_back({best_center, k});
  }
  return out;
}

std::vector<Cluster> symmetrize(std::vector<Cluster> cl) {
  const std::size_t n = cl.size();
  std::vector<char> done(n, 0);
  std::vector<Cluster> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) continue;
    const cplx mirror = std::conj(cl[i].center);
    std::size_t best = i;
    double bd = std::abs(cl[i].center - mirror);
    for (std::size_t j = 0; j < n; ++j) {
      if (done[j] || j == i) continue;
      double d = std::abs(cl[j].center - mirror);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    if (best == i) {
      done[i] = 1;
      out.push_back({cplx(cl[i].center.real(), 0.0), cl[i].mult});
      continue;
    }
    if (cl[best].mult != cl[i].mult)
      throw NumericError("conjugate clusters with different multiplicities", bd);
    cplx avg = 0.5 * (cl[i].center + std::conj(cl[best].center));
    done[i] = done[best] = 1;
    if (avg.imag() < 0) avg = std::conj(avg);
    out.push_back({avg, cl[i].mult});
    out.push_back({std::conj(avg), cl[i].mult});
  }
  return out;
}

void sort_entries(std::vector<ZeroEntry>& e) {
  std::stable_sort(e.begin(), e.end(), [](const ZeroEntry& a, const ZeroEntry& b) {
    double ma = std::abs(a.root), mb = std::abs(b.root);
    if (std::abs(ma - mb) > 1e-12 * std::max(1.0, ma)) return ma > mb;
    return std::arg(a.root) > std::arg(b.root);
  });
}

}  // namespace

GeneratingPolynomial::GeneratingPolynomial(std::vector<double> a) : a_(std::move(a)) {
  if (a_.empty()) throw PreconditionError("generating polynomial needs at least one coefficient");
  for (double v : a_)
    if (!std::isfinite(v)) throw PreconditionError("coefficients must be finite");
  if (a_.back() == 0.0)
    throw PreconditionError("a_L = 0: zero roots are not supported, drop the trailing zero coefficients explicitly");
  if (a_.size() > 32) throw PreconditionError("degree above 32 is not supported");
}

std::vector<double> GeneratingPolynomial::monic_descending() const {
  std::vector<double> c(a_.size() + 1);
  c[0] = 1.0;
  for (std::size_t j = 0; j < a_.size(); ++j) c[j + 1] = -a_[j];
  return c;
}

cplx GeneratingPolynomial::eval(cplx z) const { return horner(monic_descending(), z).p; }

int ZeroSet::degree() const {
  int d = 0;
  for (const auto& e : entries) d += e.mult;
  return d;
}

ZeroSet make_zero_set(std::vector<ZeroEntry> entries, bool complete_conjugates) {
  ZeroSet z;
  z.origin = ZeroOrigin::Exact;
  for (const auto& e : entries) {
    if (e.mult < 1) throw PreconditionError("multiplicity must be positive");
    if (!std::isfinite(e.root.real()) || !std::isfinite(e.root.imag()))
      throw PreconditionError("roots must be finite");
  }
  std::vector<ZeroEntry> all = entries;
  if (complete_conjugates) {
    for (const auto& e : entries) {
      if (e.root.imag() == 0.0) continue;
      cplx m = std::conj(e.root);
      bool present = std::any_of(entries.begin(), entries.end(), [&](const ZeroEntry& f) {
        return std::abs(f.root - m) <= 1e-12 * std::max(1.0, std::abs(m));
      });
      if (!present) all.push_back({m, e.mult});
    }
  }
  sort_entries(all);
  z.entries = std::move(all);
  return z;
}

ZeroSet find_roots(const GeneratingPolynomial& poly, std::optional<double> cluster_tol) {
  if (cluster_tol && !(*cluster_tol >= 0.0)) throw PreconditionError("cluster_tol must be >= 0");
  const auto c = poly.monic_descending();
  const int L = poly.degree();
  std::vector<cplx> raw;
  if (L == 1) {
    raw = {cplx(poly.a(1), 0.0)};
  } else {
    auto ab = aberth(c);
    if (ab.converged) {
      raw = ab.roots;
    } else {
      raw = companion_eigenvalues(poly);
      double res = 0.0;
      for (auto r : raw) {
        auto h = horner(c, r);
        res = std::max(res, std::abs(h.p) / h.scale);
      }
      if (res > 1e-8) throw NumericError("root iteration did not converge", std::max(res, ab.residual));
    }
  }
  double rmax = 0.0;
  for (auto r : raw) rmax = std::max(rmax, std::abs(r));
  const double tol = cluster_tol.value_or(1e-6 * std::max(1.0, rmax));
  auto clusters = symmetrize(cluster_roots(c, raw, tol));
  ZeroSet z;
  z.cluster_tol = tol;
  z.origin = ZeroOrigin::Numerical;
  for (const auto& cl : clusters) z.entries.push_back({cl.center, cl.mult});
  sort_entries(z.entries);
  return z;
}

GeneratingPolynomial from_zero_set(const ZeroSet& zeros) {
  if (zeros.entries.empty()) throw PreconditionError("empty zero set");
  std::vector<cplx> p{1.0};  // descending
  for (const auto& e : zeros.entries)
    for (int m = 0; m < e.mult; ++m) {
      std::vector<cplx> q(p.size() + 1, 0.0);
      for (std::size_t i = 0; i < p.size(); ++i) {
        q[i] += p[i];
        q[i + 1] -= e.root * p[i];
      }
      p = std::move(q);
    }
  double scale = 1.0;
  for (auto v : p) scale = std::max(scale, std::abs(v));
  std::vector<double> a(p.size() - 1);
  for (std::size_t j = 1; j < p.size(); ++j) {
    if (std::abs(p[j].imag()) > 1e-10 * scale)
      throw PreconditionError("zero set is not closed under conjugation (imaginary coefficient " +
                              std::to_string(p[j].imag()) + ")");
    a[j - 1] = -p[j].real();
  }
  return GeneratingPolynomial(std::move(a));
}

SpectralSummary spectral_summary(const ZeroSet& zeros, std::optional<double> modulus_tol) {
  SpectralSummary s;
  s.origin = zeros.origin;
  s.modulus_tol = modulus_tol.value_or(zeros.origin == ZeroOrigin::Exact ? 1e-9 : 1e-6);
  for (const auto& e : zeros.entries) s.r_star = std::max(s.r_star, std::abs(e.root));
  const double cut = s.r_star * (1.0 - s.modulus_tol);
  for (const auto& e : zeros.entries) {
    if (std::abs(e.root) < cut) continue;
    s.lambda_star.push_back(e);
    s.m_star = std::max(s.m_star, e.mult);
    if (std::abs(e.root.imag()) <= s.modulus_tol * s.r_star && e.root.real() > 0.0)
      s.m_rstar = std::max(s.m_rstar, e.mult);
  }
  return s;
}

Eigen::MatrixXd companion_matrix(const GeneratingPolynomial& poly) {
  const int L = poly.degree();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(L, L);
  for (int j = 0; j < L; ++j) A(0, j) = poly.coeffs()[j];
  for (int i = 1; i < L; ++i) A(i, i - 1) = 1.0;
  return A;
}

double binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r < 0x1.0p53 ? std::round(r) : r;
}

std::vector<double> jordan_power_apply(const GeneratingPolynomial& poly, std::span<const double> x,
                                       std::uint64_t n) {
  return jordan_power_apply(poly, find_roots(poly), x, n);
}

std::vector<double> jordan_power_apply(const GeneratingPolynomial& poly, const ZeroSet& zeros,
                                       std::span<const double> x, std::uint64_t n) {
  const int L = poly.degree();
  if (static_cast<int>(x.size()) != L) throw PreconditionError("state vector length must equal L");
  if (zeros.degree() != L) throw PreconditionError("zero set degree does not match polynomial");
  // Column layout: chain vectors v_{lambda,r}, r = 1..m, with component i holding the
  // (r-1)-th normalized derivative of lambda^{L-1-i}.
  Eigen::MatrixXcd V(L, L);
  int col = 0;
  for (const auto& e : zeros.entries)
    for (int r = 1; r <= e.mult; ++r, ++col)
      for (int i = 0; i < L; ++i) {
        int p = L - 1 - i;
        V(i, col) = p < r - 1 ? cplx(0.0) : binomial(p, r - 1) * std::pow(e.root, p - r + 1);
      }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
  double rc = lu.rcond();
  if (!(rc > 1e-12))
    throw NumericError("Jordan chain system is ill-conditioned (rcond " + std::to_string(rc) +
                           "); use direct_power_apply",
                       rc);
  Eigen::VectorXcd xv(L);
  for (int i = 0; i < L; ++i) xv[i] = x[i];
  Eigen::VectorXcd c = lu.solve(xv);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(L);
  col = 0;
  for (const auto& e : zeros.entries) {
    for (int r = 1; r <= e.mult; ++r) {
      cplx w = 0.0;
      for (int j = 0; r + j <= e.mult; ++j) {
        if (static_cast<std::uint64_t>(j) > n) break;
        w += binomial(n, j) * std::pow(e.root, static_cast<double>(n - j)) * c[col + r - 1 + j];
      }
      out += w * V.col(col + r - 1);
    }
    col += e.mult;
  }
  std::vector<double> res(L);
  double mag = 1e-300;
  for (int i = 0; i < L; ++i) mag = std::max(mag, std::abs(out[i]));
  for (int i = 0; i < L; ++i) {
    if (std::abs(out[i].imag()) > 1e-9 * mag)
      throw NumericError("Jordan evaluation left an imaginary residue", std::abs(out[i].imag()) / mag);
    res[i] = out[i].real();
  }
  return res;
}

std::vector<double> direct_power_apply(const GeneratingPolynomial& poly, std::span<const double> x,
                                       std::uint64_t n) {
  const int L = poly.degree();
  if (static_cast<int>(x.size()) != L) throw PreconditionError("state vector length must equal L");
  std::vector<double> s(x.begin(), x.end()), t(L);
  for (std::uint64_t k = 0; k < n; ++k) {
    double top = 0.0;
    for (int j = 0; j < L; ++j) top += poly.coeffs()[j] * s[j];
    t[0] = top;
    for (int i = 1; i < L; ++i) t[i] = s[i - 1];
    std::swap(s, t);
  }
  return s;
}

std::vector<double> nonneg_multiplier_quadratic(double b, double c) {
  if (!(b * b - 4.0 * c < 0.0)) throw PreconditionError("nonneg_multiplier_quadratic needs b^2 - 4c < 0");
  std::vector<double> out{1.0};
  double prev2 = 0.0, prev = 1.0;
  for (std::size_t k = 1;; ++k) {
    double bk = k == 1 ? -b / c : -(b * prev + prev2) / c;
    if (bk <= 0.0) break;
    out.push_back(bk);
    prev2 = prev;
    prev = bk;
    if (k >= 1000000) throw NumericError("multiplier recursion exceeded its cap", static_cast<double>(k));
  }
  return out;
}

std::vector<double> poly_multiply(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) return {};
  std::vector<double> r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

std::vector<double> ascending_coeffs(const GeneratingPolynomial& poly) {
  auto d = poly.monic_descending();
  std::reverse(d.begin(), d.end());
  return d;
}

std::vector<double> nonneg_multiplier(const GeneratingPolynomial& poly) {
  auto zeros = find_roots(poly);
  double rmax = 0.0;
  for (const auto& e : zeros.entries) rmax = std::max(rmax, std::abs(e.root));
  const double tol = std::max(zeros.cluster_tol, 1e-9 * std::max(1.0, rmax));
  std::vector<double> P{1.0};
  for (const auto& e : zeros.entries) {
    if (e.root.real() > 0.0 && std::abs(e.root.imag()) <= tol)
      throw PreconditionError("polynomial has a positive real zero");
    if (e.root.imag() <= tol) continue;  // real negative factors, or the lower conjugate
    const double b = -2.0 * e.root.real(), c = std::norm(e.root);
    auto m = nonneg_multiplier_quadratic(b, c);
    for (int k = 0; k < e.mult; ++k) P = poly_multiply(P, m);
  }
  auto prod = poly_multiply(ascending_coeffs(poly), P);
  double scale = 0.0;
  for (double v : prod) scale = std::max(scale, std::abs(v));
  for (double v : prod)
    if (v < -1e-10 * scale) throw NumericError("multiplier product has a negative coefficient", v / scale);
  return P;
}

std::uint64_t binom_shift(std::uint64_t s, std::uint64_t x) {
  if (s == 0) throw PreconditionError("binom_shift needs s >= 1");
  const std::uint64_t n = s - 1 + x;
  const std::uint64_t k = std::min(x, s - 1);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max())
      throw PreconditionError("binom_shift overflows 64 bits");
  }
  return static_cast<std::uint64_t>(r);
}

GridWitness grid_witness(std::span<const double> g, int L) {
  const int m = static_cast<int>(g.size());
  if (m < 1 || L < m) throw PreconditionError("grid_witness needs 1 <= m <= L");
  GridWitness w;
  w.value = -1.0;
  Eigen::MatrixXd V(L, m);
  for (int k = 1; k <= L; ++k) {
    double y = static_cast<double>(k) / L, val = 0.0, pw = 1.0;
    for (int j = 0; j < m; ++j) {
      V(k - 1, j) = pw;
      val += g[j] * pw;
      pw *= y;
    }
    if (std::abs(val) > w.value) {
      w.value = std::abs(val);
      w.y = y;
    }
  }
  Eigen::MatrixXd pinv = V.completeOrthogonalDecomposition().pseudoInverse();
  w.bound_constant = 1.0 / (L * pinv.cwiseAbs().maxCoeff());
  return w;
}

}  // namespace arp
