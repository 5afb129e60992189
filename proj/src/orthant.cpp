#include "arpersist/orthant.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "arpersist/error.hpp"
#include "arpersist/rng.hpp"

namespace arp {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cdf_or(double x) {
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  return normal_cdf(x);
}

// Cholesky factor with Genz-Bretz variable prioritisation: at each step pick the variable whose
// conditional interval probability is smallest.
struct Prepared {
  Eigen::MatrixXd C;  // lower triangular
  Eigen::VectorXd a, b;
};

Prepared prepare(Eigen::MatrixXd S, Eigen::VectorXd a, Eigen::VectorXd b) {
  const int n = static_cast<int>(S.rows());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    int best = i;
    double bestp = kInf;
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < i; ++k) s += C(j, k) * C(j, k);
      double var = S(j, j) - s;
      if (var <= 0.0) continue;
      double sd = std::sqrt(var), m = 0.0;
      for (int k = 0; k < i; ++k) m += C(j, k) * y[k];
      double p = cdf_or((b[j] - m) / sd) - cdf_or((a[j] - m) / sd);
      if (p < bestp) {
        bestp = p;
        best = j;
      }
    }
    if (best != i) {
      S.row(i).swap(S.row(best));
      S.col(i).swap(S.col(best));
      C.row(i).swap(C.row(best));
      std::swap(a[i], a[best]);
      std::swap(b[i], b[best]);
    }
    double s = 0.0;
    for (int k = 0; k < i; ++k) s += C(i, k) * C(i, k);
    double var = S(i, i) - s;
    if (!(var > 1e-12 * S(i, i))) throw NumericError("covariance is singular or not positive definite", var);
    C(i, i) = std::sqrt(var);
    for (int j = i + 1; j < n; ++j) {
      double t = S(j, i);
      for (int k = 0; k < i; ++k) t -= C(j, k) * C(i, k);
      C(j, i) = t / C(i, i);
    }
    // Expected value of the truncated conditional variable, used for later ordering decisions.
    double m = 0.0;
    for (int k = 0; k < i; ++k) m += C(i, k) * y[k];
    double al = (a[i] - m) / C(i, i), bl = (b[i] - m) / C(i, i);
    double pa = cdf_or(al), pb = cdf_or(bl), den = pb - pa;
    auto pdf = [](double x) { return std::isinf(x) ? 0.0 : std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
    y[i] = den > 1e-300 ? (pdf(al) - pdf(bl)) / den : (std::isinf(al) ? bl : al);
  }
  return {C, a, b};
}

double integrand(const Prepared& P, const double* w, std::vector<double>& y) {
  const int n = static_cast<int>(P.C.rows());
  double f = 1.0;
  for (int i = 0; i < n; ++i) {
    double m = 0.0;
    for (int k = 0; k < i; ++k) m += P.C(i, k) * y[k];
    double d = cdf_or((P.a[i] - m) / P.C(i, i));
    double e = cdf_or((P.b[i] - m) / P.C(i, i));
    f *= e - d;
    if (f <= 0.0) return 0.0;
    if (i + 1 < n) {
      double u = d + w[i] * (e - d);
      u = std::clamp(u, 1e-300, 1.0 - 1e-16);
      y[i] = normal_quantile(u);
    }
  }
  return f;
}

std::vector<double> lattice_generator(int dim) {
  std::vector<double> g;
  for (int p = 2; static_cast<int>(g.size()) < dim; ++p) {
    bool prime = true;
    for (int q = 2; q * q <= p; ++q)
      if (p % q == 0) {
        prime = false;
        break;
      }
    if (prime) g.push_back(std::fmod(std::sqrt(static_cast<double>(p)), 1.0));
  }
  return g;
}

}  // namespace

MvnResult gaussian_box(const Eigen::MatrixXd& cov, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                       const MvnOptions& opt) {
  const int n = static_cast<int>(cov.rows());
  if (n < 1 || cov.cols() != n || lower.size() != n || upper.size() != n)
    throw PreconditionError("covariance and limits must have matching sizes");
  for (int i = 0; i < n; ++i)
    if (!(lower[i] < upper[i])) return {0.0, 0.0, 0};
  Prepared P = prepare(cov, lower, upper);
  MvnResult res;
  if (n == 1) {
    res.value = cdf_or(P.b[0] / P.C(0, 0)) - cdf_or(P.a[0] / P.C(0, 0));
    return res;
  }
  const int dim = n - 1;
  auto gen = lattice_generator(dim);
  Rng rng(opt.seed, {static_cast<std::uint64_t>(n)});
  std::vector<std::vector<double>> shift(opt.shifts, std::vector<double>(dim));
  for (auto& s : shift)
    for (auto& v : s) v = rng.uniform();
  std::vector<double> sums(opt.shifts, 0.0), w(dim), y(n);
  long long done = 0;
  for (long long target = 1024;; target *= 2) {
    for (int s = 0; s < opt.shifts; ++s) {
      double acc = 0.0;
      for (long long k = done + 1; k <= target; ++k) {
        for (int j = 0; j < dim; ++j) {
          double x = k * gen[j] + shift[s][j];
          x -= std::floor(x);
          w[j] = std::abs(2.0 * x - 1.0);  // baker's (tent) periodisation
        }
        acc += integrand(P, w.data(), y);
      }
      sums[s] += acc;
    }
    done = target;
    double mean = 0.0;
    for (double v : sums) mean += v / done;
    mean /= opt.shifts;
    double var = 0.0;
    for (double v : sums) var += (v / done - mean) * (v / done - mean);
    var /= (opt.shifts - 1.0) * opt.shifts;
    res.value = mean;
    res.error = 3.0 * std::sqrt(var);
    res.points = done * opt.shifts;
    if (res.error <= opt.abs_tol || target >= opt.max_points) break;
  }
  return res;
}

MvnResult gaussian_orthant(const Eigen::MatrixXd& cov, const MvnOptions& opt) {
  const int n = static_cast<int>(cov.rows());
  return gaussian_box(cov, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(n, kInf), opt);
}

}  // namespace arp
