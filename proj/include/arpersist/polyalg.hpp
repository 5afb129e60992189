#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace arp {

using cplx = std::complex<double>;

// Q(z) = z^L - sum_j a_j z^{L-j}, stored as the recurrence coefficients a_1..a_L.
class GeneratingPolynomial {
 public:
  explicit GeneratingPolynomial(std::vector<double> a);

  int degree() const { return static_cast<int>(a_.size()); }
  const std::vector<double>& coeffs() const { return a_; }
  double a(int j) const { return a_[j - 1]; }  // 1-based, like the recurrence

  // Monic coefficients of Q in descending powers: 1, -a_1, ..., -a_L.
  std::vector<double> monic_descending() const;
  cplx eval(cplx z) const;

 private:
  std::vector<double> a_;
};

struct ZeroEntry {
  cplx root;
  int mult = 1;
};

enum class ZeroOrigin { Exact, Numerical };

struct ZeroSet {
  std::vector<ZeroEntry> entries;
  double cluster_tol = 0.0;
  ZeroOrigin origin = ZeroOrigin::Exact;

  int degree() const;
};

// Builds an exact zero set from (root, mult) pairs, adding missing conjugates.
ZeroSet make_zero_set(std::vector<ZeroEntry> entries, bool complete_conjugates = true);

struct SpectralSummary {
  double r_star = 0.0;
  std::vector<ZeroEntry> lambda_star;
  int m_star = 0;
  int m_rstar = 0;
  ZeroOrigin origin = ZeroOrigin::Exact;
  double modulus_tol = 0.0;
};

ZeroSet find_roots(const GeneratingPolynomial& poly, std::optional<double> cluster_tol = std::nullopt);
GeneratingPolynomial from_zero_set(const ZeroSet& zeros);
SpectralSummary spectral_summary(const ZeroSet& zeros, std::optional<double> modulus_tol = std::nullopt);

Eigen::MatrixXd companion_matrix(const GeneratingPolynomial& poly);

// A^n x through the Jordan-chain closed form.
std::vector<double> jordan_power_apply(const GeneratingPolynomial& poly, std::span<const double> x,
                                       std::uint64_t n);
std::vector<double> jordan_power_apply(const GeneratingPolynomial& poly, const ZeroSet& zeros,
                                       std::span<const double> x, std::uint64_t n);
std::vector<double> direct_power_apply(const GeneratingPolynomial& poly, std::span<const double> x,
                                       std::uint64_t n);

// Multiplier coefficients b_0..b_{tau-1} in ascending powers.
std::vector<double> nonneg_multiplier_quadratic(double b, double c);
// P(z) in ascending powers such that Q(z) P(z) has non-negative coefficients.
std::vector<double> nonneg_multiplier(const GeneratingPolynomial& poly);

// Ascending-power polynomial product.
std::vector<double> poly_multiply(std::span<const double> p, std::span<const double> q);
// Q's coefficients in ascending powers.
std::vector<double> ascending_coeffs(const GeneratingPolynomial& poly);

// C(s-1+x, x); throws PreconditionError on 64-bit overflow.
std::uint64_t binom_shift(std::uint64_t s, std::uint64_t x);
double binomial(std::uint64_t n, std::uint64_t k);

struct GridWitness {
  double y = 0.0;
  double value = 0.0;          // |g(y)|
  double bound_constant = 0.0; // C with |g(y)| >= C max|c_j|
};

// g(x) = sum_j g_coeffs[j] x^j scanned on {1/L, ..., 1}.
GridWitness grid_witness(std::span<const double> g_coeffs, int L);

}  // namespace arp
