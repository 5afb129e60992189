#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "arpersist/polyalg.hpp"

namespace arp {

// X_0..X_{N-1} with zero initial conditions; xi_0 drives X_0.
struct PathSample {
  std::vector<double> xs;
  std::uint64_t seed = 0;
  bool saturated = false;  // some |X_n| overflowed and was clamped to +-inf
};

PathSample simulate(const GeneratingPolynomial& poly, int N, std::uint64_t seed);
// Same recurrence driven by caller-supplied noise; N = noise.size().
PathSample simulate_with_noise(const GeneratingPolynomial& poly, std::span<const double> noise);

// h_0..h_N.
std::vector<double> impulse_response(const GeneratingPolynomial& poly, int N);

struct ModalTerm {
  cplx lambda;
  std::vector<cplx> beta;  // beta_{lambda, j}, j = 0..m-1

  // 2|beta_j| and arg beta_j for a complex mode paired with its conjugate; |beta_j| and the sign
  // phase for a real one.
  double amplitude(int j) const;
  double phase(int j) const;
};

struct ModalDecomposition {
  std::vector<ModalTerm> terms;
};

// q_l = sum_lambda sum_j beta_{lambda,j} lambda^l l^j matching init[0..L-1].
ModalDecomposition modal_decomposition(const ZeroSet& zeros, std::span<const double> init);
double eval_modal(const ModalDecomposition& decomp, std::uint64_t ell);

// b_{n,i,M} via its defining recursion; closed form C(n-i+M, M).
double triangle_coeff(int n, int i, int M);
double triangle_coeff_closed(int n, int i, int M);

struct RotatedComponent {
  double theta = 0.0, phase = 0.0;
  int k = 0;
  std::vector<double> T, Tp;  // index n = 0..N-1
};

// T_{n,k} = sum_{i<=n} b_{n,i,k} cos((n-i)theta + phase) xi_i and T' with sin.
// Noise index i runs over 0..N-1 and the binomial weight uses b_{n+1,i+1,k}.
RotatedComponent rotated_components(std::span<const double> noise, double theta, double phase, int k);

struct RotState {
  double T = 0.0, Tp = 0.0;
};

RotState rotate(RotState s, double theta, int power = 1);
// (T,T')_{n+1,k} = R_theta (T,T')_{n,k} + (T,T')_{n+1,k-1}.
RotState rotation_step(RotState s, double theta, RotState injection);

// Cov(X_{n-L+1},...,X_n); requires n >= L.
Eigen::MatrixXd covariance_window(const GeneratingPolynomial& poly, int n);
// Gram matrix of (X_0..X_{N-1}).
Eigen::MatrixXd path_covariance(const GeneratingPolynomial& poly, int N);

struct ConditionalGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::vector<int> free_index;  // original indices of the unobserved block, ascending
};

ConditionalGaussian conditional_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                         const std::vector<int>& observed,
                                         const Eigen::VectorXd& observed_values);

// First i with sum_j r_j cos(i theta_j + gamma_j) <= -max|r_j|/4.
struct WitnessResult {
  int index = -1;
  long long cap = 0;
  double bound_constant = 0.0;
};
WitnessResult rotation_negativity_witness(std::span<const double> thetas, std::span<const double> rs,
                                          std::span<const double> gammas);

// 1/|sin(psi/2)|: bound on |sum_{i<=n} cos(i psi + c)| / (n^k), up to the factor 2.
double oscillation_constant(double psi);

}  // namespace arp
