#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace arp {

struct MvnResult {
  double value = 0.0;
  double error = 0.0;  // 3 standard errors over the random shifts
  long long points = 0;
};

struct MvnOptions {
  double abs_tol = 5e-6;
  long long max_points = 1LL << 22;  // per shift
  int shifts = 12;
  std::uint64_t seed = 0x5eed0f0e7a27ULL;
};

// P(lower <= X <= upper) for X ~ N(0, cov); infinite limits allowed.
MvnResult gaussian_box(const Eigen::MatrixXd& cov, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                       const MvnOptions& opt = {});
// P(X >= 0 coordinatewise).
MvnResult gaussian_orthant(const Eigen::MatrixXd& cov, const MvnOptions& opt = {});

double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace arp
