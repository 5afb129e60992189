#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arpersist/polyalg.hpp"
#include "arpersist/regime.hpp"

namespace arp {

enum class Method { Naive, Splitting, Oracle };
std::string to_string(Method m);

struct PersistenceEstimate {
  int N = 0;
  double p_hat = 0.0;
  double log_p_hat = 0.0;   // -inf when p_hat = 0
  double stderr_log = 0.0;  // standard error of log p_hat (delta method for naive/oracle)
  double stderr_p = 0.0;
  Method method = Method::Naive;
  long long budget = 0;  // samples, or particles x replicates
  std::uint64_t seed = 0;
  bool extinct = false;  // splitting lost every particle in some replicate
};

struct SplittingConfig {
  std::vector<int> checkpoints;  // strictly increasing, first >= 1
  int particles = 10000;
  int replicates = 8;
};

void validate(const SplittingConfig& c);

// Default stage grid: geometric ceil(N 2^{k-K}) for power-law / bounded regimes, spacing 4 otherwise.
std::vector<int> default_checkpoints(DecayModel model, int N);
// Union of the default grid for max(Ns) with the requested horizons.
std::vector<int> checkpoints_for(DecayModel model, std::span<const int> Ns);

PersistenceEstimate naive_persistence(const GeneratingPolynomial& poly, int N, long long n_samples,
                                      std::uint64_t seed, unsigned threads = 1);
// One pass of length max(Ns) scores every horizon (common random numbers).
std::vector<PersistenceEstimate> naive_persistence_profile(const GeneratingPolynomial& poly, std::span<const int> Ns,
                                                           long long n_samples, std::uint64_t seed,
                                                           unsigned threads = 1);

struct SplittingReport {
  std::vector<PersistenceEstimate> at_checkpoint;       // one per completed checkpoint
  bool truncated = false;
  std::vector<std::vector<double>> stage_fractions;     // [replicate][stage]
  std::vector<std::vector<double>> replicate_estimates; // [replicate][stage], running products
};

// Called once per checkpoint as soon as its estimate is final; return false to stop early.
using CheckpointCallback = std::function<bool(const PersistenceEstimate&)>;

SplittingReport splitting_profile(const GeneratingPolynomial& poly, const SplittingConfig& config,
                                  std::uint64_t seed, unsigned threads = 1,
                                  const CheckpointCallback& on_checkpoint = {});
PersistenceEstimate splitting_persistence(const GeneratingPolynomial& poly, int N, const SplittingConfig& config,
                                          std::uint64_t seed, unsigned threads = 1);

PersistenceEstimate orthant_oracle(const GeneratingPolynomial& poly, int N);
// Orthant probability of an explicit covariance (hook for synthetic oracles).
PersistenceEstimate orthant_oracle_cov(const Eigen::MatrixXd& cov);

struct ExponentFit {
  DecayModel model = DecayModel::PowerLaw;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  int n_min = 0, n_max = 0;
  int points = 0;
  // -slope for power/exponential, slope for stretched.
  double exponent() const;
};

ExponentFit fit_exponent(std::span<const PersistenceEstimate> estimates, DecayModel model);

struct SlepianReport {
  double p_a = 0.0, p_b = 0.0, err_a = 0.0, err_b = 0.0;
  bool holds = false;
};

SlepianReport slepian_probe(const Eigen::MatrixXd& cov_a, const Eigen::MatrixXd& cov_b);

}  // namespace arp
