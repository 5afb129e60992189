#include "arpersist/persist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "arpersist/arproc.hpp"
#include "arpersist/error.hpp"
#include "arpersist/orthant.hpp"
#include "arpersist/rng.hpp"

namespace arp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Recurrence on Y_n = X_n / s^n, s = max(1, r*). Signs match X exactly and nothing overflows.
struct ScaledRecurrence {
  std::vector<double> a;  // a_j s^{-j}
  double log_s = 0.0;

  explicit ScaledRecurrence(const GeneratingPolynomial& poly) {
    double r = 0.0;
    for (const auto& e : find_roots(poly).entries) r = std::max(r, std::abs(e.root));
    const double s = r > 1.0 ? r : 1.0;
    log_s = std::log(s);
    a = poly.coeffs();
    double sj = 1.0;
    for (auto& v : a) {
      sj /= s;
      v *= sj;
    }
  }
  double noise_scale(int n) const { return log_s == 0.0 ? 1.0 : std::exp(-n * log_s); }
};

void finish_binomial(PersistenceEstimate& e, long long surv, long long n) {
  e.p_hat = static_cast<double>(surv) / n;
  e.stderr_p = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
  if (e.p_hat > 0.0) {
    e.log_p_hat = std::log(e.p_hat);
    e.stderr_log = e.stderr_p / e.p_hat;
  } else {
    e.log_p_hat = -kInf;
    e.stderr_log = kInf;
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Naive: return "naive";
    case Method::Splitting: return "splitting";
    case Method::Oracle: return "oracle";
  }
  return "?";
}

void validate(const SplittingConfig& c) {
  if (c.checkpoints.empty()) throw PreconditionError("splitting needs at least one checkpoint");
  if (c.checkpoints.front() < 1) throw PreconditionError("first checkpoint must be >= 1");
  for (std::size_t i = 1; i < c.checkpoints.size(); ++i)
    if (c.checkpoints[i] <= c.checkpoints[i - 1]) throw PreconditionError("checkpoints must be strictly increasing");
  if (c.particles < 1) throw PreconditionError("particles must be positive");
  if (c.replicates < 1) throw PreconditionError("replicates must be positive");
}

std::vector<int> default_checkpoints(DecayModel model, int N) {
  if (N < 1) throw PreconditionError("horizon must be >= 1");
  std::set<int> pts;
  if (model == DecayModel::PowerLaw || model == DecayModel::BoundedBelow) {
    const int K = static_cast<int>(std::ceil(std::log2(static_cast<double>(N))));
    for (int k = 0; k <= K; ++k) pts.insert(std::max(1, static_cast<int>(std::ceil(std::ldexp(N, k - K)))));
  } else {
    for (int n = 4; n < N; n += 4) pts.insert(n);
  }
  pts.insert(N);
  return {pts.begin(), pts.end()};
}

std::vector<int> checkpoints_for(DecayModel model, std::span<const int> Ns) {
  if (Ns.empty()) throw PreconditionError("empty horizon list");
  auto base = default_checkpoints(model, *std::max_element(Ns.begin(), Ns.end()));
  std::set<int> pts(base.begin(), base.end());
  for (int n : Ns) {
    if (n < 1) throw PreconditionError("horizons must be >= 1");
    pts.insert(n);
  }
  return {pts.begin(), pts.end()};
}

std::vector<PersistenceEstimate> naive_persistence_profile(const GeneratingPolynomial& poly, std::span<const int> Ns,
                                                           long long n_samples, std::uint64_t seed,
                                                           unsigned threads) {
  if (n_samples < 1) throw PreconditionError("n_samples must be >= 1");
  if (Ns.empty()) throw PreconditionError("empty horizon list");
  for (int n : Ns)
    if (n < 1) throw PreconditionError("horizons must be >= 1");
  const int Nmax = *std::max_element(Ns.begin(), Ns.end());
  const ScaledRecurrence rec(poly);
  const int L = poly.degree();
  std::vector<double> scale(Nmax);
  for (int n = 0; n < Nmax; ++n) scale[n] = rec.noise_scale(n);
  const unsigned T = resolve_threads(threads);
  // hist[w][len]: paths whose first negative time is len (len = Nmax means survived).
  std::vector<std::vector<long long>> hist(T, std::vector<long long>(Nmax + 1, 0));
  const std::size_t chunk = (static_cast<std::size_t>(n_samples) + T - 1) / T;
  parallel_for(T, T, [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      std::vector<double> y(Nmax);
      const std::size_t b = w * chunk, e = std::min<std::size_t>(n_samples, b + chunk);
      for (std::size_t path = b; path < e; ++path) {
        NormalSource g(Rng(seed, {static_cast<std::uint64_t>(path)}));
        int len = Nmax;
        for (int n = 0; n < Nmax; ++n) {
          double x = scale[n] * g();
          for (int j = 1; j <= L && j <= n; ++j) x += rec.a[j - 1] * y[n - j];
          y[n] = x;
          if (x < 0.0) {
            len = n;
            break;
          }
        }
        ++hist[w][len];
      }
    }
  });
  std::vector<long long> tail(Nmax + 2, 0);  // tail[n] = #paths with len >= n
  for (int len = Nmax; len >= 0; --len) {
    long long c = 0;
    for (unsigned w = 0; w < T; ++w) c += hist[w][len];
    tail[len] = tail[len + 1] + c;
  }
  std::vector<PersistenceEstimate> out;
  for (int N : Ns) {
    PersistenceEstimate e;
    e.N = N;
    e.method = Method::Naive;
    e.budget = n_samples;
    e.seed = seed;
    finish_binomial(e, tail[N], n_samples);
    out.push_back(e);
  }
  return out;
}

PersistenceEstimate naive_persistence(const GeneratingPolynomial& poly, int N, long long n_samples,
                                      std::uint64_t seed, unsigned threads) {
  const int Ns[] = {N};
  return naive_persistence_profile(poly, Ns, n_samples, seed, threads).front();
}

SplittingReport splitting_profile(const GeneratingPolynomial& poly, const SplittingConfig& cfg, std::uint64_t seed,
                                  unsigned threads, const CheckpointCallback& on_checkpoint) {
  validate(cfg);
  const ScaledRecurrence rec(poly);
  const int L = poly.degree();
  const int P = cfg.particles, R = cfg.replicates;
  const std::size_t K = cfg.checkpoints.size();
  const std::size_t PL = static_cast<std::size_t>(P) * L;
  SplittingReport rep;
  rep.stage_fractions.assign(R, {});
  rep.replicate_estimates.assign(R, std::vector<double>(K, 0.0));
  // state[(r*P + p)*L + j] = Y_{n-1-j} of particle p in replicate r.
  std::vector<double> state(PL * R, 0.0), next(PL);
  std::vector<char> alive(static_cast<std::size_t>(P) * R);
  std::vector<double> prod(R, 1.0);
  std::vector<char> dead(R, 0);
  int n0 = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const int n1 = cfg.checkpoints[k];
    parallel_for(static_cast<std::size_t>(P) * R, threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t idx = b; idx < e; ++idx) {
        const std::size_t r = idx / P, p = idx % P;
        if (dead[r]) continue;
        NormalSource g(Rng(seed, {r, k, p}));
        double* y = &state[idx * L];
        bool ok = true;
        for (int n = n0; n < n1; ++n) {
          double x = rec.noise_scale(n) * g();
          for (int j = 0; j < L; ++j) x += rec.a[j] * y[j];
          for (int j = L - 1; j > 0; --j) y[j] = y[j - 1];
          y[0] = x;
          if (x < 0.0) {
            ok = false;
            break;
          }
        }
        alive[idx] = ok;
      }
    });
    for (int r = 0; r < R; ++r) {
      if (dead[r]) continue;
      std::vector<int> surv;
      for (int p = 0; p < P; ++p)
        if (alive[static_cast<std::size_t>(r) * P + p]) surv.push_back(p);
      const double frac = static_cast<double>(surv.size()) / P;
      rep.stage_fractions[r].push_back(frac);
      prod[r] *= frac;
      rep.replicate_estimates[r][k] = prod[r];
      if (surv.empty()) {
        dead[r] = 1;
        continue;
      }
      // Resample survivors with replacement; clones keep the full L-dimensional state.
      Rng pick(seed, {static_cast<std::uint64_t>(r), k, 0xffffffffULL});
      double* base = &state[static_cast<std::size_t>(r) * PL];
      for (int p = 0; p < P; ++p) {
        const int src = surv[pick.below(surv.size())];
        std::copy_n(base + static_cast<std::size_t>(src) * L, L, &next[static_cast<std::size_t>(p) * L]);
      }
      std::copy(next.begin(), next.end(), base);
    }
    n0 = n1;

    PersistenceEstimate e;
    e.N = n1;
    e.method = Method::Splitting;
    e.budget = static_cast<long long>(P) * R;
    e.seed = seed;
    double mean = 0.0;
    for (int r = 0; r < R; ++r) mean += rep.replicate_estimates[r][k];
    mean /= R;
    double se = 0.0;
    if (R >= 2) {
      double v = 0.0;
      for (int r = 0; r < R; ++r) v += (rep.replicate_estimates[r][k] - mean) * (rep.replicate_estimates[r][k] - mean);
      se = std::sqrt(v / (R - 1) / R);
    } else if (mean > 0.0) {
      double rel2 = 0.0;
      for (double f : rep.stage_fractions[0]) rel2 += (1.0 - f) / (f * P);
      se = mean * std::sqrt(rel2);
    }
    e.p_hat = mean;
    e.stderr_p = se;
    for (int r = 0; r < R; ++r)
      if (rep.replicate_estimates[r][k] == 0.0) e.extinct = true;
    if (mean > 0.0) {
      e.log_p_hat = std::log(mean);
      e.stderr_log = se / mean;
    } else {
      e.log_p_hat = -kInf;
      e.stderr_log = kInf;
    }
    rep.at_checkpoint.push_back(e);
    if (on_checkpoint && !on_checkpoint(e)) {
      rep.truncated = k + 1 < K;
      break;
    }
  }
  return rep;
}

PersistenceEstimate splitting_persistence(const GeneratingPolynomial& poly, int N, const SplittingConfig& config,
                                          std::uint64_t seed, unsigned threads) {
  validate(config);
  if (config.checkpoints.back() != N) throw PreconditionError("checkpoint grid must end at N");
  return splitting_profile(poly, config, seed, threads).at_checkpoint.back();
}

PersistenceEstimate orthant_oracle_cov(const Eigen::MatrixXd& cov) {
  const int N = static_cast<int>(cov.rows());
  if (N < 1 || cov.cols() != N) throw PreconditionError("covariance must be square");
  if (N > 12) throw PreconditionError("orthant oracle is limited to N <= 12");
  Eigen::VectorXd d = cov.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd corr = d.asDiagonal() * cov * d.asDiagonal();
  auto r = gaussian_orthant(corr);
  PersistenceEstimate e;
  e.N = N;
  e.method = Method::Oracle;
  e.p_hat = r.value;
  e.stderr_p = r.error / 3.0;
  e.budget = r.points;
  e.log_p_hat = r.value > 0.0 ? std::log(r.value) : -kInf;
  e.stderr_log = r.value > 0.0 ? e.stderr_p / r.value : kInf;
  return e;
}

PersistenceEstimate orthant_oracle(const GeneratingPolynomial& poly, int N) {
  if (N < 1 || N > 12) throw PreconditionError("orthant oracle needs 1 <= N <= 12");
  return orthant_oracle_cov(path_covariance(poly, N));
}

double ExponentFit::exponent() const { return model == DecayModel::Stretched ? slope : -slope; }

ExponentFit fit_exponent(std::span<const PersistenceEstimate> est, DecayModel model) {
  std::vector<double> xs, ys, sig;
  int nmin = std::numeric_limits<int>::max(), nmax = 0;
  for (const auto& e : est) {
    if (!(e.p_hat > 0.0)) continue;
    double x, y, s;
    const double lp = std::log(e.p_hat);
    switch (model) {
      case DecayModel::Exponential:
        x = e.N;
        y = lp;
        s = e.stderr_log;
        break;
      case DecayModel::Stretched:
        if (!(e.p_hat < 1.0)) continue;
        x = std::log(static_cast<double>(e.N));
        y = std::log(-lp);
        s = e.stderr_log / std::abs(lp);
        break;
      default:
        x = std::log(static_cast<double>(e.N));
        y = lp;
        s = e.stderr_log;
    }
    xs.push_back(x);
    ys.push_back(y);
    sig.push_back(s);
    nmin = std::min(nmin, e.N);
    nmax = std::max(nmax, e.N);
  }
  const std::size_t n = xs.size();
  if (n < 4) throw PreconditionError("fit_exponent needs at least 4 estimates with p > 0");
  if (nmax < 4 * nmin) throw PreconditionError("fit_exponent needs horizons spanning at least 2 octaves");
  bool weighted = std::all_of(sig.begin(), sig.end(), [](double s) { return std::isfinite(s) && s > 0.0; });
  std::vector<double> w(n, 1.0);
  if (weighted)
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (sig[i] * sig[i]);
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * xs[i];
    sy += w[i] * ys[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += w[i] * (xs[i] - mx) * (ys[i] - my);
    syy += w[i] * (ys[i] - my) * (ys[i] - my);
  }
  ExponentFit f;
  f.model = model;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += w[i] * r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  f.slope_stderr = n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
  f.n_min = nmin;
  f.n_max = nmax;
  f.points = static_cast<int>(n);
  return f;
}

SlepianReport slepian_probe(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  if (n < 1 || n > 10 || A.cols() != n || B.rows() != n || B.cols() != n)
    throw PreconditionError("slepian_probe needs two square matrices of equal size <= 10");
  for (int i = 0; i < n; ++i) {
    if (std::abs(A(i, i) - B(i, i)) > 1e-12 * std::max(1.0, std::abs(A(i, i))))
      throw PreconditionError("slepian_probe needs equal diagonals");
    for (int j = 0; j < n; ++j)
      if (i != j && A(i, j) > B(i, j) + 1e-15) throw PreconditionError("covA must be <= covB off the diagonal");
  }
  SlepianReport r;
  auto a = gaussian_orthant(A), b = gaussian_orthant(B);
  r.p_a = a.value;
  r.p_b = b.value;
  r.err_a = a.error;
  r.err_b = b.error;
  r.holds = r.p_a <= r.p_b + 2e-5;
  return r;
}

}  // namespace arp
