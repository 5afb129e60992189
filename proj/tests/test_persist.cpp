#include <doctest.h>

#include <cmath>
#include <random>

#include "arpersist/arproc.hpp"
#include "arpersist/error.hpp"
#include "arpersist/orthant.hpp"
#include "arpersist/persist.hpp"
#include "oracles.hpp"

using namespace arp;

namespace {

bool within(double a, double b, double sa, double sb, double k) {
  return std::abs(a - b) <= k * std::sqrt(sa * sa + sb * sb);
}

PersistenceEstimate synthetic(int N, double p) {
  PersistenceEstimate e;
  e.N = N;
  e.p_hat = p;
  e.log_p_hat = std::log(p);
  return e;
}

Eigen::MatrixXd random_correlation(std::mt19937_64& g, int d, bool positive = false) {
  std::normal_distribution<double> N01;
  Eigen::MatrixXd G(d, 3 * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < 3 * d; ++j) G(i, j) = positive ? std::abs(N01(g)) : N01(g);
  Eigen::MatrixXd S = G * G.transpose();
  Eigen::VectorXd s = S.diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * S * s.asDiagonal();
}

}  // namespace

TEST_CASE("naive estimator: small horizons against closed forms") {
  const long long n = 200000;
  for (auto a : std::vector<std::vector<double>>{{1.0}, {0.5}, {-1.0, 1.0, 1.0}, {3.0}}) {
    auto e = naive_persistence(GeneratingPolynomial(a), 1, n, 9);
    CHECK(within(e.p_hat, 0.5, e.stderr_p, 0.0, 4.0));
    CHECK(e.method == Method::Naive);
    CHECK(e.budget == n);
  }
  auto e2 = naive_persistence(GeneratingPolynomial({1.0}), 2, n, 10);
  CHECK(within(e2.p_hat, oracle::bivariate_orthant(std::sqrt(0.5)), e2.stderr_p, 0.0, 4.0));
  CHECK(e2.p_hat == doctest::Approx(std::exp(e2.log_p_hat)));
  CHECK(e2.stderr_log == doctest::Approx(e2.stderr_p / e2.p_hat));
  CHECK_THROWS_AS(naive_persistence(GeneratingPolynomial({1.0}), 2, 0, 1), PreconditionError);
  CHECK_THROWS_AS(naive_persistence(GeneratingPolynomial({1.0}), 0, 10, 1), PreconditionError);
}

TEST_CASE("naive estimator: constant-regime plateau") {
  GeneratingPolynomial q({2.0});
  auto a = naive_persistence(q, 64, 100000, 1);
  auto b = naive_persistence(q, 512, 100000, 2);
  CHECK(within(a.p_hat, b.p_hat, a.stderr_p, b.stderr_p, 4.0));
  CHECK(a.p_hat > 0.01);
}

TEST_CASE("naive estimator: determinism, common random numbers, threads") {
  GeneratingPolynomial q({1.0, -1.0, 1.0});
  std::vector<int> Ns{1, 2, 4, 8, 16, 32, 64};
  auto prof = naive_persistence_profile(q, Ns, 20000, 5);
  auto again = naive_persistence_profile(q, Ns, 20000, 5, 3);
  REQUIRE(prof.size() == Ns.size());
  for (std::size_t k = 0; k < Ns.size(); ++k) {
    CHECK(prof[k].N == Ns[k]);
    CHECK(prof[k].p_hat == again[k].p_hat);
    if (k > 0) CHECK(prof[k].p_hat <= prof[k - 1].p_hat);
    // a single-horizon run with the same seed scores the same paths
    CHECK(naive_persistence(q, Ns[k], 20000, 5).p_hat == prof[k].p_hat);
  }
  CHECK(naive_persistence(q, 16, 20000, 6).p_hat != prof[4].p_hat);
}

TEST_CASE("naive estimator on explosive polynomials does not overflow") {
  auto e = naive_persistence(GeneratingPolynomial({1e3}), 400, 20000, 3);
  CHECK(e.p_hat > 0.3);
  CHECK(std::isfinite(e.log_p_hat));
}

TEST_CASE("splitting: configuration checks and grids") {
  SplittingConfig c;
  c.checkpoints = {};
  CHECK_THROWS_AS(validate(c), PreconditionError);
  c.checkpoints = {0, 4};
  CHECK_THROWS_AS(validate(c), PreconditionError);
  c.checkpoints = {4, 4};
  CHECK_THROWS_AS(validate(c), PreconditionError);
  c.checkpoints = {2, 4};
  c.particles = 0;
  CHECK_THROWS_AS(validate(c), PreconditionError);
  c.particles = 10;
  c.replicates = 0;
  CHECK_THROWS_AS(validate(c), PreconditionError);
  c.replicates = 1;
  CHECK_NOTHROW(validate(c));
  CHECK_THROWS_AS(splitting_persistence(GeneratingPolynomial({1.0}), 8, c, 1), PreconditionError);

  auto geo = default_checkpoints(DecayModel::PowerLaw, 1000);
  CHECK(geo.back() == 1000);
  for (std::size_t k = 1; k < geo.size(); ++k) {
    CHECK(geo[k] > geo[k - 1]);
    CHECK(geo[k] <= 2 * geo[k - 1] + 1);
  }
  CHECK(geo.size() == 11);  // K = ceil(log2 1000) = 10 stages plus the first point
  auto ar = default_checkpoints(DecayModel::Exponential, 60);
  CHECK(ar.back() == 60);
  for (std::size_t k = 1; k < ar.size(); ++k) CHECK(ar[k] - ar[k - 1] <= 4);
  std::vector<int> want{10, 15, 33, 60};
  auto u = checkpoints_for(DecayModel::Exponential, want);
  for (int n : want) CHECK(std::find(u.begin(), u.end(), n) != u.end());
}

TEST_CASE("splitting: stage fractions multiply to the estimate") {
  SplittingConfig c;
  c.checkpoints = default_checkpoints(DecayModel::PowerLaw, 256);
  c.particles = 500;
  c.replicates = 3;
  auto rep = splitting_profile(GeneratingPolynomial({1.0}), c, 4);
  REQUIRE(rep.at_checkpoint.size() == c.checkpoints.size());
  CHECK_FALSE(rep.truncated);
  for (int r = 0; r < 3; ++r) {
    double prod = 1.0;
    for (std::size_t k = 0; k < c.checkpoints.size(); ++k) {
      const double f = rep.stage_fractions[r][k];
      CHECK(f > 0.0);
      CHECK(f <= 1.0);
      prod *= f;
      CHECK(rep.replicate_estimates[r][k] == prod);
    }
  }
  for (std::size_t k = 0; k < c.checkpoints.size(); ++k) {
    double mean = 0.0;
    for (int r = 0; r < 3; ++r) mean += rep.replicate_estimates[r][k] / 3.0;
    CHECK(rep.at_checkpoint[k].p_hat == doctest::Approx(mean).epsilon(1e-14));
    CHECK(rep.at_checkpoint[k].N == c.checkpoints[k]);
    CHECK(rep.at_checkpoint[k].method == Method::Splitting);
    CHECK(rep.at_checkpoint[k].budget == 1500);
  }
  // deterministic and thread-count independent
  auto rep2 = splitting_profile(GeneratingPolynomial({1.0}), c, 4, 3);
  CHECK(rep2.replicate_estimates == rep.replicate_estimates);
  // early stop through the callback
  int seen = 0;
  auto cut = splitting_profile(GeneratingPolynomial({1.0}), c, 4, 1, [&](const PersistenceEstimate&) { return ++seen < 3; });
  CHECK(cut.truncated);
  CHECK(cut.at_checkpoint.size() == 3);
  CHECK(cut.at_checkpoint[2].p_hat == rep.at_checkpoint[2].p_hat);
}

TEST_CASE("splitting agrees with naive Monte Carlo and the exact random-walk value") {
  GeneratingPolynomial rw({1.0});
  SplittingConfig c;
  c.checkpoints = default_checkpoints(DecayModel::PowerLaw, 128);
  c.particles = 2000;
  c.replicates = 8;
  auto s = splitting_persistence(rw, 128, c, 21);
  auto n = naive_persistence(rw, 128, 200000, 22);
  CHECK(within(s.p_hat, n.p_hat, s.stderr_p, n.stderr_p, 3.0));
  CHECK(within(s.p_hat, oracle::sparre_andersen(128), s.stderr_p, 0.0, 3.0));
}

TEST_CASE("splitting unbiasedness probe: 50 replicates against 1e7 naive paths") {
  GeneratingPolynomial rw({1.0});
  SplittingConfig c;
  c.checkpoints = default_checkpoints(DecayModel::PowerLaw, 128);
  c.particles = 1000;
  c.replicates = 50;
  auto s = splitting_persistence(rw, 128, c, 31);
  auto n = naive_persistence(rw, 128, 10000000, 32);
  CHECK(within(s.p_hat, n.p_hat, s.stderr_p, n.stderr_p, 3.0));
  CHECK(within(n.p_hat, oracle::sparre_andersen(128), n.stderr_p, 0.0, 4.0));
}

TEST_CASE("splitting reaches probabilities naive Monte Carlo cannot") {
  GeneratingPolynomial q({0.5});
  SplittingConfig c;
  c.checkpoints = default_checkpoints(DecayModel::Exponential, 60);
  c.particles = 5000;
  c.replicates = 4;
  auto rep = splitting_profile(q, c, 8);
  const auto& last = rep.at_checkpoint.back();
  CHECK(last.N == 60);
  CHECK(last.p_hat > 0.0);
  CHECK(last.p_hat < 1e-6);
  CHECK_FALSE(last.extinct);
  CHECK(naive_persistence(q, 60, 1000000, 9).p_hat == 0.0);
  // cross-check at N = 20
  PersistenceEstimate at20;
  for (const auto& e : rep.at_checkpoint)
    if (e.N == 20) at20 = e;
  REQUIRE(at20.N == 20);
  auto n20 = naive_persistence(q, 20, 1000000, 10);
  CHECK(within(at20.p_hat, n20.p_hat, at20.stderr_p, n20.stderr_p, 4.0));
}

TEST_CASE("splitting extinction is flagged, not thrown") {
  SplittingConfig c;
  c.checkpoints = {1, 60};
  c.particles = 5;
  c.replicates = 2;
  auto e = splitting_persistence(GeneratingPolynomial({0.5}), 60, c, 1);
  CHECK(e.extinct);
  CHECK(e.p_hat == 0.0);
  CHECK(std::isinf(e.log_p_hat));
}

TEST_CASE("orthant integrator against closed forms") {
  for (double rho : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
    Eigen::Matrix2d S;
    S << 1, rho, rho, 1;
    auto r = gaussian_orthant(S);
    CHECK(std::abs(r.value - oracle::bivariate_orthant(rho)) <= std::max(r.error, 1e-12) + 1e-12);
    CHECK(r.error <= 1e-5);
  }
  std::mt19937_64 g(3);
  for (int t = 0; t < 10; ++t) {
    auto C = random_correlation(g, 3);
    auto r = gaussian_orthant(C);
    CHECK(std::abs(r.value - oracle::trivariate_orthant(C(0, 1), C(0, 2), C(1, 2))) <= 1e-5);
  }
  // box probability with one finite side is a plain CDF
  Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1) * 4.0;
  auto b = gaussian_box(one, Eigen::VectorXd::Constant(1, -INFINITY), Eigen::VectorXd::Constant(1, 1.0));
  CHECK(b.value == doctest::Approx(normal_cdf(0.5)).epsilon(1e-9));
  CHECK(normal_quantile(normal_cdf(1.3)) == doctest::Approx(1.3));
}

TEST_CASE("orthant oracle examples") {
  auto id = orthant_oracle_cov(Eigen::MatrixXd::Identity(10, 10));
  CHECK(id.p_hat == doctest::Approx(std::pow(2.0, -10)).epsilon(1e-9));
  CHECK(id.method == Method::Oracle);

  auto p2 = orthant_oracle(GeneratingPolynomial({1.0}), 2);
  CHECK(std::abs(p2.p_hat - 0.375) <= 1e-5);
  CHECK(3.0 * p2.stderr_p <= 1e-5);

  auto p3 = orthant_oracle(GeneratingPolynomial({1.0}), 3);
  CHECK(std::abs(p3.p_hat - oracle::sparre_andersen(3)) <= 1e-5);
  auto n3 = naive_persistence(GeneratingPolynomial({1.0}), 3, 1000000, 77);
  CHECK(within(p3.p_hat, n3.p_hat, p3.stderr_p, n3.stderr_p, 4.0));

  for (int N : {5, 8, 12}) CHECK(std::abs(orthant_oracle(GeneratingPolynomial({1.0}), N).p_hat - oracle::sparre_andersen(N)) <= 1e-5);

  CHECK_THROWS_AS(orthant_oracle(GeneratingPolynomial({1.0}), 13), PreconditionError);
  CHECK_THROWS_AS(orthant_oracle(GeneratingPolynomial({1.0}), 0), PreconditionError);
  CHECK_THROWS_AS(orthant_oracle_cov(Eigen::MatrixXd::Identity(13, 13)), PreconditionError);
}

TEST_CASE("oracle consistency with naive Monte Carlo on a few polynomials") {
  int seed = 100;
  for (auto a : std::vector<std::vector<double>>{{0.6}, {1.0, -1.0, 1.0}, {-1.0, 1.0, 1.0}, {0.3, 0.5}}) {
    GeneratingPolynomial q(a);
    std::vector<int> Ns{1, 2, 3, 4, 5, 6, 7, 8};
    auto mc = naive_persistence_profile(q, Ns, 200000, ++seed);
    for (std::size_t k = 0; k < Ns.size(); ++k) {
      auto o = orthant_oracle(q, Ns[k]);
      CHECK(within(o.p_hat, mc[k].p_hat, o.stderr_p, mc[k].stderr_p, 4.0));
    }
  }
}

TEST_CASE("fit_exponent on synthetic data") {
  std::vector<PersistenceEstimate> pw, st, ex;
  for (int N : {16, 32, 64, 128, 256}) {
    pw.push_back(synthetic(N, std::pow(N, -0.5)));
    st.push_back(synthetic(N, std::exp(-std::sqrt(static_cast<double>(N)))));
    ex.push_back(synthetic(N, 0.7 * std::exp(-0.2 * N)));
  }
  auto f1 = fit_exponent(pw, DecayModel::PowerLaw);
  CHECK(f1.slope == doctest::Approx(-0.5));
  CHECK(f1.r_squared == doctest::Approx(1.0));
  CHECK(f1.exponent() == doctest::Approx(0.5));
  CHECK(f1.n_min == 16);
  CHECK(f1.n_max == 256);
  CHECK(f1.points == 5);
  auto f2 = fit_exponent(st, DecayModel::Stretched);
  CHECK(f2.slope == doctest::Approx(0.5));
  CHECK(f2.r_squared == doctest::Approx(1.0));
  CHECK(f2.exponent() == doctest::Approx(0.5));
  auto f3 = fit_exponent(ex, DecayModel::Exponential);
  CHECK(f3.slope == doctest::Approx(-0.2));
  CHECK(f3.intercept == doctest::Approx(std::log(0.7)));
  CHECK(f3.r_squared == doctest::Approx(1.0));

  // zero-probability points are dropped
  auto with_zero = pw;
  with_zero.push_back(synthetic(512, 1.0));
  with_zero.back().p_hat = 0.0;
  with_zero.back().log_p_hat = -INFINITY;
  CHECK(fit_exponent(with_zero, DecayModel::PowerLaw).points == 5);

  std::vector<PersistenceEstimate> three(pw.begin(), pw.begin() + 3);
  CHECK_THROWS_AS(fit_exponent(three, DecayModel::PowerLaw), PreconditionError);
  std::vector<PersistenceEstimate> narrow;
  for (int N : {40, 50, 60, 70}) narrow.push_back(synthetic(N, std::pow(N, -0.5)));
  CHECK_THROWS_AS(fit_exponent(narrow, DecayModel::PowerLaw), PreconditionError);
}

TEST_CASE("fit_exponent weights by the standard errors") {
  std::vector<PersistenceEstimate> pts;
  for (int N : {16, 32, 64, 128, 256}) {
    auto e = synthetic(N, std::pow(N, -1.0));
    e.stderr_log = 0.01;
    pts.push_back(e);
  }
  // a wild point with a huge error bar barely moves the fit
  auto bad = synthetic(512, 0.5);
  bad.stderr_log = 1e3;
  pts.push_back(bad);
  auto f = fit_exponent(pts, DecayModel::PowerLaw);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(f.slope_stderr > 0.0);
}

TEST_CASE("slepian comparisons") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
  Eigen::MatrixXd E = Eigen::MatrixXd::Constant(5, 5, 0.5);
  E.diagonal().setOnes();
  auto r = slepian_probe(I, E);
  CHECK(r.holds);
  CHECK(r.p_a == doctest::Approx(1.0 / 32).epsilon(1e-6));
  CHECK(r.p_a <= r.p_b);
  auto same = slepian_probe(E, E);
  CHECK(same.holds);
  CHECK(same.p_a == same.p_b);

  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + static_cast<int>(g() % 7);
    auto B = random_correlation(g, d, true);
    // shrinking off-diagonals towards zero keeps the matrix PSD and dominated
    const double s = U(g);
    Eigen::MatrixXd A = s * B + (1 - s) * Eigen::MatrixXd::Identity(d, d);
    auto rep = slepian_probe(A, B);
    CHECK(rep.holds);
  }
  CHECK_THROWS_AS(slepian_probe(E, I), PreconditionError);
  Eigen::MatrixXd D = I * 2.0;
  CHECK_THROWS_AS(slepian_probe(I, D), PreconditionError);
  CHECK_THROWS_AS(slepian_probe(Eigen::MatrixXd::Identity(11, 11), Eigen::MatrixXd::Identity(11, 11)), PreconditionError);
}

TEST_CASE("gaussian correlation inequality for symmetric rectangles") {
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + static_cast<int>(g() % 5);
    auto C = random_correlation(g, d);
    Eigen::VectorXd a(d), b(d);
    for (int i = 0; i < d; ++i) {
      a(i) = U(g) < 0.5 ? INFINITY : 0.3 + 1.5 * U(g);
      b(i) = U(g) < 0.5 ? INFINITY : 0.3 + 1.5 * U(g);
    }
    auto pa = gaussian_box(C, -a, a);
    auto pb = gaussian_box(C, -b, b);
    Eigen::VectorXd ab = a.cwiseMin(b);
    auto pab = gaussian_box(C, -ab, ab);
    CHECK(pab.value >= pa.value * pb.value - (pab.error + pa.error + pb.error));
  }
}
