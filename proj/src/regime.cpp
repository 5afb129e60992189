#include "arpersist/regime.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "arpersist/error.hpp"

namespace arp {

Regime classify(const SpectralSummary& s, const ClassifyOptions& opt) {
  Regime r;
  r.summary = s;
  const double band = opt.critical_band.value_or(s.origin == ZeroOrigin::Exact ? 1e-9 : 1e-6);
  const double gap = s.r_star - 1.0;
  const bool critical = std::abs(gap) <= band;
  if (critical && std::abs(gap) > 1e-15) {
    r.near_critical = true;
    std::ostringstream os;
    os.precision(17);
    os << "near-critical: r* = " << s.r_star << " treated as r* = 1 (band " << band << ")";
    r.warnings.push_back(os.str());
  }
  const int m = s.m_rstar, ms = s.m_star;
  if ((!critical && gap < 0.0) || m == 0) {
    r.tag = RegimeTag::Exponential;
  } else if (critical) {
    if (m == ms) {
      r.tag = RegimeTag::ApproxIRW;
    } else {
      r.tag = RegimeTag::StretchedExponential;
      r.alpha = 1.0 - static_cast<double>(m) / ms;
    }
  } else if (m == ms) {
    r.tag = RegimeTag::Constant;
  } else {
    r.tag = RegimeTag::PolynomialOscillatory;
    double a = 0.0;
    for (const auto& e : s.lambda_star) {
      const int d = e.mult - m;
      a += 0.5 * std::max(d, 0) * std::max(d + 1, 0);
    }
    if (!(a > 0.0)) throw NumericError("oscillatory regime produced a non-positive exponent");
    r.alpha = a;
  }
  return r;
}

Regime classify(const GeneratingPolynomial& poly, const ClassifyOptions& opt) {
  return classify(spectral_summary(find_roots(poly)), opt);
}

DecayModel decay_model(const Regime& r) {
  switch (r.tag) {
    case RegimeTag::Constant: return DecayModel::BoundedBelow;
    case RegimeTag::Exponential: return DecayModel::Exponential;
    case RegimeTag::StretchedExponential: return DecayModel::Stretched;
    case RegimeTag::PolynomialOscillatory:
    case RegimeTag::ApproxIRW: return DecayModel::PowerLaw;
  }
  return DecayModel::PowerLaw;
}

std::string to_string(RegimeTag t) {
  switch (t) {
    case RegimeTag::Constant: return "Constant";
    case RegimeTag::Exponential: return "Exponential";
    case RegimeTag::StretchedExponential: return "StretchedExponential";
    case RegimeTag::PolynomialOscillatory: return "PolynomialOscillatory";
    case RegimeTag::ApproxIRW: return "ApproxIRW";
  }
  return "?";
}

char regime_letter(RegimeTag t) {
  switch (t) {
    case RegimeTag::Constant: return 'a';
    case RegimeTag::Exponential: return 'b';
    case RegimeTag::StretchedExponential: return 'c';
    case RegimeTag::PolynomialOscillatory: return 'd';
    case RegimeTag::ApproxIRW: return 'e';
  }
  return '?';
}

std::string to_string(DecayModel m) {
  switch (m) {
    case DecayModel::PowerLaw: return "power";
    case DecayModel::Exponential: return "exponential";
    case DecayModel::Stretched: return "stretched";
    case DecayModel::BoundedBelow: return "bounded";
  }
  return "?";
}

std::optional<DecayModel> parse_decay_model(const std::string& s) {
  if (s == "power") return DecayModel::PowerLaw;
  if (s == "exponential") return DecayModel::Exponential;
  if (s == "stretched") return DecayModel::Stretched;
  if (s == "bounded") return DecayModel::BoundedBelow;
  return std::nullopt;
}

std::optional<double> ar3_angle(const ZeroSet& zeros, double tol) {
  if (zeros.entries.size() != 3) return std::nullopt;
  bool have_one = false;
  std::optional<double> theta;
  for (const auto& e : zeros.entries) {
    if (e.mult != 1) return std::nullopt;
    if (std::abs(e.root - cplx(1.0, 0.0)) <= tol) {
      if (have_one) return std::nullopt;
      have_one = true;
      continue;
    }
    if (std::abs(std::abs(e.root) - 1.0) > tol) return std::nullopt;
    const double a = std::abs(std::arg(e.root));
    if (theta && std::abs(*theta - a) > tol) return std::nullopt;
    theta = a;
  }
  if (!have_one || !theta) return std::nullopt;
  if (!(*theta > tol && *theta < 3.14159265358979323846 - tol)) return std::nullopt;
  // Both remaining roots must be a conjugate pair.
  double imsum = 0.0;
  for (const auto& e : zeros.entries) imsum += e.root.imag();
  if (std::abs(imsum) > tol) return std::nullopt;
  return theta;
}

}  // namespace arp
