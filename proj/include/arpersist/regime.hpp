#pragma once

#include <optional>
#include <string>
#include <vector>

#include "arpersist/polyalg.hpp"

namespace arp {

enum class RegimeTag { Constant, Exponential, StretchedExponential, PolynomialOscillatory, ApproxIRW };

struct Regime {
  RegimeTag tag = RegimeTag::Exponential;
  std::optional<double> alpha;  // stretched / polynomial exponents
  SpectralSummary summary;
  std::vector<std::string> warnings;
  bool near_critical = false;
};

struct ClassifyOptions {
  // |r* - 1| band treated as r* = 1; defaults to 1e-9 for exact zero sets, 1e-6 for root-found ones.
  std::optional<double> critical_band;
};

Regime classify(const SpectralSummary& summary, const ClassifyOptions& opt = {});
Regime classify(const GeneratingPolynomial& poly, const ClassifyOptions& opt = {});

enum class DecayModel { PowerLaw, Exponential, Stretched, BoundedBelow };

DecayModel decay_model(const Regime& r);

std::string to_string(RegimeTag t);
std::string to_string(DecayModel m);
std::optional<DecayModel> parse_decay_model(const std::string& s);
// Regime letter, (a)..(e).
char regime_letter(RegimeTag t);

// theta in (0, pi) when zeros = {1, e^{i theta}, e^{-i theta}}, each simple.
std::optional<double> ar3_angle(const ZeroSet& zeros, double tol = 1e-6);

}  // namespace arp
