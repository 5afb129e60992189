#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "arpersist/cone.hpp"
#include "arpersist/polyalg.hpp"

namespace arp::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kPrecondition = 2;
inline constexpr int kNumeric = 3;
inline constexpr int kInterrupted = 130;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct Angle {
  double value = 0.0;
  std::optional<Rationality> exact;  // set for integer * pi / integer forms
};

// Products and quotients of numbers, pi, sqrt2 and sqrt(x), e.g. "2*pi/3", "-1e-2*sqrt2".
Angle parse_angle(const std::string& s);
double parse_scalar(const std::string& s);
cplx parse_complex(const std::string& s);
// "1, -1:2, 0.5+0.3i"; conjugates are added when missing.
ZeroSet parse_zeros(const std::string& s);
std::vector<double> parse_coeffs(const std::string& s);
// Items: "64", "2^6", "2^6..2^14" (powers of two), "10:60:5" (arithmetic, inclusive).
std::vector<int> parse_int_grid(const std::string& s);

std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

// Sets the flag the SIGINT handler sets (used by tests).
void request_interrupt(bool on = true);

}  // namespace arp::cli
