#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace chaowalk {

using Rational = mpq_class;

// Parses "p/q", an integer, or a plain decimal ("0.25", "1e-3") into an exact
// rational. Decimal input is taken at face value: "0.1" is 1/10, not the
// nearest double.
Rational parse_rational(std::string_view text);

// Exact rational for the shortest decimal that round-trips to x.
Rational rational_from_double(double x);

// Nearest double (mpq_get_d truncates toward zero instead).
double to_double(const Rational& q);

// "num/den" (or "num" when the denominator is 1).
std::string to_string(const Rational& q);

}  // namespace chaowalk
