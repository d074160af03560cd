#pragma once

#include <string>

namespace survkit {

// Shortest round-trip decimal representation of x (std::to_chars).
// All CSV/JSON/SVG emitters go through this so repeated runs produce
// byte-identical files.
std::string num_to_string(double x);

// Fixed-decimals formatting, trailing zeros kept ("1.250" for digits=3).
std::string num_fixed(double x, int digits);

// Report style: fixed decimals with trailing zeros and any '-0' normalized.
// p-values below 0.001 are rendered as "< 0.001" by pvalue_to_string.
std::string pvalue_to_string(double p);

// Table-style compact number: at most one decimal, trailing ".0" stripped
// (62 -> "62", 51.5 -> "51.5"). Used by cohort summaries.
std::string num_compact(double x);

}  // namespace survkit
