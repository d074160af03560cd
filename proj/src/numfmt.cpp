#include "survkit/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace survkit {

std::string num_to_string(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string num_fixed(double x, int digits) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    std::string s(buf);
    if (s == "-0" || s.rfind("-0.", 0) == 0) {
        bool all_zero = true;
        for (char c : s.substr(1)) {
            if (c != '0' && c != '.') { all_zero = false; break; }
        }
        if (all_zero) s.erase(0, 1);
    }
    return s;
}

std::string pvalue_to_string(double p) {
    if (std::isnan(p)) return "nan";
    if (p < 0.001) return "< 0.001";
    return num_fixed(p, 3);
}

std::string num_compact(double x) {
    std::string s = num_fixed(x, 1);
    if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) {
        s.erase(s.size() - 2);
    }
    return s;
}

}  // namespace survkit
