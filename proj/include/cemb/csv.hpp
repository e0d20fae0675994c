// csv.hpp
// Deterministic text formatting for report files: fixed precision, no
// locale involvement, so identical results produce identical bytes.

#pragma once

#include <cstdio>
#include <string>

namespace cemb {

inline std::string fmt_double(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

inline std::string fmt_sci(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*e", precision, v);
    return buf;
}

} // namespace cemb
