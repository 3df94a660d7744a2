#pragma once

#include <cstdio>
#include <string>

namespace potts {

// All floating-point output goes through this single formatter so reruns of
// any command produce byte-identical files: 17 significant digits are enough
// to round-trip an IEEE double exactly.
inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace potts
