#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace xvabsde {

// 17 significant digits: shortest text that round-trips an IEEE double, so
// regression CSVs are bit-stable across runs.
inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
        if (j) os << ',';
        os << cells[j];
    }
    os << '\n';
}

}  // namespace xvabsde
