#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <string>

namespace kcb {

// Argmax with the lowest index winning ties (exact comparison).
inline int argmax_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = static_cast<int>(i);
    return best;
}

// 17 significant digits: doubles survive a print/parse round trip.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace kcb
