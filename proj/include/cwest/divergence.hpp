#pragma once

#include <cmath>
#include <stdexcept>

#include "cwest/pmf.hpp"

namespace cwest {

/// Jensen-Shannon divergence (natural log):
///   J(H,P) = 0.5 * sum_i [ P_i ln(2P_i/(P_i+H_i)) + H_i ln(2H_i/(P_i+H_i)) ]
/// Zero-probability terms contribute zero, so padded supports stay finite.
/// Symmetric, zero iff the inputs match, bounded by ln 2.
inline double js_divergence(const Pmf& h, const Pmf& p) {
    if (h.support_len() != p.support_len())
        throw std::invalid_argument("js_divergence: support length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < h.support_len(); ++i) {
        const double hi = h[i], pi = p[i];
        const double m = hi + pi;
        if (pi > 0.0) acc += pi * std::log(2.0 * pi / m);
        if (hi > 0.0) acc += hi * std::log(2.0 * hi / m);
    }
    return 0.5 * acc;
}

}  // namespace cwest
