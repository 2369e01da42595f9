#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cwest/common.hpp"
#include "cwest/pmf.hpp"

namespace cwest {

// ---------------------------------------------------------------------------
// DCF Markov fixed points.
//
// The per-slot transmit probability of a saturated station with minimum
// window W, retry limit M and constant per-attempt collision probability p is
//
//     tau(p) = 2 / ( (W+1) + p*W * sum_{i=0}^{M-1} (2p)^i ).
//
// This is the usual closed form rewritten without the (1-2p) factors, which
// keeps it finite at p = 1/2 and monotone decreasing on [0,1).
// ---------------------------------------------------------------------------

inline double dcf_tau(double p, int w_min, int max_retx) {
    double geo = 0.0, term = 1.0;
    for (int i = 0; i < max_retx; ++i) {
        geo += term;
        term *= 2.0 * p;
    }
    return 2.0 / ((w_min + 1) + p * w_min * geo);
}

struct MarkovParams {
    int n_stations = 0;   // N, total stations including the tagged one
    int w_tagged = 0;     // W
    int w_standard = 0;   // W_s
    int max_retx = 0;     // M
    int cw_cap = 1024;

    void validate() const {
        if (n_stations < 2) throw std::invalid_argument("MarkovParams: n_stations must be >= 2");
        if (w_tagged < 2 || w_standard < 2) throw std::invalid_argument("MarkovParams: windows must be >= 2");
        if (w_tagged > w_standard) throw std::invalid_argument("MarkovParams: w_tagged > w_standard");
        if (w_standard > cw_cap) throw std::invalid_argument("MarkovParams: w_standard > cw_cap");
        if (max_retx < 0) throw std::invalid_argument("MarkovParams: max_retx < 0");
    }
};

struct FixedPointSolution {
    double tau = 0.0;    // tagged station per-slot transmit probability
    double p = 0.0;      // tagged station collision probability
    double tau_c = 0.0;  // compliant station transmit probability
    double p_c = 0.0;    // compliant station collision probability
};

struct HomogeneousSolution {
    double tau = 0.0;
    double p = 0.0;
};

namespace detail {

inline double hom_residual(double p, int n, int w, int m) {
    const double tau = dcf_tau(p, w, m);
    return p - (1.0 - std::pow(1.0 - tau, n - 1));
}

}  // namespace detail

/// Solve tau = f(p), p = 1-(1-tau)^(N-1) for an all-compliant WLAN.
/// Damped fixed-point iteration with a bisection fallback; the composed map
/// is monotone in p so the root is unique.
inline HomogeneousSolution solve_homogeneous(int n_stations, int w_standard, int max_retx,
                                             double tol = 1e-10) {
    if (n_stations < 1) throw std::invalid_argument("solve_homogeneous: n_stations < 1");
    if (w_standard < 2) throw std::invalid_argument("solve_homogeneous: w_standard < 2");
    if (!(tol > 0)) throw std::invalid_argument("solve_homogeneous: tol <= 0");
    if (n_stations == 1) return {dcf_tau(0.0, w_standard, max_retx), 0.0};

    constexpr int kMaxIter = 100000;
    double p = 0.5;
    double res = 1.0;
    for (int it = 0; it < kMaxIter; ++it) {
        const double tau = dcf_tau(p, w_standard, max_retx);
        const double next = 1.0 - std::pow(1.0 - tau, n_stations - 1);
        res = std::fabs(next - p);
        p = 0.5 * p + 0.5 * next;
        if (res < tol) {
            const double t = dcf_tau(p, w_standard, max_retx);
            if (std::fabs(detail::hom_residual(p, n_stations, w_standard, max_retx)) < tol)
                return {t, p};
        }
    }
    // Bisection on the monotone residual.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::hom_residual(mid, n_stations, w_standard, max_retx) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    p = 0.5 * (lo + hi);
    res = std::fabs(detail::hom_residual(p, n_stations, w_standard, max_retx));
    if (res >= tol) throw convergence_error("solve_homogeneous failed", res);
    return {dcf_tau(p, w_standard, max_retx), p};
}

/// Solve the four-equation system coupling one tagged station (window W)
/// with N-1 compliant stations (window W_s):
///
///   tau   = f_W(p)          p   = 1 - (1-tau_c)^(N-1)
///   tau_c = f_Ws(p_c)       p_c = 1 - (1-tau)(1-tau_c)^(N-2)
///
/// Damped iteration on (p, p_c) with step halving when the residual grows.
inline FixedPointSolution solve_heterogeneous(const MarkovParams& mp, double tol = 1e-10) {
    mp.validate();
    if (!(tol > 0)) throw std::invalid_argument("solve_heterogeneous: tol <= 0");

    const int n = mp.n_stations, m = mp.max_retx;
    auto residual = [&](double p, double pc, double& r1, double& r2) {
        const double tau = dcf_tau(p, mp.w_tagged, m);
        const double tau_c = dcf_tau(pc, mp.w_standard, m);
        r1 = (1.0 - std::pow(1.0 - tau_c, n - 1)) - p;
        r2 = (1.0 - (1.0 - tau) * std::pow(1.0 - tau_c, n - 2)) - pc;
    };

    double p = 0.5, pc = 0.5, damp = 0.5;
    double r1 = 0, r2 = 0, best = 1e9;
    constexpr int kMaxIter = 100000;
    for (int it = 0; it < kMaxIter; ++it) {
        residual(p, pc, r1, r2);
        const double res = std::max(std::fabs(r1), std::fabs(r2));
        if (res < tol) {
            FixedPointSolution s;
            s.p = p;
            s.p_c = pc;
            s.tau = dcf_tau(p, mp.w_tagged, m);
            s.tau_c = dcf_tau(pc, mp.w_standard, m);
            return s;
        }
        if (res > best * 4.0 && damp > 1e-3) damp *= 0.5;
        best = std::min(best, res);
        p = std::min(1.0 - 1e-15, std::max(0.0, p + damp * r1));
        pc = std::min(1.0 - 1e-15, std::max(0.0, pc + damp * r2));
    }
    residual(p, pc, r1, r2);
    throw convergence_error("solve_heterogeneous failed",
                            std::max(std::fabs(r1), std::fabs(r2)));
}

/// Steady-state backoff stage probabilities: [1-p, (1-p)p, ..., p^M].
/// Sums to one analytically. M = 0 degenerates to a point mass at stage 0.
inline std::vector<double> stage_distribution(double p, int max_retx) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("stage_distribution: p outside [0,1)");
    if (max_retx < 0) throw std::invalid_argument("stage_distribution: max_retx < 0");
    if (max_retx == 0) return {1.0};
    std::vector<double> pr(static_cast<std::size_t>(max_retx) + 1);
    double pp = 1.0;
    for (int i = 0; i < max_retx; ++i) {
        pr[static_cast<std::size_t>(i)] = (1.0 - p) * pp;
        pp *= p;
    }
    pr[static_cast<std::size_t>(max_retx)] = pp;  // p^M
    return pr;
}

/// Stage-i window size with the CW_max cap applied.
inline int stage_window(int w_min, int stage, int cw_cap) {
    long long w = w_min;
    for (int i = 0; i < stage && w < cw_cap; ++i) w <<= 1;
    return static_cast<int>(std::min<long long>(w, cw_cap));
}

/// Nominal backoff-value PMF: the stage-weighted superposition of uniform
/// windows, probs[k] = sum_i Pr[X=i] * (1/W_i) * 1{k < W_i}.
inline Pmf compose_nominal_pmf(int w_tagged, double p, int max_retx, int cw_cap,
                               std::size_t support_len) {
    const int full = stage_window(w_tagged, max_retx, cw_cap);
    if (support_len < static_cast<std::size_t>(full))
        throw std::invalid_argument("compose_nominal_pmf: support shorter than top window");
    const auto stages = stage_distribution(p, max_retx);
    std::vector<double> probs(support_len, 0.0);
    for (int i = 0; i <= max_retx; ++i) {
        const int wi = stage_window(w_tagged, i, cw_cap);
        const double w = stages[static_cast<std::size_t>(i)] / wi;
        for (int k = 0; k < wi; ++k) probs[static_cast<std::size_t>(k)] += w;
    }
    return Pmf(std::move(probs));
}

/// The family of nominal PMFs P_l for candidate CWmin l in {2..w_standard},
/// all on one zero-padded support so divergences are directly comparable.
struct NominalSet {
    int n_stations = 0;
    int w_standard = 0;
    int max_retx = 0;
    int cw_cap = 0;
    std::size_t support_len = 0;
    bool cap_bound = false;          // true when CW_max truncated a top window
    std::vector<Pmf> pmfs;           // index 0 -> l = 2
    std::vector<double> collision_p; // tagged-station p used per l

    const Pmf& at(int l) const {
        if (l < 2 || l > w_standard) throw std::invalid_argument("NominalSet::at: l out of range");
        return pmfs[static_cast<std::size_t>(l - 2)];
    }
    int min_l() const { return 2; }
    int max_l() const { return w_standard; }
};

inline NominalSet build_nominal_set(int n_stations, int w_standard, int max_retx, int cw_cap,
                                    double tol = 1e-10) {
    if (w_standard < 2) throw std::invalid_argument("build_nominal_set: w_standard < 2");
    NominalSet set;
    set.n_stations = n_stations;
    set.w_standard = w_standard;
    set.max_retx = max_retx;
    set.cw_cap = cw_cap;
    const long long full = 1LL << max_retx;
    set.support_len =
        static_cast<std::size_t>(std::min<long long>(full * w_standard, cw_cap));
    set.cap_bound = full * w_standard > cw_cap;
    set.pmfs.reserve(static_cast<std::size_t>(w_standard - 1));
    for (int l = 2; l <= w_standard; ++l) {
        MarkovParams mp{n_stations, l, w_standard, max_retx, cw_cap};
        double p;
        try {
            p = solve_heterogeneous(mp, tol).p;
        } catch (const convergence_error& e) {
            throw convergence_error("build_nominal_set: l=" + std::to_string(l) + ": " + e.what(),
                                    e.residual());
        }
        set.collision_p.push_back(p);
        set.pmfs.push_back(compose_nominal_pmf(l, p, max_retx, cw_cap, set.support_len));
    }
    return set;
}

/// Plain-text export, one row per (l, k, prob), tab separated, 12 significant
/// digits. Zero rows are kept so the table is rectangular.
inline void write_nominal_table(std::ostream& os, const NominalSet& set) {
    os << "# nominal backoff pmfs\tN=" << set.n_stations << "\tWs=" << set.w_standard
       << "\tM=" << set.max_retx << "\tcap=" << set.cw_cap
       << "\tcap_bound=" << (set.cap_bound ? 1 : 0) << "\n";
    os << "l\tk\tprob\n";
    char buf[48];
    for (int l = set.min_l(); l <= set.max_l(); ++l) {
        const Pmf& pmf = set.at(l);
        for (std::size_t k = 0; k < pmf.support_len(); ++k) {
            std::snprintf(buf, sizeof buf, "%.12g", pmf[k]);
            os << l << '\t' << k << '\t' << buf << '\n';
        }
    }
}

}  // namespace cwest
