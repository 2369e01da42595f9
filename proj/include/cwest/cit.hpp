#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cwest/common.hpp"
#include "cwest/preamble.hpp"
#include "cwest/signal.hpp"

namespace cwest {

/// Channel state the AP keeps per station, plus the ground-truth start used
/// when synthesizing collisions.
struct ChannelParams {
    int station_id = 0;
    double gain = 1.0;
    double phase_rad = 0.0;
    double fo_hz = 0.0;
    long long start_offset_samples = 0;
    double snr_db = 10.0;
};

struct ColliderHit {
    int station_id = 0;
    long long start_offset_samples = 0;
    double peak_value = 0.0;
};

struct CollisionVerdict {
    std::vector<ColliderHit> colliders;

    bool contains(int id) const {
        for (const auto& c : colliders)
            if (c.station_id == id) return true;
        return false;
    }
};

inline constexpr int kDefaultZeta = 180;  // T_MAC / T_s = 9 us * 20 Msps

/// Superpose one frame per station (preamble followed by random unit-modulus
/// body symbols), each attenuated, phase shifted and FO-rotated relative to
/// its own first sample, plus complex AWGN. Noise variance follows the
/// strongest station's received power at its configured SNR.
inline BasebandSignal synthesize_collision(const PreambleTemplate& tmpl,
                                           std::size_t body_len_samples,
                                           const std::vector<ChannelParams>& channel,
                                           std::uint64_t seed) {
    if (channel.empty()) throw std::invalid_argument("synthesize_collision: no stations");
    constexpr double kTwoPi = 6.283185307179586477;
    const double ts = 1.0 / 20e6;
    const std::size_t frame = tmpl.size() + body_len_samples;

    std::size_t total = 0;
    for (const auto& ch : channel) {
        if (ch.start_offset_samples < 0)
            throw std::invalid_argument("synthesize_collision: negative start offset");
        total = std::max(total, static_cast<std::size_t>(ch.start_offset_samples) + frame);
    }

    std::vector<std::complex<double>> acc(total, {0.0, 0.0});
    double peak_power = 0.0;
    double snr_db = channel.front().snr_db;
    for (std::size_t si = 0; si < channel.size(); ++si) {
        const auto& ch = channel[si];
        rng_t rng(sub_seed(seed, 0x5157u + static_cast<std::uint64_t>(si)));
        const double step = kTwoPi * ch.fo_hz * ts;
        const std::size_t eta = static_cast<std::size_t>(ch.start_offset_samples);
        for (std::size_t k = 0; k < frame; ++k) {
            std::complex<double> x;
            if (k < tmpl.size()) {
                x = {tmpl.samples[k].real(), tmpl.samples[k].imag()};
            } else {
                // QPSK-like body symbol; content never decoded, only energy matters.
                const double a = (kTwoPi / 4.0) * (0.5 + static_cast<double>(uniform_below(rng, 4)));
                x = {std::cos(a), std::sin(a)};
            }
            const double ang = ch.phase_rad + step * static_cast<double>(k);
            acc[eta + k] += ch.gain * x * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        if (ch.gain * ch.gain > peak_power) {
            peak_power = ch.gain * ch.gain;
            snr_db = ch.snr_db;
        }
    }

    const double nvar = peak_power / std::pow(10.0, snr_db / 10.0);
    rng_t nrng(sub_seed(seed, 0xA03Eu));
    const double sd = std::sqrt(nvar / 2.0);
    BasebandSignal out;
    out.samples.reserve(total);
    for (auto& v : acc) {
        v += std::complex<double>(sd * normal_unit(nrng), sd * normal_unit(nrng));
        out.samples.emplace_back(static_cast<float>(v.real()), static_cast<float>(v.imag()));
    }
    return out;
}

/// Normalized sliding cross-correlation magnitude,
///   G(m) = |sum_n P*(n) y(n+m)| / (||P|| ||y(m..m+L)||),  m in [0, |y|),
/// with y zero-padded past its end. Windows whose energy falls below
/// 1e-12 * ||P||^2 return zero instead of amplifying noise at the edges.
inline std::vector<double> xcorr(const PreambleTemplate& p, const BasebandSignal& y) {
    const std::size_t len = y.size();
    if (len == 0) throw std::invalid_argument("xcorr: empty signal");
    const std::size_t L = p.size();

    double ep = 0.0;
    for (const auto& v : p.samples) ep += static_cast<double>(v.real()) * v.real() +
                                          static_cast<double>(v.imag()) * v.imag();

    // Window energies by prefix sums over the zero-padded signal.
    std::vector<double> prefix(len + 1, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
        const auto& v = y.samples[i];
        prefix[i + 1] = prefix[i] + static_cast<double>(v.real()) * v.real() +
                        static_cast<double>(v.imag()) * v.imag();
    }

    const double floor_e = 1e-12 * ep;
    std::vector<double> gamma(len, 0.0);
    for (std::size_t m = 0; m < len; ++m) {
        const std::size_t hi = std::min(len, m + L);
        const double ew = prefix[hi] - prefix[m];
        if (ew < floor_e) continue;
        const std::size_t n_max = hi - m;  // taps with signal under them
        double re = 0.0, im = 0.0;
        const cfloat* pp = p.samples.data();
        const cfloat* yy = y.samples.data() + m;
        for (std::size_t n = 0; n < n_max; ++n) {
            // conj(P[n]) * y[m+n], accumulated in double
            const double pr = pp[n].real(), pi = pp[n].imag();
            const double yr = yy[n].real(), yi = yy[n].imag();
            re += pr * yr + pi * yi;
            im += pr * yi - pi * yr;
        }
        const double g = std::sqrt(re * re + im * im) / (std::sqrt(ep) * std::sqrt(ew));
        gamma[m] = std::min(1.0, std::max(0.0, g));
    }
    return gamma;
}

struct CompositeResult {
    std::vector<double> value;
    std::vector<int> owner;  // index into the input list; ties go to the lowest
};

inline CompositeResult composite(const std::vector<std::vector<double>>& gammas) {
    if (gammas.empty()) throw std::invalid_argument("composite: no rows");
    const std::size_t len = gammas.front().size();
    for (const auto& g : gammas)
        if (g.size() != len) throw std::invalid_argument("composite: length mismatch");
    CompositeResult out;
    out.value.assign(len, 0.0);
    out.owner.assign(len, 0);
    for (std::size_t m = 0; m < len; ++m) {
        double best = gammas[0][m];
        int who = 0;
        for (std::size_t i = 1; i < gammas.size(); ++i) {
            if (gammas[i][m] > best) {
                best = gammas[i][m];
                who = static_cast<int>(i);
            }
        }
        out.value[m] = best;
        out.owner[m] = who;
    }
    return out;
}

struct CitStation {
    int station_id = 0;
    double fo_hz = 0.0;
    double phase_rad = 0.0;
};

/// Successive peak extraction over the per-station correlation rows:
/// take the global maximum, assign it if above th_c, zero +-zeta around it in
/// every row (the preamble is periodic, so neighbours are echoes), retire the
/// assigned station, repeat. Ties break toward the lower station id, then the
/// lower index.
inline CollisionVerdict identify_rows(std::vector<std::vector<double>> rows,
                                      const std::vector<CitStation>& stations, double th_c,
                                      int zeta) {
    if (rows.size() != stations.size())
        throw std::invalid_argument("identify_rows: rows/stations mismatch");
    if (zeta < 1) throw std::invalid_argument("identify_rows: zeta must be >= 1");
    CollisionVerdict verdict;
    std::vector<bool> active(rows.size(), true);
    const std::size_t len = rows.empty() ? 0 : rows.front().size();
    for (;;) {
        double best = -1.0;
        std::size_t bi = 0, bm = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!active[i]) continue;
            for (std::size_t m = 0; m < len; ++m) {
                if (rows[i][m] > best) {
                    best = rows[i][m];
                    bi = i;
                    bm = m;
                }
            }
        }
        if (best <= th_c) break;
        verdict.colliders.push_back(
            {stations[bi].station_id, static_cast<long long>(bm), best});
        const std::size_t lo = bm >= static_cast<std::size_t>(zeta) ? bm - zeta : 0;
        const std::size_t hi = std::min(len, bm + static_cast<std::size_t>(zeta) + 1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!active[i]) continue;
            std::fill(rows[i].begin() + static_cast<std::ptrdiff_t>(lo),
                      rows[i].begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
        }
        active[bi] = false;
    }
    std::sort(verdict.colliders.begin(), verdict.colliders.end(),
              [](const ColliderHit& a, const ColliderHit& b) {
                  return a.start_offset_samples < b.start_offset_samples;
              });
    return verdict;
}

inline CollisionVerdict identify(const BasebandSignal& y, const std::vector<CitStation>& stations,
                                 double th_c, int zeta, const PreambleTemplate& tmpl) {
    if (!(th_c >= 0.0 && th_c <= 1.0)) throw std::invalid_argument("identify: th_c outside [0,1]");
    std::vector<std::vector<double>> rows(stations.size());
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const auto pi = modified_preamble(tmpl, stations[i].fo_hz, stations[i].phase_rad,
                                          y.sample_rate_hz);
        rows[i] = xcorr(pi, y);
    }
    return identify_rows(std::move(rows), stations, th_c, zeta);
}

/// Draw n frequency offsets from [-range, range], rejecting draws that fall
/// inside the Delta-percent guard window of an existing entry (and vice
/// versa). Delta = 0 disables the constraint.
inline std::vector<double> sample_fo_set(std::size_t n, double delta_pct, double range_hz,
                                         std::uint64_t seed) {
    rng_t rng(seed);
    std::vector<double> fo;
    fo.reserve(n);
    std::size_t rejections = 0;
    while (fo.size() < n) {
        const double cand = uniform_range(rng, -range_hz, range_hz);
        bool ok = true;
        for (const double f : fo) {
            if (std::fabs(cand - f) <= (delta_pct / 100.0) * std::fabs(f) ||
                std::fabs(cand - f) <= (delta_pct / 100.0) * std::fabs(cand)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            fo.push_back(cand);
        } else if (++rejections > 100000) {
            throw config_error("sample_fo_set: separation constraint infeasible");
        }
    }
    return fo;
}

}  // namespace cwest
