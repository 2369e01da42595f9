#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "cwest/signal.hpp"

namespace cwest {

// ---------------------------------------------------------------------------
// Legacy 802.11 preamble at 20 Msps: an 8 us short training field (ten
// repeats of a 16-sample sequence) followed by an 8 us long training field
// (32-sample cyclic prefix plus two 64-sample symbols). 320 samples total.
// Both fields come from fixed frequency-domain sequences via a 64-point
// inverse DFT; the result is scaled to unit mean power.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kPreambleLen = 320;
inline constexpr std::size_t kStsPeriod = 16;
inline constexpr std::size_t kLtsPeriod = 64;
inline constexpr std::size_t kLtfCyclicPrefix = 32;

struct PreambleTemplate {
    std::vector<cfloat> samples;  // length kPreambleLen

    std::size_t size() const { return samples.size(); }
};

namespace detail {

inline std::array<std::complex<double>, 64> idft64(const std::array<std::complex<double>, 64>& f) {
    std::array<std::complex<double>, 64> t{};
    constexpr double kTwoPi = 6.283185307179586477;
    for (int n = 0; n < 64; ++n) {
        std::complex<double> acc{0.0, 0.0};
        for (int k = 0; k < 64; ++k) {
            const double ang = kTwoPi * k * n / 64.0;
            acc += f[static_cast<std::size_t>(k)] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        t[static_cast<std::size_t>(n)] = acc / 64.0;
    }
    return t;
}

}  // namespace detail

/// Deterministic canonical template. Also shipped as a binary asset
/// (write_iq_raw + checksum) so downstream builds can skip regeneration.
inline PreambleTemplate generate_preamble_template() {
    using cd = std::complex<double>;

    // STF occupies every fourth subcarrier, giving the 16-sample period.
    std::array<cd, 64> stf_f{};
    const double s = std::sqrt(13.0 / 6.0);
    const cd a{s, s}, b{-s, -s};
    const std::pair<int, cd> stf_tones[] = {{-24, a}, {-20, b}, {-16, a}, {-12, b},
                                            {-8, b},  {-4, a},  {4, b},   {8, b},
                                            {12, a},  {16, a},  {20, a},  {24, a}};
    for (const auto& [k, v] : stf_tones) stf_f[static_cast<std::size_t>((k + 64) % 64)] = v;
    const auto sts = detail::idft64(stf_f);

    static constexpr int kLtsSeq[53] = {1, 1, -1, -1, 1,  1,  -1, 1,  -1, 1,  1,  1,  1,  1,
                                        1, -1, -1, 1, 1,  -1, 1,  -1, 1,  1,  1,  1,  0,  1,
                                        -1, -1, 1, 1, -1, 1,  -1, 1,  -1, -1, -1, -1, -1, 1,
                                        1, -1, -1, 1, -1, 1,  -1, 1,  1,  1,  1};
    std::array<cd, 64> ltf_f{};
    for (int k = -26; k <= 26; ++k)
        ltf_f[static_cast<std::size_t>((k + 64) % 64)] = cd(kLtsSeq[k + 26], 0.0);
    const auto lts = detail::idft64(ltf_f);

    std::vector<cd> p;
    p.reserve(kPreambleLen);
    for (std::size_t n = 0; n < 160; ++n) p.push_back(sts[n % 64]);
    for (std::size_t n = 0; n < kLtfCyclicPrefix; ++n) p.push_back(lts[64 - kLtfCyclicPrefix + n]);
    for (int rep = 0; rep < 2; ++rep)
        for (std::size_t n = 0; n < 64; ++n) p.push_back(lts[n]);

    double power = 0.0;
    for (const auto& x : p) power += std::norm(x);
    const double scale = 1.0 / std::sqrt(power / static_cast<double>(p.size()));

    PreambleTemplate out;
    out.samples.reserve(kPreambleLen);
    for (const auto& x : p)
        out.samples.emplace_back(static_cast<float>(x.real() * scale),
                                 static_cast<float>(x.imag() * scale));
    return out;
}

/// Station-specific template: constant phase shift plus the per-sample
/// frequency-offset rotation. Magnitudes are untouched.
inline PreambleTemplate modified_preamble(const PreambleTemplate& tmpl, double fo_hz,
                                          double phase_rad, double sample_rate_hz = 20e6) {
    constexpr double kTwoPi = 6.283185307179586477;
    PreambleTemplate out;
    out.samples.reserve(tmpl.samples.size());
    const double step = kTwoPi * fo_hz / sample_rate_hz;
    for (std::size_t n = 0; n < tmpl.samples.size(); ++n) {
        const double ang = phase_rad + step * static_cast<double>(n);
        const std::complex<double> rot(std::cos(ang), std::sin(ang));
        const std::complex<double> x(tmpl.samples[n].real(), tmpl.samples[n].imag());
        const auto y = x * rot;
        out.samples.emplace_back(static_cast<float>(y.real()), static_cast<float>(y.imag()));
    }
    return out;
}

}  // namespace cwest
