#pragma once

#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwest/common.hpp"

namespace cwest {

using cfloat = std::complex<float>;

/// Complex sample stream at a fixed 20 Msps rate.
struct BasebandSignal {
    std::vector<cfloat> samples;
    double sample_rate_hz = 20e6;

    std::size_t size() const { return samples.size(); }
};

static_assert(sizeof(float) == 4, "interchange format assumes 32-bit floats");

namespace detail {

inline void put_f32le(std::ofstream& os, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    unsigned char b[4] = {static_cast<unsigned char>(u), static_cast<unsigned char>(u >> 8),
                          static_cast<unsigned char>(u >> 16), static_cast<unsigned char>(u >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline float get_f32le(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    const std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                            (static_cast<std::uint32_t>(b[2]) << 16) |
                            (static_cast<std::uint32_t>(b[3]) << 24);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

}  // namespace detail

/// Raw interleaved little-endian float32 (I then Q per sample), no header.
/// This is the preamble asset layout: 320 samples, 2560 bytes.
inline void write_iq_raw(const std::string& path, const std::vector<cfloat>& samples) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_iq_raw: cannot open " + path);
    for (const auto& s : samples) {
        detail::put_f32le(os, s.real());
        detail::put_f32le(os, s.imag());
    }
    if (!os) throw std::runtime_error("write_iq_raw: short write to " + path);
}

inline std::vector<cfloat> read_iq_raw(const std::string& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw std::runtime_error("read_iq_raw: cannot open " + path);
    const auto bytes = static_cast<std::size_t>(is.tellg());
    if (bytes % 8 != 0) throw std::runtime_error("read_iq_raw: truncated file " + path);
    is.seekg(0);
    std::vector<cfloat> out(bytes / 8);
    for (auto& s : out) {
        const float re = detail::get_f32le(is);
        const float im = detail::get_f32le(is);
        s = {re, im};
    }
    if (!is) throw std::runtime_error("read_iq_raw: short read from " + path);
    return out;
}

/// Signal dump: 8-byte little-endian sample count followed by interleaved IQ.
inline void write_signal(const std::string& path, const BasebandSignal& sig) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_signal: cannot open " + path);
    const std::uint64_t n = sig.samples.size();
    unsigned char hdr[8];
    for (int i = 0; i < 8; ++i) hdr[i] = static_cast<unsigned char>(n >> (8 * i));
    os.write(reinterpret_cast<const char*>(hdr), 8);
    for (const auto& s : sig.samples) {
        detail::put_f32le(os, s.real());
        detail::put_f32le(os, s.imag());
    }
    if (!os) throw std::runtime_error("write_signal: short write to " + path);
}

inline BasebandSignal read_signal(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_signal: cannot open " + path);
    unsigned char hdr[8];
    is.read(reinterpret_cast<char*>(hdr), 8);
    if (!is) throw std::runtime_error("read_signal: missing header in " + path);
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(hdr[i]) << (8 * i);
    BasebandSignal sig;
    sig.samples.resize(n);
    for (auto& s : sig.samples) {
        const float re = detail::get_f32le(is);
        const float im = detail::get_f32le(is);
        s = {re, im};
    }
    if (!is) throw std::runtime_error("read_signal: short read from " + path);
    return sig;
}

/// Checksum sidecar: one line, 16 hex digits of FNV-1a-64 over the binary.
inline std::uint64_t iq_checksum(const std::vector<cfloat>& samples) {
    std::vector<unsigned char> buf;
    buf.reserve(samples.size() * 8);
    for (const auto& s : samples) {
        float re = s.real(), im = s.imag();
        std::uint32_t u;
        std::memcpy(&u, &re, 4);
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(u >> (8 * i)));
        std::memcpy(&u, &im, 4);
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(u >> (8 * i)));
    }
    return fnv1a64(buf.data(), buf.size());
}

inline void write_checksum_file(const std::string& path, std::uint64_t sum) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_checksum_file: cannot open " + path);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx\n", static_cast<unsigned long long>(sum));
    os << buf;
}

}  // namespace cwest
