#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cwest/common.hpp"

namespace cwest {

enum class TrafficKind { saturated, poisson };

struct Traffic {
    TrafficKind kind = TrafficKind::saturated;
    double rate_pps = 0.0;  // poisson only
};

struct StationProfile {
    int id = 0;
    int cw_min = 16;
    std::vector<int> sensing;  // station ids it carrier-senses; empty = everyone
    Traffic traffic;
    double fo_hz = 0.0;        // carrier frequency offset vs the AP
    double phase_rad = 0.0;    // channel phase as stored by the AP
    double gain = 1.0;         // channel magnitude
};

enum class CollisionIdMode { ideal, cit_empirical, cit_full };

/// Same-microsecond backoff expiries. `collide` is the physical rule: frames
/// launched in the same slot overlap at the AP. `capture` hands the slot to
/// one station and defers the rest, the way process-ordered simulators
/// serialize simultaneous events; it exists to reproduce reference
/// throughput curves recorded under that behavior.
enum class TiePolicy { collide, capture };

struct WlanConfig {
    std::vector<StationProfile> stations;
    int w_standard = 16;
    int max_retx = 7;
    int cw_cap = 1024;
    long long slot_us = 9;
    long long difs_us = 34;
    long long sifs_us = 16;
    long long ack_us = 44;
    long long payload_bytes = 1500;
    double phy_rate_mbps = 12.0;
    double duration_s = 10.0;
    std::uint64_t seed = 1;
    TiePolicy tie_policy = TiePolicy::collide;
    CollisionIdMode id_mode = CollisionIdMode::ideal;
    std::map<int, double> cit_accuracy;  // N -> accuracy, cit_empirical mode
    double cit_snr_db = 10.0;
    double cit_th_c = 0.5;
    int cit_zeta = 180;

    long long frame_us() const {
        return std::llround(static_cast<double>(payload_bytes) * 8.0 / phy_rate_mbps);
    }
    long long ack_window_us() const { return sifs_us + ack_us; }
    long long duration_us() const { return std::llround(duration_s * 1e6); }

    const StationProfile* find_station(int id) const {
        for (const auto& s : stations)
            if (s.id == id) return &s;
        return nullptr;
    }

    void validate() const {
        if (stations.empty()) throw config_error("config: no stations");
        if (slot_us <= 0 || difs_us <= 0) throw config_error("config: slot/DIFS must be positive");
        if (duration_s <= 0) throw config_error("config: duration must be positive");
        if (payload_bytes <= 0 || phy_rate_mbps <= 0) throw config_error("config: bad payload/rate");
        std::vector<int> seen;
        for (const auto& s : stations) {
            for (int id : seen)
                if (id == s.id) throw config_error("config: duplicate station id " + std::to_string(s.id));
            seen.push_back(s.id);
            if (s.cw_min < 2 || s.cw_min > w_standard)
                throw config_error("config: station " + std::to_string(s.id) + " cw_min outside [2, W_s]");
            if (!s.sensing.empty()) {
                bool self = false;
                for (int id : s.sensing) self = self || id == s.id;
                if (!self)
                    throw config_error("config: station " + std::to_string(s.id) +
                                       " does not sense itself");
            }
            if (std::fabs(s.fo_hz) > 125000.0)
                throw config_error("config: station " + std::to_string(s.id) + " FO outside +-125 kHz");
            if (!(s.gain > 0.0)) throw config_error("config: station gain must be positive");
            if (s.traffic.kind == TrafficKind::poisson && !(s.traffic.rate_pps > 0.0))
                throw config_error("config: poisson rate must be positive");
        }
    }
};

// ---------------------------------------------------------------------------
// AP-side observation log.
// ---------------------------------------------------------------------------

struct TxRef {
    int station = 0;
    long long start_us = 0;
};

struct LogEvent {
    enum class Kind { success, collision, foreign } kind = Kind::success;
    long long start_us = 0;
    long long end_us = 0;  // success events include the SIFS+ACK tail
    // success
    int station = -1;
    long long queue_bytes = 0;
    // collision
    std::vector<TxRef> true_set;
    std::vector<TxRef> identified;
};

struct ObservationLog {
    long long slot_us = 9;
    long long difs_us = 34;
    long long ack_window_us = 60;
    long long frame_us = 1000;
    long long duration_us = 0;
    int w_standard = 16;
    int max_retx = 7;
    int cw_cap = 1024;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<LogEvent> events;  // busy events, time sorted, non-overlapping
};

struct DrawRecord {
    enum class Outcome { pending, success, collision, dropped };
    long long value = 0;
    int stage = 0;
    Outcome outcome = Outcome::pending;

    bool operator==(const DrawRecord&) const = default;
};

struct GroundTruth {
    std::map<int, std::vector<DrawRecord>> draws;
};

struct StationStats {
    long long attempts = 0;
    long long successes = 0;
    long long collisions = 0;
    long long drops = 0;
    long long bits_delivered = 0;
    long long success_airtime_us = 0;
    long long draws = 0;
};

struct SimResult {
    ObservationLog log;
    GroundTruth truth;
    std::map<int, StationStats> stats;
};

// ---------------------------------------------------------------------------
// Log text format: header comments then one event per line.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string txrefs_to_string(const std::vector<TxRef>& v) {
    if (v.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i].station) + "@" + std::to_string(v[i].start_us);
    }
    return out;
}

inline std::vector<TxRef> txrefs_from_string(const std::string& s) {
    std::vector<TxRef> out;
    if (s == "-") return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto at = item.find('@');
        if (at == std::string::npos) throw std::runtime_error("log parse: bad tx ref " + item);
        out.push_back({std::stoi(item.substr(0, at)), std::stoll(item.substr(at + 1))});
    }
    return out;
}

}  // namespace detail

inline void write_observation_log(std::ostream& os, const ObservationLog& log) {
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(log.config_hash));
    os << "# cwest-observation-log v1\n";
    os << "# seed=" << log.seed << " config_hash=" << hex << "\n";
    os << "# slot_us=" << log.slot_us << " difs_us=" << log.difs_us
       << " ack_window_us=" << log.ack_window_us << " frame_us=" << log.frame_us
       << " duration_us=" << log.duration_us << " w_standard=" << log.w_standard
       << " max_retx=" << log.max_retx << " cw_cap=" << log.cw_cap << "\n";
    long long cursor = 0;
    for (const auto& ev : log.events) {
        if (ev.start_us > cursor)
            os << cursor << '\t' << ev.start_us << "\tidle_end\t-\n";
        switch (ev.kind) {
            case LogEvent::Kind::success:
                os << ev.start_us << '\t' << ev.end_us << "\tbusy\tsuccess\t" << ev.station << '\t'
                   << ev.queue_bytes << '\n';
                break;
            case LogEvent::Kind::collision:
                os << ev.start_us << '\t' << ev.end_us << "\tbusy\tcollision\t"
                   << detail::txrefs_to_string(ev.true_set) << '\t'
                   << detail::txrefs_to_string(ev.identified) << '\n';
                break;
            case LogEvent::Kind::foreign:
                os << ev.start_us << '\t' << ev.end_us << "\tbusy\tforeign\t-\n";
                break;
        }
        cursor = ev.end_us;
    }
    if (cursor < log.duration_us)
        os << cursor << '\t' << log.duration_us << "\tidle_end\t-\n";
}

inline ObservationLog read_observation_log(std::istream& is) {
    ObservationLog log;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::stringstream ss(line.substr(1));
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "seed") log.seed = std::stoull(val);
                else if (key == "config_hash") log.config_hash = std::stoull(val, nullptr, 16);
                else if (key == "slot_us") log.slot_us = std::stoll(val);
                else if (key == "difs_us") log.difs_us = std::stoll(val);
                else if (key == "ack_window_us") log.ack_window_us = std::stoll(val);
                else if (key == "frame_us") log.frame_us = std::stoll(val);
                else if (key == "duration_us") { log.duration_us = std::stoll(val); have_header = true; }
                else if (key == "w_standard") log.w_standard = std::stoi(val);
                else if (key == "max_retx") log.max_retx = std::stoi(val);
                else if (key == "cw_cap") log.cw_cap = std::stoi(val);
            }
            continue;
        }
        std::stringstream ss(line);
        long long start = 0, end = 0;
        std::string kind;
        ss >> start >> end >> kind;
        if (kind == "idle_end") continue;
        if (kind != "busy") throw std::runtime_error("log parse: unknown kind " + kind);
        std::string attr;
        ss >> attr;
        LogEvent ev;
        ev.start_us = start;
        ev.end_us = end;
        if (attr == "success") {
            ev.kind = LogEvent::Kind::success;
            ss >> ev.station >> ev.queue_bytes;
        } else if (attr == "collision") {
            ev.kind = LogEvent::Kind::collision;
            std::string t, i;
            ss >> t >> i;
            ev.true_set = detail::txrefs_from_string(t);
            ev.identified = detail::txrefs_from_string(i);
        } else if (attr == "foreign") {
            ev.kind = LogEvent::Kind::foreign;
        } else {
            throw std::runtime_error("log parse: unknown attribution " + attr);
        }
        log.events.push_back(std::move(ev));
    }
    if (!have_header) throw std::runtime_error("log parse: missing header");
    return log;
}

}  // namespace cwest
