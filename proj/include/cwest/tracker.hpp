#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "cwest/estimator.hpp"
#include "cwest/markov.hpp"
#include "cwest/wlan.hpp"

namespace cwest {

/// Counters for observations that produced no usable sample.
struct TrackStats {
    long long emitted_valid = 0;
    long long emitted_invalid = 0;  // range-gated (disregard rule)
    long long gated_queue = 0;      // previous frame reported an empty queue
    long long malformed = 0;        // negative or non-integral slot count
};

/// Idle-time to slot-count conversion. The gap between the end of the
/// station's previous exchange and its next transmission start decomposes as
///   gap = sum(COT) + (q+1) * DIFS + k * slot,
/// one DIFS following the own exchange plus one after each of the q foreign
/// occupations. Non-integral or negative k means the observation is
/// inconsistent (partial-slot interference, misattribution) and is discarded.
inline double derive_backoff(double gap_us, double cot_total_us, long long q, double difs_us,
                             double slot_us, bool* malformed = nullptr) {
    const double x = gap_us - cot_total_us - static_cast<double>(q + 1) * difs_us;
    const double k = x / slot_us;
    const double rounded = std::nearbyint(k);
    const bool bad = k < -1e-6 || std::fabs(k - rounded) > 1e-6;
    if (malformed) *malformed = bad;
    return bad ? k : rounded;
}

/// Replay the AP log for one station and emit its recovered backoff values.
/// A sample is produced for every transmission attributed to the station
/// (success, or collision whose identified set contains it) whose preceding
/// frame advertised a non-empty queue; values beyond the largest reachable
/// window are kept but flagged invalid.
inline std::vector<BackoffSample> track(const ObservationLog& log, int station_id,
                                        int w_standard, int max_retx,
                                        TrackStats* stats = nullptr) {
    TrackStats local;
    std::vector<BackoffSample> out;

    const long long range_max = stage_window(w_standard, max_retx, log.cw_cap) - 1;
    long long contention_start = 0;
    long long cot_total = 0;
    long long q = 0;
    long long last_queue = 1;  // Q starts nonzero; the first gap is usable

    for (const auto& ev : log.events) {
        bool own = false;
        long long own_start = 0;
        if (ev.kind == LogEvent::Kind::success && ev.station == station_id) {
            own = true;
            own_start = ev.start_us;
        } else if (ev.kind == LogEvent::Kind::collision) {
            for (const auto& r : ev.identified) {
                if (r.station == station_id) {
                    own = true;
                    own_start = r.start_us;
                    break;
                }
            }
        }

        if (!own) {
            ++q;
            cot_total += ev.end_us - ev.start_us;
            if (ev.kind == LogEvent::Kind::collision) cot_total += log.ack_window_us;
            continue;
        }

        const double gap = static_cast<double>(own_start - contention_start);
        if (last_queue > 0) {
            bool malformed = false;
            const double k = derive_backoff(gap, static_cast<double>(cot_total), q,
                                            static_cast<double>(log.difs_us),
                                            static_cast<double>(log.slot_us), &malformed);
            if (malformed) {
                ++local.malformed;
            } else {
                BackoffSample s;
                s.station_id = station_id;
                s.value = static_cast<long long>(k);
                s.valid = s.value >= 0 && s.value <= range_max;
                (s.valid ? local.emitted_valid : local.emitted_invalid)++;
                out.push_back(s);
            }
        } else {
            ++local.gated_queue;
        }

        if (ev.kind == LogEvent::Kind::success) {
            contention_start = ev.end_us;  // exchange already covers the ACK
            last_queue = ev.queue_bytes;
        } else {
            // Own frame ends a fixed frame time after its start (fixed packet
            // sizes); the ACK timeout follows before recontention.
            contention_start = own_start + log.frame_us + log.ack_window_us;
            last_queue = 1;  // the collided frame is pending retransmission
        }
        cot_total = 0;
        q = 0;
    }

    if (stats) *stats = local;
    return out;
}

/// Tab-separated sample export: station, index, value, valid flag.
inline void write_samples(std::ostream& os, const std::vector<BackoffSample>& samples) {
    for (std::size_t i = 0; i < samples.size(); ++i)
        os << samples[i].station_id << '\t' << i << '\t' << samples[i].value << '\t'
           << (samples[i].valid ? 1 : 0) << '\n';
}

}  // namespace cwest
