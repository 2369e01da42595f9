#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "cwest/cit.hpp"
#include "cwest/common.hpp"
#include "cwest/markov.hpp"
#include "cwest/wlan.hpp"

namespace cwest {

// ---------------------------------------------------------------------------
// DCF discrete-event simulation, integer microseconds.
//
// Recovery timing keeps every station on one slot grid: after any sensed
// burst ends at E, contention (DIFS, then 9 us slots) restarts at E plus the
// SIFS+ACK window. For a success that interval is the ACK exchange itself;
// for a failed reception it is the ACK timeout (transmitter) or the EIFS
// remainder (witnesses). One shared constant keeps Eq.-10-style idle-time
// bookkeeping exactly integral, which the tracker oracle depends on.
// ---------------------------------------------------------------------------

namespace detail {

struct StaState {
    const StationProfile* prof = nullptr;
    rng_t rng;
    int stage = 0;
    long long remaining = -1;  // backoff slots left; -1 when no frame pending
    long long horizon = 0;     // earliest time the next DIFS may start
    bool in_tx = false;
    bool has_frame = false;
    long long backlog = 0;  // queued packets behind the head frame
    long long next_arrival = LLONG_MAX;
    std::size_t pending_draw = SIZE_MAX;
    int sensed_active = 0;  // sensed frames currently in the air
};

struct Flight {
    int sta = 0;  // index into station array
    long long start = 0;
    long long end = 0;
    bool ended = false;
};

}  // namespace detail

/// Run the DCF simulation described by `config`. Identified collider sets in
/// the log equal the true sets (ideal identification); use
/// inject_identification afterwards for degraded modes.
inline SimResult run(const WlanConfig& config) {
    config.validate();
    const std::size_t n = config.stations.size();
    const long long frame_us = config.frame_us();
    const long long ack_win = config.ack_window_us();
    const long long slot = config.slot_us;
    const long long difs = config.difs_us;
    const long long t_end = config.duration_us();

    // sense[i][j]: station i hears station j's transmissions.
    std::vector<std::vector<char>> sense(n, std::vector<char>(n, 1));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& wl = config.stations[i].sensing;
        if (wl.empty()) continue;
        for (std::size_t j = 0; j < n; ++j) {
            bool in = false;
            for (int id : wl) in = in || id == config.stations[j].id;
            sense[i][j] = in ? 1 : 0;
        }
    }

    SimResult result;
    result.log.slot_us = slot;
    result.log.difs_us = difs;
    result.log.ack_window_us = ack_win;
    result.log.frame_us = frame_us;
    result.log.duration_us = t_end;
    result.log.w_standard = config.w_standard;
    result.log.max_retx = config.max_retx;
    result.log.cw_cap = config.cw_cap;
    result.log.seed = config.seed;

    std::vector<detail::StaState> st(n);
    rng_t tie_rng(sub_seed(config.seed, 0x7133u));

    auto window = [&](std::size_t i) {
        return stage_window(st[i].prof->cw_min, st[i].stage, config.cw_cap);
    };
    auto record_draw = [&](std::size_t i) {
        auto& s = st[i];
        const long long w = window(i);
        const long long v = static_cast<long long>(uniform_below(s.rng, static_cast<std::uint64_t>(w)));
        auto& vec = result.truth.draws[s.prof->id];
        vec.push_back({v, s.stage, DrawRecord::Outcome::pending});
        s.pending_draw = vec.size() - 1;
        s.remaining = v;
        result.stats[s.prof->id].draws++;
    };
    auto mark_outcome = [&](std::size_t i, DrawRecord::Outcome oc) {
        auto& s = st[i];
        if (s.pending_draw != SIZE_MAX)
            result.truth.draws[s.prof->id][s.pending_draw].outcome = oc;
        s.pending_draw = SIZE_MAX;
    };
    auto schedule_arrival = [&](std::size_t i, long long now) {
        auto& s = st[i];
        const double gap_s = -std::log(1.0 - uniform_unit(s.rng)) / s.prof->traffic.rate_pps;
        s.next_arrival = now + std::max<long long>(1, std::llround(gap_s * 1e6));
    };

    for (std::size_t i = 0; i < n; ++i) {
        st[i].prof = &config.stations[i];
        st[i].rng.seed(sub_seed(config.seed, 0xB0FFu + static_cast<std::uint64_t>(config.stations[i].id)));
        result.stats[config.stations[i].id] = {};
        if (st[i].prof->traffic.kind == TrafficKind::saturated) {
            st[i].has_frame = true;
            record_draw(i);
        } else {
            schedule_arrival(i, 0);
        }
    }

    std::vector<detail::Flight> cluster;  // frames of the currently open overlap group
    int cluster_active = 0;
    long long ap_busy_until = 0;  // AP transmitting an ACK until here

    auto fire_time = [&](std::size_t i) -> long long {
        const auto& s = st[i];
        if (!s.has_frame || s.in_tx || s.remaining < 0 || s.sensed_active > 0) return LLONG_MAX;
        return s.horizon + difs + slot * s.remaining;
    };

    for (;;) {
        long long t_next = t_end;
        // pending frame ends
        for (const auto& f : cluster)
            if (!f.ended) t_next = std::min(t_next, f.end);
        for (std::size_t i = 0; i < n; ++i) {
            t_next = std::min(t_next, st[i].next_arrival);
            t_next = std::min(t_next, fire_time(i));
        }
        if (t_next >= t_end) break;
        const long long now = t_next;

        // 1) frame ends, possibly closing the cluster
        bool any_end = false;
        for (auto& f : cluster) {
            if (!f.ended && f.end == now) {
                f.ended = true;
                --cluster_active;
                any_end = true;
            }
        }
        if (any_end) {
            // rebuild sensed_active counts from still-active frames
            for (std::size_t i = 0; i < n; ++i) {
                int c = 0;
                for (const auto& f : cluster)
                    if (!f.ended && sense[i][static_cast<std::size_t>(f.sta)]) ++c;
                st[i].sensed_active = c;
            }
        }
        if (any_end && cluster_active == 0) {
            // Close the overlap group: classify, log, apply outcomes.
            long long cl_start = LLONG_MAX, cl_end = 0;
            for (const auto& f : cluster) {
                cl_start = std::min(cl_start, f.start);
                cl_end = std::max(cl_end, f.end);
            }
            const bool blinded = cl_start < ap_busy_until;
            const bool success = cluster.size() == 1 && !blinded;

            LogEvent ev;
            if (success) {
                const auto& f = cluster.front();
                auto& s = st[static_cast<std::size_t>(f.sta)];
                ev.kind = LogEvent::Kind::success;
                ev.start_us = f.start;
                ev.end_us = f.end + ack_win;
                ev.station = s.prof->id;
                ev.queue_bytes = (s.prof->traffic.kind == TrafficKind::saturated)
                                     ? config.payload_bytes
                                     : s.backlog * config.payload_bytes;
                ap_busy_until = f.end + ack_win;

                auto& stats = result.stats[s.prof->id];
                stats.successes++;
                stats.bits_delivered += config.payload_bytes * 8;
                stats.success_airtime_us += frame_us;
                mark_outcome(static_cast<std::size_t>(f.sta), DrawRecord::Outcome::success);
                s.in_tx = false;
                s.stage = 0;
                if (s.prof->traffic.kind == TrafficKind::saturated) {
                    record_draw(static_cast<std::size_t>(f.sta));
                } else if (s.backlog > 0) {
                    --s.backlog;
                    record_draw(static_cast<std::size_t>(f.sta));
                } else {
                    s.has_frame = false;
                    s.remaining = -1;
                }
                // ACK is heard by everyone; contention restarts after it.
                // A station that never sensed the frame kept counting through
                // it and only freezes when the ACK starts.
                const long long ack_start = f.end + config.sifs_us;
                for (std::size_t i = 0; i < n; ++i) {
                    auto& o = st[i];
                    if (i != static_cast<std::size_t>(f.sta) &&
                        !sense[i][static_cast<std::size_t>(f.sta)] && o.has_frame && !o.in_tx &&
                        o.remaining >= 0 && o.sensed_active == 0) {
                        const long long done = (ack_start - o.horizon - difs) / slot;
                        if (done > 0) o.remaining -= std::min(done, o.remaining);
                    }
                    o.horizon = std::max(o.horizon, ev.end_us);
                }
            } else {
                ev.kind = LogEvent::Kind::collision;
                ev.start_us = std::min(std::max(cl_start, ap_busy_until), cl_end);
                ev.end_us = cl_end;
                for (const auto& f : cluster)
                    ev.true_set.push_back({st[static_cast<std::size_t>(f.sta)].prof->id, f.start});
                std::sort(ev.true_set.begin(), ev.true_set.end(),
                          [](const TxRef& a, const TxRef& b) {
                              return a.start_us != b.start_us ? a.start_us < b.start_us
                                                              : a.station < b.station;
                          });
                ev.identified = ev.true_set;

                for (const auto& f : cluster) {
                    const auto si = static_cast<std::size_t>(f.sta);
                    auto& s = st[si];
                    auto& stats = result.stats[s.prof->id];
                    stats.collisions++;
                    s.in_tx = false;
                    if (s.stage == config.max_retx) {
                        stats.drops++;
                        mark_outcome(si, DrawRecord::Outcome::dropped);
                        s.stage = 0;
                        if (s.prof->traffic.kind == TrafficKind::saturated) {
                            record_draw(si);
                        } else if (s.backlog > 0) {
                            --s.backlog;
                            record_draw(si);
                        } else {
                            s.has_frame = false;
                            s.remaining = -1;
                        }
                    } else {
                        mark_outcome(si, DrawRecord::Outcome::collision);
                        s.stage++;
                        record_draw(si);
                    }
                }
                // Witnesses wait the EIFS remainder, colliders their ACK
                // timeout; both coincide with the sensed burst end + ack_win.
                for (std::size_t i = 0; i < n; ++i) {
                    long long latest = -1;
                    for (const auto& f : cluster)
                        if (sense[i][static_cast<std::size_t>(f.sta)])
                            latest = std::max(latest, f.end);
                    if (latest >= 0) st[i].horizon = std::max(st[i].horizon, latest + ack_win);
                }
            }
            result.log.events.push_back(std::move(ev));
            cluster.clear();
        }

        // 2) traffic arrivals
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = st[i];
            if (s.next_arrival != now) continue;
            schedule_arrival(i, now);
            if (s.has_frame || s.in_tx) {
                ++s.backlog;
            } else {
                s.has_frame = true;
                s.stage = 0;
                s.horizon = std::max(s.horizon, now);
                record_draw(i);
            }
        }

        // 3) backoff expiries
        std::vector<std::size_t> firing;
        for (std::size_t i = 0; i < n; ++i)
            if (fire_time(i) == now) firing.push_back(i);
        if (!firing.empty()) {
            std::vector<std::size_t> txs = firing;
            if (config.tie_policy == TiePolicy::capture && firing.size() > 1) {
                const std::size_t w = firing[uniform_below(tie_rng, firing.size())];
                txs.clear();
                txs.push_back(w);
                for (std::size_t i : firing) {
                    if (i == w) continue;
                    if (sense[i][w]) {
                        st[i].remaining = 0;  // deferred at the boundary
                    } else {
                        txs.push_back(i);  // cannot hear the winner, transmits anyway
                    }
                }
                std::sort(txs.begin(), txs.end());
            }
            // freeze countdowns of everyone who senses a new transmitter
            for (std::size_t i = 0; i < n; ++i) {
                auto& s = st[i];
                bool mine = false;
                for (std::size_t x : txs) mine = mine || x == i;
                if (mine || !s.has_frame || s.in_tx || s.remaining < 0) continue;
                bool hears = false;
                for (std::size_t x : txs) hears = hears || sense[i][x];
                if (!hears) continue;
                if (s.sensed_active == 0) {
                    const long long done = (now - s.horizon - difs) / slot;
                    if (done > 0) s.remaining -= std::min(done, s.remaining);
                }
            }
            for (std::size_t x : txs) {
                auto& s = st[x];
                s.in_tx = true;
                s.remaining = -1;
                result.stats[s.prof->id].attempts++;
                cluster.push_back({static_cast<int>(x), now, now + frame_us, false});
                ++cluster_active;
                for (std::size_t i = 0; i < n; ++i)
                    if (sense[i][x]) st[i].sensed_active++;
            }
        }
    }

    // Truncated in-flight frames keep the busy ledger consistent.
    if (cluster_active > 0) {
        long long cl_start = LLONG_MAX;
        for (const auto& f : cluster) cl_start = std::min(cl_start, f.start);
        LogEvent ev;
        ev.kind = LogEvent::Kind::foreign;
        ev.start_us = std::max(cl_start, ap_busy_until);
        ev.end_us = t_end;
        result.log.events.push_back(std::move(ev));
    }
    return result;
}

// ---------------------------------------------------------------------------

struct ThroughputRow {
    int station_id = 0;
    double mbps = 0.0;
    double airtime_share = 0.0;
};

inline std::vector<ThroughputRow> throughput(const std::map<int, StationStats>& stats,
                                             double duration_s) {
    long long total_air = 0;
    for (const auto& [id, s] : stats) total_air += s.success_airtime_us;
    std::vector<ThroughputRow> rows;
    for (const auto& [id, s] : stats) {
        ThroughputRow r;
        r.station_id = id;
        r.mbps = static_cast<double>(s.bits_delivered) / (duration_s * 1e6);
        r.airtime_share =
            total_air > 0 ? static_cast<double>(s.success_airtime_us) / static_cast<double>(total_air)
                          : 0.0;
        rows.push_back(r);
    }
    return rows;
}

/// Rewrite the identified collider sets of a log according to the chosen
/// identification mode. `ideal` is the identity. `cit_empirical` keeps the
/// true set with probability acc(N) and otherwise drops or adds one station.
/// `cit_full` synthesizes the baseband collision and runs the correlation
/// pipeline for each event.
inline ObservationLog inject_identification(const ObservationLog& log, const WlanConfig& config,
                                            std::uint64_t seed) {
    ObservationLog out = log;
    if (config.id_mode == CollisionIdMode::ideal) return out;

    if (config.id_mode == CollisionIdMode::cit_empirical) {
        const int n = static_cast<int>(config.stations.size());
        const auto it = config.cit_accuracy.find(n);
        if (it == config.cit_accuracy.end())
            throw config_error("cit_empirical: no accuracy entry for N=" + std::to_string(n));
        const double acc = it->second;
        rng_t rng(sub_seed(seed, 0xC17Eu));
        for (auto& ev : out.events) {
            if (ev.kind != LogEvent::Kind::collision) continue;
            if (uniform_unit(rng) < acc) continue;
            auto& ids = ev.identified;
            std::vector<int> absent;
            for (const auto& s : config.stations) {
                bool in = false;
                for (const auto& r : ids) in = in || r.station == s.id;
                if (!in) absent.push_back(s.id);
            }
            const bool drop = absent.empty() || uniform_below(rng, 2) == 0;
            if (drop && !ids.empty()) {
                ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng, ids.size())));
            } else if (!absent.empty()) {
                ids.push_back({absent[uniform_below(rng, absent.size())], ev.start_us});
            }
        }
        return out;
    }

    // cit_full: run the DSP pipeline per collision.
    const auto tmpl = generate_preamble_template();
    std::vector<CitStation> table;
    for (const auto& s : config.stations) table.push_back({s.id, s.fo_hz, s.phase_rad});
    const double samples_per_us = 20.0;  // 20 Msps
    const auto body_len = static_cast<std::size_t>(
        std::max<long long>(0, config.frame_us() * 20 - static_cast<long long>(kPreambleLen)));
    std::size_t ev_index = 0;
    for (auto& ev : out.events) {
        ++ev_index;
        if (ev.kind != LogEvent::Kind::collision) continue;
        long long base = LLONG_MAX;
        for (const auto& r : ev.true_set) base = std::min(base, r.start_us);
        std::vector<ChannelParams> chans;
        for (const auto& r : ev.true_set) {
            const StationProfile* p = config.find_station(r.station);
            if (!p) throw config_error("cit_full: unknown station " + std::to_string(r.station));
            ChannelParams ch;
            ch.station_id = p->id;
            ch.gain = p->gain;
            ch.phase_rad = p->phase_rad;
            ch.fo_hz = p->fo_hz;
            ch.start_offset_samples = std::llround((r.start_us - base) * samples_per_us);
            ch.snr_db = config.cit_snr_db;
            chans.push_back(ch);
        }
        const auto y = synthesize_collision(tmpl, body_len, chans, sub_seed(seed, ev_index));
        const auto verdict = identify(y, table, config.cit_th_c, config.cit_zeta, tmpl);
        ev.identified.clear();
        for (const auto& hit : verdict.colliders)
            ev.identified.push_back(
                {hit.station_id, base + std::llround(hit.start_offset_samples / samples_per_us)});
    }
    return out;
}

}  // namespace cwest
