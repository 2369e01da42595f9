#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "cwest/cit.hpp"
#include "cwest/config.hpp"
#include "cwest/estimator.hpp"
#include "cwest/sim.hpp"
#include "cwest/tracker.hpp"
#include "cwest/version.hpp"

namespace cwest {

struct AccuracyPoint {
    int n = 0;
    double delta = 0.0;
    double th_c = 0.0;
    int t_s = 0;
    long long correct = 0;
    long long total = 0;
    long long insufficient = 0;

    double accuracy_pct() const {
        return total > 0 ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    }
};

struct AccuracyReport {
    std::vector<AccuracyPoint> points;
};

// ---------------------------------------------------------------------------
// CIT accuracy sweep: hidden two-collider waveforms, FO and phase tables
// drawn per trial, the second collider's offset per collision. The
// correlation rows do not depend on th_c, so each collision is scored once
// against the whole threshold list.
// ---------------------------------------------------------------------------

inline AccuracyReport run_cit_accuracy(const ExperimentSpec& spec, std::uint64_t seed,
                                       unsigned threads = 0) {
    const auto tmpl = generate_preamble_template();
    AccuracyReport report;

    for (int n : spec.n_list) {
        for (double delta : spec.delta_list) {
            std::vector<std::vector<long long>> correct_per_trial(
                static_cast<std::size_t>(spec.trials),
                std::vector<long long>(spec.thc_list.size(), 0));

            parallel_for(
                static_cast<std::size_t>(spec.trials),
                [&](std::size_t trial) {
                    const std::uint64_t trial_seed =
                        sub_seed(seed, (static_cast<std::uint64_t>(n) << 32) ^
                                           (static_cast<std::uint64_t>(delta * 100) << 16) ^ trial);
                    const auto fo = sample_fo_set(static_cast<std::size_t>(n), delta, 125e3,
                                                  sub_seed(trial_seed, 0xF0u));
                    rng_t prng(sub_seed(trial_seed, 0xFAu));
                    std::vector<CitStation> table;
                    std::vector<double> phases;
                    for (int i = 0; i < n; ++i) {
                        const double ph = uniform_range(prng, 0.0, 6.283185307179586);
                        phases.push_back(ph);
                        table.push_back({i + 1, fo[static_cast<std::size_t>(i)], ph});
                    }
                    rng_t crng(sub_seed(trial_seed, 0xC0u));
                    for (int c = 0; c < spec.collisions_per_trial; ++c) {
                        // Colliders stay at least one MAC slot apart.
                        const long long eta2 = static_cast<long long>(spec.zeta) +
                                               static_cast<long long>(uniform_below(
                                                   crng, static_cast<std::uint64_t>(
                                                             spec.body_len - spec.zeta + 1)));
                        std::vector<ChannelParams> chans(2);
                        for (int i = 0; i < 2; ++i) {
                            chans[static_cast<std::size_t>(i)].station_id = i + 1;
                            chans[static_cast<std::size_t>(i)].fo_hz = fo[static_cast<std::size_t>(i)];
                            chans[static_cast<std::size_t>(i)].phase_rad =
                                phases[static_cast<std::size_t>(i)];
                            chans[static_cast<std::size_t>(i)].snr_db = spec.snr_db;
                        }
                        chans[1].start_offset_samples = eta2;
                        const auto y = synthesize_collision(
                            tmpl, static_cast<std::size_t>(spec.body_len), chans,
                            sub_seed(trial_seed, 0xE0000u + static_cast<std::uint64_t>(c)));

                        std::vector<std::vector<double>> rows(table.size());
                        for (std::size_t i = 0; i < table.size(); ++i)
                            rows[i] = xcorr(
                                modified_preamble(tmpl, table[i].fo_hz, table[i].phase_rad), y);

                        for (std::size_t ti = 0; ti < spec.thc_list.size(); ++ti) {
                            const auto verdict =
                                identify_rows(rows, table, spec.thc_list[ti], spec.zeta);
                            const bool ok = verdict.colliders.size() == 2 && verdict.contains(1) &&
                                            verdict.contains(2);
                            correct_per_trial[trial][ti] += ok ? 1 : 0;
                        }
                    }
                },
                threads);

            for (std::size_t ti = 0; ti < spec.thc_list.size(); ++ti) {
                AccuracyPoint pt;
                pt.n = n;
                pt.delta = delta;
                pt.th_c = spec.thc_list[ti];
                pt.total = static_cast<long long>(spec.trials) * spec.collisions_per_trial;
                for (int trial = 0; trial < spec.trials; ++trial)
                    pt.correct += correct_per_trial[static_cast<std::size_t>(trial)][ti];
                report.points.push_back(pt);
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// CWE accuracy vs monitoring period: WLAN setups with per-station CWmin drawn
// from {2..W_s}, tracked and estimated against the Markov nominal set.
// ---------------------------------------------------------------------------

inline AccuracyReport run_cwe_accuracy(const ExperimentSpec& spec, std::uint64_t seed,
                                       unsigned threads = 0) {
    if (spec.setups_list.size() != spec.n_list.size())
        throw config_error("cwe accuracy: setups_list must align with n_list");
    AccuracyReport report;

    for (std::size_t ni = 0; ni < spec.n_list.size(); ++ni) {
        const int n = spec.n_list[ni];
        const int setups = spec.setups_list[ni];
        const auto nominal = build_nominal_set(n, spec.base.w_standard, spec.base.max_retx,
                                               spec.base.cw_cap);

        for (int t_s : spec.t_list) {
            std::vector<std::array<long long, 3>> tally(static_cast<std::size_t>(setups),
                                                        {0, 0, 0});  // correct, total, insufficient
            parallel_for(
                static_cast<std::size_t>(setups),
                [&](std::size_t setup) {
                    WlanConfig cfg = spec.base;
                    cfg.stations.clear();
                    const std::uint64_t setup_seed =
                        sub_seed(seed, (static_cast<std::uint64_t>(n) << 40) ^
                                           (static_cast<std::uint64_t>(t_s) << 20) ^ setup);
                    rng_t wrng(sub_seed(setup_seed, 0x5EEDu));
                    for (int i = 0; i < n; ++i) {
                        StationProfile s;
                        s.id = i + 1;
                        s.cw_min = 2 + static_cast<int>(uniform_below(
                                           wrng, static_cast<std::uint64_t>(cfg.w_standard - 1)));
                        cfg.stations.push_back(s);
                    }
                    cfg.duration_s = static_cast<double>(t_s);
                    cfg.seed = sub_seed(setup_seed, 0x51Du);

                    auto res = run(cfg);
                    const auto log = inject_identification(res.log, cfg, sub_seed(setup_seed, 0x1Du));
                    for (const auto& s : cfg.stations) {
                        const auto samples = track(log, s.id, cfg.w_standard, cfg.max_retx);
                        try {
                            const auto rep = estimate_station(s.id, samples, nominal);
                            tally[setup][1]++;
                            tally[setup][0] += rep.w_hat == s.cw_min ? 1 : 0;
                        } catch (const insufficient_data_error&) {
                            tally[setup][2]++;
                        }
                    }
                },
                threads);

            AccuracyPoint pt;
            pt.n = n;
            pt.t_s = t_s;
            for (const auto& t : tally) {
                pt.correct += t[0];
                pt.total += t[1];
                pt.insufficient += t[2];
            }
            report.points.push_back(pt);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Throughput sweep: stations 1..n-1 at the standard window, the last one
// swept over 2..W_s.
// ---------------------------------------------------------------------------

struct Fig1Row {
    int cwmin_tagged = 0;
    int station_id = 0;
    double mbps = 0.0;
    double airtime_share = 0.0;
};

inline std::vector<Fig1Row> run_fig1(const ExperimentSpec& spec, std::uint64_t seed,
                                     unsigned threads = 0) {
    WlanConfig base = spec.base;
    if (base.stations.empty()) {
        for (int i = 0; i < 3; ++i) {
            StationProfile s;
            s.id = i + 1;
            base.stations.push_back(s);
        }
    }
    const int sweep_lo = 2, sweep_hi = base.w_standard;
    std::vector<std::vector<Fig1Row>> rows(static_cast<std::size_t>(sweep_hi - sweep_lo + 1));
    parallel_for(
        rows.size(),
        [&](std::size_t idx) {
            const int w3 = sweep_lo + static_cast<int>(idx);
            WlanConfig cfg = base;
            for (auto& s : cfg.stations) s.cw_min = cfg.w_standard;
            cfg.stations.back().cw_min = w3;
            cfg.seed = sub_seed(seed, 0xF161u + static_cast<std::uint64_t>(w3));
            auto res = run(cfg);
            for (const auto& r : throughput(res.stats, cfg.duration_s))
                rows[idx].push_back({w3, r.station_id, r.mbps, r.airtime_share});
        },
        threads);
    std::vector<Fig1Row> out;
    for (const auto& group : rows) out.insert(out.end(), group.begin(), group.end());
    return out;
}

// ---------------------------------------------------------------------------
// CSV and metadata output. Formatting goes through snprintf so byte-identical
// reruns are guaranteed for identical inputs.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

inline void write_fig1_csv(const std::string& path, const std::vector<Fig1Row>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "cwmin_tagged,station,throughput_mbps,airtime_share\n";
    for (const auto& r : rows)
        os << r.cwmin_tagged << ',' << r.station_id << ',' << detail::fmt_double(r.mbps) << ','
           << detail::fmt_double(r.airtime_share) << '\n';
}

inline void write_cit_csv(const std::string& dir, const AccuracyReport& report,
                          const ExperimentSpec& spec) {
    std::set<int> ns;
    for (const auto& p : report.points) ns.insert(p.n);
    for (int n : ns) {
        std::ofstream os(dir + "/cit_accuracy_n" + std::to_string(n) + ".csv");
        if (!os) throw std::runtime_error("cannot open cit csv in " + dir);
        os << "n,delta,th_c,trials,collisions_per_trial,correct,total,accuracy_pct\n";
        for (const auto& p : report.points) {
            if (p.n != n) continue;
            os << p.n << ',' << detail::fmt_double(p.delta) << ',' << detail::fmt_double(p.th_c)
               << ',' << spec.trials << ',' << spec.collisions_per_trial << ',' << p.correct << ','
               << p.total << ',' << detail::fmt_double(p.accuracy_pct()) << '\n';
        }
    }
}

inline void write_cwe_csv(const std::string& path, const AccuracyReport& report) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "n,t_s,estimations,insufficient,correct,accuracy_pct\n";
    for (const auto& p : report.points)
        os << p.n << ',' << p.t_s << ',' << p.total << ',' << p.insufficient << ',' << p.correct
           << ',' << detail::fmt_double(p.accuracy_pct()) << '\n';
}

inline void write_run_meta(const std::string& dir, const std::string& verb,
                           const ExperimentSpec& spec, std::uint64_t seed, bool paper_scale) {
    std::ofstream os(dir + "/run-meta.txt");
    if (!os) throw std::runtime_error("cannot open run-meta.txt in " + dir);
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(spec.config_hash));
    os << "tool=cwest " << kVersion << "\n";
    os << "verb=" << verb << "\n";
    os << "config=" << std::filesystem::path(spec.config_name).filename().string() << "\n";
    os << "config_hash=" << hex << "\n";
    os << "seed=" << seed << "\n";
    os << "paper_scale=" << (paper_scale ? 1 : 0) << "\n";
}

}  // namespace cwest
