#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include "cwest/common.hpp"
#include "cwest/divergence.hpp"
#include "cwest/markov.hpp"
#include "cwest/pmf.hpp"

namespace cwest {

/// One recovered backoff value. `valid` is false when range gating or the
/// Queue-Size rule discarded the observation.
struct BackoffSample {
    int station_id = 0;
    long long value = 0;  // slots
    bool valid = true;
};

struct EstimateReport {
    int station_id = 0;
    int w_hat = 0;
    std::map<int, double> divergences;  // l -> J(H, P_l)
    std::size_t sample_count = 0;       // valid samples used
    bool aggressor = false;
    bool tie_broken_low = false;        // argmin tie resolved toward smaller l
};

/// Verdicts need at least this many valid samples (the monitoring window has
/// to be long enough to say anything).
inline constexpr std::size_t kMinSamplesForVerdict = 30;

/// Empirical PMF of the valid samples, Eq.-style relative frequencies.
inline Pmf empirical_pmf(const std::vector<BackoffSample>& samples, std::size_t support_len) {
    std::vector<double> counts(support_len, 0.0);
    std::size_t n = 0;
    for (const auto& s : samples) {
        if (!s.valid) continue;
        if (s.value < 0 || static_cast<std::size_t>(s.value) >= support_len)
            throw std::invalid_argument("empirical_pmf: valid sample outside support");
        counts[static_cast<std::size_t>(s.value)] += 1.0;
        ++n;
    }
    if (n == 0) throw insufficient_data_error("empirical_pmf: no valid samples");
    return Pmf::from_counts(counts, support_len);
}

/// argmin_l J(h, P_l) over the nominal family. Ties break toward the smaller
/// l (the conservative direction: a tie flags aggression).
inline EstimateReport estimate_cwmin(const Pmf& h, const NominalSet& set) {
    if (set.pmfs.empty()) throw std::invalid_argument("estimate_cwmin: empty nominal set");
    if (h.support_len() != set.support_len)
        throw std::invalid_argument("estimate_cwmin: support mismatch with nominal set");
    EstimateReport rep;
    double best = 0.0;
    bool first = true;
    for (int l = set.min_l(); l <= set.max_l(); ++l) {
        const double j = js_divergence(h, set.at(l));
        rep.divergences[l] = j;
        if (first || j < best) {
            best = j;
            rep.w_hat = l;
            first = false;
        } else if (j == best) {
            rep.tie_broken_low = true;  // earlier (smaller) l kept
        }
    }
    rep.aggressor = rep.w_hat < set.w_standard;
    return rep;
}

inline bool classify(const EstimateReport& rep, int w_standard) {
    return rep.w_hat < w_standard;
}

/// Full per-station path: gate on sample count, build the empirical PMF,
/// run the argmin. Throws insufficient_data_error below the D7 floor.
inline EstimateReport estimate_station(int station_id,
                                       const std::vector<BackoffSample>& samples,
                                       const NominalSet& set,
                                       std::size_t min_samples = kMinSamplesForVerdict) {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.valid ? 1 : 0;
    if (n < min_samples)
        throw insufficient_data_error("estimate_station: " + std::to_string(n) +
                                      " valid samples, need " + std::to_string(min_samples));
    EstimateReport rep = estimate_cwmin(empirical_pmf(samples, set.support_len), set);
    rep.station_id = station_id;
    rep.sample_count = n;
    return rep;
}

/// Tab-separated report rows: station, samples, w_hat, aggressor, J at w_hat.
inline void write_report_row(std::ostream& os, const EstimateReport& rep) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", rep.divergences.at(rep.w_hat));
    os << rep.station_id << '\t' << rep.sample_count << '\t' << rep.w_hat << '\t'
       << (rep.aggressor ? 1 : 0) << '\t' << buf << '\n';
}

}  // namespace cwest
