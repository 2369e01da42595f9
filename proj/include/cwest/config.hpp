#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cwest/common.hpp"
#include "cwest/wlan.hpp"

namespace cwest {

enum class ExperimentKind { none, fig1_throughput, cit_accuracy_sweep, cwe_accuracy_vs_t };

/// Everything a batch run needs: the WLAN template plus sweep lists. Desk
/// scale trial counts are the defaults; --paper-scale swaps in the full
/// counts (100x1000 CIT trials, 93/70/51 CWE setups).
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::none;
    WlanConfig base;

    int trials = 20;
    int collisions_per_trial = 200;
    std::vector<double> thc_list{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> delta_list{0.0, 10.0};
    std::vector<int> n_list{3, 6, 9};
    std::vector<int> t_list{5, 15, 30, 60};
    std::vector<int> setups_list{30, 25, 20};  // aligned with n_list
    double snr_db = 10.0;
    double th_c = 0.5;
    int zeta = 180;
    int body_len = 2000;

    std::uint64_t config_hash = 0;
    std::string config_name;

    void apply_paper_scale() {
        trials = 100;
        collisions_per_trial = 1000;
        setups_list = {93, 70, 51};
    }
};

namespace detail {

struct ConfigLine {
    std::string key, value;
    int number = 0;
};

[[noreturn]] inline void fail(const std::string& path, int line, const std::string& msg) {
    throw config_error(path + ":" + std::to_string(line) + ": " + msg);
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& path, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) fail(path, line, "malformed number '" + v + "'");
        return d;
    } catch (const config_error&) {
        throw;
    } catch (...) {
        fail(path, line, "malformed number '" + v + "'");
    }
}

inline long long parse_int(const std::string& path, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) fail(path, line, "malformed integer '" + v + "'");
        return d;
    } catch (const config_error&) {
        throw;
    } catch (...) {
        fail(path, line, "malformed integer '" + v + "'");
    }
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& path, int line, const std::string& v, F item) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) fail(path, line, "empty list element");
        out.push_back(item(path, line, tok));
    }
    if (out.empty()) fail(path, line, "empty list");
    return out;
}

}  // namespace detail

/// Strict line-oriented parser: `key = value` pairs, `#` comments,
/// `[station.k]` sections. Unknown keys and malformed values are rejected
/// with the offending line number.
inline ExperimentSpec parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error(path + ": cannot open config file");
    std::stringstream whole;
    whole << is.rdbuf();
    const std::string text = whole.str();

    ExperimentSpec spec;
    spec.config_hash = fnv1a64(text);
    spec.config_name = path;

    StationProfile* cur_station = nullptr;
    std::istringstream lines(text);
    std::string raw;
    int lineno = 0;
    bool explicit_n = false;
    long long n_stations = 0;

    while (std::getline(lines, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') detail::fail(path, lineno, "unterminated section header");
            const std::string name = line.substr(1, line.size() - 2);
            if (name.rfind("station.", 0) != 0)
                detail::fail(path, lineno, "unknown section [" + name + "]");
            const int id = static_cast<int>(detail::parse_int(path, lineno, name.substr(8)));
            for (const auto& s : spec.base.stations)
                if (s.id == id) detail::fail(path, lineno, "duplicate station id " + std::to_string(id));
            StationProfile s;
            s.id = id;
            s.cw_min = 0;  // filled with w_standard after parsing unless set
            spec.base.stations.push_back(s);
            cur_station = &spec.base.stations.back();
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) detail::fail(path, lineno, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) detail::fail(path, lineno, "expected key = value");

        if (cur_station) {
            auto& s = *cur_station;
            if (key == "cw_min") s.cw_min = static_cast<int>(detail::parse_int(path, lineno, val));
            else if (key == "sensing") {
                if (val == "all") s.sensing.clear();
                else
                    s.sensing = detail::parse_list<int>(path, lineno, val,
                                                        [](const std::string& p, int l, const std::string& v) {
                                                            return static_cast<int>(detail::parse_int(p, l, v));
                                                        });
            } else if (key == "traffic") {
                if (val == "saturated") s.traffic = {TrafficKind::saturated, 0.0};
                else if (val.rfind("poisson:", 0) == 0)
                    s.traffic = {TrafficKind::poisson,
                                 detail::parse_double(path, lineno, val.substr(8))};
                else detail::fail(path, lineno, "traffic must be 'saturated' or 'poisson:<rate>'");
            } else if (key == "fo_hz") s.fo_hz = detail::parse_double(path, lineno, val);
            else if (key == "phase_rad") s.phase_rad = detail::parse_double(path, lineno, val);
            else if (key == "gain") s.gain = detail::parse_double(path, lineno, val);
            else detail::fail(path, lineno, "unknown station key '" + key + "'");
            continue;
        }

        auto& b = spec.base;
        if (key == "kind") {
            if (val == "fig1_throughput") spec.kind = ExperimentKind::fig1_throughput;
            else if (val == "cit_accuracy_sweep") spec.kind = ExperimentKind::cit_accuracy_sweep;
            else if (val == "cwe_accuracy_vs_T") spec.kind = ExperimentKind::cwe_accuracy_vs_t;
            else detail::fail(path, lineno, "unknown experiment kind '" + val + "'");
        } else if (key == "n_stations") {
            n_stations = detail::parse_int(path, lineno, val);
            explicit_n = true;
            if (n_stations < 1) detail::fail(path, lineno, "n_stations must be positive");
        } else if (key == "w_standard") b.w_standard = static_cast<int>(detail::parse_int(path, lineno, val));
        else if (key == "max_retx") b.max_retx = static_cast<int>(detail::parse_int(path, lineno, val));
        else if (key == "cw_cap") b.cw_cap = static_cast<int>(detail::parse_int(path, lineno, val));
        else if (key == "slot_us") b.slot_us = detail::parse_int(path, lineno, val);
        else if (key == "difs_us") b.difs_us = detail::parse_int(path, lineno, val);
        else if (key == "sifs_us") b.sifs_us = detail::parse_int(path, lineno, val);
        else if (key == "ack_us") b.ack_us = detail::parse_int(path, lineno, val);
        else if (key == "payload_bytes") b.payload_bytes = detail::parse_int(path, lineno, val);
        else if (key == "phy_rate_mbps") b.phy_rate_mbps = detail::parse_double(path, lineno, val);
        else if (key == "duration_s") {
            b.duration_s = detail::parse_double(path, lineno, val);
            if (b.duration_s <= 0) detail::fail(path, lineno, "duration_s must be positive");
        } else if (key == "tie_policy") {
            if (val == "collide") b.tie_policy = TiePolicy::collide;
            else if (val == "capture") b.tie_policy = TiePolicy::capture;
            else detail::fail(path, lineno, "tie_policy must be 'collide' or 'capture'");
        } else if (key == "collision_id_mode") {
            if (val == "ideal") b.id_mode = CollisionIdMode::ideal;
            else if (val == "cit_empirical") b.id_mode = CollisionIdMode::cit_empirical;
            else if (val == "cit_full") b.id_mode = CollisionIdMode::cit_full;
            else detail::fail(path, lineno, "unknown collision_id_mode '" + val + "'");
        } else if (key == "cit_acc") {
            // n:accuracy pairs, e.g. 3:0.96,6:0.94,9:0.88
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos) detail::fail(path, lineno, "cit_acc wants n:value pairs");
                const int n = static_cast<int>(detail::parse_int(path, lineno, detail::trim(tok.substr(0, colon))));
                b.cit_accuracy[n] = detail::parse_double(path, lineno, detail::trim(tok.substr(colon + 1)));
            }
        } else if (key == "snr_db") spec.snr_db = detail::parse_double(path, lineno, val);
        else if (key == "th_c") {
            spec.th_c = detail::parse_double(path, lineno, val);
            b.cit_th_c = spec.th_c;
        } else if (key == "zeta") {
            spec.zeta = static_cast<int>(detail::parse_int(path, lineno, val));
            b.cit_zeta = spec.zeta;
            if (spec.zeta < 1) detail::fail(path, lineno, "zeta must be >= 1");
        } else if (key == "body_len") spec.body_len = static_cast<int>(detail::parse_int(path, lineno, val));
        else if (key == "trials") {
            spec.trials = static_cast<int>(detail::parse_int(path, lineno, val));
            if (spec.trials < 1) detail::fail(path, lineno, "trials must be >= 1");
        } else if (key == "collisions_per_trial") {
            spec.collisions_per_trial = static_cast<int>(detail::parse_int(path, lineno, val));
            if (spec.collisions_per_trial < 1) detail::fail(path, lineno, "collisions_per_trial must be >= 1");
        } else if (key == "thc_list") {
            spec.thc_list = detail::parse_list<double>(path, lineno, val, detail::parse_double);
        } else if (key == "delta_list") {
            spec.delta_list = detail::parse_list<double>(path, lineno, val, detail::parse_double);
        } else if (key == "n_list") {
            spec.n_list = detail::parse_list<int>(path, lineno, val,
                                                  [](const std::string& p, int l, const std::string& v) {
                                                      return static_cast<int>(detail::parse_int(p, l, v));
                                                  });
        } else if (key == "t_list") {
            spec.t_list = detail::parse_list<int>(path, lineno, val,
                                                  [](const std::string& p, int l, const std::string& v) {
                                                      const int t = static_cast<int>(detail::parse_int(p, l, v));
                                                      if (t <= 0) detail::fail(p, l, "monitoring period must be positive");
                                                      return t;
                                                  });
        } else if (key == "setups_list") {
            spec.setups_list = detail::parse_list<int>(path, lineno, val,
                                                       [](const std::string& p, int l, const std::string& v) {
                                                           return static_cast<int>(detail::parse_int(p, l, v));
                                                       });
        } else {
            detail::fail(path, lineno, "unknown key '" + key + "'");
        }
    }

    if (explicit_n && !spec.base.stations.empty() &&
        n_stations != static_cast<long long>(spec.base.stations.size()))
        throw config_error(path + ": n_stations disagrees with the [station.*] sections");
    if (explicit_n && spec.base.stations.empty()) {
        for (int i = 0; i < n_stations; ++i) {
            StationProfile s;
            s.id = i + 1;
            s.cw_min = spec.base.w_standard;
            spec.base.stations.push_back(s);
        }
    }
    for (auto& s : spec.base.stations)
        if (s.cw_min == 0) s.cw_min = spec.base.w_standard;
    if (!spec.base.stations.empty()) spec.base.validate();
    return spec;
}

}  // namespace cwest
