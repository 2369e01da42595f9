// Batch experiment driver: reproduces the throughput unfairness sweep, the
// collision-identification accuracy curves and the CWmin-estimation accuracy
// curves, and exports the model tables and the preamble asset.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cwest/experiments.hpp"
#include "cwest/markov.hpp"
#include "cwest/preamble.hpp"
#include "cwest/signal.hpp"
#include "cwest/version.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
    bool paper_scale = false;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_config = true) {
    if (needs_config)
        cmd->add_option("--config", o.config, "experiment config file")->required();
    cmd->add_option("--out", o.out, "output directory")->required();
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_flag("--paper-scale", o.paper_scale, "full trial counts instead of desk scale");
    cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
}

cwest::ExperimentSpec load(const CommonOpts& o, cwest::ExperimentKind expected) {
    auto spec = cwest::parse_config(o.config);
    if (expected != cwest::ExperimentKind::none && spec.kind != expected)
        throw cwest::config_error(o.config + ": config kind does not match this subcommand");
    if (o.paper_scale) spec.apply_paper_scale();
    std::filesystem::create_directories(o.out);
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("cwest ") + cwest::kVersion +
                 " - contention-window estimation laboratory"};
    app.require_subcommand(1);

    CommonOpts fig1_o, cit_o, cwe_o, nom_o, pre_o;

    auto* fig1 = app.add_subcommand("fig1", "per-station throughput vs the tagged CWmin");
    add_common(fig1, fig1_o);

    auto* cit = app.add_subcommand("cit-sweep", "collision identification accuracy sweep");
    add_common(cit, cit_o);

    auto* cwe = app.add_subcommand("cwe-accuracy", "CWmin estimation accuracy vs monitoring period");
    add_common(cwe, cwe_o);

    auto* nom = app.add_subcommand("nominal-dump", "export the nominal backoff PMF table");
    add_common(nom, nom_o);

    auto* pre = app.add_subcommand("preamble-dump", "write the preamble binary asset and checksum");
    add_common(pre, pre_o, /*needs_config=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (fig1->parsed()) {
            auto spec = load(fig1_o, cwest::ExperimentKind::fig1_throughput);
            const auto rows = cwest::run_fig1(spec, fig1_o.seed, fig1_o.threads);
            cwest::write_fig1_csv(fig1_o.out + "/fig1_throughput.csv", rows);
            cwest::write_run_meta(fig1_o.out, "fig1", spec, fig1_o.seed, fig1_o.paper_scale);
            std::cout << "fig1: " << rows.size() << " rows -> " << fig1_o.out << "\n";
        } else if (cit->parsed()) {
            auto spec = load(cit_o, cwest::ExperimentKind::cit_accuracy_sweep);
            const auto report = cwest::run_cit_accuracy(spec, cit_o.seed, cit_o.threads);
            cwest::write_cit_csv(cit_o.out, report, spec);
            cwest::write_run_meta(cit_o.out, "cit-sweep", spec, cit_o.seed, cit_o.paper_scale);
            std::cout << "cit-sweep: " << report.points.size() << " sweep points -> " << cit_o.out
                      << "\n";
        } else if (cwe->parsed()) {
            auto spec = load(cwe_o, cwest::ExperimentKind::cwe_accuracy_vs_t);
            const auto report = cwest::run_cwe_accuracy(spec, cwe_o.seed, cwe_o.threads);
            const char* mode = spec.base.id_mode == cwest::CollisionIdMode::ideal ? "ideal"
                               : spec.base.id_mode == cwest::CollisionIdMode::cit_empirical
                                   ? "cit"
                                   : "cit_full";
            cwest::write_cwe_csv(cwe_o.out + "/cwe_accuracy_" + mode + ".csv", report);
            cwest::write_run_meta(cwe_o.out, "cwe-accuracy", spec, cwe_o.seed, cwe_o.paper_scale);
            std::cout << "cwe-accuracy: " << report.points.size() << " points -> " << cwe_o.out
                      << "\n";
        } else if (nom->parsed()) {
            auto spec = load(nom_o, cwest::ExperimentKind::none);
            if (spec.base.stations.empty())
                throw cwest::config_error(nom_o.config + ": n_stations (or stations) required");
            const auto set = cwest::build_nominal_set(static_cast<int>(spec.base.stations.size()),
                                                      spec.base.w_standard, spec.base.max_retx,
                                                      spec.base.cw_cap);
            std::ofstream os(nom_o.out + "/nominal_set.tsv");
            if (!os) throw std::runtime_error("cannot open nominal_set.tsv");
            cwest::write_nominal_table(os, set);
            cwest::write_run_meta(nom_o.out, "nominal-dump", spec, nom_o.seed, nom_o.paper_scale);
            std::cout << "nominal-dump: " << set.pmfs.size() << " PMFs -> " << nom_o.out << "\n";
        } else if (pre->parsed()) {
            std::filesystem::create_directories(pre_o.out);
            const auto tmpl = cwest::generate_preamble_template();
            const std::string bin = pre_o.out + "/preamble_20msps.bin";
            cwest::write_iq_raw(bin, tmpl.samples);
            cwest::write_checksum_file(pre_o.out + "/preamble_20msps.checksum",
                                       cwest::iq_checksum(tmpl.samples));
            std::cout << "preamble-dump: 320 samples -> " << bin << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
