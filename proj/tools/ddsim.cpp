// Command-line front end for the delay-Doppler modem simulator.
//
//   ddsim run <config>      compute every configured point, print CSV rows
//   ddsim sweep <config>    full sweep with results.csv / summary.json output
//   ddsim probe <config>    channel realization and effective taps per scenario
//   ddsim selftest          quick built-in sanity checks
//
// Configuration files are structured text; see configs/ for worked examples.

#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ddmodem/dd_transforms.hpp"
#include "ddmodem/harness.hpp"

namespace {

using namespace ddmodem;

void apply_overrides(std::vector<Scenario>& scs, const std::optional<std::uint64_t>& seed,
                     const std::optional<int>& trials) {
    for (Scenario& sc : scs) {
        if (seed) sc.base_seed = *seed;
        if (trials) sc.trials = *trials;
        sc.validate();
    }
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<int>& trials, int threads) {
    const Config cfg = Config::parse_file(config_path);
    std::vector<Scenario> scs = scenarios_from_config(cfg);
    apply_overrides(scs, seed, trials);

    int total = 0;
    for (const Scenario& sc : scs) total += static_cast<int>(sc.tsnr_db.size());

    std::vector<PointResult> points;
    int idx = 0;
    for (const Scenario& sc : scs) {
        for (double tsnr : sc.tsnr_db) {
            ++idx;
            std::cerr << "[" << idx << "/" << total << "] " << sc.name << " "
                      << to_string(sc.waveform) << " " << sc.grid_m() << "x" << sc.grid_n()
                      << " @ " << tsnr << " dB, " << sc.trials << " trials..." << std::endl;
            points.push_back(run_point(sc, tsnr, threads));
        }
    }
    std::cout << csv_text(points);
    return 0;
}

int cmd_sweep(const std::string& config_path, const SweepOptions& opt) {
    const Config cfg = Config::parse_file(config_path);
    run_sweep(cfg, opt, std::cerr);
    std::cout << "wrote " << opt.out_dir << "/results.csv and " << opt.out_dir
              << "/summary.json\n";
    return 0;
}

int cmd_probe(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              int trial, double prune_db) {
    const Config cfg = Config::parse_file(config_path);
    std::vector<Scenario> scs = scenarios_from_config(cfg);
    apply_overrides(scs, seed, std::nullopt);

    for (const Scenario& sc : scs) {
        std::printf("scenario %s  %s  grid %dx%d  trial %d\n", sc.name.c_str(),
                    to_string(sc.waveform).c_str(), sc.grid_m(), sc.grid_n(), trial);
        std::printf("  bandwidth %.6g kHz, frame %.6g us, doppler period %.6g kHz, %s\n",
                    sc.bandwidth_hz() / 1e3, sc.t_frame_s() * 1e6, sc.doppler_period_hz() / 1e3,
                    sc.crystallized() ? "crystallized" : "NOT crystallized");
        std::printf("  data fraction eta = %.6f\n", sc.eta_overhead());

        const PathSet ps = trial_paths(sc, trial);
        std::printf("  %zu channel paths (power %.3f):\n", ps.paths.size(), ps.total_power());
        for (const ChannelPath& p : ps.paths)
            std::printf("    delay %9.1f ns   doppler %+9.2f Hz   gain %7.2f dB\n",
                        p.delay_s * 1e9, p.doppler_hz,
                        10.0 * std::log10(std::max(std::norm(p.gain), 1e-30)));

        const DDTapList taps = probe_dd_taps(sc, trial, prune_db);
        std::printf("  %zu effective taps above %.1f dB:\n", taps.size(), prune_db);
        for (const DDTap& t : taps)
            std::printf("    (k=%3d, l=%3d)   |g| %7.2f dB   phase %+7.2f rad\n", t.k, t.l,
                        10.0 * std::log10(std::max(std::norm(t.gain), 1e-30)),
                        std::arg(t.gain));
        std::printf("\n");
    }
    return 0;
}

// A handful of end-to-end invariants that exercise every module, for quick
// "is this build sane" checks in the field. The unit suites cover the same
// ground far more thoroughly.
int cmd_selftest() {
    int failures = 0;
    auto report = [&](const char* name, bool ok) {
        std::printf("selftest: %-46s %s\n", name, ok ? "PASS" : "FAIL");
        if (!ok) ++failures;
    };

    std::mt19937_64 rng(12345);
    std::normal_distribution<double> g(0.0, 1.0);
    auto random_frame = [&](int m, int n) {
        DDFrame f(m, n);
        for (cplx& v : f.data) v = cplx(g(rng), g(rng));
        return f;
    };
    auto rel_err = [](const DDFrame& a, const DDFrame& b) {
        double e = 0.0, r = 0.0;
        for (size_t i = 0; i < a.data.size(); ++i) {
            e += std::norm(a.data[i] - b.data[i]);
            r += std::norm(b.data[i]);
        }
        return std::sqrt(e / r);
    };

    {
        const DDFrame f = random_frame(12, 4);
        report("time-domain Zak round trip", rel_err(dzt(idzt(f), 12, 4), f) < 1e-12);
        report("frequency-domain Zak round trip", rel_err(dfzt(idfzt(f), 12, 4), f) < 1e-12);
    }
    {
        ZakConfig zc;
        zc.m = 12;
        zc.n = 4;
        zc.ofdm.k = 48;
        zc.ofdm.cp_samples = 6;
        const DDFrame f = random_frame(12, 4);
        const DDFrame back = zak_ofdm_rx(zak_ofdm_tx(f, zc), zc);
        report("precoded multicarrier round trip", rel_err(back, f) < 1e-12);
    }
    {
        Scenario sc;
        sc.name = "selftest";
        sc.waveform = Waveform::zak_over_cpofdm;
        sc.m = 48;
        sc.n = 1;
        sc.tau_max_s = 2.6e-6;
        sc.tdl_path = "identity";
        const TrialMetrics t = run_trial(sc, std::numeric_limits<double>::infinity(), 0);
        report("noiseless identity-channel trial", t.ser == 0.0 && t.est_nmse_db < -80.0);
        report("48x1 pilot overhead is 7/48",
               sc.layout().overhead_fraction() == 7.0 / 48.0);
    }
    {
        Scenario sc;
        sc.name = "selftest_unc";
        sc.waveform = Waveform::zak_unconstrained;
        sc.u_m = 12;
        sc.u_n = 4;
        sc.b_hz = 720e3;
        sc.tau_max_s = 2.6e-6;
        sc.tdl_path = "identity";
        const TrialMetrics t = run_trial(sc, std::numeric_limits<double>::infinity(), 0);
        report("noiseless unconstrained trial", t.ser == 0.0 && t.est_nmse_db < -80.0);
    }
    std::printf("selftest: %s\n", failures == 0 ? "all checks passed" : "FAILURES present");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delay-Doppler modem link-level simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    int threads = 1;
    int trial = 0;
    double prune_db = -60.0;
    bool resume = false, keep_state = false;
    unsigned long long seed_v = 0;
    int trials_v = 0;

    CLI::App* run = app.add_subcommand("run", "compute each configured point, print CSV rows");
    run->add_option("config", config_path, "configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    CLI::Option* run_seed = run->add_option("--seed", seed_v, "override the base seed");
    CLI::Option* run_trials =
        run->add_option("--trials", trials_v, "override the trial count")->check(CLI::PositiveNumber);
    run->add_option("--threads", threads, "worker threads per point")->check(CLI::PositiveNumber);

    CLI::App* sweep =
        app.add_subcommand("sweep", "full sweep writing results.csv and summary.json");
    sweep->add_option("config", config_path, "configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    CLI::Option* sweep_seed = sweep->add_option("--seed", seed_v, "override the base seed");
    CLI::Option* sweep_trials =
        sweep->add_option("--trials", trials_v, "override the trial count")
            ->check(CLI::PositiveNumber);
    sweep->add_option("--threads", threads, "worker threads per point")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--out-dir", out_dir, "output directory (default results)");
    sweep->add_flag("--resume", resume, "reuse completed points from state.jsonl");
    sweep->add_flag("--keep-state", keep_state, "keep state.jsonl after a clean finish");

    CLI::App* probe =
        app.add_subcommand("probe", "print channel paths and effective taps per scenario");
    probe->add_option("config", config_path, "configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    CLI::Option* probe_seed = probe->add_option("--seed", seed_v, "override the base seed");
    probe->add_option("--trial", trial, "trial index whose channel draw to show");
    probe->add_option("--prune-db", prune_db, "tap pruning threshold in dB");

    CLI::App* selftest = app.add_subcommand("selftest", "quick built-in sanity checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path,
                           *run_seed ? std::optional<std::uint64_t>(seed_v) : std::nullopt,
                           *run_trials ? std::optional<int>(trials_v) : std::nullopt, threads);
        }
        if (sweep->parsed()) {
            SweepOptions opt;
            opt.out_dir = out_dir;
            opt.threads = threads;
            opt.resume = resume;
            opt.keep_state = keep_state;
            if (*sweep_seed) opt.seed = seed_v;
            if (*sweep_trials) opt.trials = trials_v;
            return cmd_sweep(config_path, opt);
        }
        if (probe->parsed()) {
            return cmd_probe(config_path,
                             *probe_seed ? std::optional<std::uint64_t>(seed_v) : std::nullopt,
                             trial, prune_db);
        }
        if (selftest->parsed()) return cmd_selftest();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
