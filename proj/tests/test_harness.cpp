#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ddmodem/config.hpp"
#include "ddmodem/harness.hpp"

using ddmodem::Aggregate;
using ddmodem::Config;
using ddmodem::PointResult;
using ddmodem::Scenario;
using ddmodem::SweepOptions;
using ddmodem::TrialMetrics;
using ddmodem::Waveform;

#ifndef DDMODEM_SOURCE_ROOT
#define DDMODEM_SOURCE_ROOT "."
#endif

namespace {

std::string tdl_c_path() { return std::string(DDMODEM_SOURCE_ROOT) + "/data/tdl_c.txt"; }

bool same_metrics(const TrialMetrics& a, const TrialMetrics& b) {
    return a.ser == b.ser && a.ber == b.ber && a.evm == b.evm && a.est_nmse_db == b.est_nmse_db &&
           a.mean_post_sinr_db == b.mean_post_sinr_db && a.se_proxy == b.se_proxy;
}

Scenario mini_zak() {
    Scenario sc;
    sc.name = "mini";
    sc.waveform = Waveform::zak_over_cpofdm;
    sc.m = 12;
    sc.n = 4;
    sc.scs_hz = 15e3;
    sc.cp_samples = 6;
    sc.num_symbols = 14;
    sc.tdl_path = tdl_c_path();
    sc.delay_scale_s = 302e-9;
    sc.nu_max_hz = 800.0;
    sc.tau_max_s = 2.6e-6;
    sc.trials = 4;
    return sc;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(bool(f));
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Scratch directory per test, wiped on entry so reruns start clean.
std::string scratch_dir(const std::string& leaf) {
    const std::string d = (std::filesystem::temp_directory_path() / "ddmodem_tests" / leaf).string();
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

const char* kMiniConfig = R"(# two-waveform smoke configuration
[scenario]
name = "mini"
tdl_profile = "identity"
trials = 3
base_seed = 7
tsnr_db = [10, 20]

[waveform.cpofdm]
n = 12
cp_samples = 2
num_symbols = 2

[waveform.zak_over_cpofdm]
m = 4
n = 3
cp_samples = 2
num_symbols = 2
)";

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("config: values, lists and lookups") {
    const Config cfg = Config::parse_string(R"(
# comment
[scenario]
name = "demo run"   # trailing comment
trials = 40
flag = true
tsnr_db = [0, 7.5, 14]
labels = ["a", "b # not a comment"]

[waveform.cpofdm]
n = 48

[waveform.zak_over_cpofdm]
m = 12
)", "inline.cfg");

    CHECK(cfg.str("scenario.name") == "demo run");
    CHECK(cfg.num("scenario.trials") == 40.0);
    CHECK(cfg.flag_or("scenario.flag", false));
    CHECK(cfg.flag_or("scenario.missing", true));
    CHECK(cfg.num_or("scenario.missing", -2.5) == -2.5);
    CHECK(cfg.str_or("scenario.missing", "dflt") == "dflt");
    CHECK(cfg.num_list("scenario.tsnr_db") == std::vector<double>{0.0, 7.5, 14.0});
    CHECK(cfg.str_list("scenario.labels") ==
          std::vector<std::string>{"a", "b # not a comment"});
    CHECK(cfg.has("waveform.cpofdm.n"));
    CHECK_FALSE(cfg.has("waveform.cpofdm.m"));
    CHECK(cfg.sections_under("waveform") ==
          std::vector<std::string>{"cpofdm", "zak_over_cpofdm"});
    CHECK(cfg.sections_under("nothing").empty());
    CHECK(cfg.origin() == "inline.cfg");
}

TEST_CASE("config: error reporting names the line") {
    using doctest::Contains;
    CHECK_THROWS_WITH_AS(Config::parse_string("key_without_section = 1\n", "x.cfg"),
                         Contains("x.cfg:1"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("[s]\njust a bare line\n", "x.cfg"),
                         Contains("x.cfg:2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("[s]\na = 1\na = 2\n", "x.cfg"),
                         Contains("duplicate"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Config::parse_string("[s]\na = 12abc\n", "x.cfg"),
                         Contains("x.cfg:2"), std::runtime_error);

    const Config cfg = Config::parse_string("[s]\na = 1\nb = \"t\"\n");
    CHECK_THROWS_WITH_AS(cfg.num("s.missing"), Contains("s.missing"), std::runtime_error);
    CHECK_THROWS_WITH_AS(cfg.num("s.b"), Contains("s.b"), std::runtime_error);
    CHECK_THROWS_WITH_AS(cfg.str_list("s.a"), Contains("s.a"), std::runtime_error);
}

TEST_CASE("config: relative paths resolve against the file directory") {
    const std::string dir = scratch_dir("cfg_paths");
    {
        std::ofstream f(dir + "/c.cfg");
        f << "[scenario]\ntdl_profile = \"../data/tdl_c.txt\"\n";
    }
    const Config cfg = Config::parse_file(dir + "/c.cfg");
    CHECK(cfg.base_dir() == dir);
    CHECK(cfg.resolve_path("../data/tdl_c.txt") == dir + "/../data/tdl_c.txt");
    CHECK(cfg.resolve_path("/abs/path") == "/abs/path");

    const Config inl = Config::parse_string("[s]\na = 1\n");
    CHECK(inl.resolve_path("rel.txt") == "rel.txt");
}

TEST_CASE("config: fnv1a matches the published test vectors") {
    CHECK(ddmodem::fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(ddmodem::fnv1a("a") == 0xaf63dc4c8601ec8cull);
    CHECK(ddmodem::fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("scenario: validation names the offending field") {
    using doctest::Contains;
    Scenario sc = mini_zak();
    CHECK_NOTHROW(sc.validate());

    sc.trials = 0;
    CHECK_THROWS_WITH_AS(sc.validate(), Contains("trials"), std::invalid_argument);
    sc = mini_zak();
    sc.tsnr_db.clear();
    CHECK_THROWS_WITH_AS(sc.validate(), Contains("tsnr_db"), std::invalid_argument);
    sc = mini_zak();
    sc.waveform = Waveform::cpofdm;  // m stays 12
    CHECK_THROWS_WITH_AS(sc.validate(), Contains("m = 1"), std::invalid_argument);
    sc = mini_zak();
    sc.pilot_scheme = ddmodem::PilotScheme::comb;
    CHECK_THROWS_WITH_AS(sc.validate(), Contains("comb"), std::invalid_argument);
}

TEST_CASE("scenario: derived numerology and overhead identities") {
    // 48 x 1 strip layout: spread bins s = ceil(720 kHz * 2.6 us) = 2, so
    // 2s+3 = 7 of the 48 grid positions are pilot or guard.
    Scenario zak;
    zak.waveform = Waveform::zak_over_cpofdm;
    zak.m = 48;
    zak.n = 1;
    zak.scs_hz = 15e3;
    zak.cp_samples = 3;
    zak.tau_max_s = 2.6e-6;
    zak.nu_max_hz = 1.25e3;
    CHECK(zak.bandwidth_hz() == 720e3);
    CHECK(zak.t_frame_s() == doctest::Approx(1.0 / 15e3).epsilon(1e-15));
    CHECK(zak.doppler_period_hz() == doctest::Approx(15e3).epsilon(1e-15));
    CHECK(zak.crystallized());
    CHECK(zak.layout().overhead_fraction() == 7.0 / 48.0);
    CHECK(zak.eta_overhead() == doctest::Approx(41.0 / 51.0).epsilon(1e-12));

    // Plain multicarrier at the same numerology: the delay period is one
    // sample, far below the channel spread, so the scheme is not
    // crystallized even though its Doppler period is huge.
    Scenario plain = zak;
    plain.waveform = Waveform::cpofdm;
    plain.m = 1;
    plain.n = 48;
    CHECK(plain.doppler_period_hz() == doctest::Approx(720e3).epsilon(1e-12));
    CHECK_FALSE(plain.crystallized());
    // Doppler-direction strip: u = ceil(2 * 1.25 kHz / 15 kHz) = 1, 2u+3 = 5.
    CHECK(plain.layout().overhead_count() == 5);
    CHECK(plain.eta_overhead() == doctest::Approx(43.0 / 51.0).epsilon(1e-12));

    Scenario unc;
    unc.waveform = Waveform::zak_unconstrained;
    unc.u_m = 48;
    unc.u_n = 15;
    unc.b_hz = 720e3;
    unc.guard_samples = 4;
    unc.tau_max_s = 2.6e-6;
    unc.nu_max_hz = 1.25e3;
    CHECK(unc.t_frame_s() == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(unc.doppler_period_hz() == doctest::Approx(15e3).epsilon(1e-12));
    CHECK(unc.crystallized());
    CHECK(unc.layout().overhead_fraction() == 7.0 / 48.0);
    CHECK(unc.eta_overhead() == doctest::Approx(615.0 / 724.0).epsilon(1e-12));

    // 30 x 24 variant: s = ceil(720 kHz * 1.17 us) = 1, 5/30 = 8/48.
    Scenario unc3 = unc;
    unc3.u_m = 30;
    unc3.u_n = 24;
    unc3.tau_max_s = 1.17e-6;
    unc3.nu_max_hz = 6.48e3;
    CHECK(unc3.doppler_period_hz() == doctest::Approx(24e3).epsilon(1e-12));
    CHECK(unc3.crystallized());
    CHECK(unc3.layout().overhead_fraction() == 8.0 / 48.0);
}

TEST_CASE("run_trial: deterministic in (seed, index), noise level excluded") {
    const Scenario sc = mini_zak();
    const TrialMetrics a = ddmodem::run_trial(sc, 14.0, 2);
    const TrialMetrics b = ddmodem::run_trial(sc, 14.0, 2);
    CHECK(same_metrics(a, b));

    const TrialMetrics c = ddmodem::run_trial(sc, 14.0, 3);
    CHECK_FALSE(same_metrics(a, c));

    // A different noise level sees the same channel realization, so the
    // estimate-vs-probe comparison degrades smoothly rather than jumping to
    // an unrelated channel.
    const TrialMetrics d = ddmodem::run_trial(sc, 50.0, 2);
    CHECK(d.est_nmse_db < a.est_nmse_db + 1.0);
}

TEST_CASE("run_trial: noiseless identity channel is recovered exactly") {
    Scenario sc = mini_zak();
    sc.tdl_path = "identity";
    sc.delay_scale_s = 0.0;
    sc.nu_max_hz = 0.0;
    sc.tau_max_s = 2.6e-6;  // layout keeps its guard strip; channel is clean
    const double inf = std::numeric_limits<double>::infinity();

    const TrialMetrics zak = ddmodem::run_trial(sc, inf, 0);
    CHECK(zak.ser == 0.0);
    CHECK(zak.ber == 0.0);
    CHECK(zak.evm < 1e-7);
    CHECK(zak.est_nmse_db < -80.0);
    CHECK(zak.mean_post_sinr_db > 100.0);
    CHECK(zak.se_proxy > 0.0);

    Scenario plain = sc;
    plain.waveform = Waveform::cpofdm;
    plain.m = 1;
    plain.n = 48;
    plain.nu_max_hz = 1.25e3;
    const TrialMetrics po = ddmodem::run_trial(plain, inf, 0);
    CHECK(po.ser == 0.0);
    CHECK(po.est_nmse_db < -80.0);

    Scenario comb = plain;
    comb.pilot_scheme = ddmodem::PilotScheme::comb;
    comb.comb_spacing = 4;
    const TrialMetrics co = ddmodem::run_trial(comb, inf, 0);
    CHECK(co.ser == 0.0);
    CHECK(co.est_nmse_db < -80.0);

    Scenario unc;
    unc.name = "mini_unc";
    unc.waveform = Waveform::zak_unconstrained;
    unc.tdl_path = "identity";
    unc.u_m = 12;
    unc.u_n = 4;
    unc.b_hz = 720e3;
    unc.guard_samples = 2;
    unc.tau_max_s = 2.6e-6;
    unc.trials = 1;
    const TrialMetrics uo = ddmodem::run_trial(unc, inf, 0);
    CHECK(uo.ser == 0.0);
    CHECK(uo.evm < 1e-7);
    CHECK(uo.est_nmse_db < -80.0);
}

TEST_CASE("run_trial: errors shrink from 0 dB to 30 dB TSNR") {
    const Scenario sc = mini_zak();
    double evm0 = 0.0, evm30 = 0.0;
    for (int i = 0; i < 4; ++i) {
        evm0 += ddmodem::run_trial(sc, 0.0, i).evm;
        evm30 += ddmodem::run_trial(sc, 30.0, i).evm;
    }
    CHECK(evm30 < 0.5 * evm0);
}

TEST_CASE("aggregate: mean and standard error of the mean") {
    const Aggregate a = ddmodem::aggregate({1.0, 2.0, 3.0, 4.0});
    CHECK(a.count == 4);
    CHECK(a.mean == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(a.stderr_of_mean == doctest::Approx(std::sqrt(5.0 / 12.0)).epsilon(1e-12));

    const Aggregate one = ddmodem::aggregate({7.5});
    CHECK(one.count == 1);
    CHECK(one.mean == 7.5);
    CHECK(one.stderr_of_mean == 0.0);

    CHECK(ddmodem::aggregate({}).count == 0);
    CHECK(ddmodem::metric_values(TrialMetrics{}).size() == ddmodem::kMetricNames.size());
}

TEST_CASE("run_point: thread count does not change the result") {
    Scenario sc = mini_zak();
    sc.trials = 6;
    const PointResult a = ddmodem::run_point(sc, 14.0, 1);
    const PointResult b = ddmodem::run_point(sc, 14.0, 3);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (const auto& [name, agg] : a.metrics) {
        const Aggregate& other = b.metrics.at(name);
        CHECK(agg.mean == other.mean);
        CHECK(agg.stderr_of_mean == other.stderr_of_mean);
        CHECK(agg.count == other.count);
    }
    CHECK(a.m == 12);
    CHECK(a.n == 4);
    CHECK(a.trials == 6);
}

TEST_CASE("scenarios_from_config: defaults, overrides and mn_family") {
    const Config cfg = Config::parse_string(R"(
[scenario]
name = "cfgdemo"
tdl_profile = "identity"
nu_max_hz = 1250
tau_max_s = 2.6e-6
trials = 9
base_seed = 3
tsnr_db = [5, 15]

[waveform.cpofdm]
pilot_scheme = "comb"
comb_spacing = 4

[waveform.zak_over_cpofdm]
mn_family = ["48x1", "12x4"]
tsnr_db = 14

[waveform.zak_unconstrained]
m = 48
n = 15
guard_samples = 4
trials = 2
)");
    const std::vector<Scenario> scs = ddmodem::scenarios_from_config(cfg);
    REQUIRE(scs.size() == 4);

    CHECK(scs[0].waveform == Waveform::cpofdm);
    CHECK(scs[0].m == 1);
    CHECK(scs[0].n == 48);
    CHECK(scs[0].pilot_scheme == ddmodem::PilotScheme::comb);
    CHECK(scs[0].trials == 9);
    CHECK(scs[0].tsnr_db == std::vector<double>{5.0, 15.0});

    CHECK(scs[1].waveform == Waveform::zak_over_cpofdm);
    CHECK(scs[1].m == 48);
    CHECK(scs[1].n == 1);
    CHECK(scs[1].tsnr_db == std::vector<double>{14.0});
    CHECK(scs[2].m == 12);
    CHECK(scs[2].n == 4);

    CHECK(scs[3].waveform == Waveform::zak_unconstrained);
    CHECK(scs[3].u_m == 48);
    CHECK(scs[3].u_n == 15);
    CHECK(scs[3].trials == 2);
    CHECK(scs[3].base_seed == 3);

    using doctest::Contains;
    CHECK_THROWS_WITH_AS(
        ddmodem::scenarios_from_config(Config::parse_string("[scenario]\nname = \"x\"\n")),
        Contains("waveform"), std::runtime_error);
    CHECK_THROWS_WITH_AS(ddmodem::scenarios_from_config(Config::parse_string(
                             "[waveform.zak_over_cpofdm]\nmn_family = [\"4by2\"]\n")),
                         Contains("mn_family"), std::invalid_argument);
}

TEST_CASE("csv_text: canonical ordering and stable formatting") {
    PointResult a;
    a.scenario = "s";
    a.waveform = Waveform::zak_over_cpofdm;
    a.m = 48;
    a.n = 1;
    a.tsnr_db = 14.0;
    a.trials = 2;
    a.metrics["ser"] = {0.125, 0.0625, 2};
    PointResult b = a;
    b.waveform = Waveform::cpofdm;
    b.m = 1;
    b.n = 48;
    b.metrics["ser"] = {1.0 / 3.0, 0.0, 2};

    // cpofdm sorts before zak_over_cpofdm whatever the input order.
    const std::string csv = ddmodem::csv_text({a, b});
    std::istringstream lines(csv);
    std::string l0, l1, l2;
    std::getline(lines, l0);
    std::getline(lines, l1);
    std::getline(lines, l2);
    CHECK(l0 == "scenario,waveform,M,N,tsnr_db,metric,mean,stderr,trials");
    CHECK(l1 == "s,cpofdm,1,48,14,ser,0.3333333333,0,2");
    CHECK(l2 == "s,zak_over_cpofdm,48,1,14,ser,0.125,0.0625,2");
}

TEST_CASE("run_sweep: files, resume and thread invariance") {
    const Config cfg = Config::parse_string(kMiniConfig, "mini.cfg");

    SweepOptions o1;
    o1.out_dir = scratch_dir("sweep_a");
    std::ostringstream log1;
    const std::vector<PointResult> r1 = ddmodem::run_sweep(cfg, o1, log1);
    CHECK(r1.size() == 4);
    CHECK(std::filesystem::exists(o1.out_dir + "/results.csv"));
    CHECK(std::filesystem::exists(o1.out_dir + "/summary.json"));
    CHECK_FALSE(std::filesystem::exists(o1.out_dir + "/state.jsonl"));
    const std::string csv1 = slurp(o1.out_dir + "/results.csv");

    // Different thread count, fresh directory: identical bytes.
    SweepOptions o2;
    o2.out_dir = scratch_dir("sweep_b");
    o2.threads = 3;
    std::ostringstream log2;
    ddmodem::run_sweep(cfg, o2, log2);
    CHECK(slurp(o2.out_dir + "/results.csv") == csv1);
    CHECK(slurp(o2.out_dir + "/summary.json") == slurp(o1.out_dir + "/summary.json"));

    // Simulate an interrupted run: keep the state header plus the first two
    // completed points, then resume. The final files match byte for byte.
    SweepOptions o3;
    o3.out_dir = scratch_dir("sweep_c");
    o3.keep_state = true;
    std::ostringstream log3;
    ddmodem::run_sweep(cfg, o3, log3);
    const std::string state_path = o3.out_dir + "/state.jsonl";
    REQUIRE(std::filesystem::exists(state_path));
    {
        std::ifstream in(state_path);
        std::string line, kept;
        for (int i = 0; i < 3 && std::getline(in, line); ++i) kept += line + "\n";
        in.close();
        std::ofstream out(state_path, std::ios::trunc);
        out << kept;
    }
    std::filesystem::remove(o3.out_dir + "/results.csv");
    std::filesystem::remove(o3.out_dir + "/summary.json");
    SweepOptions o4 = o3;
    o4.resume = true;
    o4.keep_state = false;
    std::ostringstream log4;
    ddmodem::run_sweep(cfg, o4, log4);
    CHECK(log4.str().find("(from state)") != std::string::npos);
    CHECK(slurp(o3.out_dir + "/results.csv") == csv1);
    CHECK_FALSE(std::filesystem::exists(state_path));

    // A stale state file from some other configuration is rejected.
    SweepOptions o5;
    o5.out_dir = scratch_dir("sweep_d");
    o5.resume = true;
    std::filesystem::create_directories(o5.out_dir);
    {
        std::ofstream f(o5.out_dir + "/state.jsonl");
        f << "{\"state_version\":1,\"code_version\":\"other\"}\n";
    }
    std::ostringstream log5;
    CHECK_THROWS_AS(ddmodem::run_sweep(cfg, o5, log5), std::runtime_error);

    // Seed override changes results, and shows up in the summary manifest.
    SweepOptions o6;
    o6.out_dir = scratch_dir("sweep_e");
    o6.seed = 99;
    std::ostringstream log6;
    ddmodem::run_sweep(cfg, o6, log6);
    CHECK(slurp(o6.out_dir + "/results.csv") != csv1);
    CHECK(slurp(o6.out_dir + "/summary.json").find("\"seed\": 99") != std::string::npos);
}

TEST_SUITE_END();
