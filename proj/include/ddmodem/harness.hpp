#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddmodem/channel.hpp"
#include "ddmodem/config.hpp"
#include "ddmodem/esteq.hpp"
#include "ddmodem/zak_modem.hpp"

namespace ddmodem {

inline constexpr const char* kCodeVersion = "ddmodem 1.0.0";

enum class Waveform { cpofdm, zak_over_cpofdm, zak_unconstrained };
enum class PilotScheme { dd, comb };

std::string to_string(Waveform w);
Waveform waveform_from_string(const std::string& s);
Constellation constellation_from_string(const std::string& s);

// One Monte-Carlo configuration point family: a physical channel setup plus
// the numerology of one waveform. cpofdm is the m = 1 member of the
// multicarrier family and shares its machinery.
struct Scenario {
    std::string name = "unnamed";
    double carrier_hz = 0.0;  // provenance only; Doppler is given directly
    std::string tdl_path;     // empty or "identity" selects a flat unit path
    double delay_scale_s = 0.0;
    double nu_max_hz = 0.0;
    double tau_max_s = 0.0;

    Waveform waveform = Waveform::zak_over_cpofdm;

    // multicarrier numerology (cpofdm and zak_over_cpofdm)
    int m = 48, n = 1;        // delay x Doppler bins per packet, m*n subcarriers
    double scs_hz = 15e3;
    int cp_samples = 3;
    int num_symbols = 14;     // packets per subframe

    // single-packet numerology (zak_unconstrained)
    int u_m = 48, u_n = 15;
    double b_hz = 720e3;
    int guard_samples = 4;
    int oversample = 1;
    FilterSpec filter;

    Constellation constellation = Constellation::qpsk;
    int trials = 500;
    std::uint64_t base_seed = 1;
    std::vector<double> tsnr_db = {14.0};
    PilotScheme pilot_scheme = PilotScheme::dd;
    int comb_spacing = 4;

    void validate() const;  // field-named configuration errors

    int grid_m() const { return waveform == Waveform::zak_unconstrained ? u_m : m; }
    int grid_n() const { return waveform == Waveform::zak_unconstrained ? u_n : n; }
    double bandwidth_hz() const;
    double t_frame_s() const;          // one packet body
    double doppler_period_hz() const;  // n / T
    bool crystallized() const;         // 2 nu_max within the Doppler period
    FrameLayout layout() const;        // point-pilot layouts (not the comb scheme)
    double eta_overhead() const;       // data fraction of the time-bandwidth product
};

struct TrialMetrics {
    double ser = 0.0;
    double ber = 0.0;
    double evm = 0.0;
    double est_nmse_db = 0.0;
    double mean_post_sinr_db = 0.0;
    double se_proxy = 0.0;
};

// One end-to-end trial: channel draw, framing, tx, channel, noise, rx,
// estimation, equalization, scoring. Deterministic in (base_seed,
// trial_index); the noise level does not enter the seed, so a TSNR sweep
// sees common channel realizations.
TrialMetrics run_trial(const Scenario& sc, double tsnr_db, int trial_index);

// The channel realization a given trial would draw.
PathSet trial_paths(const Scenario& sc, int trial_index);

// Noiseless effective delay-Doppler taps of the scenario's full chain
// (packet slot 0) for the channel realization of the given trial.
DDTapList probe_dd_taps(const Scenario& sc, int trial_index, double prune_db = -60.0);

struct Aggregate {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
    int count = 0;
};
Aggregate aggregate(const std::vector<double>& xs);

extern const std::vector<std::string> kMetricNames;
std::vector<double> metric_values(const TrialMetrics& t);  // kMetricNames order

struct PointResult {
    std::string scenario;
    Waveform waveform = Waveform::cpofdm;
    int m = 0, n = 0;
    double tsnr_db = 0.0;
    int trials = 0;
    std::map<std::string, Aggregate> metrics;
};

// Runs every trial of one (scenario, tsnr) point on a small worker pool.
// Trials write to per-index slots and the reduction runs after the join, so
// the thread count cannot change the result.
PointResult run_point(const Scenario& sc, double tsnr_db, int threads);

// Scenario list from a parsed config: the [scenario] table gives the channel
// and common fields, each [waveform.*] table contributes one scenario (or
// one per entry of its mn_family list).
std::vector<Scenario> scenarios_from_config(const Config& cfg);

struct SweepOptions {
    std::string out_dir = "results";
    int threads = 1;
    bool resume = false;
    bool keep_state = false;  // leave state.jsonl behind after a clean finish
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
};

// Cartesian sweep over scenarios x their TSNR lists. Emits results.csv (one
// row per point per metric) and summary.json into out_dir; with resume,
// completed points are loaded from state.jsonl and skipped, and the final
// files are byte-identical to an uninterrupted run.
std::vector<PointResult> run_sweep(const Config& cfg, const SweepOptions& opt, std::ostream& log);

std::string csv_text(const std::vector<PointResult>& points);
std::string summary_json_text(const Config& cfg, const SweepOptions& opt,
                              const std::vector<PointResult>& points);

}  // namespace ddmodem
