#include "ddmodem/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

namespace ddmodem {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double db10(double ratio) {
    if (!(ratio > 0.0)) return -300.0;
    return std::clamp(10.0 * std::log10(ratio), -300.0, 300.0);
}

// TDL profiles are tiny and immutable; cache them so a 500-trial point does
// not re-read the file per trial. Map nodes are reference-stable.
const TdlProfile& cached_profile(const std::string& path) {
    static std::mutex mu;
    static std::map<std::string, TdlProfile> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(path);
    if (it == cache.end()) it = cache.emplace(path, TdlProfile::load(path)).first;
    return it->second;
}

PathSet draw_paths(const Scenario& sc, std::mt19937_64& rng) {
    if (sc.tdl_path.empty() || sc.tdl_path == "identity") {
        PathSet ps;
        ps.paths.push_back({cplx(1.0, 0.0), 0.0, 0.0});
        return ps;
    }
    return draw_tdl_realization(cached_profile(sc.tdl_path), sc.delay_scale_s, sc.nu_max_hz, rng);
}

double mean_power(const TimeSamples& x) {
    double e = 0.0;
    for (const cplx& v : x.data) e += std::norm(v);
    return x.data.empty() ? 0.0 : e / static_cast<double>(x.data.size());
}

// NMSE between two sparse tap sets over the union of their supports.
double tap_set_nmse_db(const DDTapList& got, const DDTapList& want) {
    std::map<std::pair<int, int>, cplx> u;
    double ref = 0.0;
    for (const DDTap& t : want) {
        u[{t.k, t.l}] += t.gain;
        ref += std::norm(t.gain);
    }
    for (const DDTap& t : got) u[{t.k, t.l}] -= t.gain;
    double err = 0.0;
    for (const auto& [kl, d] : u) err += std::norm(d);
    if (ref <= 0.0) return err <= 0.0 ? -300.0 : 300.0;
    return db10(err / ref);
}

// Accumulates hard-decision and soft-error statistics across the packets of
// one trial, then folds them into the shared metrics.
struct TrialScore {
    Constellation c;
    int bits;
    long syms = 0, sym_err = 0, bit_err = 0;
    double err_energy = 0.0, ref_energy = 0.0;
    std::vector<double> pos_err;  // per grid position, data positions only used
    int packets = 0;

    explicit TrialScore(Constellation cc, int grid_size)
        : c(cc), bits(constellation_bits(cc)), pos_err(grid_size, 0.0) {}

    void add_packet(const DDFrame& soft, const DDFrame& truth,
                    const std::vector<unsigned char>& mask) {
        ++packets;
        for (int q = 0; q < soft.size(); ++q) {
            if (!mask[q]) continue;
            const cplx s = soft.data[q], t = truth.data[q];
            const double e = std::norm(s - t);
            pos_err[q] += e;
            err_energy += e;
            ref_energy += std::norm(t);
            ++syms;
            const int got = hard_decision(c, s), sent = hard_decision(c, t);
            if (got != sent) ++sym_err;
            bit_err += std::popcount(static_cast<unsigned>(got ^ sent));
        }
    }

    // Spectral-efficiency proxy at unit symbol energy: eta * log2(1 + SINR)
    // with SINR taken from the measured post-equalization error. With enough
    // packets the error is resolved per grid position (positions near the
    // pilot see more estimation leakage than far ones); a single packet only
    // supports the aggregate form. The error floor keeps the noiseless limit
    // at a finite cap instead of the log of a rounding residue.
    double se_proxy(double eta, const std::vector<unsigned char>& mask) const {
        constexpr double kFloor = 1e-12;
        if (syms == 0) return 0.0;
        if (packets >= 8) {
            double acc = 0.0;
            int npos = 0;
            for (size_t q = 0; q < pos_err.size(); ++q) {
                if (!mask[q]) continue;
                const double mse = pos_err[q] / packets;
                acc += std::log2(1.0 + 1.0 / std::max(mse, kFloor));
                ++npos;
            }
            return eta * acc / npos;
        }
        const double mse = err_energy / static_cast<double>(syms);
        return eta * std::log2(1.0 + 1.0 / std::max(mse, kFloor));
    }

    void finish(TrialMetrics& tm, double eta, const std::vector<unsigned char>& mask) const {
        tm.ser = syms ? static_cast<double>(sym_err) / syms : 0.0;
        tm.ber = syms ? static_cast<double>(bit_err) / (syms * static_cast<double>(bits)) : 0.0;
        tm.evm = ref_energy > 0.0 ? std::sqrt(err_energy / ref_energy) : 0.0;
        tm.mean_post_sinr_db = db10(ref_energy / std::max(err_energy, 1e-300));
        tm.se_proxy = se_proxy(eta, mask);
    }
};

void fill_data(DDFrame& truth, const std::vector<unsigned char>& mask, Constellation c,
               std::mt19937_64& rng) {
    const std::vector<cplx>& pts = constellation_points(c);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pts.size()) - 1);
    for (int q = 0; q < truth.size(); ++q)
        if (mask[q]) truth.data[q] = pts[pick(rng)];
}

// ---------------------------------------------------------------------------
// Multicarrier trials (cpofdm and zak_over_cpofdm), point-pilot scheme.
// ---------------------------------------------------------------------------

ZakConfig zak_config_of(const Scenario& sc) {
    ZakConfig zc;
    zc.m = sc.m;
    zc.n = sc.n;
    zc.num_symbols = sc.num_symbols;
    zc.ofdm.k = sc.m * sc.n;
    zc.ofdm.scs_hz = sc.scs_hz;
    zc.ofdm.cp_samples = sc.cp_samples;
    return zc;
}

UnconstrainedConfig unconstrained_config_of(const Scenario& sc) {
    UnconstrainedConfig uc;
    uc.m = sc.u_m;
    uc.n = sc.u_n;
    uc.b_hz = sc.b_hz;
    uc.guard_samples = sc.guard_samples;
    uc.oversample = sc.oversample;
    uc.filter = sc.filter;
    return uc;
}

// Noiseless frame-in frame-out chain through the given channel, pinned to
// packet slot 0 of the subframe. Used for estimation-quality probes.
std::function<DDFrame(const DDFrame&)> packet0_chain(const Scenario& sc, const PathSet& ps) {
    if (sc.waveform == Waveform::zak_unconstrained) {
        const UnconstrainedConfig uc = unconstrained_config_of(sc);
        const cplx alpha = unconstrained_identity_gain(uc);
        const bool calibrate = std::abs(alpha) > 1e-6;
        return [uc, ps, alpha, calibrate](const DDFrame& f) {
            DDFrame y = unconstrained_zak_rx(apply_channel(unconstrained_zak_tx(f, uc), ps), uc);
            if (calibrate)
                for (cplx& v : y.data) v /= alpha;
            return y;
        };
    }
    ZakConfig zc1 = zak_config_of(sc);
    zc1.num_symbols = 1;
    return [zc1, ps](const DDFrame& f) {
        const TimeSamples s = assemble_subframe(std::vector<DDFrame>{f}, zc1);
        return zak_ofdm_rx(split_subframe(apply_channel(s, ps), zc1).front(), zc1);
    };
}

TrialMetrics run_multicarrier(const Scenario& sc, const PathSet& ps, double tsnr_db,
                              std::mt19937_64& rng) {
    const ZakConfig zc = zak_config_of(sc);
    const FrameLayout lo = sc.layout();
    const std::vector<unsigned char> mask = lo.data_mask();
    const DDFrame pilot = lo.pilot_frame();

    std::vector<DDFrame> truth(sc.num_symbols, DDFrame(sc.m, sc.n));
    std::vector<DDFrame> frames(sc.num_symbols, DDFrame(sc.m, sc.n));
    for (int p = 0; p < sc.num_symbols; ++p) {
        fill_data(truth[p], mask, sc.constellation, rng);
        frames[p] = truth[p];
        frames[p].at(lo.k_p, lo.l_p) += lo.pilot_amplitude;
    }

    const TimeSamples rc = apply_channel(assemble_subframe(frames, zc), ps);
    const double sig = mean_power(rc);
    const double noise_var = std::isinf(tsnr_db) ? 0.0 : sig * std::pow(10.0, -tsnr_db / 10.0);
    const TimeSamples noisy = add_awgn(rc, tsnr_db, sig, rng);
    const std::vector<TimeSamples> pkts = split_subframe(noisy, zc);

    TrialScore score(sc.constellation, sc.m * sc.n);
    TrialMetrics tm;
    for (int p = 0; p < sc.num_symbols; ++p) {
        const DDFrame y = zak_ofdm_rx(pkts[p], zc);
        const DDTapList taps = estimate_channel(y, lo);
        const IoMatrix h = build_io_matrix(taps, sc.m, sc.n);
        const EqualizerOutput eq = mmse_equalize(y, h, noise_var, 1.0, pilot, false);
        score.add_packet(eq.soft, truth[p], mask);
        if (p == 0) {
            // Estimation quality against a noiseless probe of the same
            // packet slot (the channel drifts across the subframe, so the
            // comparison is pinned to packet 0).
            const DDTapList probe =
                effective_dd_channel(packet0_chain(sc, ps), sc.m, sc.n, -80.0);
            tm.est_nmse_db = tap_set_nmse_db(estimate_channel(y, lo, -80.0), probe);
        }
    }
    score.finish(tm, sc.eta_overhead(), mask);
    return tm;
}

TrialMetrics run_comb(const Scenario& sc, const PathSet& ps, double tsnr_db,
                      std::mt19937_64& rng) {
    const ZakConfig zc = zak_config_of(sc);
    const CombLayout co = build_comb_layout(sc.n, sc.comb_spacing);
    const std::vector<unsigned char> mask = co.data_mask();

    std::vector<DDFrame> truth(sc.num_symbols, DDFrame(1, sc.n));
    std::vector<DDFrame> frames(sc.num_symbols, DDFrame(1, sc.n));
    for (int p = 0; p < sc.num_symbols; ++p) {
        fill_data(truth[p], mask, sc.constellation, rng);
        frames[p] = truth[p];
        for (int i = 0; i < sc.n; ++i)
            if (co.is_pilot(i)) frames[p].at(0, i) = cplx(co.pilot_amplitude, 0.0);
    }

    const TimeSamples rc = apply_channel(assemble_subframe(frames, zc), ps);
    const double sig = mean_power(rc);
    const double noise_var = std::isinf(tsnr_db) ? 0.0 : sig * std::pow(10.0, -tsnr_db / 10.0);
    const TimeSamples noisy = add_awgn(rc, tsnr_db, sig, rng);
    const std::vector<TimeSamples> pkts = split_subframe(noisy, zc);

    TrialScore score(sc.constellation, sc.n);
    TrialMetrics tm;
    for (int p = 0; p < sc.num_symbols; ++p) {
        const DDFrame y = zak_ofdm_rx(pkts[p], zc);
        const std::vector<cplx> hh = estimate_comb_channel(y, co);
        const EqualizerOutput eq = comb_equalize(y, hh, noise_var, 1.0, co);
        score.add_packet(eq.soft, truth[p], mask);
        if (p == 0) {
            // True per-subcarrier response of packet slot 0, one unit
            // subcarrier at a time through the noiseless chain.
            const auto chain0 = packet0_chain(sc, ps);
            double err = 0.0, ref = 0.0;
            for (int i = 0; i < sc.n; ++i) {
                DDFrame e(1, sc.n);
                e.at(0, i) = 1.0;
                const cplx truth_i = chain0(e).at(0, i);
                err += std::norm(hh[i] - truth_i);
                ref += std::norm(truth_i);
            }
            tm.est_nmse_db = ref > 0.0 ? db10(err / ref) : 300.0;
        }
    }
    score.finish(tm, sc.eta_overhead(), mask);
    return tm;
}

// ---------------------------------------------------------------------------
// Unconstrained trial: one long filtered packet per subframe.
// ---------------------------------------------------------------------------

TrialMetrics run_unconstrained(const Scenario& sc, const PathSet& ps, double tsnr_db,
                               std::mt19937_64& rng) {
    const UnconstrainedConfig uc = unconstrained_config_of(sc);
    const FrameLayout lo = sc.layout();
    const std::vector<unsigned char> mask = lo.data_mask();

    DDFrame truth(sc.u_m, sc.u_n);
    fill_data(truth, mask, sc.constellation, rng);
    DDFrame frame = truth;
    frame.at(lo.k_p, lo.l_p) += lo.pilot_amplitude;

    const TimeSamples rc = apply_channel(unconstrained_zak_tx(frame, uc), ps);
    const double sig = mean_power(rc);
    const double noise_var = std::isinf(tsnr_db) ? 0.0 : sig * std::pow(10.0, -tsnr_db / 10.0);
    const TimeSamples noisy = add_awgn(rc, tsnr_db, sig, rng);

    // Non-rectangular pulse pairs have a known end-to-end gain; dividing it
    // out is ordinary receiver calibration and is exactly 1 for the default
    // sinc/rectangular pair.
    const cplx alpha = unconstrained_identity_gain(uc);
    const bool calibrate = std::abs(alpha) > 1e-6;
    auto receive = [&](const TimeSamples& r) {
        DDFrame y = unconstrained_zak_rx(r, uc);
        if (calibrate)
            for (cplx& v : y.data) v /= alpha;
        return y;
    };
    const double eq_noise_var = calibrate ? noise_var / std::norm(alpha) : noise_var;

    const DDFrame y = receive(noisy);
    const DDTapList taps = estimate_channel(y, lo);
    const IoMatrix h = build_io_matrix(taps, sc.u_m, sc.u_n);
    const EqualizerOutput eq = mmse_equalize(y, h, eq_noise_var, 1.0, lo.pilot_frame(), false);

    TrialScore score(sc.constellation, sc.u_m * sc.u_n);
    score.add_packet(eq.soft, truth, mask);

    const DDTapList probe = effective_dd_channel(packet0_chain(sc, ps), sc.u_m, sc.u_n, -80.0);

    TrialMetrics tm;
    tm.est_nmse_db = tap_set_nmse_db(estimate_channel(y, lo, -80.0), probe);
    score.finish(tm, sc.eta_overhead(), mask);
    return tm;
}

}  // namespace

// ---------------------------------------------------------------------------
// Names and parsing.
// ---------------------------------------------------------------------------

std::string to_string(Waveform w) {
    switch (w) {
        case Waveform::cpofdm: return "cpofdm";
        case Waveform::zak_over_cpofdm: return "zak_over_cpofdm";
        case Waveform::zak_unconstrained: return "zak_unconstrained";
    }
    throw std::logic_error("to_string: bad waveform value");
}

Waveform waveform_from_string(const std::string& s) {
    if (s == "cpofdm") return Waveform::cpofdm;
    if (s == "zak_over_cpofdm") return Waveform::zak_over_cpofdm;
    if (s == "zak_unconstrained") return Waveform::zak_unconstrained;
    throw std::invalid_argument("unknown waveform '" + s +
                                "' (want cpofdm, zak_over_cpofdm or zak_unconstrained)");
}

Constellation constellation_from_string(const std::string& s) {
    if (s == "qpsk") return Constellation::qpsk;
    if (s == "16qam") return Constellation::qam16;
    if (s == "64qam") return Constellation::qam64;
    throw std::invalid_argument("unknown constellation '" + s + "' (want qpsk, 16qam or 64qam)");
}

namespace {

PilotScheme pilot_scheme_from_string(const std::string& s) {
    if (s == "dd") return PilotScheme::dd;
    if (s == "comb") return PilotScheme::comb;
    throw std::invalid_argument("unknown pilot_scheme '" + s + "' (want dd or comb)");
}

DelayProto delay_proto_from_string(const std::string& s) {
    if (s == "sinc") return DelayProto::sinc;
    if (s == "rrc") return DelayProto::rrc;
    if (s == "gaussian_sinc") return DelayProto::gaussian_sinc;
    throw std::invalid_argument("unknown delay_proto '" + s +
                                "' (want sinc, rrc or gaussian_sinc)");
}

DopplerProto doppler_proto_from_string(const std::string& s) {
    if (s == "rect" || s == "rect_window_sinc") return DopplerProto::rect_window_sinc;
    if (s == "rrc") return DopplerProto::rrc;
    if (s == "gaussian_sinc") return DopplerProto::gaussian_sinc;
    throw std::invalid_argument("unknown doppler_proto '" + s +
                                "' (want rect, rrc or gaussian_sinc)");
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario.
// ---------------------------------------------------------------------------

void Scenario::validate() const {
    auto bad = [this](const std::string& msg) {
        throw std::invalid_argument("scenario '" + name + "': " + msg);
    };
    if (trials < 1) bad("trials must be >= 1");
    if (tsnr_db.empty()) bad("tsnr_db must not be empty");
    if (delay_scale_s < 0.0) bad("delay_scale_s must be nonnegative");
    if (nu_max_hz < 0.0) bad("nu_max_hz must be nonnegative");
    if (tau_max_s < 0.0) bad("tau_max_s must be nonnegative");
    if (waveform == Waveform::zak_unconstrained) {
        if (u_m < 1 || u_n < 1) bad("m and n must be positive");
        if (b_hz <= 0.0) bad("b_hz must be positive");
        if (guard_samples < 0) bad("guard_samples must be nonnegative");
        if (oversample < 1) bad("oversample must be >= 1");
        filter.validate();
        return;
    }
    if (m < 1 || n < 1) bad("m and n must be positive");
    if (scs_hz <= 0.0) bad("scs_hz must be positive");
    if (cp_samples < 0) bad("cp_samples must be nonnegative");
    if (num_symbols < 1) bad("num_symbols must be >= 1");
    if (waveform == Waveform::cpofdm && m != 1)
        bad("cpofdm carries one delay bin per packet (m = 1); wider delay grids "
            "belong to zak_over_cpofdm");
    if (pilot_scheme == PilotScheme::comb) {
        if (waveform != Waveform::cpofdm) bad("the comb pilot scheme is a cpofdm baseline");
        if (comb_spacing < 2 || comb_spacing > n) bad("comb_spacing must lie in [2, n]");
    }
}

double Scenario::bandwidth_hz() const {
    return waveform == Waveform::zak_unconstrained ? b_hz : m * n * scs_hz;
}

double Scenario::t_frame_s() const {
    if (waveform == Waveform::zak_unconstrained)
        return static_cast<double>(u_m) * u_n / b_hz;
    return 1.0 / scs_hz;
}

double Scenario::doppler_period_hz() const { return grid_n() / t_frame_s(); }

bool Scenario::crystallized() const {
    const double nu_p = doppler_period_hz();
    const double tau_p = grid_m() / bandwidth_hz();
    return 2.0 * nu_max_hz <= nu_p * (1.0 + 1e-9) && tau_max_s <= tau_p * (1.0 + 1e-9);
}

FrameLayout Scenario::layout() const {
    if (waveform == Waveform::zak_unconstrained)
        return build_layout(u_m, u_n, b_hz, tau_max_s);
    if (pilot_scheme == PilotScheme::comb)
        throw std::logic_error("scenario '" + name + "': the comb scheme has no point-pilot layout");
    if (waveform == Waveform::cpofdm) return build_doppler_layout(n, t_frame_s(), nu_max_hz);
    return build_layout(m, n, bandwidth_hz(), tau_max_s);
}

double Scenario::eta_overhead() const {
    if (waveform == Waveform::zak_unconstrained) {
        const FrameLayout lo = layout();
        return static_cast<double>(lo.data_count()) / (u_m * u_n + guard_samples);
    }
    if (pilot_scheme == PilotScheme::comb) {
        const CombLayout co = build_comb_layout(n, comb_spacing);
        return static_cast<double>(co.data_count()) / (m * n + cp_samples);
    }
    const FrameLayout lo = layout();
    return static_cast<double>(lo.data_count()) / (m * n + cp_samples);
}

// ---------------------------------------------------------------------------
// Trials and points.
// ---------------------------------------------------------------------------

TrialMetrics run_trial(const Scenario& sc, double tsnr_db, int trial_index) {
    sc.validate();
    std::mt19937_64 rng(sc.base_seed + static_cast<std::uint64_t>(trial_index));
    const PathSet ps = draw_paths(sc, rng);
    if (sc.waveform == Waveform::zak_unconstrained) return run_unconstrained(sc, ps, tsnr_db, rng);
    if (sc.pilot_scheme == PilotScheme::comb) return run_comb(sc, ps, tsnr_db, rng);
    return run_multicarrier(sc, ps, tsnr_db, rng);
}

PathSet trial_paths(const Scenario& sc, int trial_index) {
    sc.validate();
    std::mt19937_64 rng(sc.base_seed + static_cast<std::uint64_t>(trial_index));
    return draw_paths(sc, rng);
}

DDTapList probe_dd_taps(const Scenario& sc, int trial_index, double prune_db) {
    const PathSet ps = trial_paths(sc, trial_index);
    return effective_dd_channel(packet0_chain(sc, ps), sc.grid_m(), sc.grid_n(), prune_db);
}

Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    a.count = static_cast<int>(xs.size());
    if (xs.empty()) return a;
    double sum = 0.0;
    for (double x : xs) sum += x;
    a.mean = sum / a.count;
    if (a.count > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - a.mean) * (x - a.mean);
        a.stderr_of_mean = std::sqrt(ss / (static_cast<double>(a.count) * (a.count - 1)));
    }
    return a;
}

const std::vector<std::string> kMetricNames = {"ser",         "ber",
                                               "evm",         "est_nmse_db",
                                               "mean_post_sinr_db", "se_proxy"};

std::vector<double> metric_values(const TrialMetrics& t) {
    return {t.ser, t.ber, t.evm, t.est_nmse_db, t.mean_post_sinr_db, t.se_proxy};
}

PointResult run_point(const Scenario& sc, double tsnr_db, int threads) {
    sc.validate();
    const int trials = sc.trials;
    std::vector<TrialMetrics> slots(trials);
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= trials) return;
            try {
                slots[i] = run_trial(sc, tsnr_db, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int nthreads = std::clamp(threads, 1, trials);
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    PointResult pr;
    pr.scenario = sc.name;
    pr.waveform = sc.waveform;
    pr.m = sc.grid_m();
    pr.n = sc.grid_n();
    pr.tsnr_db = tsnr_db;
    pr.trials = trials;
    std::vector<double> vals(trials);
    for (size_t j = 0; j < kMetricNames.size(); ++j) {
        for (int i = 0; i < trials; ++i) vals[i] = metric_values(slots[i])[j];
        pr.metrics[kMetricNames[j]] = aggregate(vals);
    }
    return pr;
}

// ---------------------------------------------------------------------------
// Config binding.
// ---------------------------------------------------------------------------

namespace {

std::vector<double> read_num_or_list(const Config& cfg, const std::string& key,
                                     std::vector<double> fallback) {
    if (!cfg.has(key)) return fallback;
    try {
        return cfg.num_list(key);
    } catch (const std::exception&) {
        return {cfg.num(key)};
    }
}

std::pair<int, int> parse_mxn(const std::string& s) {
    const size_t x = s.find('x');
    if (x != std::string::npos) {
        try {
            size_t a = 0, b = 0;
            const int mm = std::stoi(s.substr(0, x), &a);
            const int nn = std::stoi(s.substr(x + 1), &b);
            if (a == x && x + 1 + b == s.size() && mm > 0 && nn > 0) return {mm, nn};
        } catch (const std::exception&) {
        }
    }
    throw std::invalid_argument("bad mn_family entry '" + s + "' (want MxN, e.g. 12x4)");
}

}  // namespace

std::vector<Scenario> scenarios_from_config(const Config& cfg) {
    Scenario base;
    base.name = cfg.str_or("scenario.name", "unnamed");
    base.carrier_hz = cfg.num_or("scenario.carrier_hz", 0.0);
    std::string tdl = cfg.str_or("scenario.tdl_profile", "");
    if (!tdl.empty() && tdl != "identity") tdl = cfg.resolve_path(tdl);
    base.tdl_path = tdl;
    base.delay_scale_s = cfg.num_or("scenario.delay_scale_s", 0.0);
    base.nu_max_hz = cfg.num_or("scenario.nu_max_hz", 0.0);
    base.tau_max_s = cfg.num_or("scenario.tau_max_s", 0.0);
    base.constellation = constellation_from_string(cfg.str_or("scenario.constellation", "qpsk"));
    base.trials = static_cast<int>(cfg.num_or("scenario.trials", 500));
    base.base_seed = static_cast<std::uint64_t>(cfg.num_or("scenario.base_seed", 1));
    base.tsnr_db = read_num_or_list(cfg, "scenario.tsnr_db", {14.0});

    std::vector<Scenario> out;
    for (const std::string& wf : cfg.sections_under("waveform")) {
        Scenario sc = base;
        sc.waveform = waveform_from_string(wf);
        const std::string p = "waveform." + wf + ".";
        if (sc.waveform == Waveform::zak_unconstrained) {
            sc.u_m = static_cast<int>(cfg.num_or(p + "m", 48));
            sc.u_n = static_cast<int>(cfg.num_or(p + "n", 15));
            sc.b_hz = cfg.num_or(p + "b_hz", 720e3);
            sc.guard_samples = static_cast<int>(cfg.num_or(p + "guard_samples", 0));
            sc.oversample = static_cast<int>(cfg.num_or(p + "oversample", 1));
            sc.filter.delay_proto = delay_proto_from_string(cfg.str_or(p + "delay_proto", "sinc"));
            sc.filter.delay_param = cfg.num_or(p + "delay_param", 0.25);
            sc.filter.doppler_proto =
                doppler_proto_from_string(cfg.str_or(p + "doppler_proto", "rect"));
            sc.filter.doppler_param = cfg.num_or(p + "doppler_param", 0.25);
            sc.filter.half_width = static_cast<int>(cfg.num_or(p + "half_width", 64));
        } else {
            const bool plain = sc.waveform == Waveform::cpofdm;
            sc.m = static_cast<int>(cfg.num_or(p + "m", plain ? 1 : 48));
            sc.n = static_cast<int>(cfg.num_or(p + "n", plain ? 48 : 1));
            sc.scs_hz = cfg.num_or(p + "scs_hz", 15e3);
            sc.cp_samples = static_cast<int>(cfg.num_or(p + "cp_samples", 3));
            sc.num_symbols = static_cast<int>(cfg.num_or(p + "num_symbols", 14));
            sc.pilot_scheme = pilot_scheme_from_string(cfg.str_or(p + "pilot_scheme", "dd"));
            sc.comb_spacing = static_cast<int>(cfg.num_or(p + "comb_spacing", 4));
        }
        if (cfg.has(p + "trials")) sc.trials = static_cast<int>(cfg.num(p + "trials"));
        if (cfg.has(p + "tsnr_db")) sc.tsnr_db = read_num_or_list(cfg, p + "tsnr_db", sc.tsnr_db);
        if (cfg.has(p + "constellation"))
            sc.constellation = constellation_from_string(cfg.str(p + "constellation"));
        if (cfg.has(p + "mn_family")) {
            for (const std::string& entry : cfg.str_list(p + "mn_family")) {
                Scenario v = sc;
                const auto [mm, nn] = parse_mxn(entry);
                if (v.waveform == Waveform::zak_unconstrained) {
                    v.u_m = mm;
                    v.u_n = nn;
                } else {
                    v.m = mm;
                    v.n = nn;
                }
                v.validate();
                out.push_back(std::move(v));
            }
        } else {
            sc.validate();
            out.push_back(std::move(sc));
        }
    }
    if (out.empty())
        throw std::runtime_error(cfg.origin() + ": no [waveform.*] sections in config");
    return out;
}

// ---------------------------------------------------------------------------
// Sweep, state, output files.
// ---------------------------------------------------------------------------

namespace {

std::string point_key(const PointResult& p) {
    return p.scenario + "|" + to_string(p.waveform) + "|" + std::to_string(p.m) + "x" +
           std::to_string(p.n) + "|" + fmt_g(p.tsnr_db);
}

ordered_json point_to_json(const PointResult& p) {
    ordered_json j;
    j["scenario"] = p.scenario;
    j["waveform"] = to_string(p.waveform);
    j["m"] = p.m;
    j["n"] = p.n;
    j["tsnr_db"] = p.tsnr_db;
    j["trials"] = p.trials;
    ordered_json ms;
    for (const std::string& name : kMetricNames) {
        const auto it = p.metrics.find(name);
        if (it == p.metrics.end()) continue;
        ms[name] = ordered_json{{"mean", it->second.mean},
                                {"stderr", it->second.stderr_of_mean},
                                {"count", it->second.count}};
    }
    j["metrics"] = std::move(ms);
    return j;
}

PointResult point_from_json(const ordered_json& j) {
    PointResult p;
    p.scenario = j.at("scenario").get<std::string>();
    p.waveform = waveform_from_string(j.at("waveform").get<std::string>());
    p.m = j.at("m").get<int>();
    p.n = j.at("n").get<int>();
    p.tsnr_db = j.at("tsnr_db").get<double>();
    p.trials = j.at("trials").get<int>();
    for (const auto& [name, mj] : j.at("metrics").items()) {
        Aggregate a;
        a.mean = mj.at("mean").get<double>();
        a.stderr_of_mean = mj.at("stderr").get<double>();
        a.count = mj.at("count").get<int>();
        p.metrics[name] = a;
    }
    return p;
}

ordered_json state_header(const Config& cfg, const SweepOptions& opt) {
    ordered_json j;
    j["state_version"] = 1;
    j["code_version"] = kCodeVersion;
    j["config_fnv1a"] = hash_hex(fnv1a(cfg.text()));
    j["seed_override"] = opt.seed ? ordered_json(*opt.seed) : ordered_json(nullptr);
    j["trials_override"] = opt.trials ? ordered_json(*opt.trials) : ordered_json(nullptr);
    return j;
}

std::vector<const PointResult*> canonical_order(const std::vector<PointResult>& points) {
    std::vector<const PointResult*> ps;
    ps.reserve(points.size());
    for (const PointResult& p : points) ps.push_back(&p);
    std::sort(ps.begin(), ps.end(), [](const PointResult* a, const PointResult* b) {
        if (a->scenario != b->scenario) return a->scenario < b->scenario;
        if (a->waveform != b->waveform) return static_cast<int>(a->waveform) < static_cast<int>(b->waveform);
        if (a->m != b->m) return a->m < b->m;
        if (a->n != b->n) return a->n < b->n;
        return a->tsnr_db < b->tsnr_db;
    });
    return ps;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

std::string csv_text(const std::vector<PointResult>& points) {
    std::string out = "scenario,waveform,M,N,tsnr_db,metric,mean,stderr,trials\n";
    for (const PointResult* p : canonical_order(points)) {
        for (const std::string& name : kMetricNames) {
            const auto it = p->metrics.find(name);
            if (it == p->metrics.end()) continue;
            out += p->scenario + "," + to_string(p->waveform) + "," + std::to_string(p->m) + "," +
                   std::to_string(p->n) + "," + fmt_g(p->tsnr_db) + "," + name + "," +
                   fmt_g(it->second.mean) + "," + fmt_g(it->second.stderr_of_mean) + "," +
                   std::to_string(p->trials) + "\n";
        }
    }
    return out;
}

std::string summary_json_text(const Config& cfg, const SweepOptions& opt,
                              const std::vector<PointResult>& points) {
    ordered_json j;
    j["code_version"] = kCodeVersion;
    j["config"] = ordered_json{{"origin", cfg.origin()}, {"fnv1a", hash_hex(fnv1a(cfg.text()))}};
    j["overrides"] =
        ordered_json{{"seed", opt.seed ? ordered_json(*opt.seed) : ordered_json(nullptr)},
                     {"trials", opt.trials ? ordered_json(*opt.trials) : ordered_json(nullptr)}};
    ordered_json arr = ordered_json::array();
    for (const PointResult* p : canonical_order(points)) arr.push_back(point_to_json(*p));
    j["points"] = std::move(arr);
    j["config_text"] = cfg.text();
    return j.dump(2) + "\n";
}

std::vector<PointResult> run_sweep(const Config& cfg, const SweepOptions& opt, std::ostream& log) {
    namespace fs = std::filesystem;

    std::vector<Scenario> scenarios = scenarios_from_config(cfg);
    for (Scenario& sc : scenarios) {
        if (opt.seed) sc.base_seed = *opt.seed;
        if (opt.trials) sc.trials = *opt.trials;
        sc.validate();
    }

    struct Point {
        const Scenario* sc;
        double tsnr_db;
    };
    std::vector<Point> plan;
    for (const Scenario& sc : scenarios)
        for (double t : sc.tsnr_db) plan.push_back({&sc, t});

    fs::create_directories(opt.out_dir);
    const std::string state_path = opt.out_dir + "/state.jsonl";
    const ordered_json header = state_header(cfg, opt);

    std::map<std::string, PointResult> done;
    if (opt.resume && fs::exists(state_path)) {
        std::ifstream in(state_path);
        std::string line;
        if (!std::getline(in, line) || ordered_json::parse(line) != header)
            throw std::runtime_error(state_path +
                                     " does not match this configuration; remove it or run "
                                     "without --resume");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const ordered_json row = ordered_json::parse(line);
            done[row.at("key").get<std::string>()] = point_from_json(row.at("point"));
        }
    }

    std::ofstream state(state_path, done.empty() ? std::ios::trunc : std::ios::app);
    if (!state) throw std::runtime_error("cannot open '" + state_path + "' for writing");
    if (done.empty()) state << header.dump() << "\n" << std::flush;

    std::vector<PointResult> results;
    results.reserve(plan.size());
    for (size_t i = 0; i < plan.size(); ++i) {
        PointResult pr;
        pr.scenario = plan[i].sc->name;
        pr.waveform = plan[i].sc->waveform;
        pr.m = plan[i].sc->grid_m();
        pr.n = plan[i].sc->grid_n();
        pr.tsnr_db = plan[i].tsnr_db;
        const std::string key = point_key(pr);
        const auto it = done.find(key);
        if (it != done.end()) {
            log << "[" << i + 1 << "/" << plan.size() << "] " << key << " (from state)\n";
            results.push_back(it->second);
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        pr = run_point(*plan[i].sc, plan[i].tsnr_db, opt.threads);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ordered_json row;
        row["key"] = key;
        row["point"] = point_to_json(pr);
        state << row.dump() << "\n" << std::flush;
        log << "[" << i + 1 << "/" << plan.size() << "] " << key << "  " << fmt_g(secs) << "s\n";
        results.push_back(std::move(pr));
    }

    write_text(opt.out_dir + "/results.csv", csv_text(results));
    write_text(opt.out_dir + "/summary.json", summary_json_text(cfg, opt, results));
    state.close();
    if (!opt.keep_state) fs::remove(state_path);
    return results;
}

}  // namespace ddmodem
