#pragma once

#include <functional>
#include <random>
#include <string>

#include "ddmodem/types.hpp"

namespace ddmodem {

/** One propagation path: complex gain, absolute delay, Doppler shift. */
struct ChannelPath {
    cplx gain;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
};

struct PathSet {
    std::vector<ChannelPath> paths;

    double total_power() const;
    double max_delay_s() const;
    double max_abs_doppler_hz() const;
};

/** Tapped-delay-line power profile loaded from a data file. Powers are
 *  normalized to unit total at load time; delays are in units of the
 *  profile's scale factor. */
struct TdlProfile {
    struct Tap {
        double norm_delay = 0.0;
        double power_db = 0.0;   // after normalization
        bool los = false;
        double rician_k_db = 0.0;
    };
    std::string name;
    double delay_scale_s = 0.0;  // default scale, per-scenario overridable
    bool has_los = false;
    std::vector<Tap> taps;

    static TdlProfile load(const std::string& path);
};

/** Draws one fading realization: per-tap circularly symmetric Gaussian gains
 *  (Rician for a line-of-sight tap), Doppler nu_max * cos(theta) with theta
 *  uniform on [0, 2 pi). Tap powers sum to one in expectation. */
PathSet draw_tdl_realization(const TdlProfile& prof, double delay_scale_s, double nu_max_hz,
                             std::mt19937_64& rng);

/** Interpolation kernel for non-integer sample delays: sinc windowed by a
 *  Kaiser taper of the given half width. */
struct DelayKernel {
    int half_width = 64;
    double kaiser_beta = 12.0;
};

/** Runs samples through the multipath channel at the stream's own rate.
 *  Each path delays (windowed-sinc interpolation when fractional), scales,
 *  and applies the Doppler phase exp(j 2 pi nu (t - tau)) with t taken from
 *  the absolute sample index. The output is extended at the tail to hold
 *  delayed energy; negative delays (advances, used by the kernel self-tests)
 *  extend the head instead. */
TimeSamples apply_channel(const TimeSamples& x, const PathSet& ps, const DelayKernel& dk = {});

/** Adds circularly symmetric white Gaussian noise at a per-sample variance
 *  of signal_power / 10^(tsnr_db/10). */
TimeSamples add_awgn(const TimeSamples& x, double tsnr_db, double signal_power,
                     std::mt19937_64& rng);

/** Measures the effective delay-Doppler taps of an arbitrary noiseless
 *  frame-in frame-out chain by sending a unit point pilot at the grid center
 *  and reading one full period around it. Taps more than prune_db below the
 *  strongest are dropped; the result is sorted by (k, l). */
DDTapList effective_dd_channel(const std::function<DDFrame(const DDFrame&)>& chain, int m, int n,
                               double prune_db = -60.0);

/** Window geometry of a sinc-pulse chain with rectangular transmit window
 *  [-t_cp, t) and receive window [0, t), both at bandwidth b. */
struct AnalyticChainSpec {
    double b_hz = 0.0;
    double t_s = 0.0;
    double t_cp_s = 0.0;
};

/** Quadrature evaluation of the continuous effective channel of the
 *  sinc/rectangular chain at lattice point (k / b, l / t). Independent of
 *  the sampled simulation; intended as a cross-check at small sizes and as
 *  an alias-free reference. */
cplx analytic_dd_tap(const PathSet& ps, const AnalyticChainSpec& cs, int k, int l);

}  // namespace ddmodem
