#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ddmodem/types.hpp"

namespace ddmodem {

// ---------------------------------------------------------------------------
// Frame layout: pilot impulse, guard strips, data region.
// ---------------------------------------------------------------------------

enum class Region : unsigned char { data, pilot, guard1, guard2 };

enum class PilotEnergyPolicy {
    match_data_energy,  // pilot energy equals total data energy at E_s = 1
    unit_amplitude
};

// Partition of an m x n grid around a single pilot impulse at (k_p, l_p).
// The standard layout runs the pilot/guard strip along the delay axis: with
// s = ceil(b * tau_max), columns k_p-1-s .. k_p-2 are the leading guard,
// k_p-1 .. k_p+s the pilot region, and k_p+s+1 a single trailing guard
// column, all Doppler rows included; everything else carries data. The
// transposed variant (built for 1 x n grids, where no delay-direction strip
// can fit) runs the same strip along the Doppler axis instead.
//
// hyp_* bound the channel-estimation hypothesis window: delay taps 0..hyp_k_hi
// and Doppler taps hyp_l_lo..hyp_l_hi. The transposed variant pins hyp_k_hi
// to 0: on a one-row grid every delay wraps onto the same row, leaving only a
// phase that a single pilot read cannot isolate, so estimation models the
// channel as delay-flat per Doppler shift and pays the misprediction on data
// bins when the channel is actually dispersive.
struct FrameLayout {
    int m = 0, n = 0;
    int k_p = 0, l_p = 0;
    int delay_spread_bins = 0;    // s above
    int doppler_spread_bins = -1; // strip width parameter of the transposed variant
    bool transposed = false;
    double pilot_amplitude = 1.0;
    int hyp_k_hi = 0;
    int hyp_l_lo = 0, hyp_l_hi = 0;
    std::vector<Region> region;   // m*n entries, index k + m*l

    Region at(int k, int l) const { return region[(size_t)k + (size_t)m * l]; }
    bool is_data(int k, int l) const { return at(k, l) == Region::data; }
    int data_count() const;
    int overhead_count() const { return m * n - data_count(); }
    double overhead_fraction() const { return (double)overhead_count() / (m * n); }
    std::vector<unsigned char> data_mask() const;
    DDFrame pilot_frame() const;  // pilot_amplitude at (k_p, l_p), zero elsewhere
};

// Standard delay-direction layout. Requires m > 2*ceil(b*tau_max)+3; the
// error message names that inequality when it fails.
FrameLayout build_layout(int m, int n, double b_hz, double tau_max_s,
                         PilotEnergyPolicy policy = PilotEnergyPolicy::match_data_energy);

// Doppler-direction layout for 1 x n grids. The strip width parameter is
// u = ceil(2 * nu_max * t), mirroring the delay formula. Requires n > 2u+3.
FrameLayout build_doppler_layout(int n, double t_s, double nu_max_hz,
                                 PilotEnergyPolicy policy = PilotEnergyPolicy::match_data_energy);

// ---------------------------------------------------------------------------
// Channel estimation from the received pilot.
// ---------------------------------------------------------------------------

// Cross-ambiguity of the received frame against the transmitted point pilot,
// evaluated on the layout's hypothesis window and normalized by the pilot
// energy:
//   h[k,l] = sum_{(k',l') in S} y[k',l'] conj(x_p[k'-k, l'-l]) e^{-j2pi l(k'-k)/(mn)}
// with S the pilot-centered copy of the hypothesis window and x_p the
// quasi-periodically extended pilot frame. Taps more than prune_db below the
// strongest are dropped.
DDTapList estimate_channel(const DDFrame& y, const FrameLayout& layout, double prune_db = -40.0);

// ---------------------------------------------------------------------------
// I/O matrix and MMSE equalization.
// ---------------------------------------------------------------------------

using IoMatrix = Eigen::MatrixXcd;

// Dense mn x mn matrix with vec(twisted_convolve(h, F)) = H * vec(F); column
// q is the response to the unit frame at grid position q (column-major, the
// same packing as DDFrame::data).
IoMatrix build_io_matrix(const DDTapList& h, int m, int n);

struct EqualizerOutput {
    DDFrame soft;                  // full-grid soft symbol estimates
    std::vector<double> post_mse;  // analytic per-position error power (if requested)
    std::vector<double> post_sinr; // symbol_energy / post_mse - 1
    bool regularized = false;      // ridge fallback was needed at noise_var = 0
};

// x_hat = E_s H^H (E_s H H^H + noise_var I)^{-1} (y - H * pilot). The pilot
// contribution is cancelled using the caller's pilot frame (pass a zero
// frame if there is none). At noise_var = 0 a rank-deficient H gets a
// trace-scaled ridge of 1e-12 and the output is flagged. Computing the
// analytic per-position error power costs an extra full solve, so callers
// that only need soft symbols can turn it off.
EqualizerOutput mmse_equalize(const DDFrame& y, const IoMatrix& h, double noise_var,
                              double symbol_energy, const DDFrame& pilot,
                              bool want_sinr = true);

// ---------------------------------------------------------------------------
// Symbol mapping and scoring.
// ---------------------------------------------------------------------------

enum class Constellation { qpsk, qam16, qam64 };

// Unit-mean-energy points indexed by their Gray bit label (per-axis Gray
// code, I bits above Q bits).
const std::vector<cplx>& constellation_points(Constellation c);
int constellation_bits(Constellation c);
int hard_decision(Constellation c, cplx v);  // nearest point's label

struct ScoreMetrics {
    double ser = 0.0;
    double ber = 0.0;
    double evm = 0.0;        // sqrt(error energy / reference energy)
    double mean_sinr = 0.0;  // measured, linear
};

// Hard-decision scoring over the positions where data_mask is nonzero.
// Truth entries must be constellation points at unit symbol energy.
ScoreMetrics demap_and_score(const DDFrame& soft, const DDFrame& truth,
                             const std::vector<unsigned char>& data_mask, Constellation c);

// ---------------------------------------------------------------------------
// Classical comb-pilot baseline for 1 x n frames (per-subcarrier estimation
// with linear interpolation, one-tap MMSE). Optional alternative to the
// transposed-layout scheme above.
// ---------------------------------------------------------------------------

struct CombLayout {
    int n = 0;
    int spacing = 0;
    int first = 0;
    double pilot_amplitude = 1.0;

    bool is_pilot(int i) const { return (i - first) % spacing == 0 && i >= first; }
    int pilot_count() const;
    int data_count() const { return n - pilot_count(); }
    std::vector<unsigned char> data_mask() const;
};

CombLayout build_comb_layout(int n, int spacing,
                             PilotEnergyPolicy policy = PilotEnergyPolicy::match_data_energy);

// Per-subcarrier response at pilot bins, linearly interpolated in between,
// held constant beyond the outermost pilots.
std::vector<cplx> estimate_comb_channel(const DDFrame& y, const CombLayout& layout);

// Independent one-tap MMSE per data bin; ignores inter-carrier coupling by
// construction (that blindness is the point of carrying this baseline).
EqualizerOutput comb_equalize(const DDFrame& y, const std::vector<cplx>& h_hat, double noise_var,
                              double symbol_energy, const CombLayout& layout);

}  // namespace ddmodem
