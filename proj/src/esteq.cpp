#include "ddmodem/esteq.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "ddmodem/dd_transforms.hpp"

namespace ddmodem {

namespace {

// ceil for products like b*tau that are often exact integers in disguise
// (720 kHz * 2.5 us and friends); a bare std::ceil would round the float
// fuzz up to the next bin.
int ceil_bins(double x) {
    if (x < 0.0) throw std::invalid_argument("esteq: spread parameters must be nonnegative");
    return (int)std::ceil(x - 1e-9);
}

size_t grid_index(int m, int k, int l) { return (size_t)k + (size_t)m * l; }

}  // namespace

// ---------------------------------------------------------------------------
// Layouts
// ---------------------------------------------------------------------------

int FrameLayout::data_count() const {
    return (int)std::count(region.begin(), region.end(), Region::data);
}

std::vector<unsigned char> FrameLayout::data_mask() const {
    std::vector<unsigned char> mask(region.size());
    for (size_t i = 0; i < region.size(); ++i) mask[i] = region[i] == Region::data ? 1 : 0;
    return mask;
}

DDFrame FrameLayout::pilot_frame() const {
    DDFrame f(m, n);
    f.at(k_p, l_p) = pilot_amplitude;
    return f;
}

namespace {

void finish_layout(FrameLayout& lo, PilotEnergyPolicy policy) {
    lo.pilot_amplitude = policy == PilotEnergyPolicy::match_data_energy
                             ? std::sqrt((double)lo.data_count())
                             : 1.0;
}

}  // namespace

FrameLayout build_layout(int m, int n, double b_hz, double tau_max_s, PilotEnergyPolicy policy) {
    if (m <= 0 || n <= 0) throw std::invalid_argument("build_layout: grid dimensions must be positive");
    if (b_hz <= 0.0) throw std::invalid_argument("build_layout: bandwidth must be positive");
    const int s = ceil_bins(b_hz * tau_max_s);
    if (m <= 2 * s + 3)
        throw std::invalid_argument("build_layout: need m > 2*ceil(b_hz*tau_max_s)+3 (m=" +
                                    std::to_string(m) + ", 2*ceil+3=" + std::to_string(2 * s + 3) +
                                    ")");

    FrameLayout lo;
    lo.m = m;
    lo.n = n;
    lo.k_p = (m + 1) / 2;
    lo.l_p = ((n + 1) / 2) % n;
    lo.delay_spread_bins = s;
    lo.hyp_k_hi = s + 1;
    lo.hyp_l_lo = -(n / 2);
    lo.hyp_l_hi = n - n / 2 - 1;
    lo.region.assign((size_t)m * n, Region::data);
    // The strip fits without wraparound: the precondition gives m >= 2s+4 and
    // the pilot sits at ceil(m/2).
    for (int l = 0; l < n; ++l) {
        for (int k = lo.k_p - 1 - s; k <= lo.k_p - 2; ++k)
            lo.region[grid_index(m, k, l)] = Region::guard1;
        for (int k = lo.k_p - 1; k <= lo.k_p + s; ++k)
            lo.region[grid_index(m, k, l)] = Region::pilot;
        lo.region[grid_index(m, lo.k_p + s + 1, l)] = Region::guard2;
    }
    finish_layout(lo, policy);
    return lo;
}

FrameLayout build_doppler_layout(int n, double t_s, double nu_max_hz, PilotEnergyPolicy policy) {
    if (n <= 0) throw std::invalid_argument("build_doppler_layout: n must be positive");
    if (t_s <= 0.0) throw std::invalid_argument("build_doppler_layout: t_s must be positive");
    const int u = ceil_bins(2.0 * nu_max_hz * t_s);
    if (n <= 2 * u + 3)
        throw std::invalid_argument(
            "build_doppler_layout: need n > 2*ceil(2*nu_max_hz*t_s)+3 (n=" + std::to_string(n) +
            ", 2*ceil+3=" + std::to_string(2 * u + 3) + ")");

    FrameLayout lo;
    lo.m = 1;
    lo.n = n;
    lo.k_p = 0;
    lo.l_p = (n + 1) / 2;
    lo.delay_spread_bins = 0;
    lo.doppler_spread_bins = u;
    lo.transposed = true;
    // A one-row pilot cannot separate delay taps (all delays alias onto the
    // same row), so the hypothesis set is delay-flat by construction.
    lo.hyp_k_hi = 0;
    // Doppler taps are two-sided; one extra bin each side absorbs leakage
    // from off-bin Dopplers. Clamped so the window never exceeds one period.
    const int v = ceil_bins(nu_max_hz * t_s);
    lo.hyp_l_lo = std::max(-(v + 1), -(n / 2));
    lo.hyp_l_hi = std::min(v + 1, n - n / 2 - 1);
    lo.region.assign((size_t)n, Region::data);
    for (int l = lo.l_p - 1 - u; l <= lo.l_p - 2; ++l)
        lo.region[grid_index(1, 0, l)] = Region::guard1;
    for (int l = lo.l_p - 1; l <= lo.l_p + u; ++l)
        lo.region[grid_index(1, 0, l)] = Region::pilot;
    lo.region[grid_index(1, 0, lo.l_p + u + 1)] = Region::guard2;
    finish_layout(lo, policy);
    return lo;
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

DDTapList estimate_channel(const DDFrame& y, const FrameLayout& lo, double prune_db) {
    if (y.m != lo.m || y.n != lo.n)
        throw std::invalid_argument("estimate_channel: frame does not match layout (" +
                                    std::to_string(y.m) + "x" + std::to_string(y.n) + " vs " +
                                    std::to_string(lo.m) + "x" + std::to_string(lo.n) + ")");
    const long mn = (long)lo.m * lo.n;
    const DDFrame pf = lo.pilot_frame();
    const double pilot_energy = lo.pilot_amplitude * lo.pilot_amplitude;

    DDTapList taps;
    double peak2 = 0.0;
    for (int k = 0; k <= lo.hyp_k_hi; ++k) {
        for (int l = lo.hyp_l_lo; l <= lo.hyp_l_hi; ++l) {
            // Cross-ambiguity against the quasi-periodically extended pilot,
            // window and frame both read through qp_extend so wrap phases are
            // honored on either side.
            cplx acc = 0.0;
            for (int kk = 0; kk <= lo.hyp_k_hi; ++kk) {
                for (int ll = lo.hyp_l_lo; ll <= lo.hyp_l_hi; ++ll) {
                    const long kr = lo.k_p + kk, lr = lo.l_p + ll;
                    const cplx p = qp_extend(pf, kr - k, lr - l);
                    if (p == cplx(0.0)) continue;
                    acc += qp_extend(y, kr, lr) * std::conj(p) *
                           unit_root(-(long)l * (kr - k), mn);
                }
            }
            acc /= pilot_energy;
            peak2 = std::max(peak2, std::norm(acc));
            taps.push_back({k, l, acc});
        }
    }

    const double floor2 = peak2 * std::pow(10.0, prune_db / 10.0);
    std::erase_if(taps, [&](const DDTap& t) { return std::norm(t.gain) < floor2; });
    std::sort(taps.begin(), taps.end(),
              [](const DDTap& a, const DDTap& b) { return std::norm(a.gain) > std::norm(b.gain); });
    return taps;
}

// ---------------------------------------------------------------------------
// I/O matrix and MMSE
// ---------------------------------------------------------------------------

IoMatrix build_io_matrix(const DDTapList& h, int m, int n) {
    if (m <= 0 || n <= 0) throw std::invalid_argument("build_io_matrix: bad grid dimensions");
    const long mn = (long)m * n;
    IoMatrix out = IoMatrix::Zero(mn, mn);
    // Column for the unit frame at (k0, l0): each tap lands on one output
    // position, with the delay wrap supplying the quasi-periodic phase and
    // the tap's Doppler supplying the twist.
    for (int l0 = 0; l0 < n; ++l0) {
        for (int k0 = 0; k0 < m; ++k0) {
            const long col = grid_index(m, k0, l0);
            for (const DDTap& t : h) {
                const long wrap = floor_div((long)k0 + t.k, m);
                const int k = (int)((long)k0 + t.k - wrap * m);
                const int l = (int)pos_mod((long)l0 + t.l, n);
                const cplx v = t.gain * unit_root(-wrap * l0, n) *
                               unit_root((long)t.l * ((long)k - t.k), mn);
                out((long)grid_index(m, k, l), col) += v;
            }
        }
    }
    return out;
}

EqualizerOutput mmse_equalize(const DDFrame& y, const IoMatrix& h, double noise_var,
                              double symbol_energy, const DDFrame& pilot, bool want_sinr) {
    const long mn = (long)y.m * y.n;
    if (h.rows() != mn || h.cols() != mn)
        throw std::invalid_argument("mmse_equalize: matrix size does not match frame");
    if (pilot.m != y.m || pilot.n != y.n)
        throw std::invalid_argument("mmse_equalize: pilot frame size mismatch");
    if (noise_var < 0.0 || symbol_energy <= 0.0)
        throw std::invalid_argument("mmse_equalize: need noise_var >= 0 and symbol_energy > 0");

    const Eigen::Map<const Eigen::VectorXcd> yv(y.data.data(), mn);
    const Eigen::Map<const Eigen::VectorXcd> pv(pilot.data.data(), mn);
    const Eigen::VectorXcd r = yv - h * pv;

    // A = E_s H H^H + sigma^2 I, factored once and reused for the soft
    // symbols and (optionally) the per-position error power.
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(mn, mn);
    a.selfadjointView<Eigen::Lower>().rankUpdate(h, symbol_energy);
    a.diagonal().array() += noise_var;

    EqualizerOutput out;
    Eigen::LLT<Eigen::MatrixXcd, Eigen::Lower> llt(a);
    double ridge = 1e-12 * std::max(a.diagonal().real().sum() / (double)mn, 1.0);
    while (llt.info() != Eigen::Success) {
        out.regularized = true;
        a.diagonal().array() += ridge;
        llt.compute(a);
        ridge *= 1e3;
    }

    const Eigen::VectorXcd z = llt.solve(r);
    const Eigen::VectorXcd xhat = symbol_energy * (h.adjoint() * z);
    out.soft = DDFrame(y.m, y.n);
    Eigen::Map<Eigen::VectorXcd>(out.soft.data.data(), mn) = xhat;

    if (want_sinr) {
        // Error power per position is the diagonal of
        // E_s I - E_s^2 H^H A^{-1} H; only the diagonal is formed.
        const Eigen::MatrixXcd x = llt.solve(h);
        out.post_mse.resize((size_t)mn);
        out.post_sinr.resize((size_t)mn);
        for (long q = 0; q < mn; ++q) {
            double mse = symbol_energy -
                         symbol_energy * symbol_energy * std::real(h.col(q).dot(x.col(q)));
            mse = std::clamp(mse, 1e-300, symbol_energy);
            out.post_mse[(size_t)q] = mse;
            out.post_sinr[(size_t)q] = symbol_energy / mse - 1.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Constellations and scoring
// ---------------------------------------------------------------------------

namespace {

// Square QAM with an independent Gray code per axis; label bits are
// [I bits | Q bits]. levels = 2^axis_bits amplitude levels per axis.
std::vector<cplx> make_square_qam(int axis_bits) {
    const int levels = 1 << axis_bits;
    // mean energy of levels {+-1, +-3, ...} per axis is (L^2 - 1) / 3
    const double scale = 1.0 / std::sqrt(2.0 * ((double)levels * levels - 1.0) / 3.0);
    std::vector<int> level_of_gray(levels);
    for (int idx = 0; idx < levels; ++idx) level_of_gray[idx ^ (idx >> 1)] = idx;
    std::vector<cplx> pts((size_t)levels * levels);
    for (int gi = 0; gi < levels; ++gi) {
        for (int gq = 0; gq < levels; ++gq) {
            const double re = (2.0 * level_of_gray[gi] - (levels - 1)) * scale;
            const double im = (2.0 * level_of_gray[gq] - (levels - 1)) * scale;
            pts[(size_t)((gi << axis_bits) | gq)] = {re, im};
        }
    }
    return pts;
}

int axis_bits_of(Constellation c) {
    switch (c) {
        case Constellation::qpsk: return 1;
        case Constellation::qam16: return 2;
        case Constellation::qam64: return 3;
    }
    throw std::invalid_argument("unknown constellation");
}

int gray_slice(double v, int axis_bits, double inv_scale) {
    const int levels = 1 << axis_bits;
    int idx = (int)std::lround((v * inv_scale + (levels - 1)) / 2.0);
    idx = std::clamp(idx, 0, levels - 1);
    return idx ^ (idx >> 1);
}

}  // namespace

const std::vector<cplx>& constellation_points(Constellation c) {
    static const std::vector<cplx> qpsk = make_square_qam(1);
    static const std::vector<cplx> qam16 = make_square_qam(2);
    static const std::vector<cplx> qam64 = make_square_qam(3);
    switch (c) {
        case Constellation::qpsk: return qpsk;
        case Constellation::qam16: return qam16;
        case Constellation::qam64: return qam64;
    }
    throw std::invalid_argument("unknown constellation");
}

int constellation_bits(Constellation c) { return 2 * axis_bits_of(c); }

int hard_decision(Constellation c, cplx v) {
    const int ab = axis_bits_of(c);
    const int levels = 1 << ab;
    const double inv_scale = std::sqrt(2.0 * ((double)levels * levels - 1.0) / 3.0);
    return (gray_slice(v.real(), ab, inv_scale) << ab) | gray_slice(v.imag(), ab, inv_scale);
}

ScoreMetrics demap_and_score(const DDFrame& soft, const DDFrame& truth,
                             const std::vector<unsigned char>& data_mask, Constellation c) {
    if (soft.m != truth.m || soft.n != truth.n)
        throw std::invalid_argument("demap_and_score: frame size mismatch");
    if (data_mask.size() != soft.data.size())
        throw std::invalid_argument("demap_and_score: mask size mismatch");

    const int bits = constellation_bits(c);
    long nsym = 0, sym_err = 0, bit_err = 0;
    double err_energy = 0.0, ref_energy = 0.0;
    for (size_t i = 0; i < data_mask.size(); ++i) {
        if (!data_mask[i]) continue;
        ++nsym;
        const unsigned lab_rx = (unsigned)hard_decision(c, soft.data[i]);
        const unsigned lab_tx = (unsigned)hard_decision(c, truth.data[i]);
        if (lab_rx != lab_tx) ++sym_err;
        bit_err += std::popcount(lab_rx ^ lab_tx);
        err_energy += std::norm(soft.data[i] - truth.data[i]);
        ref_energy += std::norm(truth.data[i]);
    }
    if (nsym == 0) throw std::invalid_argument("demap_and_score: empty data region");

    ScoreMetrics sm;
    sm.ser = (double)sym_err / (double)nsym;
    sm.ber = (double)bit_err / (double)(nsym * bits);
    sm.evm = std::sqrt(err_energy / std::max(ref_energy, 1e-300));
    sm.mean_sinr = ref_energy / std::max(err_energy, 1e-300);
    return sm;
}

// ---------------------------------------------------------------------------
// Comb-pilot baseline
// ---------------------------------------------------------------------------

int CombLayout::pilot_count() const { return (n - 1 - first) / spacing + 1; }

std::vector<unsigned char> CombLayout::data_mask() const {
    std::vector<unsigned char> mask((size_t)n, 1);
    for (int i = first; i < n; i += spacing) mask[(size_t)i] = 0;
    return mask;
}

CombLayout build_comb_layout(int n, int spacing, PilotEnergyPolicy policy) {
    if (n <= 0 || spacing <= 0 || spacing > n)
        throw std::invalid_argument("build_comb_layout: need 0 < spacing <= n");
    CombLayout lo;
    lo.n = n;
    lo.spacing = spacing;
    lo.first = spacing / 2;
    lo.pilot_amplitude = policy == PilotEnergyPolicy::match_data_energy
                             ? std::sqrt((double)lo.data_count() / (double)lo.pilot_count())
                             : 1.0;
    return lo;
}

std::vector<cplx> estimate_comb_channel(const DDFrame& y, const CombLayout& lo) {
    if (y.m != 1 || y.n != lo.n)
        throw std::invalid_argument("estimate_comb_channel: expected a 1 x n frame matching the layout");
    std::vector<cplx> h((size_t)lo.n);
    int prev = -1;
    for (int i = lo.first; i < lo.n; i += lo.spacing) {
        const cplx hi = y.data[(size_t)i] / lo.pilot_amplitude;
        h[(size_t)i] = hi;
        if (prev < 0) {
            for (int j = 0; j < i; ++j) h[(size_t)j] = hi;  // hold before the first pilot
        } else {
            const cplx hp = h[(size_t)prev];
            for (int j = prev + 1; j < i; ++j) {
                const double a = (double)(j - prev) / (double)(i - prev);
                h[(size_t)j] = (1.0 - a) * hp + a * hi;
            }
        }
        prev = i;
    }
    for (int j = prev + 1; j < lo.n; ++j) h[(size_t)j] = h[(size_t)prev];  // hold after the last
    return h;
}

EqualizerOutput comb_equalize(const DDFrame& y, const std::vector<cplx>& h_hat, double noise_var,
                              double symbol_energy, const CombLayout& lo) {
    if (y.m != 1 || y.n != lo.n || (int)h_hat.size() != lo.n)
        throw std::invalid_argument("comb_equalize: size mismatch");
    if (noise_var < 0.0 || symbol_energy <= 0.0)
        throw std::invalid_argument("comb_equalize: need noise_var >= 0 and symbol_energy > 0");

    EqualizerOutput out;
    out.soft = DDFrame(1, lo.n);
    out.post_mse.assign((size_t)lo.n, symbol_energy);
    out.post_sinr.assign((size_t)lo.n, 0.0);
    for (int i = 0; i < lo.n; ++i) {
        if (lo.is_pilot(i)) continue;
        const cplx h = h_hat[(size_t)i];
        const double den = symbol_energy * std::norm(h) + noise_var;
        if (den <= 0.0) continue;  // dead bin under zero noise: estimate stays 0
        out.soft.data[(size_t)i] = symbol_energy * std::conj(h) * y.data[(size_t)i] / den;
        double mse = symbol_energy - symbol_energy * symbol_energy * std::norm(h) / den;
        mse = std::clamp(mse, 1e-300, symbol_energy);
        out.post_mse[(size_t)i] = mse;
        out.post_sinr[(size_t)i] = symbol_energy / mse - 1.0;
    }
    return out;
}

}  // namespace ddmodem
