#include "ddmodem/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ddmodem/dd_transforms.hpp"

namespace ddmodem {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    double half = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half / k) * (half / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double kaiser(double frac_of_half_width, double beta) {
    double t = 1.0 - frac_of_half_width * frac_of_half_width;
    if (t <= 0.0) return 0.0;
    return bessel_i0(beta * std::sqrt(t)) / bessel_i0(beta);
}

}  // namespace

double PathSet::total_power() const {
    double p = 0.0;
    for (const auto& path : paths) p += std::norm(path.gain);
    return p;
}

double PathSet::max_delay_s() const {
    double d = 0.0;
    for (const auto& path : paths) d = std::max(d, path.delay_s);
    return d;
}

double PathSet::max_abs_doppler_hz() const {
    double v = 0.0;
    for (const auto& path : paths) v = std::max(v, std::abs(path.doppler_hz));
    return v;
}

TdlProfile TdlProfile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("TdlProfile: cannot open " + path);
    TdlProfile prof;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "name") {
            ls >> prof.name;
        } else if (first == "delay_scale_ns") {
            double ns;
            ls >> ns;
            prof.delay_scale_s = ns * 1e-9;
        } else if (first == "los") {
            int flag;
            ls >> flag;
            prof.has_los = flag != 0;
        } else {
            Tap t;
            t.norm_delay = std::stod(first);
            if (!(ls >> t.power_db))
                throw std::runtime_error("TdlProfile: malformed tap line in " + path);
            if (ls >> t.rician_k_db) t.los = true;
            prof.taps.push_back(t);
        }
    }
    if (prof.taps.empty()) throw std::runtime_error("TdlProfile: no taps in " + path);
    // Normalize total tap power to one.
    double total = 0.0;
    for (const auto& t : prof.taps) total += std::pow(10.0, t.power_db / 10.0);
    double off_db = 10.0 * std::log10(total);
    for (auto& t : prof.taps) t.power_db -= off_db;
    return prof;
}

PathSet draw_tdl_realization(const TdlProfile& prof, double delay_scale_s, double nu_max_hz,
                             std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, two_pi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PathSet ps;
    ps.paths.reserve(prof.taps.size());
    for (const auto& t : prof.taps) {
        double p = std::pow(10.0, t.power_db / 10.0);
        double theta = angle(rng);
        cplx g;
        if (t.los) {
            // Rician tap: fixed-magnitude component at a random phase plus a
            // diffuse part, split by the K factor.
            double k_lin = std::pow(10.0, t.rician_k_db / 10.0);
            double los_amp = std::sqrt(p * k_lin / (k_lin + 1.0));
            double diff_std = std::sqrt(p / (k_lin + 1.0) / 2.0);
            double phi = angle(rng);
            g = std::polar(los_amp, phi) + cplx{diff_std * gauss(rng), diff_std * gauss(rng)};
        } else {
            double s = std::sqrt(p / 2.0);
            g = cplx{s * gauss(rng), s * gauss(rng)};
        }
        ps.paths.push_back({g, t.norm_delay * delay_scale_s, nu_max_hz * std::cos(theta)});
    }
    return ps;
}

TimeSamples apply_channel(const TimeSamples& x, const PathSet& ps, const DelayKernel& dk) {
    if (x.rate_hz <= 0) throw std::invalid_argument("apply_channel: sample rate must be set");
    const double rate = x.rate_hz;
    const int w = dk.half_width;
    const long len = static_cast<long>(x.data.size());

    // Positive delays extend the tail; negative delays (advances, used by the
    // kernel self-tests) extend the head.
    long tail = 0, head = 0;
    for (const auto& p : ps.paths) {
        double d = p.delay_s * rate;
        long di = static_cast<long>(std::floor(d));
        bool fractional = std::abs(d - std::round(d)) > 1e-9;
        long reach = fractional ? w + 1 : 0;
        tail = std::max(tail, di + reach);
        head = std::max(head, -di + reach);
    }

    TimeSamples out;
    out.rate_hz = rate;
    out.offset = x.offset - head;
    out.data.assign(len + head + tail, cplx{0.0, 0.0});

    std::vector<double> ker(2 * w + 1);
    for (const auto& p : ps.paths) {
        double d = p.delay_s * rate;
        long di;
        bool fractional;
        if (std::abs(d - std::round(d)) <= 1e-9) {
            di = std::lround(d);
            fractional = false;
        } else {
            di = static_cast<long>(std::floor(d));
            fractional = true;
            double frac = d - di;
            for (int j = -w; j <= w; ++j)
                ker[j + w] = sinc(j + frac) * kaiser((j + frac) / w, dk.kaiser_beta);
        }
        for (long q = 0; q < static_cast<long>(out.data.size()); ++q) {
            long m0 = q - head - di;
            cplx v;
            if (!fractional) {
                if (m0 < 0 || m0 >= len) continue;
                v = x.data[m0];
            } else {
                cplx acc = 0.0;
                long jlo = std::max<long>(-w, -m0);
                long jhi = std::min<long>(w, len - 1 - m0);
                for (long j = jlo; j <= jhi; ++j) acc += ker[j + w] * x.data[m0 + j];
                v = acc;
            }
            double t_abs = static_cast<double>(q + out.offset) / rate;
            out.data[q] += p.gain * v * std::polar(1.0, two_pi * p.doppler_hz * (t_abs - p.delay_s));
        }
    }
    return out;
}

TimeSamples add_awgn(const TimeSamples& x, double tsnr_db, double signal_power,
                     std::mt19937_64& rng) {
    TimeSamples out = x;
    if (std::isinf(tsnr_db)) return out;
    double var = signal_power * std::pow(10.0, -tsnr_db / 10.0);
    double s = std::sqrt(var / 2.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (cplx& c : out.data) c += cplx{s * gauss(rng), s * gauss(rng)};
    return out;
}

DDTapList effective_dd_channel(const std::function<DDFrame(const DDFrame&)>& chain, int m, int n,
                               double prune_db) {
    const long mn = static_cast<long>(m) * n;
    const int kc = static_cast<int>(((m + 1) / 2) % m);
    const int lc = static_cast<int>(((n + 1) / 2) % n);
    DDFrame pilot(m, n);
    pilot.at(kc, lc) = 1.0;
    DDFrame y = chain(pilot);
    if (y.m != m || y.n != n)
        throw std::runtime_error("effective_dd_channel: chain returned a mismatched frame");

    DDTapList taps;
    double peak = 0.0;
    for (int kk = -(m / 2); kk < m - m / 2; ++kk) {
        for (int ll = -(n / 2); ll < n - n / 2; ++ll) {
            cplx g = qp_extend(y, kc + kk, lc + ll) *
                     unit_root(-static_cast<long>(ll) * kc, mn);
            taps.push_back({kk, ll, g});
            peak = std::max(peak, std::abs(g));
        }
    }
    double floor_amp = peak * std::pow(10.0, prune_db / 20.0);
    DDTapList kept;
    for (const auto& t : taps)
        if (std::abs(t.gain) > floor_amp) kept.push_back(t);
    std::sort(kept.begin(), kept.end(), [](const DDTap& a, const DDTap& b) {
        return a.k != b.k ? a.k < b.k : a.l < b.l;
    });
    return kept;
}

namespace {

// Doppler-domain window pairing: receive window [0, t) against transmit
// window [-t_cp, t), both of amplitude 1/sqrt(t), offset by u in time and b
// in frequency.
cplx window_pair(double b, double u, double t, double t_cp) {
    double r_lo = std::max(-u, -t_cp);
    double r_hi = std::min(t - u, t);
    if (r_lo >= r_hi) return 0.0;
    if (std::abs(b) < 1e-15) return (r_hi - r_lo) / t;
    cplx jb(0.0, -two_pi * b);
    return (std::exp(jb * r_hi) - std::exp(jb * r_lo)) / (jb * t);
}

}  // namespace

cplx analytic_dd_tap(const PathSet& ps, const AnalyticChainSpec& cs, int k, int l) {
    const double b = cs.b_hz, t = cs.t_s;
    const double tau = k / b, nu = l / t;
    cplx total = 0.0;
    for (const auto& p : ps.paths) {
        // Integration support is set by the window pairing, plus a little
        // margin for the pulse tails.
        double lo = -t - p.delay_s - 4.0 / b;
        double hi = t + cs.t_cp_s - p.delay_s + 4.0 / b;
        double step = 1.0 / (8.0 * b);
        long npts = static_cast<long>(std::ceil((hi - lo) / step));
        if (npts % 2 == 1) ++npts;  // Simpson needs an even interval count
        step = (hi - lo) / npts;
        cplx acc = 0.0;
        for (long i = 0; i <= npts; ++i) {
            double tt = lo + i * step;
            double du = tau - p.delay_s - tt;
            cplx f = b * sinc(b * tt) * sinc(b * du) *
                     std::polar(1.0, two_pi * nu * du) *
                     window_pair(nu - p.doppler_hz, tt + p.delay_s, t, cs.t_cp_s);
            double wgt = (i == 0 || i == npts) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            acc += wgt * f;
        }
        total += p.gain * acc * (step / 3.0);
    }
    return total;
}

}  // namespace ddmodem
