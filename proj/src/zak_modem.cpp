#include "ddmodem/zak_modem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ddmodem/dd_transforms.hpp"

namespace ddmodem {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Unit-energy root-raised-cosine pulse, symbol period 1, roll-off beta.
double rrc_pulse(double t, double beta) {
    const double at = std::abs(t);
    if (at < 1e-10) return 1.0 - beta + 4.0 * beta / kPi;
    if (beta > 0.0 && std::abs(at - 1.0 / (4.0 * beta)) < 1e-8) {
        const double c = kPi / (4.0 * beta);
        return beta / std::sqrt(2.0) *
               ((1.0 + 2.0 / kPi) * std::sin(c) + (1.0 - 2.0 / kPi) * std::cos(c));
    }
    const double num = std::sin(kPi * t * (1.0 - beta)) +
                       4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
    const double den = kPi * t * (1.0 - 16.0 * beta * beta * t * t);
    return num / den;
}

double delay_proto_value(const FilterSpec& spec, double t) {
    switch (spec.delay_proto) {
        case DelayProto::sinc:
            return sinc(t);
        case DelayProto::rrc:
            return rrc_pulse(t, spec.delay_param);
        case DelayProto::gaussian_sinc: {
            const double a = spec.delay_param * t;
            return sinc(t) * std::exp(-a * a);
        }
    }
    return 0.0;
}

// Raised-cosine fade over the outer edge_taper fraction of the kernel span.
double edge_taper_value(double u, double frac) {
    if (frac <= 0.0) return 1.0;
    const double knee = 1.0 - frac;
    if (u <= knee) return 1.0;
    if (u >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * (u - knee) / frac));
}

// Delay FIR kernel at the working rate b*os, half-width spec.half_width*os,
// normalized so the tap energy equals os (matched tx/rx pair then has unit
// composite gain).
std::vector<double> build_delay_kernel(const FilterSpec& spec, int os) {
    const int w = spec.half_width * os;
    std::vector<double> k(2 * w + 1);
    double e = 0.0;
    for (int j = -w; j <= w; ++j) {
        const double v = delay_proto_value(spec, double(j) / os) *
                         edge_taper_value(std::abs(double(j)) / w, spec.edge_taper);
        k[j + w] = v;
        e += v * v;
    }
    const double scale = std::sqrt(double(os) / e);
    for (double& v : k) v *= scale;
    return k;
}

// Packet time window sampled at working-rate index t; period p = mn*os
// samples. rect is exactly 1 on [0,p). The rrc window is the square-root
// raised-cosine profile centered on the packet, chosen so the matched product
// folds back to exactly 1 under periodization. gaussian_sinc gives erf-smoothed
// edges.
struct TimeWindow {
    DopplerProto proto;
    double param;
    long p;
    int os;

    // support [lo, hi) in working-rate samples
    long lo() const {
        switch (proto) {
            case DopplerProto::rect_window_sinc:
                return 0;
            case DopplerProto::rrc:
                return -(long)std::ceil(param * p / 2.0);
            case DopplerProto::gaussian_sinc:
                return -extent();
        }
        return 0;
    }
    long hi() const {
        switch (proto) {
            case DopplerProto::rect_window_sinc:
                return p;
            case DopplerProto::rrc:
                return p + (long)std::ceil(param * p / 2.0);
            case DopplerProto::gaussian_sinc:
                return p + extent();
        }
        return p;
    }
    long extent() const {
        // erf(6) is 1 to ~1e-17; width parameter is param per rate-b sample
        const double g = param / os;
        return (long)std::ceil(6.0 / g);
    }
    double value(long t) const {
        switch (proto) {
            case DopplerProto::rect_window_sinc:
                return (t >= 0 && t < p) ? 1.0 : 0.0;
            case DopplerProto::rrc: {
                const double beta = param;
                const double c = p / 2.0;
                const double flat = (1.0 - beta) * p / 2.0;
                const double half = (1.0 + beta) * p / 2.0;
                const double d = std::abs(double(t) - c);
                if (d <= flat) return 1.0;
                if (d >= half) return 0.0;
                return std::cos(kPi * (d - flat) / (2.0 * beta * p));
            }
            case DopplerProto::gaussian_sinc: {
                const double g = param / os;
                return 0.5 * (std::erf(g * double(t)) - std::erf(g * (double(t) - p)));
            }
        }
        return 0.0;
    }
};

}  // namespace

void ZakConfig::validate() const {
    if (m < 1 || n < 1)
        throw std::invalid_argument("ZakConfig: grid dimensions must be positive");
    if (ofdm.k != m * n)
        throw std::invalid_argument("ZakConfig: ofdm.k (" + std::to_string(ofdm.k) +
                                    ") must equal m*n (" + std::to_string(m * n) + ")");
    if (num_symbols < 1)
        throw std::invalid_argument("ZakConfig: num_symbols must be positive");
    ofdm.validate();
}

TimeSamples zak_ofdm_tx(const DDFrame& frame, const ZakConfig& cfg) {
    cfg.validate();
    if (frame.m != cfg.m || frame.n != cfg.n)
        throw std::invalid_argument("zak_ofdm_tx: frame is " + std::to_string(frame.m) +
                                    "x" + std::to_string(frame.n) + ", config wants " +
                                    std::to_string(cfg.m) + "x" + std::to_string(cfg.n));
    return ofdm_modulate(idfzt(frame), cfg.ofdm);
}

DDFrame zak_ofdm_rx(const TimeSamples& r, const ZakConfig& cfg) {
    cfg.validate();
    return dfzt(ofdm_demodulate(r, cfg.ofdm), cfg.m, cfg.n);
}

TimeSamples assemble_subframe(const std::vector<DDFrame>& frames,
                              const ZakConfig& cfg) {
    cfg.validate();
    if ((int)frames.size() != cfg.num_symbols)
        throw std::invalid_argument("assemble_subframe: got " +
                                    std::to_string(frames.size()) + " frames, config wants " +
                                    std::to_string(cfg.num_symbols));
    const int sym = cfg.ofdm.symbol_samples();
    TimeSamples out;
    out.offset = -cfg.ofdm.cp_samples;
    out.rate_hz = cfg.ofdm.b_hz();
    out.data.reserve((size_t)cfg.num_symbols * sym);
    for (const DDFrame& f : frames) {
        TimeSamples t = zak_ofdm_tx(f, cfg);
        out.data.insert(out.data.end(), t.data.begin(), t.data.end());
    }
    return out;
}

std::vector<TimeSamples> split_subframe(const TimeSamples& r, const ZakConfig& cfg) {
    cfg.validate();
    const int sym = cfg.ofdm.symbol_samples();
    const long need_lo = -cfg.ofdm.cp_samples;
    const long need_hi = need_lo + (long)cfg.num_symbols * sym;
    if (r.offset > need_lo || r.offset + (long)r.data.size() < need_hi)
        throw std::invalid_argument("split_subframe: input covers [" +
                                    std::to_string(r.offset) + ", " +
                                    std::to_string(r.offset + (long)r.data.size()) +
                                    "), need [" + std::to_string(need_lo) + ", " +
                                    std::to_string(need_hi) + ")");
    std::vector<TimeSamples> out(cfg.num_symbols);
    for (int s = 0; s < cfg.num_symbols; ++s) {
        const long begin = need_lo + (long)s * sym - r.offset;
        out[s].offset = -cfg.ofdm.cp_samples;
        out[s].rate_hz = r.rate_hz;
        out[s].data.assign(r.data.begin() + begin, r.data.begin() + begin + sym);
    }
    return out;
}

void FilterSpec::validate() const {
    if (half_width < 1)
        throw std::invalid_argument("FilterSpec: half_width must be positive");
    if (edge_taper < 0.0 || edge_taper > 1.0)
        throw std::invalid_argument("FilterSpec: edge_taper must lie in [0, 1]");
    if (delay_proto == DelayProto::rrc && (delay_param <= 0.0 || delay_param > 1.0))
        throw std::invalid_argument("FilterSpec: rrc roll-off must lie in (0, 1]");
    if (delay_proto == DelayProto::gaussian_sinc && delay_param <= 0.0)
        throw std::invalid_argument("FilterSpec: gaussian_sinc width must be positive");
    if (doppler_proto == DopplerProto::rrc && (doppler_param <= 0.0 || doppler_param > 1.0))
        throw std::invalid_argument("FilterSpec: rrc roll-off must lie in (0, 1]");
    if (doppler_proto == DopplerProto::gaussian_sinc && doppler_param <= 0.0)
        throw std::invalid_argument("FilterSpec: gaussian_sinc width must be positive");
}

void UnconstrainedConfig::validate() const {
    if (m < 1 || n < 1)
        throw std::invalid_argument("UnconstrainedConfig: grid dimensions must be positive");
    if (b_hz <= 0.0)
        throw std::invalid_argument("UnconstrainedConfig: b_hz must be positive");
    if (guard_samples < 0)
        throw std::invalid_argument("UnconstrainedConfig: guard_samples must be >= 0");
    if (oversample < 1)
        throw std::invalid_argument("UnconstrainedConfig: oversample must be >= 1");
    filter.validate();
}

TimeSamples unconstrained_zak_tx(const DDFrame& frame, const UnconstrainedConfig& cfg) {
    cfg.validate();
    if (frame.m != cfg.m || frame.n != cfg.n)
        throw std::invalid_argument("unconstrained_zak_tx: frame is " +
                                    std::to_string(frame.m) + "x" + std::to_string(frame.n) +
                                    ", config wants " + std::to_string(cfg.m) + "x" +
                                    std::to_string(cfg.n));
    const int os = cfg.oversample;
    const long p = (long)cfg.mn() * os;
    const std::vector<cplx> body = idzt(frame);
    const std::vector<double> ker = build_delay_kernel(cfg.filter, os);
    const int w = cfg.filter.half_width * os;

    // One period of the filtered mn*os-periodic impulse train.
    std::vector<cplx> period(p, cplx(0.0, 0.0));
    for (int nn = 0; nn < cfg.mn(); ++nn) {
        const cplx v = body[nn];
        if (v == cplx(0.0, 0.0)) continue;
        const long center = (long)nn * os;
        for (int j = -w; j <= w; ++j) {
            long idx = (center + j) % p;
            if (idx < 0) idx += p;
            period[idx] += v * ker[j + w];
        }
    }

    const TimeWindow win{cfg.filter.doppler_proto, cfg.filter.doppler_param, p, os};
    const long lo = win.lo(), hi = win.hi();
    const long guard = (long)cfg.guard_samples * os;
    const double scale = 1.0 / std::sqrt(double(os));

    TimeSamples out;
    out.rate_hz = cfg.b_hz * os;
    out.offset = lo - guard;
    out.data.assign((size_t)(hi - lo + guard), cplx(0.0, 0.0));
    for (long t = lo; t < hi; ++t) {
        long idx = t % p;
        if (idx < 0) idx += p;
        out.data[(size_t)(t - out.offset)] = period[idx] * (win.value(t) * scale);
    }
    return out;
}

DDFrame unconstrained_zak_rx(const TimeSamples& r, const UnconstrainedConfig& cfg) {
    cfg.validate();
    const int os = cfg.oversample;
    if (r.rate_hz > 0.0 && std::abs(r.rate_hz - cfg.b_hz * os) > 1e-6 * cfg.b_hz)
        throw std::invalid_argument("unconstrained_zak_rx: sample rate mismatch");
    const long p = (long)cfg.mn() * os;
    const std::vector<double> ker = build_delay_kernel(cfg.filter, os);
    const int w = cfg.filter.half_width * os;
    const TimeWindow win{cfg.filter.doppler_proto, cfg.filter.doppler_param, p, os};
    const double scale = 1.0 / std::sqrt(double(os));

    auto r_at = [&](long t) -> cplx {
        const long idx = t - r.offset;
        if (idx < 0 || idx >= (long)r.data.size()) return cplx(0.0, 0.0);
        return r.data[(size_t)idx];
    };

    // Matched filter (the delay prototypes are real and even, so the receive
    // kernel equals the transmit kernel), window, and downsample in one pass:
    // only frame-grid positions inside the window support are ever needed.
    const long n_lo = (long)std::floor(double(win.lo()) / os);
    const long n_hi = (long)std::ceil(double(win.hi()) / os);
    std::vector<cplx> folded((size_t)cfg.mn(), cplx(0.0, 0.0));
    const bool in_period = n_lo >= 0 && n_hi <= cfg.mn();
    for (long nn = n_lo; nn < n_hi; ++nn) {
        const long t = nn * os;
        const double wv = win.value(t);
        if (wv == 0.0) continue;
        cplx acc(0.0, 0.0);
        for (int j = -w; j <= w; ++j) acc += ker[j + w] * r_at(t - j);
        acc *= wv * scale;
        if (in_period) {
            // rectangular window: support already lies in one period, so
            // periodization has nothing to fold
            folded[(size_t)nn] = acc;
        } else {
            long idx = nn % cfg.mn();
            if (idx < 0) idx += cfg.mn();
            folded[(size_t)idx] += acc;
        }
    }
    return dzt(folded, cfg.m, cfg.n);
}

cplx unconstrained_identity_gain(const UnconstrainedConfig& cfg) {
    cfg.validate();
    const int os = cfg.oversample;
    const long p = (long)cfg.mn() * os;
    const std::vector<double> ker = build_delay_kernel(cfg.filter, os);
    double rho0 = 0.0;
    for (double v : ker) rho0 += v * v;
    rho0 /= os;
    const TimeWindow win{cfg.filter.doppler_proto, cfg.filter.doppler_param, p, os};
    double wsum = 0.0;
    for (long t = win.lo(); t < win.hi(); ++t) {
        const double v = win.value(t);
        wsum += v * v;
    }
    return cplx(rho0 * wsum / double(p), 0.0);
}

double delay_kernel_truncation_db(const FilterSpec& spec, int oversample) {
    spec.validate();
    const int os = oversample < 1 ? 1 : oversample;
    const long w = (long)spec.half_width * os;
    const long far = 64 * w;
    double inside = 0.0, outside = 0.0;
    for (long j = -far; j <= far; ++j) {
        const double v = delay_proto_value(spec, double(j) / os);
        (std::abs(j) <= w ? inside : outside) += v * v;
    }
    if (outside <= 0.0 || inside + outside == 0.0) return -300.0;
    const double db = 10.0 * std::log10(outside / (inside + outside));
    return db < -300.0 ? -300.0 : db;
}

}  // namespace ddmodem
