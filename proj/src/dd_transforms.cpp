#include "ddmodem/dd_transforms.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "ddmodem/fft.hpp"

namespace ddmodem {

cplx qp_extend(const DDFrame& f, long k, long l) {
    long kr = pos_mod(k, f.m);
    long lr = pos_mod(l, f.n);
    long q = floor_div(k, f.m);
    cplx v = f.at(static_cast<int>(kr), static_cast<int>(lr));
    if (q == 0) return v;
    return v * unit_root(q * lr, f.n);
}

std::vector<cplx> idzt(const DDFrame& f) {
    const int m = f.m, n = f.n;
    std::vector<cplx> out(static_cast<size_t>(m) * n);
    std::vector<cplx> row(n), syn(n);
    for (int k = 0; k < m; ++k) {
        for (int l = 0; l < n; ++l) row[l] = f.at(k, l);
        fft::inverse(row.data(), syn.data(), n);
        for (int q = 0; q < n; ++q) out[static_cast<size_t>(k) + static_cast<size_t>(q) * m] = syn[q];
    }
    return out;
}

DDFrame dzt(const std::vector<cplx>& x, int m, int n) {
    if (static_cast<int>(x.size()) != m * n)
        throw std::invalid_argument("dzt: sample count does not match m*n");
    DDFrame f(m, n);
    std::vector<cplx> g(n), spec(n);
    for (int k = 0; k < m; ++k) {
        for (int q = 0; q < n; ++q) g[q] = x[static_cast<size_t>(k) + static_cast<size_t>(q) * m];
        fft::forward(g.data(), spec.data(), n);
        for (int l = 0; l < n; ++l) f.at(k, l) = spec[l];
    }
    return f;
}

FreqSymbols idfzt(const DDFrame& f) {
    const int m = f.m, n = f.n;
    const long mn = static_cast<long>(m) * n;
    FreqSymbols s(static_cast<size_t>(mn));
    std::vector<cplx> z(m), w(m);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < m; ++k)
            z[k] = f.at(k, i) * unit_root(-static_cast<long>(i) * k, mn);
        fft::forward(z.data(), w.data(), m);
        for (int p = 0; p < m; ++p) s[static_cast<size_t>(i) + static_cast<size_t>(p) * n] = w[p];
    }
    return s;
}

DDFrame dfzt(const FreqSymbols& s, int m, int n) {
    if (static_cast<int>(s.size()) != m * n)
        throw std::invalid_argument("dfzt: symbol count does not match m*n");
    return dzt(fft::inverse(s), m, n);
}

DDFrame twisted_convolve(const DDTapList& taps, const DDFrame& f) {
    const long mn = static_cast<long>(f.m) * f.n;
    DDFrame out(f.m, f.n);
    for (const DDTap& t : taps) {
        for (int l = 0; l < f.n; ++l) {
            for (int k = 0; k < f.m; ++k) {
                cplx v = qp_extend(f, static_cast<long>(k) - t.k, static_cast<long>(l) - t.l);
                out.at(k, l) += t.gain * v * unit_root(static_cast<long>(t.l) * (k - t.k), mn);
            }
        }
    }
    return out;
}

DDTapList twisted_compose(const DDTapList& a, const DDTapList& b, int mn) {
    std::map<std::pair<int, int>, cplx> acc;
    for (const DDTap& ta : a) {
        for (const DDTap& tb : b) {
            cplx g = ta.gain * tb.gain * unit_root(static_cast<long>(ta.l) * tb.k, mn);
            acc[{ta.k + tb.k, ta.l + tb.l}] += g;
        }
    }
    DDTapList out;
    out.reserve(acc.size());
    for (const auto& [kl, g] : acc) out.push_back({kl.first, kl.second, g});
    return out;
}

std::vector<cplx> dft(const std::vector<cplx>& x) { return fft::forward(x); }
std::vector<cplx> idft(const std::vector<cplx>& s) { return fft::inverse(s); }

}  // namespace ddmodem
