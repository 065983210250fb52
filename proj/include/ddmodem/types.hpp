#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ddmodem {

using cplx = std::complex<double>;

// Floor division and the matching nonnegative remainder, valid for negative
// arguments as well (C++ '/' truncates toward zero, which is not what grid
// wraparound needs).
inline long floor_div(long a, long b) {
    long q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline long pos_mod(long a, long b) {
    long r = a % b;
    return r < 0 ? r + (b < 0 ? -b : b) : r;
}

// exp(j 2 pi num / den) for integer num, den. The numerator is reduced
// modulo den first so large lattice indices lose no phase precision.
inline cplx unit_root(long num, long den) {
    return std::polar(1.0, 2.0 * std::numbers::pi *
                               static_cast<double>(pos_mod(num, den)) / static_cast<double>(den));
}

// Delay-Doppler frame: m delay bins by n Doppler bins, stored column-major
// so a fixed Doppler bin is contiguous in delay.
struct DDFrame {
    int m = 0;
    int n = 0;
    std::vector<cplx> data;

    DDFrame() = default;
    DDFrame(int m_, int n_) : m(m_), n(n_), data(static_cast<size_t>(m_) * n_) {
        if (m_ <= 0 || n_ <= 0)
            throw std::invalid_argument("DDFrame: grid dimensions must be positive");
    }

    cplx& at(int k, int l) { return data[static_cast<size_t>(k) + static_cast<size_t>(m) * l]; }
    const cplx& at(int k, int l) const {
        return data[static_cast<size_t>(k) + static_cast<size_t>(m) * l];
    }
    int size() const { return m * n; }
};

// Frequency-domain symbol vector (one value per subcarrier).
using FreqSymbols = std::vector<cplx>;

// Baseband sample stream. offset is the absolute index of data[0] on the
// receiver's sampling grid; a cyclic-prefixed symbol starts at a negative
// offset so that its body occupies indices [0, K).
struct TimeSamples {
    std::vector<cplx> data;
    long offset = 0;
    double rate_hz = 0.0;
};

// One integer-lattice delay-Doppler tap.
struct DDTap {
    int k = 0;
    int l = 0;
    cplx gain;
};
using DDTapList = std::vector<DDTap>;

}  // namespace ddmodem
