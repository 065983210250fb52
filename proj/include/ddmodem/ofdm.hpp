#pragma once

#include "ddmodem/types.hpp"

namespace ddmodem {

// Multicarrier numerology. k subcarriers spaced scs_hz apart give a symbol
// body of k samples at rate b() = k * scs_hz; the cyclic prefix prepends the
// last cp_samples body samples.
struct OfdmConfig {
    int k = 48;
    double scs_hz = 15e3;
    int cp_samples = 0;

    double b_hz() const { return k * scs_hz; }
    double t_s() const { return 1.0 / scs_hz; }
    int symbol_samples() const { return k + cp_samples; }
    void validate() const;
};

// Subcarrier symbols to a cyclic-prefixed sample block. The block starts at
// offset -cp_samples so the body occupies absolute indices [0, k).
TimeSamples ofdm_modulate(const FreqSymbols& s, const OfdmConfig& cfg);

// Recovers subcarrier symbols from the body samples at absolute [0, k).
// The input must cover that range; anything else (prefix, channel tail) is
// ignored.
FreqSymbols ofdm_demodulate(const TimeSamples& r, const OfdmConfig& cfg);

}  // namespace ddmodem
