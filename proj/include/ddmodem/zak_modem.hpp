#pragma once

#include <vector>

#include "ddmodem/ofdm.hpp"
#include "ddmodem/types.hpp"

namespace ddmodem {

// Delay-Doppler modem riding on the multicarrier modulator: an m x n frame is
// precoded to k = m*n subcarrier symbols, transmitted as an ordinary
// cyclic-prefixed symbol, and post-processed back to the delay-Doppler grid at
// the receiver. With m = 1 the precoder is the identity and the chain is the
// plain multicarrier modem.
struct ZakConfig {
    int m = 1;
    int n = 48;
    OfdmConfig ofdm;       // ofdm.k must equal m * n
    int num_symbols = 1;   // packets per subframe

    void validate() const;
};

// tx = ofdm_modulate(idfzt(frame)). Body samples equal idzt(frame).
TimeSamples zak_ofdm_tx(const DDFrame& frame, const ZakConfig& cfg);

// rx = dfzt(ofdm_demodulate(r)). r must cover the symbol body at local
// absolute indices [0, k).
DDFrame zak_ofdm_rx(const TimeSamples& r, const ZakConfig& cfg);

// Concatenates the per-packet tx outputs, prefixes included, into one
// contiguous stream. The stream starts at offset -cp_samples, so packet s has
// its body at absolute [s*(k+cp), s*(k+cp)+k). Total length is
// num_symbols * (k + cp).
TimeSamples assemble_subframe(const std::vector<DDFrame>& frames,
                              const ZakConfig& cfg);

// Exact inverse of assemble_subframe on sample boundaries. Each returned
// block is re-based to its own time origin (offset -cp_samples) so it can be
// fed straight to zak_ofdm_rx; sample values are untouched, so any phase
// accumulated over absolute time stays in the data. Input may extend past the
// subframe (channel tails); the excess is ignored.
std::vector<TimeSamples> split_subframe(const TimeSamples& r,
                                        const ZakConfig& cfg);

// ---------------------------------------------------------------------------
// Unconstrained chain: one long packet shaped by explicit delay/Doppler
// filters instead of a cyclic prefix.
// ---------------------------------------------------------------------------

enum class DelayProto { sinc, rrc, gaussian_sinc };
enum class DopplerProto { rect_window_sinc, rrc, gaussian_sinc };

// Factorizable pulse pair: a delay-domain FIR prototype applied at the sample
// rate, and a Doppler-domain prototype realized as its dual time window over
// the packet. rrc takes a roll-off in (0,1]; gaussian_sinc takes a width
// parameter in sample units. The FIR kernel is truncated at half_width
// samples (times the oversample factor) with a raised-cosine taper over the
// outer edge_taper fraction; the receive kernel is the conjugate time
// reversal of the transmit kernel.
struct FilterSpec {
    DelayProto delay_proto = DelayProto::sinc;
    double delay_param = 0.25;
    DopplerProto doppler_proto = DopplerProto::rect_window_sinc;
    double doppler_param = 0.25;
    int half_width = 64;
    double edge_taper = 0.1;

    void validate() const;
};

struct UnconstrainedConfig {
    int m = 48;
    int n = 15;
    double b_hz = 720e3;
    int guard_samples = 0;  // leading zeros, in rate-b samples
    int oversample = 1;     // integer oversampling for non-sinc prototypes
    FilterSpec filter;

    int mn() const { return m * n; }
    void validate() const;
};

// tx: the frame's idzt body, treated as one period of an mn-periodic impulse
// train, is interpolated by the delay kernel, multiplied by the packet time
// window, and preceded by guard_samples zeros.
TimeSamples unconstrained_zak_tx(const DDFrame& frame,
                                 const UnconstrainedConfig& cfg);

// rx: matched delay filter, matched time window, sampling back to the frame
// grid, periodization to one mn period (a no-op for the rectangular window,
// kept as an explicit branch), then dzt.
DDFrame unconstrained_zak_rx(const TimeSamples& r,
                             const UnconstrainedConfig& cfg);

// Gain of rx(tx(.)) over an identity channel: delay-kernel autocorrelation at
// lag zero times the mean of the tx/rx window product over one period.
cplx unconstrained_identity_gain(const UnconstrainedConfig& cfg);

// Energy fraction (dB) of the untruncated delay prototype falling outside the
// kernel support; the test suites print this once at startup so the
// truncation error is measured rather than hidden. Returns -300 when the
// prototype is exactly supported (sinc family at oversample 1).
double delay_kernel_truncation_db(const FilterSpec& spec, int oversample);

}  // namespace ddmodem
