#pragma once

#include "ddmodem/types.hpp"

namespace ddmodem {

// Quasi-periodic read of a frame at arbitrary integer (k, l).  A shift of the
// delay index by a full period picks up a Doppler-dependent phase,
//   value(k + a*m, l + b*n) = exp(j 2 pi a l / n) * value(k, l),
// while the Doppler axis is plainly periodic.  The frame itself only stores
// the fundamental domain [0,m) x [0,n).
cplx qp_extend(const DDFrame& f, long k, long l);

// Time-domain synthesis: sums the quasi-periodic extension over one Doppler
// period per output sample.  Output has m*n samples and is the fundamental
// period of an m*n-periodic sequence.
std::vector<cplx> idzt(const DDFrame& f);

// Time-domain analysis, inverse of idzt: per delay bin, a Doppler-resolving
// transform over the n aliases spaced m samples apart.
DDFrame dzt(const std::vector<cplx>& x, int m, int n);

// Frequency-domain synthesis: maps a frame directly to m*n subcarrier
// symbols.  Implemented with the per-Doppler-bin fast path (phase ramp plus
// an m-point transform per bin), which costs O(mn log m).
FreqSymbols idfzt(const DDFrame& f);

// Frequency-domain analysis, inverse of idfzt.  Implemented as a full-size
// inverse DFT followed by dzt, which costs O(mn log mn).
DDFrame dfzt(const FreqSymbols& s, int m, int n);

// Applies a sparse set of delay-Doppler taps to a frame:
//   out[k,l] = sum_taps gain * f_qp[k - tk, l - tl] * exp(j 2 pi tl (k - tk) / (mn))
// where f_qp is the quasi-periodic extension.  The result is again
// quasi-periodic, so only the fundamental domain is returned.
DDFrame twisted_convolve(const DDTapList& taps, const DDFrame& f);

// Cascade of two tap sets (first b, then a) as a single tap set acting on
// frames over an mn-sample period.  Taps live on the integer lattice; the
// cross phase uses the same mn-periodic convention as twisted_convolve.
DDTapList twisted_compose(const DDTapList& a, const DDTapList& b, int mn);

// Unitary DFT pair on plain vectors, 1/sqrt(K) in both directions.
std::vector<cplx> dft(const std::vector<cplx>& x);
std::vector<cplx> idft(const std::vector<cplx>& s);

}  // namespace ddmodem
