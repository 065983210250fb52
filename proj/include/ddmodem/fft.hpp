#pragma once

#include "ddmodem/types.hpp"

namespace ddmodem::fft {

// Unitary transform pair, both scaled by 1/sqrt(K):
//   forward:  out[i] = (1/sqrt(K)) sum_n in[n] exp(-j 2 pi n i / K)
//   inverse:  out[n] = (1/sqrt(K)) sum_i in[i] exp(+j 2 pi n i / K)
// In-place operation (in == out) is allowed.
void forward(const cplx* in, cplx* out, int k);
void inverse(const cplx* in, cplx* out, int k);

std::vector<cplx> forward(const std::vector<cplx>& x);
std::vector<cplx> inverse(const std::vector<cplx>& x);

}  // namespace ddmodem::fft
