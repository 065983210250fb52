#include "ddmodem/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace ddmodem::fft {
namespace {

// FFTW plan creation is not thread-safe, execution on distinct buffers is.
// Plans are cached per size, created once under a lock with FFTW_ESTIMATE
// (deterministic algorithm choice) and FFTW_UNALIGNED so they can run on
// arbitrary caller buffers via fftw_execute_dft.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

std::mutex g_plan_mutex;
std::map<int, PlanPair>& plan_cache() {
    static std::map<int, PlanPair> cache;
    return cache;
}

PlanPair get_plans(int k) {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto& cache = plan_cache();
    auto it = cache.find(k);
    if (it != cache.end()) return it->second;
    std::vector<cplx> a(k), b(k);
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(k, reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.inv = fftw_plan_dft_1d(k, reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(k, p);
    return p;
}

void run(const cplx* in, cplx* out, int k, bool forward_dir) {
    if (k <= 0) throw std::invalid_argument("fft: size must be positive");
    if (k == 1) {
        out[0] = in[0];
        return;
    }
    PlanPair p = get_plans(k);
    // The cached plans are out-of-place; feed in-place requests through a
    // scratch copy of the input.
    std::vector<cplx> scratch;
    const cplx* src = in;
    if (in == out) {
        scratch.assign(in, in + k);
        src = scratch.data();
    }
    fftw_execute_dft(forward_dir ? p.fwd : p.inv,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(src)),
                     reinterpret_cast<fftw_complex*>(out));
    double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (int i = 0; i < k; ++i) out[i] *= scale;
}

}  // namespace

void forward(const cplx* in, cplx* out, int k) { run(in, out, k, true); }
void inverse(const cplx* in, cplx* out, int k) { run(in, out, k, false); }

std::vector<cplx> forward(const std::vector<cplx>& x) {
    std::vector<cplx> y(x.size());
    forward(x.data(), y.data(), static_cast<int>(x.size()));
    return y;
}

std::vector<cplx> inverse(const std::vector<cplx>& x) {
    std::vector<cplx> y(x.size());
    inverse(x.data(), y.data(), static_cast<int>(x.size()));
    return y;
}

}  // namespace ddmodem::fft
