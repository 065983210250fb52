#include "ddmodem/ofdm.hpp"

#include "ddmodem/fft.hpp"

namespace ddmodem {

void OfdmConfig::validate() const {
    if (k <= 0) throw std::invalid_argument("OfdmConfig: subcarrier count must be positive");
    if (scs_hz <= 0) throw std::invalid_argument("OfdmConfig: subcarrier spacing must be positive");
    if (cp_samples < 0 || cp_samples > k)
        throw std::invalid_argument("OfdmConfig: cyclic prefix must be in [0, k] samples");
}

TimeSamples ofdm_modulate(const FreqSymbols& s, const OfdmConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(s.size()) != cfg.k)
        throw std::invalid_argument("ofdm_modulate: symbol count does not match subcarrier count");
    std::vector<cplx> body = fft::inverse(s);
    TimeSamples out;
    out.rate_hz = cfg.b_hz();
    out.offset = -cfg.cp_samples;
    out.data.reserve(cfg.symbol_samples());
    out.data.insert(out.data.end(), body.end() - cfg.cp_samples, body.end());
    out.data.insert(out.data.end(), body.begin(), body.end());
    return out;
}

FreqSymbols ofdm_demodulate(const TimeSamples& r, const OfdmConfig& cfg) {
    cfg.validate();
    long start = -r.offset;  // index within data of absolute sample 0
    if (start < 0 || start + cfg.k > static_cast<long>(r.data.size()))
        throw std::invalid_argument("ofdm_demodulate: samples do not cover the symbol body");
    std::vector<cplx> body(r.data.begin() + start, r.data.begin() + start + cfg.k);
    return fft::forward(body);
}

}  // namespace ddmodem
