#include "csi2q/signal.hpp"

#include <cmath>

namespace csi2q {

bool all_finite(const CVec& x) {
    for (const auto& s : x) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
    }
    return true;
}

CVec dft(const CVec& x, bool inverse) {
    const size_t n = x.size();
    if (n == 0) throw SignalError("dft: empty input");

    // precompute one period of twiddles; indices reduced mod n
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> tw(n);
    for (size_t i = 0; i < n; ++i) {
        double ang = sign * 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
        tw[i] = cplx(std::cos(ang), std::sin(ang));
    }

    CVec out(n);
    for (size_t m = 0; m < n; ++m) {
        cplx acc(0.0, 0.0);
        size_t idx = 0;
        for (size_t k = 0; k < n; ++k) {
            acc += x[k] * tw[idx];
            idx += m;
            if (idx >= n) idx -= n;
        }
        out[m] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

cplx complex_divide(const cplx& a, const cplx& b, double eps) {
    const double mag2 = std::norm(b);
    if (std::sqrt(mag2) < eps) {
        throw SignalError("complex_divide: near-zero denominator");
    }
    return a * std::conj(b) / mag2;
}

double rms(const CVec& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : x) acc += std::norm(s);
    return std::sqrt(acc / static_cast<double>(x.size()));
}

} // namespace csi2q
