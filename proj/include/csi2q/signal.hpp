#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace csi2q {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

constexpr int kNumSubcarriers = 52;  // occupied subcarriers, DC excluded
constexpr int kPreambleLen = 320;    // L-STF + L-LTF at 20 Msps
constexpr int kFftSize = 64;

class SignalError : public std::runtime_error {
public:
    explicit SignalError(const std::string& msg) : std::runtime_error(msg) {}
};

bool all_finite(const CVec& x);

// Discrete Fourier transform, direct evaluation.
// Forward: X[m] = sum_k x[k] exp(-j 2 pi k m / n).
// Inverse applies the conjugate kernel and 1/n scaling.
CVec dft(const CVec& x, bool inverse = false);

// Guarded division a / b computed as a * conj(b) / |b|^2.
// Throws SignalError when |b| < eps; callers decide frame disposal.
cplx complex_divide(const cplx& a, const cplx& b, double eps);

// sqrt(mean |x|^2) over the frame
double rms(const CVec& x);

} // namespace csi2q
