#include "csi2q/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace csi2q {

std::vector<double> unwrap_phases(const std::vector<double>& phases) {
    if (phases.size() < 2) throw SignalError("unwrap_phases: need at least 2 values");
    std::vector<double> out(phases.size());
    out[0] = phases[0];
    for (size_t i = 1; i < phases.size(); ++i) {
        double delta = phases[i] - phases[i - 1];
        double adj = std::remainder(delta, 2.0 * M_PI);
        if (adj <= -M_PI) adj += 2.0 * M_PI;
        out[i] = out[i - 1] + adj;
    }
    return out;
}

namespace {
inline int sgn(double x) { return (x > 0.0) - (x < 0.0); }
} // namespace

std::vector<int> detect_jitters(const std::vector<double>& unwrapped) {
    std::vector<int> jitters;
    const int n = static_cast<int>(unwrapped.size());
    if (n < 3) return jitters;
    // g[i] = u[i] - u[i-1], defined for i = 1..n-1
    auto g = [&](int i) { return unwrapped[i] - unwrapped[i - 1]; };
    for (int i = 1; i <= n - 2; ++i) {
        int si = sgn(g(i));
        if (si == 0) continue;
        int snext = sgn(g(i + 1));
        if (i == 1) {
            if (snext != 0 && snext != si) jitters.push_back(i);
            continue;
        }
        int sprev = sgn(g(i - 1));
        if (sprev != 0 && sprev == snext && si != sprev) jitters.push_back(i);
    }
    return jitters;
}

ProcessedCsi correct_jitters(const CsiMeasurement& csi, int max_jitters) {
    if (csi.h.size() < 3) throw SignalError("correct_jitters: frame too short");
    if (!all_finite(csi.h)) throw SignalError("correct_jitters: non-finite CSI");

    std::vector<double> phase(csi.h.size());
    for (size_t k = 0; k < csi.h.size(); ++k) phase[k] = std::arg(csi.h[k]);
    std::vector<double> unwrapped = unwrap_phases(phase);
    std::vector<int> jitters = detect_jitters(unwrapped);

    ProcessedCsi out;
    out.device_id = csi.device_id;
    out.jitter_count = static_cast<int>(jitters.size());
    if (out.jitter_count > max_jitters) {
        out.discarded = true;
        out.discard_reason = "too many phase jitters";
        out.h_tilde = csi.h; // untouched
        return out;
    }

    std::vector<bool> is_jitter(csi.h.size(), false);
    for (int j : jitters) is_jitter[j] = true;

    std::vector<double> corrected = unwrapped;
    const int n = static_cast<int>(csi.h.size());
    for (int j : jitters) {
        int lo = j - 1;
        while (lo >= 0 && is_jitter[lo]) --lo;
        int hi = j + 1;
        while (hi < n && is_jitter[hi]) ++hi;
        if (lo >= 0 && hi < n) {
            double frac = static_cast<double>(j - lo) / static_cast<double>(hi - lo);
            corrected[j] = unwrapped[lo] + frac * (unwrapped[hi] - unwrapped[lo]);
        } else if (lo >= 0) {
            corrected[j] = corrected[lo];
        } else if (hi < n) {
            corrected[j] = unwrapped[hi];
        }
    }

    out.h_tilde.resize(csi.h.size());
    for (int k = 0; k < n; ++k) {
        double amp = std::abs(csi.h[k]);
        out.h_tilde[k] = std::polar(amp, corrected[k]);
    }
    return out;
}

ProcessedCsi cyclic_shift_division(const CVec& h, double eps, uint32_t device_id) {
    if (h.size() < 2) {
        throw SignalError("cyclic_shift_division: need at least 2 subcarriers");
    }
    ProcessedCsi out;
    out.device_id = device_id;
    out.h_tilde.resize(h.size());
    try {
        out.h_tilde[0] = complex_divide(h[0], h[1], eps);
        for (size_t k = 1; k < h.size(); ++k) {
            out.h_tilde[k] = complex_divide(h[k], h[k - 1], eps);
        }
    } catch (const SignalError&) {
        out.discarded = true;
        out.discard_reason = "near-zero denominator in cyclic shift division";
        out.h_tilde.clear();
    }
    return out;
}

ProcessedCsi preprocess_frame(const CsiMeasurement& csi, const PreprocessConfig& config) {
    if (csi.h.size() != kNumSubcarriers) {
        throw SignalError("preprocess_frame: expected 52 subcarriers");
    }
    ProcessedCsi phase_stage = correct_jitters(csi, config.max_jitters);
    if (phase_stage.discarded) return phase_stage;

    const double eps = config.eps_rms_factor * rms(phase_stage.h_tilde);
    ProcessedCsi out = cyclic_shift_division(phase_stage.h_tilde, eps, csi.device_id);
    out.jitter_count = phase_stage.jitter_count;
    return out;
}

} // namespace csi2q
