#pragma once

#include "csi2q/signal.hpp"

#include <cstdint>

namespace csi2q {

struct CsiMeasurement {
    CVec h;                // 52 subcarrier estimates, ascending -26..-1,+1..+26
    uint32_t device_id = 0;
};

struct ProcessedCsi {
    CVec h_tilde;          // 52 cyclic-shift ratios (empty when discarded)
    int jitter_count = 0;
    bool discarded = false;
    std::string discard_reason;
    uint32_t device_id = 0;
};

struct PreprocessConfig {
    int max_jitters = 5;       // discard when jitter_count exceeds this
    double eps_rms_factor = 1e-9; // division guard: eps = factor * frame RMS
};

// Restore phase continuity: output[0] = input[0], consecutive differences
// in (-pi, pi], output congruent to input modulo 2*pi.
std::vector<double> unwrap_phases(const std::vector<double>& phases);

// Flag subcarrier i when the phase gradient into i opposes both neighboring
// gradients while those agree with each other (single-point jitter pattern).
// Gradient g_i = u[i] - u[i-1]; at the boundary (i = 1) only the following
// gradient is available and is used alone.
std::vector<int> detect_jitters(const std::vector<double>& unwrapped);

// Replace jittered phases by linear interpolation between the nearest
// non-jitter neighbors; amplitudes are untouched. Frames with more than
// max_jitters jitters come back flagged discarded with the input unchanged.
ProcessedCsi correct_jitters(const CsiMeasurement& csi, int max_jitters = 5);

// h~_k = h_k / h_{k-1} for k = 2..52, h~_1 = h_1 / h_2. Near-zero
// denominators (below eps) discard the frame.
ProcessedCsi cyclic_shift_division(const CVec& h, double eps, uint32_t device_id = 0);

// Full channel interference mitigation: unwrap -> jitter repair -> division.
ProcessedCsi preprocess_frame(const CsiMeasurement& csi,
                              const PreprocessConfig& config = PreprocessConfig());

} // namespace csi2q
