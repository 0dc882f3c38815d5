#pragma once

#include "csi2q/signal.hpp"

namespace csi2q {

// 20 MHz legacy preamble timing. T is the duration of one training field
// (8 us = 160 samples at 20 Msps); the full L-STF + L-LTF spans 320 samples.
struct PreambleParams {
    double delta_f = 312.5e3;     // subcarrier spacing, Hz
    double field_duration = 8e-6; // T, one training field
    double t_gi2 = 1.6e-6;        // long training symbol guard interval
    double t_tr = 100e-9;         // window transition time
    double sample_rate = 20e6;

    int samples_per_field() const {
        return static_cast<int>(field_duration * sample_rate + 0.5);
    }
};

// Short and long training symbols over the 52 occupied subcarriers,
// ascending index -26..-1, +1..+26 (DC excluded). S carries the
// sqrt(13/6) power normalization; L is the +/-1 long training sequence.
struct TrainingSymbols {
    CVec short_symbol;           // 12 nonzero tones on +/-{4,8,12,16,20,24}
    CVec long_symbol;            // all 52 tones
    std::vector<int> subcarrier; // position k -> subcarrier index m(k)

    static const TrainingSymbols& standard();
};

struct TimeDomainFeature {
    CVec u;            // 320 samples
    uint32_t device_id = 0;
};

// Windowing function of the training fields: sin^2 ramps of width t_tr
// around 0 and T, flat in between. Returns 0 outside [-t_tr/2, T + t_tr/2).
double window(double t, const PreambleParams& params);

// One 160-sample training field:
//   x[n] = w(t_n) * sum_k symbols[k] * weights[k] * exp(j 2 pi m(k) df (t_n - guard_offset))
CVec synth_field(const CVec& symbols, const CVec& weights, double guard_offset,
                 const PreambleParams& params);

// Time-domain sample generation: concatenated L-STF and L-LTF fields with
// the processed CSI as per-subcarrier weights. Output length 320.
CVec tdsg(const CVec& h_tilde, const PreambleParams& params = PreambleParams());

// Convenience: the ideal (all-ones weights) transmit preamble.
CVec ideal_preamble(const PreambleParams& params = PreambleParams());

// Recover the per-subcarrier weights from the second long training symbol
// (samples 256..319) by a 64-point DFT; inverse of tdsg on the LTF.
CVec invert_ltf(const CVec& u, const PreambleParams& params = PreambleParams());

} // namespace csi2q
