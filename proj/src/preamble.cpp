#include "csi2q/preamble.hpp"

#include <cmath>

namespace csi2q {

namespace {

TrainingSymbols make_standard() {
    TrainingSymbols ts;
    ts.short_symbol.assign(kNumSubcarriers, cplx(0.0, 0.0));
    ts.long_symbol.resize(kNumSubcarriers);
    ts.subcarrier.resize(kNumSubcarriers);

    for (int k = 0; k < kNumSubcarriers; ++k) {
        ts.subcarrier[k] = (k < 26) ? k - 26 : k - 25;
    }

    // L-STF tones on subcarriers +/-{4,8,12,16,20,24}; signs per the
    // standard sequence, power normalized by sqrt(13/6).
    const double a = std::sqrt(13.0 / 6.0);
    struct Tone { int m; double sign; };
    static const Tone tones[12] = {
        {-24, +1}, {-20, -1}, {-16, +1}, {-12, -1}, {-8, -1}, {-4, +1},
        {4, -1},   {8, -1},   {12, +1},  {16, +1},  {20, +1}, {24, +1},
    };
    for (const auto& t : tones) {
        int k = (t.m < 0) ? t.m + 26 : t.m + 25;
        ts.short_symbol[k] = cplx(t.sign * a, t.sign * a);
    }

    static const int lseq[kNumSubcarriers] = {
        // m = -26..-1
        1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1,
        -1, 1, 1, 1, 1,
        // m = +1..+26
        1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1,
        -1, 1, -1, 1, 1, 1, 1};
    for (int k = 0; k < kNumSubcarriers; ++k) {
        ts.long_symbol[k] = cplx(static_cast<double>(lseq[k]), 0.0);
    }
    return ts;
}

} // namespace

const TrainingSymbols& TrainingSymbols::standard() {
    static const TrainingSymbols ts = make_standard();
    return ts;
}

double window(double t, const PreambleParams& p) {
    const double half_tr = p.t_tr / 2.0;
    const double T = p.field_duration;
    if (t > -half_tr && t < half_tr) {
        double s = std::sin(M_PI / 2.0 * (0.5 + t / p.t_tr));
        return s * s;
    }
    if (t >= half_tr && t < T - half_tr) {
        return 1.0;
    }
    if (t >= T - half_tr && t < T + half_tr) {
        double s = std::sin(M_PI / 2.0 * (0.5 - (t - T) / p.t_tr));
        return s * s;
    }
    return 0.0;
}

CVec synth_field(const CVec& symbols, const CVec& weights, double guard_offset,
                 const PreambleParams& p) {
    if (symbols.size() != kNumSubcarriers || weights.size() != kNumSubcarriers) {
        throw SignalError("synth_field: symbols/weights must have 52 entries");
    }
    const auto& ts = TrainingSymbols::standard();
    const int n_field = p.samples_per_field();
    const double dt = 1.0 / p.sample_rate;

    // effective per-tone amplitude; most entries of S are zero
    CVec tone(kNumSubcarriers);
    for (int k = 0; k < kNumSubcarriers; ++k) tone[k] = symbols[k] * weights[k];

    CVec out(n_field);
    for (int n = 0; n < n_field; ++n) {
        const double t = n * dt;
        const double w = window(t, p);
        cplx acc(0.0, 0.0);
        if (w != 0.0) {
            for (int k = 0; k < kNumSubcarriers; ++k) {
                if (tone[k] == cplx(0.0, 0.0)) continue;
                double ang = 2.0 * M_PI * ts.subcarrier[k] * p.delta_f * (t - guard_offset);
                acc += tone[k] * cplx(std::cos(ang), std::sin(ang));
            }
        }
        out[n] = w * acc;
    }
    return out;
}

CVec tdsg(const CVec& h_tilde, const PreambleParams& p) {
    if (h_tilde.size() != kNumSubcarriers) {
        throw SignalError("tdsg: expected 52 subcarrier weights");
    }
    if (!all_finite(h_tilde)) throw SignalError("tdsg: non-finite weights");
    const auto& ts = TrainingSymbols::standard();
    CVec stf = synth_field(ts.short_symbol, h_tilde, 0.0, p);
    CVec ltf = synth_field(ts.long_symbol, h_tilde, p.t_gi2, p);
    CVec u;
    u.reserve(stf.size() + ltf.size());
    u.insert(u.end(), stf.begin(), stf.end());
    u.insert(u.end(), ltf.begin(), ltf.end());
    return u;
}

CVec ideal_preamble(const PreambleParams& p) {
    return tdsg(CVec(kNumSubcarriers, cplx(1.0, 0.0)), p);
}

CVec invert_ltf(const CVec& u, const PreambleParams& p) {
    const int n_field = p.samples_per_field();
    if (static_cast<int>(u.size()) != 2 * n_field) {
        throw SignalError("invert_ltf: expected a 320-sample frame");
    }
    const auto& ts = TrainingSymbols::standard();
    // second long training symbol sits in the flat-window region
    CVec sym(u.begin() + n_field + 96, u.begin() + n_field + 160);
    CVec spec = dft(sym);
    CVec h(kNumSubcarriers);
    for (int k = 0; k < kNumSubcarriers; ++k) {
        int m = ts.subcarrier[k];
        int bin = (m >= 0) ? m : m + kFftSize;
        h[k] = spec[bin] / (static_cast<double>(kFftSize) * ts.long_symbol[k]);
    }
    return h;
}

} // namespace csi2q
