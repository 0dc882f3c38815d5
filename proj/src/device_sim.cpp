#include "csi2q/device_sim.hpp"

#include <cmath>

namespace csi2q {

DeviceProfile sample_profile(uint64_t master_seed, uint32_t device_id,
                             const ProfileRanges& r) {
    Rng rng(mix_seed(master_seed, device_id, 0x70726f66ULL)); // "prof"
    DeviceProfile p;
    p.device_id = device_id;
    p.cfo_ppm = rng.uniform(r.cfo_ppm_min, r.cfo_ppm_max);
    p.iq_gain_db = rng.uniform(r.iq_gain_db_min, r.iq_gain_db_max);
    p.iq_phase_deg = rng.uniform(r.iq_phase_deg_min, r.iq_phase_deg_max);
    p.pa_vsat = rng.uniform(r.pa_vsat_min, r.pa_vsat_max);
    p.pa_smoothness = rng.uniform(r.pa_smoothness_min, r.pa_smoothness_max);
    double mag = rng.uniform(0.0, r.dc_offset_max);
    double ang = rng.uniform(0.0, 2.0 * M_PI);
    p.dc_offset = std::polar(mag, ang);
    return p;
}

CVec apply_impairments(const CVec& x, const DeviceProfile& profile, double sample_rate) {
    if (!all_finite(x)) throw SignalError("apply_impairments: non-finite input");
    const double g_i = std::pow(10.0, profile.iq_gain_db / 40.0);
    const double g_q = std::pow(10.0, -profile.iq_gain_db / 40.0);
    const double phi = profile.iq_phase_deg * M_PI / 180.0;
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const double f_off = profile.cfo_ppm * 1e-6 * kCarrierFreqHz;
    const double vsat = profile.pa_vsat;
    const double two_p = 2.0 * profile.pa_smoothness;

    CVec out(x.size());
    for (size_t n = 0; n < x.size(); ++n) {
        // I/Q gain and phase imbalance
        cplx y(g_i * x[n].real(),
               g_q * (x[n].imag() * cphi + x[n].real() * sphi));
        // carrier frequency offset rotation
        double t = static_cast<double>(n) / sample_rate;
        double ang = 2.0 * M_PI * f_off * t;
        y *= cplx(std::cos(ang), std::sin(ang));
        // Rapp AM/AM compression, phase preserving
        double mag = std::abs(y);
        if (mag > 0.0) {
            double comp = mag / std::pow(1.0 + std::pow(mag / vsat, two_p), 1.0 / two_p);
            y *= comp / mag;
        }
        out[n] = y + profile.dc_offset;
    }
    return out;
}

ChannelRealization draw_channel(Rng& rng, const ChannelConfig& config, double snr_db) {
    ChannelRealization ch;
    ch.snr_db = snr_db;
    const int delay = std::max(0, config.sync_delay);
    ch.taps.assign(delay + config.num_taps, cplx(0.0, 0.0));
    double power = 0.0;
    for (int i = 0; i < config.num_taps; ++i) {
        double var = std::pow(10.0, -config.decay_db_per_tap * i / 10.0);
        double sigma = std::sqrt(var / 2.0);
        ch.taps[delay + i] = cplx(sigma * rng.gaussian(), sigma * rng.gaussian());
        power += std::norm(ch.taps[delay + i]);
    }
    double scale = 1.0 / std::sqrt(power);
    for (auto& tap : ch.taps) tap *= scale;
    return ch;
}

CVec propagate(const CVec& x, const ChannelRealization& channel, uint64_t noise_seed) {
    if (channel.taps.empty()) throw SignalError("propagate: empty channel");
    CVec y(x.size(), cplx(0.0, 0.0));
    for (size_t n = 0; n < x.size(); ++n) {
        cplx acc(0.0, 0.0);
        size_t lmax = std::min(channel.taps.size(), n + 1);
        for (size_t l = 0; l < lmax; ++l) acc += channel.taps[l] * x[n - l];
        y[n] = acc;
    }
    if (std::isfinite(channel.snr_db)) {
        double sig_power = 0.0;
        for (const auto& s : y) sig_power += std::norm(s);
        sig_power /= static_cast<double>(y.size());
        double noise_power = sig_power / std::pow(10.0, channel.snr_db / 10.0);
        double sigma = std::sqrt(noise_power / 2.0);
        Rng rng(noise_seed);
        for (auto& s : y) s += cplx(sigma * rng.gaussian(), sigma * rng.gaussian());
    }
    return y;
}

CsiMeasurement estimate_csi(const CVec& rx, CsiEstimator mode, double noise_var,
                            uint32_t device_id) {
    if (rx.size() != kPreambleLen) throw SignalError("estimate_csi: expected 320 samples");
    const auto& ts = TrainingSymbols::standard();

    // Carrier recovery from the 64-sample periodicity of the long training
    // field; receivers compensate CFO before channel estimation, so the CSI
    // fingerprint is post-correction.
    cplx corr(0.0, 0.0);
    for (int n = 192; n < 256; ++n) corr += rx[n + 64] * std::conj(rx[n]);
    const double dphi = (std::abs(corr) > 0.0) ? std::arg(corr) / 64.0 : 0.0;

    CVec sym1(64), sym2(64);
    for (int i = 0; i < 64; ++i) {
        sym1[i] = rx[192 + i] * std::polar(1.0, -dphi * i);
        sym2[i] = rx[256 + i] * std::polar(1.0, -dphi * (i + 64));
    }
    CVec spec1 = dft(sym1);
    CVec spec2 = dft(sym2);

    CsiMeasurement out;
    out.device_id = device_id;
    out.h.resize(kNumSubcarriers);
    for (int k = 0; k < kNumSubcarriers; ++k) {
        int m = ts.subcarrier[k];
        int bin = (m >= 0) ? m : m + kFftSize;
        cplx avg = 0.5 * (spec1[bin] + spec2[bin]);
        cplx h = avg / (static_cast<double>(kFftSize) * ts.long_symbol[k]);
        if (mode == CsiEstimator::MMSE) {
            double mag2 = std::norm(h);
            h *= mag2 / (mag2 + noise_var);
        }
        out.h[k] = h;
    }
    return out;
}

SimDataset generate_dataset(uint32_t num_devices, uint32_t frames_per_device,
                            double snr_db, uint64_t master_seed,
                            const ChannelConfig& channel_config,
                            const ProfileRanges& ranges) {
    if (num_devices < 2) throw SignalError("generate_dataset: need at least 2 devices");
    if (frames_per_device < 1) throw SignalError("generate_dataset: need at least 1 frame");

    SimDataset ds;
    ds.num_devices = num_devices;
    ds.frames_per_device = frames_per_device;
    ds.snr_db = snr_db;
    ds.master_seed = master_seed;

    const CVec ideal = ideal_preamble();
    for (uint32_t dev = 0; dev < num_devices; ++dev) {
        DeviceProfile profile = sample_profile(master_seed, dev, ranges);
        ds.profiles.push_back(profile);
        CVec tx = apply_impairments(ideal, profile);
        ChannelRealization static_ch;
        if (channel_config.static_device) {
            Rng ch_rng(mix_seed(master_seed, dev, 0x6368616eULL)); // "chan"
            static_ch = draw_channel(ch_rng, channel_config, snr_db);
        }
        for (uint32_t f = 0; f < frames_per_device; ++f) {
            ChannelRealization ch;
            if (channel_config.static_device) {
                ch = static_ch;
            } else {
                Rng ch_rng(mix_seed(master_seed, (uint64_t(dev) << 32) | f, 0x6368616eULL));
                ch = draw_channel(ch_rng, channel_config, snr_db);
            }
            uint64_t noise_seed = mix_seed(master_seed, (uint64_t(dev) << 32) | f, 0x6e6f6973ULL);
            CVec rx = propagate(tx, ch, noise_seed);
            IqFrame iq;
            iq.v = rx;
            iq.device_id = dev;
            ds.iq.push_back(iq);
            double snr_lin = std::isfinite(snr_db) ? std::pow(10.0, snr_db / 10.0) : 0.0;
            double noise_var = std::isfinite(snr_db) && snr_lin > 0.0 ? 1.0 / snr_lin : 0.0;
            ds.csi.push_back(estimate_csi(rx, CsiEstimator::LS, noise_var, dev));
        }
    }
    return ds;
}

} // namespace csi2q
