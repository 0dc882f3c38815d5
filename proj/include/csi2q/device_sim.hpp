#pragma once

#include "csi2q/preamble.hpp"
#include "csi2q/preprocess.hpp"
#include "csi2q/rng.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace csi2q {

constexpr double kCarrierFreqHz = 2.462e9; // WiFi channel 11
constexpr double kNoiselessSnr = std::numeric_limits<double>::infinity();

// Per-device transmitter impairments. Deterministic given (master_seed, id).
struct DeviceProfile {
    uint32_t device_id = 0;
    double cfo_ppm = 0.0;       // carrier frequency offset, ppm of 2.462 GHz
    double iq_gain_db = 0.0;    // I/Q gain imbalance
    double iq_phase_deg = 0.0;  // I/Q phase imbalance
    double pa_vsat = 1e9;       // Rapp saturation level, x input RMS of 1
    double pa_smoothness = 2.0; // Rapp p
    cplx dc_offset{0.0, 0.0};
};

struct ProfileRanges {
    double cfo_ppm_min = -20.0, cfo_ppm_max = 20.0;
    double iq_gain_db_min = -0.5, iq_gain_db_max = 0.5;
    double iq_phase_deg_min = -3.0, iq_phase_deg_max = 3.0;
    double pa_vsat_min = 1.5, pa_vsat_max = 4.0;
    double pa_smoothness_min = 1.0, pa_smoothness_max = 3.0;
    double dc_offset_max = 0.01;
};

// Tapped delay line with unit average power plus an AWGN level.
struct ChannelRealization {
    CVec taps;
    double snr_db = kNoiselessSnr;
};

struct ChannelConfig {
    int num_taps = 4;
    double decay_db_per_tap = 3.0;
    // Receiver symbol timing backs off into the guard interval by this many
    // samples (leading zero taps), the usual OFDM timing margin. It shows up
    // in CSI as a linear phase ramp across subcarriers.
    int sync_delay = 2;
    bool static_device = false; // reuse one realization across a device's frames
};

struct IqFrame {
    CVec v; // 320 samples
    uint32_t device_id = 0;
};

struct SimDataset {
    std::vector<IqFrame> iq;
    std::vector<CsiMeasurement> csi;
    std::vector<DeviceProfile> profiles;
    uint32_t num_devices = 0;
    uint32_t frames_per_device = 0;
    double snr_db = 0.0;
    uint64_t master_seed = 0;
};

enum class CsiEstimator { LS, MMSE };

DeviceProfile sample_profile(uint64_t master_seed, uint32_t device_id,
                             const ProfileRanges& ranges = ProfileRanges());

// IQ imbalance -> CFO rotation -> Rapp AM/AM -> DC offset, per sample.
CVec apply_impairments(const CVec& x, const DeviceProfile& profile,
                       double sample_rate = 20e6);

ChannelRealization draw_channel(Rng& rng, const ChannelConfig& config, double snr_db);

// Linear convolution with the taps (trimmed to the input length) plus
// complex AWGN at snr_db relative to the post-channel signal power.
CVec propagate(const CVec& x, const ChannelRealization& channel, uint64_t noise_seed);

// LS estimate from the two long training symbols; MMSE applies per-bin
// shrinkage |h|^2 / (|h|^2 + noise_var) on top of LS.
CsiMeasurement estimate_csi(const CVec& rx, CsiEstimator mode = CsiEstimator::LS,
                            double noise_var = 0.0, uint32_t device_id = 0);

SimDataset generate_dataset(uint32_t num_devices, uint32_t frames_per_device,
                            double snr_db, uint64_t master_seed,
                            const ChannelConfig& channel_config = ChannelConfig(),
                            const ProfileRanges& ranges = ProfileRanges());

} // namespace csi2q
