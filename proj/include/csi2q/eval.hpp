#pragma once

#include "csi2q/device_sim.hpp"
#include "csi2q/openmax.hpp"
#include "csi2q/train.hpp"

#include <optional>
#include <string>
#include <vector>

namespace csi2q {

struct MetricsReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::vector<long>> confusion; // [truth][pred]
};

// Accuracy, macro-averaged F1 (classes without support excluded) and the
// confusion matrix. Labels must lie in [0, num_classes).
MetricsReport compute_metrics(const std::vector<int>& predictions,
                              const std::vector<int>& truths, int num_classes);

// Input representation ladder of the ablation study.
enum class InputRung {
    Raw,     // amplitude/unwrapped phase of raw CSI, length 52
    Cim,     // channel interference mitigation output, length 52
    CimTdsg, // synthesized 320-sample time-domain feature
};

std::string rung_name(InputRung rung, bool aliq);

// Encode one CSI frame for the given rung; empty when the frame is
// discarded by preprocessing.
std::optional<Tensor> encode_csi_frame(const CsiMeasurement& csi, InputRung rung,
                                       const PreprocessConfig& pp = PreprocessConfig());

struct LabeledSplit {
    FeatureSet train;
    FeatureSet test;
};

// Stratified per-device split of the device subset `devices` (labels remapped
// to 0..|devices|-1), frame order shuffled per device by `seed`.
LabeledSplit build_split(const SimDataset& ds, const std::vector<uint32_t>& devices,
                         InputRung rung, int train_per_device, int test_per_device,
                         uint64_t seed);

FeatureSet encode_iq_set(const SimDataset& ds);

struct ExperimentPlan {
    uint32_t num_devices = 10;
    uint32_t frames_per_device = 300;
    double snr_db = 20.0;
    uint64_t data_seed = 7;
    ProfileRanges ranges;
    ChannelConfig channel;

    int train_per_device = 220;
    int test_per_device = 50;

    // auxiliary (source) population, disjoint device ids by construction
    uint32_t source_devices = 20;
    uint32_t source_frames_per_device = 100;
    uint64_t source_data_seed = 1009;

    // open-world split: first `registered` devices registered, next `unknown`
    uint32_t registered = 8;
    uint32_t unknown = 2;
    double delta = 0.15;
    int tail_size = 20;

    std::vector<uint64_t> seeds{1, 2, 3};
    TrainConfig train;
};

struct AblationRow {
    std::string name;
    std::vector<MetricsReport> per_seed;
    double mean_accuracy = 0.0;
};

// The four nested configurations {raw, CIM, CIM+TDSG, CIM+TDSG+ALIQ} with
// shared data and seeds.
std::vector<AblationRow> run_ablation(const ExperimentPlan& plan);

struct OpenWorldOutcome {
    MetricsReport openmax;      // I+1 classes, unknown truths mapped to class I
    MetricsReport softmax_only; // same stream, no unknown option
    double unknown_recall = 0.0;
};

OpenWorldOutcome run_open_world_once(const ExperimentPlan& plan, uint64_t seed);
std::vector<OpenWorldOutcome> run_open_world(const ExperimentPlan& plan);

void write_metrics_json(const MetricsReport& report, const std::string& path);
void write_confusion_csv(const MetricsReport& report, const std::string& path);
void write_ablation_svg(const std::vector<AblationRow>& rows, const std::string& path);

} // namespace csi2q
