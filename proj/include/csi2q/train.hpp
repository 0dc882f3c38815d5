#pragma once

#include "csi2q/neural.hpp"

#include <memory>
#include <string>

namespace csi2q {

struct TrainConfig {
    double lr_source = 1e-4;
    double lr_target = 1e-4;
    double lr_aux = 1e-4;
    int epochs_source = 100;
    int epochs_target = 100;
    double lambda = 0.30;
    int batch_size = 32;
    uint64_t seed = 1;
    ExtractorSpec extractor;
    int head_hidden = 128;
};

// Encoded inputs with device labels; class count is the label-space size.
struct FeatureSet {
    std::vector<Tensor> inputs;
    std::vector<int> labels;
    int num_classes = 0;
};

struct TrainTrace {
    std::vector<double> loss;        // per-epoch mean total loss
    std::vector<double> loss_target; // target-only component (target training)
    std::vector<double> loss_aux;    // auxiliary component (target training)
    std::vector<double> lr;
};

// Source pair: shared extractor E_S and IQ discriminator D.
struct SourceModel {
    ExtractorSpec spec;
    int head_hidden;
    int num_classes;
    uint64_t seed;
    Extractor es;
    Mlp d;
    TrainTrace trace;

    SourceModel(const ExtractorSpec& s, int hidden, int classes, uint64_t seed_);
    std::vector<Param*> params();
};

// Target triple: extractor E_T, auxiliary aligner A_T and classifier C.
struct TargetModel {
    ExtractorSpec spec;
    int head_hidden;
    int num_classes;
    uint64_t seed;
    Extractor et;
    Mlp at;
    Mlp c;
    TrainTrace trace;

    TargetModel(const ExtractorSpec& s, int hidden, int classes, uint64_t seed_);
    std::vector<Param*> params_target(); // E_T + C (lambda-weighted objective)
    std::vector<Param*> params_aux();    // A_T only
    std::vector<Param*> params();        // everything, serialization order
};

SourceModel train_source(const FeatureSet& iq, const TrainConfig& config);

TargetModel train_target(const FeatureSet& features, SourceModel& source,
                         const TrainConfig& config);

// (E_T, C) without any auxiliary path. With lambda = 0 this produces the
// same (E_T, C) trajectory as train_target under the same seed.
TargetModel train_target_plain(const FeatureSet& features, const TrainConfig& config);

struct Prediction {
    Feature probabilities;
    Feature activations; // pre-softmax output of the classifier
};

Prediction predict(TargetModel& model, const Tensor& input);

double accuracy_on(TargetModel& model, const FeatureSet& set);

// Binary parameter blob (path + ".bin") with a JSON sidecar (path + ".json").
void save_source(const SourceModel& model, const std::string& path);
void save_target(const TargetModel& model, const std::string& path);
SourceModel load_source(const std::string& path);
TargetModel load_target(const std::string& path);

void write_trace_csv(const TrainTrace& trace, const std::string& path);

} // namespace csi2q
