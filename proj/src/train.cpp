#include "csi2q/train.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

namespace csi2q {

namespace {

std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (size_t i = n; i > 1; --i) {
        size_t j = rng.below(i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

void check_labels(const FeatureSet& set) {
    if (set.inputs.empty()) throw SignalError("train: empty dataset");
    if (set.inputs.size() != set.labels.size()) throw SignalError("train: label count mismatch");
    std::set<int> classes(set.labels.begin(), set.labels.end());
    if (classes.size() < 2) throw SignalError("train: single-class dataset");
    for (int l : set.labels) {
        if (l < 0 || l >= set.num_classes) throw SignalError("train: label out of range");
    }
}

} // namespace

SourceModel::SourceModel(const ExtractorSpec& s, int hidden, int classes, uint64_t seed_)
    : spec(s), head_hidden(hidden), num_classes(classes), seed(seed_),
      es([&] { Rng r(mix_seed(seed_, 0x65735fULL)); return Extractor(s, r); }()),
      d([&] { Rng r(mix_seed(seed_, 0x645fULL)); return Mlp(s.feature_dim(), hidden, classes, r); }()) {}

std::vector<Param*> SourceModel::params() {
    std::vector<Param*> out = es.params();
    for (auto* p : d.params()) out.push_back(p);
    return out;
}

TargetModel::TargetModel(const ExtractorSpec& s, int hidden, int classes, uint64_t seed_)
    : spec(s), head_hidden(hidden), num_classes(classes), seed(seed_),
      et([&] { Rng r(mix_seed(seed_, 0x65745fULL)); return Extractor(s, r); }()),
      at([&] { Rng r(mix_seed(seed_, 0x61745fULL)); return Mlp(s.feature_dim(), hidden, s.feature_dim(), r); }()),
      c([&] { Rng r(mix_seed(seed_, 0x635fULL)); return Mlp(s.feature_dim(), hidden, classes, r); }()) {}

std::vector<Param*> TargetModel::params_target() {
    std::vector<Param*> out = et.params();
    for (auto* p : c.params()) out.push_back(p);
    return out;
}

std::vector<Param*> TargetModel::params_aux() { return at.params(); }

std::vector<Param*> TargetModel::params() {
    std::vector<Param*> out = et.params();
    for (auto* p : at.params()) out.push_back(p);
    for (auto* p : c.params()) out.push_back(p);
    return out;
}

SourceModel train_source(const FeatureSet& iq, const TrainConfig& config) {
    check_labels(iq);
    SourceModel model(config.extractor, config.head_hidden, iq.num_classes, config.seed);
    Adam opt(model.params());

    const size_t n = iq.inputs.size();
    for (int epoch = 0; epoch < config.epochs_source; ++epoch) {
        const double lr = cosine_lr(epoch, config.epochs_source, config.lr_source);
        auto order = shuffled_indices(n, mix_seed(config.seed, 0x73726365ULL, epoch));
        double epoch_loss = 0.0;
        for (size_t start = 0; start < n; start += config.batch_size) {
            size_t end = std::min(start + config.batch_size, n);
            const double inv = 1.0 / static_cast<double>(end - start);
            opt.zero_grad();
            for (size_t b = start; b < end; ++b) {
                const Tensor& x = iq.inputs[order[b]];
                const int label = iq.labels[order[b]];
                Feature feat = model.es.forward(x);
                Feature logits = model.d.forward(feat);
                Feature dlogits;
                double loss = softmax_cross_entropy(logits, label, dlogits);
                epoch_loss += loss;
                for (auto& g : dlogits) g *= inv;
                Feature dfeat = model.d.backward(dlogits);
                model.es.backward(dfeat);
            }
            opt.step(lr);
        }
        model.trace.loss.push_back(epoch_loss / n);
        model.trace.lr.push_back(lr);
    }
    return model;
}

TargetModel train_target(const FeatureSet& features, SourceModel& source,
                         const TrainConfig& config) {
    check_labels(features);
    if (source.spec.feature_dim() != config.extractor.feature_dim()) {
        throw SignalError("train_target: source/target architecture mismatch");
    }
    TargetModel model(config.extractor, config.head_hidden, features.num_classes, config.seed);
    Adam opt_target(model.params_target());
    Adam opt_aux(model.params_aux());

    const int fdim = config.extractor.feature_dim();
    const size_t n = features.inputs.size();
    for (int epoch = 0; epoch < config.epochs_target; ++epoch) {
        const double lr_t = cosine_lr(epoch, config.epochs_target, config.lr_target);
        const double lr_a = cosine_lr(epoch, config.epochs_target, config.lr_aux);
        auto order = shuffled_indices(n, mix_seed(config.seed, 0x74677400ULL, epoch));
        double epoch_target = 0.0, epoch_aux = 0.0;
        for (size_t start = 0; start < n; start += config.batch_size) {
            size_t end = std::min(start + config.batch_size, n);
            const double inv = 1.0 / static_cast<double>(end - start);
            opt_target.zero_grad();
            opt_aux.zero_grad();
            for (size_t b = start; b < end; ++b) {
                const Tensor& x = features.inputs[order[b]];
                const int label = features.labels[order[b]];

                Feature e_t = model.et.forward(x);
                Feature logits = model.c.forward(e_t);
                Feature dlogits;
                double loss_t = softmax_cross_entropy(logits, label, dlogits);

                // frozen source extractor: forward only, never backward
                Feature e_s = source.es.forward(x);
                Feature e_a = model.at.forward(e_s);
                double loss_a = mse(e_a, e_t);

                epoch_target += loss_t;
                epoch_aux += loss_a;

                // A_T trains on the alignment loss alone
                Feature d_ea(fdim);
                for (int i = 0; i < fdim; ++i) {
                    d_ea[i] = 2.0 * (e_a[i] - e_t[i]) / fdim * inv;
                }
                model.at.backward(d_ea);

                // E_T and C train on loss_target + lambda * loss_aux
                for (auto& g : dlogits) g *= inv;
                Feature d_et = model.c.backward(dlogits);
                if (config.lambda != 0.0) {
                    for (int i = 0; i < fdim; ++i) {
                        d_et[i] += config.lambda * 2.0 * (e_t[i] - e_a[i]) / fdim * inv;
                    }
                }
                model.et.backward(d_et);
            }
            opt_aux.step(lr_a);
            opt_target.step(lr_t);
        }
        model.trace.loss_target.push_back(epoch_target / n);
        model.trace.loss_aux.push_back(epoch_aux / n);
        model.trace.loss.push_back((epoch_target + config.lambda * epoch_aux) / n);
        model.trace.lr.push_back(lr_t);
    }
    return model;
}

TargetModel train_target_plain(const FeatureSet& features, const TrainConfig& config) {
    check_labels(features);
    TargetModel model(config.extractor, config.head_hidden, features.num_classes, config.seed);
    Adam opt(model.params_target());

    const size_t n = features.inputs.size();
    for (int epoch = 0; epoch < config.epochs_target; ++epoch) {
        const double lr = cosine_lr(epoch, config.epochs_target, config.lr_target);
        auto order = shuffled_indices(n, mix_seed(config.seed, 0x74677400ULL, epoch));
        double epoch_loss = 0.0;
        for (size_t start = 0; start < n; start += config.batch_size) {
            size_t end = std::min(start + config.batch_size, n);
            const double inv = 1.0 / static_cast<double>(end - start);
            opt.zero_grad();
            for (size_t b = start; b < end; ++b) {
                Feature e_t = model.et.forward(features.inputs[order[b]]);
                Feature logits = model.c.forward(e_t);
                Feature dlogits;
                epoch_loss += softmax_cross_entropy(logits, features.labels[order[b]], dlogits);
                for (auto& g : dlogits) g *= inv;
                model.et.backward(model.c.backward(dlogits));
            }
            opt.step(lr);
        }
        model.trace.loss.push_back(epoch_loss / n);
        model.trace.loss_target.push_back(epoch_loss / n);
        model.trace.loss_aux.push_back(0.0);
        model.trace.lr.push_back(lr);
    }
    return model;
}

Prediction predict(TargetModel& model, const Tensor& input) {
    Prediction pred;
    Feature feat = model.et.forward(input);
    pred.activations = model.c.forward(feat);
    pred.probabilities = softmax(pred.activations);
    return pred;
}

double accuracy_on(TargetModel& model, const FeatureSet& set) {
    size_t correct = 0;
    for (size_t i = 0; i < set.inputs.size(); ++i) {
        Prediction p = predict(model, set.inputs[i]);
        int arg = static_cast<int>(std::max_element(p.probabilities.begin(),
                                                    p.probabilities.end()) -
                                   p.probabilities.begin());
        if (arg == set.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(set.inputs.size());
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

void write_blob(const std::vector<Param*>& params, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SignalError("cannot write " + path);
    for (const auto* p : params) {
        f.write(reinterpret_cast<const char*>(p->w.data()),
                static_cast<std::streamsize>(p->w.size() * sizeof(double)));
    }
}

void read_blob(const std::vector<Param*>& params, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SignalError("cannot read " + path);
    for (auto* p : params) {
        f.read(reinterpret_cast<char*>(p->w.data()),
               static_cast<std::streamsize>(p->w.size() * sizeof(double)));
        if (!f) throw SignalError("truncated parameter blob: " + path);
    }
}

nlohmann::json spec_json(const ExtractorSpec& s) {
    return {{"kernel", s.kernel},
            {"dilations", s.dilations},
            {"widths", s.widths},
            {"fingerprint", s.fingerprint()}};
}

ExtractorSpec spec_from_json(const nlohmann::json& j) {
    ExtractorSpec s;
    s.kernel = j.at("kernel").get<int>();
    auto d = j.at("dilations").get<std::vector<int>>();
    auto w = j.at("widths").get<std::vector<int>>();
    for (int i = 0; i < 4; ++i) {
        s.dilations[i] = d.at(i);
        s.widths[i] = w.at(i);
    }
    return s;
}

nlohmann::json trace_json(const TrainTrace& t) {
    return {{"loss", t.loss},
            {"loss_target", t.loss_target},
            {"loss_aux", t.loss_aux},
            {"lr", t.lr}};
}

TrainTrace trace_from_json(const nlohmann::json& j) {
    TrainTrace t;
    t.loss = j.at("loss").get<std::vector<double>>();
    t.loss_target = j.at("loss_target").get<std::vector<double>>();
    t.loss_aux = j.at("loss_aux").get<std::vector<double>>();
    t.lr = j.at("lr").get<std::vector<double>>();
    return t;
}

} // namespace

void save_source(const SourceModel& model, const std::string& path) {
    auto& m = const_cast<SourceModel&>(model);
    write_blob(m.params(), path + ".bin");
    nlohmann::json j = {{"kind", "source"},
                        {"extractor", spec_json(model.spec)},
                        {"head_hidden", model.head_hidden},
                        {"num_classes", model.num_classes},
                        {"seed", model.seed},
                        {"trace", trace_json(model.trace)}};
    std::ofstream f(path + ".json");
    f << j.dump(2) << "\n";
}

void save_target(const TargetModel& model, const std::string& path) {
    auto& m = const_cast<TargetModel&>(model);
    write_blob(m.params(), path + ".bin");
    nlohmann::json j = {{"kind", "target"},
                        {"extractor", spec_json(model.spec)},
                        {"head_hidden", model.head_hidden},
                        {"num_classes", model.num_classes},
                        {"seed", model.seed},
                        {"trace", trace_json(model.trace)}};
    std::ofstream f(path + ".json");
    f << j.dump(2) << "\n";
}

namespace {
nlohmann::json load_sidecar(const std::string& path, const std::string& kind) {
    std::ifstream f(path + ".json");
    if (!f) throw SignalError("cannot read " + path + ".json");
    nlohmann::json j = nlohmann::json::parse(f);
    if (j.at("kind").get<std::string>() != kind) {
        throw SignalError("model bundle kind mismatch: " + path);
    }
    return j;
}
} // namespace

SourceModel load_source(const std::string& path) {
    nlohmann::json j = load_sidecar(path, "source");
    SourceModel model(spec_from_json(j.at("extractor")), j.at("head_hidden").get<int>(),
                      j.at("num_classes").get<int>(), j.at("seed").get<uint64_t>());
    model.trace = trace_from_json(j.at("trace"));
    read_blob(model.params(), path + ".bin");
    return model;
}

TargetModel load_target(const std::string& path) {
    nlohmann::json j = load_sidecar(path, "target");
    TargetModel model(spec_from_json(j.at("extractor")), j.at("head_hidden").get<int>(),
                      j.at("num_classes").get<int>(), j.at("seed").get<uint64_t>());
    model.trace = trace_from_json(j.at("trace"));
    read_blob(model.params(), path + ".bin");
    return model;
}

void write_trace_csv(const TrainTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SignalError("cannot write " + path);
    f << "epoch,loss,loss_target,loss_aux,lr\n";
    for (size_t i = 0; i < trace.loss.size(); ++i) {
        f << i << "," << trace.loss[i] << ","
          << (i < trace.loss_target.size() ? trace.loss_target[i] : 0.0) << ","
          << (i < trace.loss_aux.size() ? trace.loss_aux[i] : 0.0) << ","
          << (i < trace.lr.size() ? trace.lr[i] : 0.0) << "\n";
    }
}

} // namespace csi2q
