#include "csi2q/eval.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace csi2q {

MetricsReport compute_metrics(const std::vector<int>& predictions,
                              const std::vector<int>& truths, int num_classes) {
    if (predictions.size() != truths.size() || predictions.empty()) {
        throw SignalError("compute_metrics: length mismatch or empty input");
    }
    MetricsReport report;
    report.confusion.assign(num_classes, std::vector<long>(num_classes, 0));
    long correct = 0;
    for (size_t i = 0; i < truths.size(); ++i) {
        int t = truths[i], p = predictions[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
            throw SignalError("compute_metrics: label out of range");
        }
        report.confusion[t][p]++;
        if (t == p) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(truths.size());

    double f1_sum = 0.0;
    int supported = 0;
    for (int c = 0; c < num_classes; ++c) {
        long row = 0, col = 0;
        for (int j = 0; j < num_classes; ++j) {
            row += report.confusion[c][j];
            col += report.confusion[j][c];
        }
        if (row == 0) continue; // no support
        ++supported;
        long tp = report.confusion[c][c];
        double precision = col > 0 ? static_cast<double>(tp) / col : 0.0;
        double recall = static_cast<double>(tp) / row;
        double f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        f1_sum += f1;
    }
    report.macro_f1 = supported > 0 ? f1_sum / supported : 0.0;
    return report;
}

std::string rung_name(InputRung rung, bool aliq) {
    switch (rung) {
        case InputRung::Raw: return "raw";
        case InputRung::Cim: return "cim";
        case InputRung::CimTdsg: return aliq ? "cim+tdsg+aliq" : "cim+tdsg";
    }
    return "?";
}

std::optional<Tensor> encode_csi_frame(const CsiMeasurement& csi, InputRung rung,
                                       const PreprocessConfig& pp) {
    if (rung == InputRung::Raw) return encode_amp_phase(csi.h);
    ProcessedCsi proc = preprocess_frame(csi, pp);
    if (proc.discarded) return std::nullopt;
    if (rung == InputRung::Cim) return encode_complex(proc.h_tilde);
    return encode_complex(tdsg(proc.h_tilde));
}

LabeledSplit build_split(const SimDataset& ds, const std::vector<uint32_t>& devices,
                         InputRung rung, int train_per_device, int test_per_device,
                         uint64_t seed) {
    LabeledSplit split;
    split.train.num_classes = static_cast<int>(devices.size());
    split.test.num_classes = static_cast<int>(devices.size());
    for (size_t pos = 0; pos < devices.size(); ++pos) {
        const uint32_t dev = devices[pos];
        std::vector<size_t> frames;
        for (size_t i = 0; i < ds.csi.size(); ++i) {
            if (ds.csi[i].device_id == dev) frames.push_back(i);
        }
        Rng rng(mix_seed(seed, dev, 0x73706c74ULL)); // "splt"
        for (size_t i = frames.size(); i > 1; --i) {
            std::swap(frames[i - 1], frames[rng.below(i)]);
        }
        int taken_train = 0, taken_test = 0;
        for (size_t idx : frames) {
            auto enc = encode_csi_frame(ds.csi[idx], rung);
            if (!enc) continue;
            if (taken_train < train_per_device) {
                split.train.inputs.push_back(std::move(*enc));
                split.train.labels.push_back(static_cast<int>(pos));
                ++taken_train;
            } else if (taken_test < test_per_device) {
                split.test.inputs.push_back(std::move(*enc));
                split.test.labels.push_back(static_cast<int>(pos));
                ++taken_test;
            } else {
                break;
            }
        }
        if (taken_train < train_per_device || taken_test < test_per_device) {
            throw SignalError("build_split: device " + std::to_string(dev) +
                              " has too few usable frames (" +
                              std::to_string(taken_train + taken_test) + ")");
        }
    }
    return split;
}

FeatureSet encode_iq_set(const SimDataset& ds) {
    FeatureSet set;
    set.num_classes = static_cast<int>(ds.num_devices);
    for (const auto& frame : ds.iq) {
        set.inputs.push_back(encode_complex(frame.v));
        set.labels.push_back(static_cast<int>(frame.device_id));
    }
    return set;
}

namespace {

std::vector<int> predict_all(TargetModel& model, const FeatureSet& set) {
    std::vector<int> preds;
    preds.reserve(set.inputs.size());
    for (const auto& x : set.inputs) {
        Prediction p = predict(model, x);
        preds.push_back(static_cast<int>(std::max_element(p.probabilities.begin(),
                                                          p.probabilities.end()) -
                                         p.probabilities.begin()));
    }
    return preds;
}

} // namespace

std::vector<AblationRow> run_ablation(const ExperimentPlan& plan) {
    SimDataset target =
        generate_dataset(plan.num_devices, plan.frames_per_device, plan.snr_db,
                         plan.data_seed, plan.channel, plan.ranges);
    SimDataset source =
        generate_dataset(plan.source_devices, plan.source_frames_per_device, plan.snr_db,
                         plan.source_data_seed, plan.channel, plan.ranges);
    FeatureSet source_set = encode_iq_set(source);

    std::vector<uint32_t> devices(plan.num_devices);
    for (uint32_t d = 0; d < plan.num_devices; ++d) devices[d] = d;

    struct RungCfg { InputRung rung; bool aliq; };
    const RungCfg ladder[4] = {{InputRung::Raw, false},
                               {InputRung::Cim, false},
                               {InputRung::CimTdsg, false},
                               {InputRung::CimTdsg, true}};

    std::vector<AblationRow> rows;
    for (const auto& cfg : ladder) {
        AblationRow row;
        row.name = rung_name(cfg.rung, cfg.aliq);
        for (uint64_t seed : plan.seeds) {
            LabeledSplit split = build_split(target, devices, cfg.rung,
                                             plan.train_per_device, plan.test_per_device, seed);
            TrainConfig tc = plan.train;
            tc.seed = seed;
            TargetModel model = [&] {
                if (cfg.aliq) {
                    TrainConfig stc = plan.train;
                    stc.seed = seed;
                    SourceModel src = train_source(source_set, stc);
                    return train_target(split.train, src, tc);
                }
                tc.lambda = 0.0;
                return train_target_plain(split.train, tc);
            }();
            std::vector<int> preds = predict_all(model, split.test);
            row.per_seed.push_back(compute_metrics(preds, split.test.labels,
                                                   static_cast<int>(plan.num_devices)));
        }
        double acc = 0.0;
        for (const auto& r : row.per_seed) acc += r.accuracy;
        row.mean_accuracy = acc / row.per_seed.size();
        rows.push_back(std::move(row));
    }
    return rows;
}

OpenWorldOutcome run_open_world_once(const ExperimentPlan& plan, uint64_t seed) {
    const uint32_t total = plan.registered + plan.unknown;
    SimDataset target = generate_dataset(total, plan.frames_per_device, plan.snr_db,
                                         plan.data_seed, plan.channel, plan.ranges);
    SimDataset source =
        generate_dataset(plan.source_devices, plan.source_frames_per_device, plan.snr_db,
                         plan.source_data_seed, plan.channel, plan.ranges);

    std::vector<uint32_t> registered(plan.registered);
    for (uint32_t d = 0; d < plan.registered; ++d) registered[d] = d;
    std::vector<uint32_t> unknown(plan.unknown);
    for (uint32_t d = 0; d < plan.unknown; ++d) unknown[d] = plan.registered + d;

    LabeledSplit split = build_split(target, registered, InputRung::CimTdsg,
                                     plan.train_per_device, plan.test_per_device, seed);
    // unknown devices appear only at test time
    LabeledSplit unk = build_split(target, unknown, InputRung::CimTdsg, 0,
                                   plan.test_per_device, seed);

    TrainConfig tc = plan.train;
    tc.seed = seed;
    SourceModel src = train_source(encode_iq_set(source), tc);
    TargetModel model = train_target(split.train, src, tc);

    // calibration from correctly classified training samples
    std::vector<std::vector<Feature>> acts(plan.registered);
    for (size_t i = 0; i < split.train.inputs.size(); ++i) {
        Prediction p = predict(model, split.train.inputs[i]);
        int arg = static_cast<int>(std::max_element(p.probabilities.begin(),
                                                    p.probabilities.end()) -
                                   p.probabilities.begin());
        if (arg == split.train.labels[i]) acts[arg].push_back(p.activations);
    }
    auto calib = fit_calibration(acts, plan.tail_size);

    const int unknown_class = static_cast<int>(plan.registered);
    std::vector<int> truths, om_preds, sm_preds;
    auto consume = [&](const FeatureSet& set, bool is_unknown) {
        for (size_t i = 0; i < set.inputs.size(); ++i) {
            Prediction p = predict(model, set.inputs[i]);
            int arg = static_cast<int>(std::max_element(p.probabilities.begin(),
                                                        p.probabilities.end()) -
                                       p.probabilities.begin());
            CalibratedPrediction cp = calibrate(p.probabilities, p.activations, calib,
                                                plan.delta);
            truths.push_back(is_unknown ? unknown_class : set.labels[i]);
            om_preds.push_back(cp.decision);
            sm_preds.push_back(arg);
        }
    };
    consume(split.test, false);
    consume(unk.test, true);

    OpenWorldOutcome out;
    out.openmax = compute_metrics(om_preds, truths, unknown_class + 1);
    out.softmax_only = compute_metrics(sm_preds, truths, unknown_class + 1);
    long unk_total = 0, unk_hit = 0;
    for (size_t i = 0; i < truths.size(); ++i) {
        if (truths[i] == unknown_class) {
            ++unk_total;
            if (om_preds[i] == unknown_class) ++unk_hit;
        }
    }
    out.unknown_recall = unk_total > 0 ? static_cast<double>(unk_hit) / unk_total : 0.0;
    return out;
}

std::vector<OpenWorldOutcome> run_open_world(const ExperimentPlan& plan) {
    std::vector<OpenWorldOutcome> out;
    for (uint64_t seed : plan.seeds) out.push_back(run_open_world_once(plan, seed));
    return out;
}

void write_metrics_json(const MetricsReport& report, const std::string& path) {
    nlohmann::json j = {{"accuracy", report.accuracy},
                        {"macro_f1", report.macro_f1},
                        {"confusion", report.confusion}};
    std::ofstream f(path);
    if (!f) throw SignalError("cannot write " + path);
    f << j.dump(2) << "\n";
}

void write_confusion_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SignalError("cannot write " + path);
    for (const auto& row : report.confusion) {
        for (size_t j = 0; j < row.size(); ++j) {
            f << row[j] << (j + 1 < row.size() ? "," : "");
        }
        f << "\n";
    }
}

void write_ablation_svg(const std::vector<AblationRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SignalError("cannot write " + path);
    const int w = 120, gap = 40, h = 300;
    const int width = static_cast<int>(rows.size()) * (w + gap) + gap;
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << (h + 60) << "'>\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        int x = gap + static_cast<int>(i) * (w + gap);
        int bar = static_cast<int>(rows[i].mean_accuracy * h);
        f << "<rect x='" << x << "' y='" << (h - bar + 20) << "' width='" << w
          << "' height='" << bar << "' fill='#4878a8'/>\n";
        f << "<text x='" << (x + w / 2) << "' y='" << (h + 40)
          << "' text-anchor='middle' font-size='14'>" << rows[i].name << "</text>\n";
        f << "<text x='" << (x + w / 2) << "' y='" << (h - bar + 14)
          << "' text-anchor='middle' font-size='13'>"
          << static_cast<int>(rows[i].mean_accuracy * 10000) / 100.0 << "%</text>\n";
    }
    f << "</svg>\n";
}

} // namespace csi2q
