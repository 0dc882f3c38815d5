// csi2q command line: dataset generation, preprocessing, waveform synthesis,
// training, calibration and evaluation over the binary container format.

#include "CLI11.hpp"
#include "json.hpp"

#include "csi2q/eval.hpp"
#include "csi2q/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace csi2q;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

uint64_t default_seed() {
    if (const char* env = std::getenv("CSI2Q_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 1;
}

// JSON config file support: top-level keys map to flags, nested objects to
// subcommand flags ({"train-target": {"lambda": 0.25}}).
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool,
                          std::string) const override {
        json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (!opt->get_lnames().empty() && opt->get_configurable()) {
                std::string name = opt->get_lnames()[0];
                if (opt->reduced_results().size() == 1) {
                    j[name] = opt->reduced_results().at(0);
                } else if (default_also && !opt->get_default_str().empty()) {
                    j[name] = opt->get_default_str();
                }
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        input >> j;
        return collect(j, "", {});
    }

private:
    std::vector<CLI::ConfigItem> collect(const json& j, const std::string& name,
                                         std::vector<std::string> prefix) const {
        std::vector<CLI::ConfigItem> results;
        if (j.is_object()) {
            if (!name.empty()) prefix.push_back(name);
            for (auto it = j.cbegin(); it != j.cend(); ++it) {
                auto sub = collect(*it, it.key(), prefix);
                results.insert(results.end(), sub.begin(), sub.end());
            }
            return results;
        }
        CLI::ConfigItem item;
        item.name = name;
        item.parents = prefix;
        if (j.is_array()) {
            for (const auto& v : j) {
                item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
        } else if (j.is_string()) {
            item.inputs = {j.get<std::string>()};
        } else {
            item.inputs = {j.dump()};
        }
        results.push_back(item);
        return results;
    }
};

// --config FILE supplies defaults for any long flag name (without dashes).
void apply_config_file(CLI::App& app) {
    app.set_config("--config", "", "JSON file supplying any flag", false);
    app.config_formatter(std::make_shared<JsonConfig>());
}

FeatureSet load_feature_container(const std::string& path) {
    ContainerHeader h;
    std::vector<FrameRecord> frames = read_container(path, h);
    FeatureSet set;
    int max_label = -1;
    for (const auto& f : frames) {
        if (h.magic == kMagicCsi) {
            CsiMeasurement m{f.samples, f.device_id};
            auto enc = encode_csi_frame(m, InputRung::Cim);
            if (!enc) continue;
            set.inputs.push_back(std::move(*enc));
        } else {
            set.inputs.push_back(encode_complex(f.samples));
        }
        set.labels.push_back(static_cast<int>(f.device_id));
        max_label = std::max(max_label, static_cast<int>(f.device_id));
    }
    if (set.inputs.empty()) {
        throw std::runtime_error("no usable frames in " + path);
    }
    set.num_classes = max_label + 1;
    return set;
}

ExperimentPlan plan_from_json(const json& j) {
    ExperimentPlan plan;
    plan.num_devices = j.value("devices", plan.num_devices);
    plan.frames_per_device = j.value("frames", plan.frames_per_device);
    plan.snr_db = j.value("snr_db", plan.snr_db);
    plan.data_seed = j.value("data_seed", plan.data_seed);
    plan.train_per_device = j.value("train_per_device", plan.train_per_device);
    plan.test_per_device = j.value("test_per_device", plan.test_per_device);
    plan.source_devices = j.value("source_devices", plan.source_devices);
    plan.source_frames_per_device =
        j.value("source_frames", plan.source_frames_per_device);
    plan.source_data_seed = j.value("source_data_seed", plan.source_data_seed);
    plan.registered = j.value("registered", plan.registered);
    plan.unknown = j.value("unknown", plan.unknown);
    plan.delta = j.value("delta", plan.delta);
    plan.tail_size = j.value("tail_size", plan.tail_size);
    if (j.contains("seeds")) plan.seeds = j["seeds"].get<std::vector<uint64_t>>();
    plan.train.epochs_source = j.value("epochs_source", plan.train.epochs_source);
    plan.train.epochs_target = j.value("epochs_target", plan.train.epochs_target);
    plan.train.lr_source = j.value("lr_source", plan.train.lr_source);
    plan.train.lr_target = j.value("lr_target", plan.train.lr_target);
    plan.train.lr_aux = j.value("lr_aux", plan.train.lr_aux);
    plan.train.lambda = j.value("lambda", plan.train.lambda);
    plan.train.batch_size = j.value("batch_size", plan.train.batch_size);
    plan.train.head_hidden = j.value("head_hidden", plan.train.head_hidden);
    if (j.contains("widths")) {
        auto w = j["widths"].get<std::vector<int>>();
        if (w.size() != 4) throw std::runtime_error("widths must have 4 entries");
        for (int i = 0; i < 4; ++i) plan.train.extractor.widths[i] = w[i];
    }
    plan.ranges.cfo_ppm_min = j.value("cfo_ppm_min", plan.ranges.cfo_ppm_min);
    plan.ranges.cfo_ppm_max = j.value("cfo_ppm_max", plan.ranges.cfo_ppm_max);
    plan.ranges.iq_gain_db_min = j.value("iq_gain_db_min", plan.ranges.iq_gain_db_min);
    plan.ranges.iq_gain_db_max = j.value("iq_gain_db_max", plan.ranges.iq_gain_db_max);
    plan.ranges.iq_phase_deg_min =
        j.value("iq_phase_deg_min", plan.ranges.iq_phase_deg_min);
    plan.ranges.iq_phase_deg_max =
        j.value("iq_phase_deg_max", plan.ranges.iq_phase_deg_max);
    plan.ranges.pa_vsat_min = j.value("pa_vsat_min", plan.ranges.pa_vsat_min);
    plan.ranges.pa_vsat_max = j.value("pa_vsat_max", plan.ranges.pa_vsat_max);
    plan.ranges.dc_offset_max = j.value("dc_offset_max", plan.ranges.dc_offset_max);
    return plan;
}

int cmd_gen_dataset(uint32_t devices, uint32_t frames, double snr_db,
                    uint64_t seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    SimDataset ds = generate_dataset(devices, frames, snr_db, seed);
    std::string iq_path = (fs::path(out_dir) / "iq.bin").string();
    std::string csi_path = (fs::path(out_dir) / "csi.bin").string();
    write_container(iq_path, kMagicIq, iq_to_records(ds.iq));
    write_container(csi_path, kMagicCsi, csi_to_records(ds.csi));
    write_manifest((fs::path(out_dir) / "manifest.json").string(), ds, iq_path,
                   csi_path);
    std::cout << "wrote " << ds.iq.size() << " frames x 2 containers to "
              << out_dir << "\n";
    return 0;
}

int cmd_preprocess(const std::string& in_path, const std::string& out_path,
                   int max_jitters) {
    ContainerHeader h;
    auto frames = read_container(in_path, h);
    if (h.magic != kMagicCsi) {
        throw std::runtime_error("preprocess expects a CSQ1 container");
    }
    PreprocessConfig cfg;
    cfg.max_jitters = max_jitters;
    std::vector<FrameRecord> out;
    json report;
    report["input_frames"] = frames.size();
    json discards = json::array();
    for (size_t i = 0; i < frames.size(); ++i) {
        ProcessedCsi p = preprocess_frame({frames[i].samples, frames[i].device_id}, cfg);
        if (p.discarded) {
            discards.push_back({{"frame", i},
                                {"device_id", frames[i].device_id},
                                {"reason", p.discard_reason},
                                {"jitter_count", p.jitter_count}});
            continue;
        }
        out.push_back({p.device_id, p.h_tilde});
    }
    write_container(out_path, kMagicCsi, out);
    report["kept_frames"] = out.size();
    report["discards"] = discards;
    std::ofstream rf(out_path + ".report.json");
    rf << report.dump(2) << "\n";
    std::cout << "kept " << out.size() << "/" << frames.size() << " frames\n";
    return 0;
}

int cmd_transform(const std::string& in_path, const std::string& out_path) {
    ContainerHeader h;
    auto frames = read_container(in_path, h);
    if (h.magic != kMagicCsi) {
        throw std::runtime_error("transform expects a CSQ1 container");
    }
    std::vector<FrameRecord> out;
    for (const auto& f : frames) {
        out.push_back({f.device_id, tdsg(f.samples)});
    }
    write_container(out_path, kMagicIq, out);
    std::cout << "synthesized " << out.size() << " waveforms\n";
    return 0;
}

int cmd_train_source(const std::string& iq_path, int epochs, double lr,
                     uint64_t seed, const std::string& out_path) {
    FeatureSet set = load_feature_container(iq_path);
    TrainConfig cfg;
    cfg.epochs_source = epochs;
    cfg.lr_source = lr;
    cfg.seed = seed;
    SourceModel model = train_source(set, cfg);
    save_source(model, out_path);
    write_trace_csv(model.trace, out_path + ".trace.csv");
    std::cout << "trained source model on " << set.inputs.size() << " frames ("
              << set.num_classes << " classes)\n";
    return 0;
}

int cmd_train_target(const std::string& features_path, const std::string& source_path,
                     double lambda, int epochs, double lr, uint64_t seed,
                     const std::string& out_path) {
    FeatureSet set = load_feature_container(features_path);
    TrainConfig cfg;
    cfg.lambda = lambda;
    cfg.epochs_target = epochs;
    cfg.lr_target = lr;
    cfg.lr_aux = lr;
    cfg.seed = seed;
    TargetModel model = [&]() {
        if (source_path.empty()) return train_target_plain(set, cfg);
        SourceModel source = load_source(source_path);
        cfg.extractor = source.spec;
        cfg.head_hidden = source.head_hidden;
        return train_target(set, source, cfg);
    }();
    save_target(model, out_path);
    write_trace_csv(model.trace, out_path + ".trace.csv");
    std::cout << "trained target model on " << set.inputs.size() << " frames ("
              << set.num_classes << " classes)\n";
    return 0;
}

int cmd_calibrate(const std::string& model_path, const std::string& features_path,
                  int tail_size, double delta, const std::string& out_path) {
    TargetModel model = load_target(model_path);
    FeatureSet set = load_feature_container(features_path);
    std::vector<std::vector<Feature>> acts(model.num_classes);
    for (size_t i = 0; i < set.inputs.size(); ++i) {
        Prediction pred = predict(model, set.inputs[i]);
        int arg = 0;
        for (size_t j = 1; j < pred.probabilities.size(); ++j) {
            if (pred.probabilities[j] > pred.probabilities[arg]) {
                arg = static_cast<int>(j);
            }
        }
        if (arg == set.labels[i]) acts[arg].push_back(pred.activations);
    }
    auto calib = fit_calibration(acts, tail_size);
    save_calibration(calib, delta, out_path);
    std::cout << "calibrated " << calib.size() << " classes\n";
    return 0;
}

int cmd_evaluate(const std::string& mode, const std::string& model_path,
                 const std::string& calib_path, double delta,
                 const std::string& test_path, const std::string& report_dir) {
    if (mode != "closed" && mode != "open") {
        throw std::runtime_error("--mode must be closed or open");
    }
    if (mode == "open" && calib_path.empty()) {
        throw std::runtime_error("open mode requires --calib");
    }
    TargetModel model = load_target(model_path);
    FeatureSet set = load_feature_container(test_path);

    std::vector<ClassCalibration> calib;
    double stored_delta = delta;
    if (mode == "open") {
        calib = load_calibration(calib_path, stored_delta);
        if (delta > 0.0) stored_delta = delta;
    }

    int num_classes = model.num_classes + (mode == "open" ? 1 : 0);
    std::vector<int> preds, truths;
    for (size_t i = 0; i < set.inputs.size(); ++i) {
        Prediction pred = predict(model, set.inputs[i]);
        int decision;
        if (mode == "open") {
            CalibratedPrediction cp =
                calibrate(pred.probabilities, pred.activations, calib, stored_delta);
            decision = cp.decision;
        } else {
            decision = 0;
            for (size_t j = 1; j < pred.probabilities.size(); ++j) {
                if (pred.probabilities[j] > pred.probabilities[decision]) {
                    decision = static_cast<int>(j);
                }
            }
        }
        preds.push_back(decision);
        truths.push_back(std::min(set.labels[i], num_classes - 1));
    }
    MetricsReport report = compute_metrics(preds, truths, num_classes);
    fs::create_directories(report_dir);
    write_metrics_json(report, (fs::path(report_dir) / "metrics.json").string());
    write_confusion_csv(report, (fs::path(report_dir) / "confusion.csv").string());
    std::cout << "accuracy " << report.accuracy << " macro_f1 " << report.macro_f1
              << "\n";
    return 0;
}

int cmd_ablate(const std::string& plan_path, const std::string& report_dir) {
    json j;
    if (!plan_path.empty()) {
        std::ifstream f(plan_path);
        if (!f) throw std::runtime_error("cannot open plan " + plan_path);
        f >> j;
    }
    ExperimentPlan plan = plan_from_json(j);
    std::vector<AblationRow> rows = run_ablation(plan);
    fs::create_directories(report_dir);
    json out = json::array();
    for (const auto& row : rows) {
        json seeds = json::array();
        for (const auto& m : row.per_seed) {
            seeds.push_back({{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}});
        }
        out.push_back({{"name", row.name},
                       {"mean_accuracy", row.mean_accuracy},
                       {"per_seed", seeds}});
        std::cout << row.name << ": " << row.mean_accuracy << "\n";
    }
    std::ofstream rf(fs::path(report_dir) / "ablation.json");
    rf << out.dump(2) << "\n";
    write_ablation_svg(rows, (fs::path(report_dir) / "ablation.svg").string());
    return 0;
}

int cmd_import_csv(const std::string& in_path, const std::string& kind,
                   const std::string& out_path) {
    if (kind != "csi" && kind != "iq") {
        throw std::runtime_error("--kind must be csi or iq");
    }
    uint16_t len = kind == "csi" ? 52 : 320;
    auto frames = read_csv_frames(in_path, len);
    write_container(out_path, kind == "csi" ? kMagicCsi : kMagicIq, frames);
    std::cout << "imported " << frames.size() << " frames\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSI-to-waveform device fingerprinting pipeline"};
    app.require_subcommand(1);
    apply_config_file(app);

    uint64_t seed = default_seed();

    // gen-dataset
    auto* gen = app.add_subcommand("gen-dataset", "simulate devices and frames");
    uint32_t devices = 10, frames = 300;
    double snr_db = 20.0;
    std::string out_dir = "dataset";
    gen->add_option("--devices", devices, "number of devices")->check(CLI::PositiveNumber);
    gen->add_option("--frames", frames, "frames per device")->check(CLI::PositiveNumber);
    gen->add_option("--snr-db", snr_db, "receiver SNR in dB");
    gen->add_option("--seed", seed, "master seed");
    gen->add_option("--out", out_dir, "output directory")->required();

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "channel interference mitigation");
    std::string in_file, out_file;
    int max_jitters = 5;
    pre->add_option("--in", in_file, "input CSQ1 container")->required();
    pre->add_option("--out", out_file, "output CSQ1 container")->required();
    pre->add_option("--max-jitters", max_jitters, "discard threshold");

    // transform
    auto* tr = app.add_subcommand("transform", "synthesize 320-sample waveforms");
    std::string tr_in, tr_out;
    tr->add_option("--in", tr_in, "input CSQ1 container")->required();
    tr->add_option("--out", tr_out, "output IQF1 container")->required();

    // train-source
    auto* ts = app.add_subcommand("train-source", "train the IQ source model");
    std::string ts_iq, ts_out;
    int ts_epochs = 100;
    double ts_lr = 1e-4;
    ts->add_option("--iq", ts_iq, "IQF1 training container")->required();
    ts->add_option("--epochs", ts_epochs, "training epochs");
    ts->add_option("--lr", ts_lr, "initial learning rate");
    ts->add_option("--seed", seed, "training seed");
    ts->add_option("--out", ts_out, "model path prefix")->required();

    // train-target
    auto* tt = app.add_subcommand("train-target", "train the CSI target model");
    std::string tt_features, tt_source, tt_out;
    double lambda = 0.30, tt_lr = 1e-4;
    int tt_epochs = 100;
    tt->add_option("--features", tt_features, "feature container")->required();
    tt->add_option("--source", tt_source, "source model path prefix");
    tt->add_option("--lambda", lambda, "auxiliary loss weight");
    tt->add_option("--epochs", tt_epochs, "training epochs");
    tt->add_option("--lr", tt_lr, "initial learning rate");
    tt->add_option("--seed", seed, "training seed");
    tt->add_option("--out", tt_out, "model path prefix")->required();

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit the open-world calibration");
    std::string cal_model, cal_features, cal_out;
    int tail_size = 20;
    double cal_delta = 0.15;
    cal->add_option("--model", cal_model, "target model path prefix")->required();
    cal->add_option("--features", cal_features, "training feature container")->required();
    cal->add_option("--tail-size", tail_size, "Weibull tail size");
    cal->add_option("--delta", cal_delta, "unknown-mass threshold");
    cal->add_option("--out", cal_out, "calibration JSON path")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "closed- or open-world evaluation");
    std::string ev_mode = "closed", ev_model, ev_calib, ev_test, ev_report = "report";
    double ev_delta = 0.0;
    ev->add_option("--mode", ev_mode, "closed|open");
    ev->add_option("--model", ev_model, "target model path prefix")->required();
    ev->add_option("--calib", ev_calib, "calibration JSON (open mode)");
    ev->add_option("--delta", ev_delta, "override the stored delta");
    ev->add_option("--test", ev_test, "test feature container")->required();
    ev->add_option("--report", ev_report, "report directory");

    // ablate
    auto* ab = app.add_subcommand("ablate", "run the input-representation ladder");
    std::string ab_plan, ab_report = "report";
    ab->add_option("--plan", ab_plan, "experiment plan JSON");
    ab->add_option("--report", ab_report, "report directory");

    // import-csv
    auto* im = app.add_subcommand("import-csv", "convert CSV rows to a container");
    std::string im_in, im_kind, im_out;
    im->add_option("--in", im_in, "input CSV")->required();
    im->add_option("--kind", im_kind, "csi|iq")->required();
    im->add_option("--out", im_out, "output container")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_dataset(devices, frames, snr_db, seed, out_dir);
        if (pre->parsed()) return cmd_preprocess(in_file, out_file, max_jitters);
        if (tr->parsed()) return cmd_transform(tr_in, tr_out);
        if (ts->parsed()) return cmd_train_source(ts_iq, ts_epochs, ts_lr, seed, ts_out);
        if (tt->parsed()) {
            return cmd_train_target(tt_features, tt_source, lambda, tt_epochs, tt_lr,
                                    seed, tt_out);
        }
        if (cal->parsed()) {
            return cmd_calibrate(cal_model, cal_features, tail_size, cal_delta, cal_out);
        }
        if (ev->parsed()) {
            return cmd_evaluate(ev_mode, ev_model, ev_calib, ev_delta, ev_test, ev_report);
        }
        if (ab->parsed()) return cmd_ablate(ab_plan, ab_report);
        if (im->parsed()) return cmd_import_csv(im_in, im_kind, im_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
