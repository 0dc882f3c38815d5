#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "csi2q/eval.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace csi2q;

TEST_CASE("metrics: all correct") {
    MetricsReport r = compute_metrics({0, 1, 2, 0}, {0, 1, 2, 0}, 3);
    CHECK(r.accuracy == 1.0);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.confusion[0][0] == 2);
    CHECK(r.confusion[1][1] == 1);
    CHECK(r.confusion[2][2] == 1);
}

TEST_CASE("metrics: binary hand computation") {
    MetricsReport r = compute_metrics({0, 1, 1, 1}, {0, 0, 1, 1}, 2);
    CHECK(r.accuracy == doctest::Approx(0.75));
    // class 0: P 1, R 0.5, F1 2/3; class 1: P 2/3, R 1, F1 0.8
    CHECK(r.macro_f1 == doctest::Approx(11.0 / 15.0));
    CHECK(r.confusion[0][0] == 1);
    CHECK(r.confusion[0][1] == 1);
    CHECK(r.confusion[1][1] == 2);
}

TEST_CASE("metrics: classes without support are excluded from macro F1") {
    // class 2 never appears as a truth; macro F1 averages classes 0 and 1 only
    MetricsReport r = compute_metrics({0, 1}, {0, 1}, 3);
    CHECK(r.macro_f1 == 1.0);
}

TEST_CASE("metrics: uniform random predictions approach 1/I") {
    Rng rng(71);
    const int n = 20000, I = 4;
    std::vector<int> preds(n), truths(n);
    for (int i = 0; i < n; ++i) {
        preds[i] = static_cast<int>(rng.below(I));
        truths[i] = static_cast<int>(rng.below(I));
    }
    MetricsReport r = compute_metrics(preds, truths, I);
    CHECK(std::abs(r.accuracy - 1.0 / I) <= 3.0 / std::sqrt(double(n)));
    long total = 0;
    for (const auto& row : r.confusion)
        for (long v : row) total += v;
    CHECK(total == n);
}

TEST_CASE("metrics: input validation") {
    CHECK_THROWS(compute_metrics({0, 1}, {0}, 2));
    CHECK_THROWS(compute_metrics({}, {}, 2));
    CHECK_THROWS(compute_metrics({0, 2}, {0, 1}, 2)); // out-of-range label
}

TEST_CASE("rung names are distinct and stable") {
    CHECK(rung_name(InputRung::Raw, false) != rung_name(InputRung::Cim, false));
    CHECK(rung_name(InputRung::CimTdsg, false) != rung_name(InputRung::CimTdsg, true));
}

TEST_CASE("encode_csi_frame shapes per rung") {
    SimDataset ds = generate_dataset(2, 3, 30.0, 3);
    const CsiMeasurement& m = ds.csi[0];
    auto raw = encode_csi_frame(m, InputRung::Raw);
    REQUIRE(raw.has_value());
    CHECK(raw->ch == 2);
    CHECK(raw->n == 52);
    auto cim = encode_csi_frame(m, InputRung::Cim);
    REQUIRE(cim.has_value());
    CHECK(cim->n == 52);
    auto td = encode_csi_frame(m, InputRung::CimTdsg);
    REQUIRE(td.has_value());
    CHECK(td->n == 320);
    // raw and CIM encodings differ (division changes the frame)
    CHECK(raw->v != cim->v);
}

TEST_CASE("encode_csi_frame drops frames preprocessing discards") {
    CsiMeasurement m;
    m.h.assign(kNumSubcarriers, cplx(1.0, 0.0));
    m.h[10] = cplx(0.0, 0.0); // zero denominator
    auto out = encode_csi_frame(m, InputRung::Cim);
    CHECK_FALSE(out.has_value());
    // the raw rung never discards
    CHECK(encode_csi_frame(m, InputRung::Raw).has_value());
}

TEST_CASE("build_split partitions frames and remaps labels") {
    SimDataset ds = generate_dataset(4, 20, 25.0, 13);
    std::vector<uint32_t> devs = {1, 3};
    LabeledSplit sp = build_split(ds, devs, InputRung::Cim, 12, 6, 99);
    CHECK(sp.train.num_classes == 2);
    CHECK(sp.test.num_classes == 2);
    CHECK(sp.train.inputs.size() == 24);
    CHECK(sp.test.inputs.size() == 12);
    for (int l : sp.train.labels) CHECK((l == 0 || l == 1));
    // per-class balance
    int c0 = 0;
    for (int l : sp.train.labels) c0 += (l == 0);
    CHECK(c0 == 12);

    // determinism and seed sensitivity
    LabeledSplit sp2 = build_split(ds, devs, InputRung::Cim, 12, 6, 99);
    CHECK(sp.train.labels == sp2.train.labels);
    REQUIRE(sp.train.inputs.size() == sp2.train.inputs.size());
    for (size_t i = 0; i < sp.train.inputs.size(); ++i) {
        CHECK(sp.train.inputs[i].v == sp2.train.inputs[i].v);
    }
    LabeledSplit sp3 = build_split(ds, devs, InputRung::Cim, 12, 6, 100);
    bool any_diff = false;
    for (size_t i = 0; i < sp.train.inputs.size(); ++i) {
        if (sp.train.inputs[i].v != sp3.train.inputs[i].v) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("build_split errors when a device lacks frames") {
    SimDataset ds = generate_dataset(2, 5, 25.0, 13);
    CHECK_THROWS(build_split(ds, {0}, InputRung::Cim, 10, 5, 1));
}

TEST_CASE("encode_iq_set covers every frame with original labels") {
    SimDataset ds = generate_dataset(3, 4, 25.0, 17);
    FeatureSet iq = encode_iq_set(ds);
    CHECK(iq.inputs.size() == 12);
    CHECK(iq.num_classes == 3);
    CHECK(iq.inputs[0].n == 320);
    int c2 = 0;
    for (int l : iq.labels) c2 += (l == 2);
    CHECK(c2 == 4);
}

TEST_CASE("report writers produce parseable artifacts") {
    MetricsReport r = compute_metrics({0, 1, 1, 1}, {0, 0, 1, 1}, 2);
    auto dir = std::filesystem::temp_directory_path();
    std::string jpath = (dir / "csi2q_metrics.json").string();
    std::string cpath = (dir / "csi2q_conf.csv").string();
    write_metrics_json(r, jpath);
    write_confusion_csv(r, cpath);

    std::ifstream jf(jpath);
    std::string jtext((std::istreambuf_iterator<char>(jf)),
                      std::istreambuf_iterator<char>());
    CHECK(jtext.find("accuracy") != std::string::npos);
    CHECK(jtext.find("0.75") != std::string::npos);

    std::ifstream cf(cpath);
    std::string line;
    int rows = 0;
    while (std::getline(cf, line)) ++rows;
    CHECK(rows >= 2);
    std::remove(jpath.c_str());
    std::remove(cpath.c_str());
}

TEST_CASE("ablation svg writer emits a bar per row") {
    std::vector<AblationRow> rows(2);
    rows[0].name = "raw";
    rows[0].mean_accuracy = 0.70;
    rows[1].name = "cim";
    rows[1].mean_accuracy = 0.80;
    auto path = (std::filesystem::temp_directory_path() / "csi2q_abl.svg").string();
    write_ablation_svg(rows, path);
    std::ifstream f(path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("raw") != std::string::npos);
    CHECK(text.find("cim") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("small end-to-end experiment runs deterministically") {
    ExperimentPlan plan;
    plan.num_devices = 4;
    plan.frames_per_device = 48;
    plan.train_per_device = 24;
    plan.test_per_device = 8;
    plan.source_devices = 4;
    plan.source_frames_per_device = 16;
    plan.registered = 3;
    plan.unknown = 1;
    plan.seeds = {1};
    plan.data_seed = 11;
    plan.train.epochs_source = 6;
    plan.train.epochs_target = 100;
    plan.train.lr_source = 5e-3;
    plan.train.lr_target = 5e-3;
    plan.train.lr_aux = 5e-3;
    plan.train.extractor.widths = {8, 8, 12, 12};
    plan.train.head_hidden = 32;
    plan.tail_size = 5;
    plan.snr_db = 25.0;
    // widen impairments so even this tiny run has signal
    plan.ranges.iq_gain_db_min = -3.0;
    plan.ranges.iq_gain_db_max = 3.0;
    plan.ranges.iq_phase_deg_min = -15.0;
    plan.ranges.iq_phase_deg_max = 15.0;
    plan.ranges.pa_vsat_min = 0.8;
    plan.ranges.pa_vsat_max = 2.5;

    std::vector<AblationRow> a = run_ablation(plan);
    REQUIRE(a.size() == 4);
    for (const auto& row : a) {
        CHECK(row.per_seed.size() == 1);
        CHECK(row.mean_accuracy >= 0.0);
        CHECK(row.mean_accuracy <= 1.0);
    }
    std::vector<AblationRow> b = run_ablation(plan);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_accuracy == b[i].mean_accuracy);
    }

    OpenWorldOutcome ow1 = run_open_world_once(plan, 1);
    OpenWorldOutcome ow2 = run_open_world_once(plan, 1);
    CHECK(ow1.openmax.accuracy == ow2.openmax.accuracy);
    CHECK(ow1.unknown_recall == ow2.unknown_recall);
    CHECK(ow1.openmax.confusion.size() == 4); // 3 registered + unknown
    CHECK(ow1.softmax_only.confusion.size() == 4);
}
