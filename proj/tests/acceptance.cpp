// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 7-9 run the built-in simulator at desk scale.

#include "csi2q/eval.hpp"
#include "csi2q/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

using namespace csi2q;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL")
              << " - " << detail << std::endl;
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. DSP round-trip: synthesis followed by spectral inversion recovers the
//    per-subcarrier weights to 1e-6 relative on 1000 frames.
// ---------------------------------------------------------------------------
void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    int tested = 0;
    for (int frame = 0; frame < 1000; ++frame) {
        DeviceProfile prof = sample_profile(500 + frame, frame % 16);
        CVec tx = apply_impairments(ideal_preamble(), prof);
        // flat channel with the usual receiver timing margin of two samples
        ChannelRealization flat{{cplx(0, 0), cplx(0, 0),
                                 cplx(rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5))},
                                kNoiselessSnr};
        CVec rx = propagate(tx, flat, 0);
        ProcessedCsi proc = preprocess_frame(estimate_csi(rx));
        if (proc.discarded) continue;
        ++tested;
        CVec u = tdsg(proc.h_tilde);
        CVec back = invert_ltf(u);
        for (int k = 0; k < kNumSubcarriers; ++k) {
            double rel = std::abs(back[k] - proc.h_tilde[k]) /
                         std::max(1e-300, std::abs(proc.h_tilde[k]));
            worst = std::max(worst, rel);
        }
    }
    double el = seconds_since(t0);
    std::ostringstream d;
    d << tested << "/1000 frames survived, tdsg/inversion round-trip worst relative error "
      << worst << ", " << el << " s";
    report(1, tested == 1000 && worst < 1e-6 && el < 10.0, d.str());
}

// ---------------------------------------------------------------------------
// 2. Channel-scale cancellation: scaling the channel taps by any complex
//    constant leaves the preprocessed frame unchanged to 1e-9 relative.
// ---------------------------------------------------------------------------
void criterion_2() {
    Rng rng(202);
    DeviceProfile prof = sample_profile(77, 0);
    CVec tx = apply_impairments(ideal_preamble(), prof);
    ChannelConfig cc;
    Rng chrng(203);
    ChannelRealization base = draw_channel(chrng, cc, kNoiselessSnr);

    CVec rx0 = propagate(tx, base, 0);
    ProcessedCsi ref = preprocess_frame(estimate_csi(rx0));
    double worst = 0.0;
    int tested = 0;
    for (int it = 0; it < 100; ++it) {
        cplx c = std::polar(std::exp(rng.uniform(-2.0, 2.0)),
                            rng.uniform(0.0, 2.0 * M_PI));
        ChannelRealization scaled = base;
        for (auto& t : scaled.taps) t *= c;
        CVec rx = propagate(tx, scaled, 0);
        ProcessedCsi proc = preprocess_frame(estimate_csi(rx));
        if (proc.discarded || ref.discarded) continue;
        ++tested;
        for (int k = 0; k < kNumSubcarriers; ++k) {
            double rel = std::abs(proc.h_tilde[k] - ref.h_tilde[k]) /
                         std::max(1e-300, std::abs(ref.h_tilde[k]));
            worst = std::max(worst, rel);
        }
    }
    std::ostringstream d;
    d << tested << "/100 random complex scales, worst relative change " << worst;
    report(2, tested == 100 && worst < 1e-9, d.str());
}

// ---------------------------------------------------------------------------
// 3. Ideal preamble matches an independently coded legacy-preamble reference.
// ---------------------------------------------------------------------------
void criterion_3() {
    // Independent reference built from the published tone tables, coded
    // directly over subcarrier index k = -26..26.
    const double df = 312.5e3, fs = 20e6, T = 8e-6, Tgi2 = 1.6e-6, Ttr = 100e-9;
    auto win = [&](double t) {
        if (t > -Ttr / 2.0 && t < Ttr / 2.0) {
            double v = std::sin(M_PI / 2.0 * (0.5 + t / Ttr));
            return v * v;
        }
        if (t >= Ttr / 2.0 && t < T - Ttr / 2.0) return 1.0;
        if (t >= T - Ttr / 2.0 && t < T + Ttr / 2.0) {
            double v = std::sin(M_PI / 2.0 * (0.5 - (t - T) / Ttr));
            return v * v;
        }
        return 0.0;
    };

    std::vector<cplx> S(53, cplx(0, 0));
    double s = std::sqrt(13.0 / 6.0);
    const int splus[7] = {-24, -16, -4, 12, 16, 20, 24};
    const int sminus[5] = {-20, -12, -8, 4, 8};
    for (int k : splus) S[k + 26] = s * cplx(1, 1);
    for (int k : sminus) S[k + 26] = -s * cplx(1, 1);

    std::vector<cplx> L(53, cplx(0, 0));
    const int lvals[53] = {1, 1, -1, -1, 1, 1, -1, 1,  -1, 1, 1, 1, 1, 1,
                           1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0,
                           1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1,
                           1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1};
    for (int i = 0; i < 53; ++i) L[i] = cplx(lvals[i], 0);

    CVec ref(320);
    for (int n = 0; n < 160; ++n) {
        double t = n / fs;
        cplx acc(0, 0);
        for (int k = -26; k <= 26; ++k) {
            acc += S[k + 26] * std::exp(cplx(0, 2.0 * M_PI * k * df * t));
        }
        ref[n] = win(t) * acc;
    }
    for (int n = 0; n < 160; ++n) {
        double t = n / fs;
        cplx acc(0, 0);
        for (int k = -26; k <= 26; ++k) {
            acc += L[k + 26] * std::exp(cplx(0, 2.0 * M_PI * k * df * (t - Tgi2)));
        }
        ref[160 + n] = win(t) * acc;
    }

    CVec lib = ideal_preamble();
    double worst = 0.0;
    for (int n = 0; n < 320; ++n) worst = std::max(worst, std::abs(lib[n] - ref[n]));
    std::ostringstream d;
    d << "max abs deviation from the independent reference " << worst;
    report(3, worst < 1e-6, d.str());
}

// ---------------------------------------------------------------------------
// 4. Gradient audit of every differentiable operation against central finite
//    differences, relative tolerance 1e-3, >= 20 random instances each.
// ---------------------------------------------------------------------------
template <typename F>
double fd(double& w, F f, double h = 1e-5) {
    double w0 = w;
    w = w0 + h;
    double fp = f();
    w = w0 - h;
    double fm = f();
    w = w0;
    return (fp - fm) / (2.0 * h);
}

bool rel_ok(double a, double b) {
    return std::abs(a - b) <= 1e-3 * std::max({1e-8, std::abs(a), std::abs(b)});
}

void criterion_4() {
    Rng seed_rng(404);
    long checked = 0, failed = 0;
    auto audit_params = [&](std::vector<Param*> params, auto loss, auto grads) {
        grads();
        for (Param* p : params) {
            size_t stride = std::max<size_t>(1, p->w.size() / 10);
            for (size_t i = 0; i < p->w.size(); i += stride) {
                ++checked;
                if (!rel_ok(p->g[i], fd(p->w[i], loss))) ++failed;
            }
        }
    };

    for (int inst = 0; inst < 20; ++inst) {
        Rng rng(seed_rng.next_u64());
        // conv layer
        {
            Conv1dCausal conv(2, 3, 3, 1 + inst % 4, rng);
            Tensor x(2, 24);
            for (auto& v : x.v) v = rng.gaussian();
            auto loss = [&]() {
                Tensor y = conv.forward(x);
                double s = 0.0;
                for (double v : y.v) s += v * v;
                return s;
            };
            audit_params({&conv.weight, &conv.bias}, loss, [&]() {
                Tensor y = conv.forward(x);
                Tensor dy(y.ch, y.n);
                for (size_t i = 0; i < y.v.size(); ++i) dy.v[i] = 2.0 * y.v[i];
                conv.weight.zero_grad();
                conv.bias.zero_grad();
                conv.backward(dy);
            });
        }
        // dense layer
        {
            Dense fc(6, 4, rng);
            Feature x(6);
            for (auto& v : x) v = rng.gaussian();
            auto loss = [&]() {
                Feature y = fc.forward(x);
                double s = 0.0;
                for (double v : y) s += v * v;
                return s;
            };
            audit_params({&fc.weight, &fc.bias}, loss, [&]() {
                Feature y = fc.forward(x);
                Feature dy(y.size());
                for (size_t i = 0; i < y.size(); ++i) dy[i] = 2.0 * y[i];
                fc.weight.zero_grad();
                fc.bias.zero_grad();
                fc.backward(dy);
            });
        }
        // extractor (relu + pooling included) with a cross-entropy head
        {
            ExtractorSpec spec;
            spec.widths = {3, 3, 4, 4};
            Extractor ex(spec, rng);
            Mlp head(4, 5, 3, rng);
            Tensor x(2, 20);
            for (auto& v : x.v) v = rng.gaussian();
            int label = static_cast<int>(rng.below(3));
            // jitter every parameter (including zero-initialized biases) so no
            // ReLU pre-activation sits exactly on its kink, where the analytic
            // subgradient legitimately differs from a two-sided difference
            for (Param* p : ex.params()) {
                for (auto& w : p->w) w += 0.01 * rng.gaussian();
            }
            auto loss = [&]() {
                Feature logits = head.forward(ex.forward(x));
                Feature dl;
                return softmax_cross_entropy(logits, label, dl);
            };
            std::vector<Param*> ps = ex.params();
            for (Param* p : head.params()) ps.push_back(p);
            audit_params(ps, loss, [&]() {
                for (Param* p : ps) p->zero_grad();
                Feature logits = head.forward(ex.forward(x));
                Feature dl;
                softmax_cross_entropy(logits, label, dl);
                ex.backward(head.backward(dl));
            });
        }
        // mse path through an mlp
        {
            Mlp mlp(4, 6, 4, rng);
            Feature x(4), target(4);
            for (auto& v : x) v = rng.gaussian();
            for (auto& v : target) v = rng.gaussian();
            auto loss = [&]() { return mse(mlp.forward(x), target); };
            audit_params(mlp.params(), loss, [&]() {
                for (Param* p : mlp.params()) p->zero_grad();
                Feature y = mlp.forward(x);
                Feature dy(y.size());
                for (size_t i = 0; i < y.size(); ++i) {
                    dy[i] = 2.0 * (y[i] - target[i]) / y.size();
                }
                mlp.backward(dy);
            });
        }
    }
    std::ostringstream d;
    d << checked << " gradient entries audited across 20 random instances, "
      << failed << " outside 1e-3 relative";
    report(4, failed == 0 && checked >= 20, d.str());
}

// ---------------------------------------------------------------------------
// 5. Weibull recovery on synthetic draws, 20 repetitions.
// ---------------------------------------------------------------------------
void criterion_5() {
    Rng rng(505);
    int bad = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        double true_shape = rng.uniform(1.5, 4.0);
        double true_scale = rng.uniform(0.5, 3.0);
        std::vector<double> samples(500);
        for (auto& s : samples) {
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            s = true_scale * std::pow(-std::log(1.0 - u), 1.0 / true_shape);
        }
        double shape = 0.0, scale = 0.0;
        weibull_fit_mle(samples, shape, scale);
        double rs = std::abs(shape - true_shape) / true_shape;
        double rc = std::abs(scale - true_scale) / true_scale;
        worst = std::max({worst, rs, rc});
        if (rs > 0.15 || rc > 0.15) ++bad;
    }
    std::ostringstream d;
    d << "20 repetitions of 500-sample MLE fits, worst relative error " << worst;
    report(5, bad == 0, d.str());
}

// ---------------------------------------------------------------------------
// 6. OpenMax algebra: sum(G) = 1 on 1e5 random (p, c) pairs; exact boundary
//    behavior at delta in {0, 1}.
// ---------------------------------------------------------------------------
ClassCalibration rigged(double c_value) {
    // shape 1 / scale 1: distance d gives c = exp(-d); activation is at 0
    ClassCalibration cc;
    cc.mav = {-std::log(std::max(c_value, 1e-300))};
    cc.weibull_shape = 1.0;
    cc.weibull_scale = 1.0;
    cc.tail_size = 20;
    return cc;
}

void criterion_6() {
    Rng rng(606);
    double worst = 0.0;
    bool ok = true;
    for (int it = 0; it < 100000; ++it) {
        int I = 2 + static_cast<int>(rng.below(7));
        Feature p(I);
        double sum = 0.0;
        for (auto& v : p) sum += (v = rng.uniform() + 1e-9);
        for (auto& v : p) v /= sum;
        std::vector<ClassCalibration> calib;
        for (int i = 0; i < I; ++i) calib.push_back(rigged(rng.uniform()));
        CalibratedPrediction out = calibrate(p, {0.0}, calib, 0.15);
        double g_sum = 0.0;
        for (double v : out.g_vector) {
            g_sum += v;
            if (v < 0.0) ok = false;
        }
        worst = std::max(worst, std::abs(g_sum - 1.0));
    }

    // boundary deltas
    std::vector<ClassCalibration> calib = {rigged(0.8), rigged(0.6)};
    CalibratedPrediction hi = calibrate({0.5, 0.5}, {0.0}, calib, 1.0);
    CalibratedPrediction lo = calibrate({0.5, 0.5}, {0.0}, calib, 0.0);
    bool boundaries = (hi.decision != 2) && (lo.decision == 2) && lo.unknown_mass > 0.0;
    // zero distance keeps g = 0 exactly, so even delta = 0 stays known
    ClassCalibration exact = rigged(1.0);
    CalibratedPrediction zero = calibrate({0.5, 0.5}, {0.0}, {exact, exact}, 0.0);
    boundaries = boundaries && zero.decision == 0 && zero.unknown_mass == 0.0;

    std::ostringstream d;
    d << "1e5 random (p, c) pairs, worst |sum(G) - 1| = " << worst
      << ", delta boundaries " << (boundaries ? "exact" : "violated");
    report(6, ok && worst < 1e-9 && boundaries, d.str());
}

// ---------------------------------------------------------------------------
// 7-10. Simulator experiments. The shared plan keeps runtime within budget
// on one core: a narrow extractor and short cosine schedule.
// ---------------------------------------------------------------------------
ExperimentPlan desk_plan() {
    ExperimentPlan plan;
    plan.num_devices = 10;
    plan.frames_per_device = 430;
    plan.snr_db = 20.0;
    plan.train_per_device = 220;
    plan.test_per_device = 50;
    plan.source_devices = 20;
    plan.source_frames_per_device = 100;
    plan.registered = 8;
    plan.unknown = 2;
    plan.delta = 0.15;
    plan.tail_size = 20;
    plan.seeds = {1, 2, 3};

    plan.train.extractor.widths = {8, 8, 12, 12};
    plan.train.head_hidden = 32;
    plan.train.epochs_source = 8;
    plan.train.epochs_target = 10;
    plan.train.lr_source = 1e-3;
    plan.train.lr_target = 1e-3;
    plan.train.lr_aux = 1e-3;
    plan.train.lambda = 0.30;
    plan.train.batch_size = 32;

    // hardware spread wide enough for desk-scale separability
    plan.ranges.iq_gain_db_min = -3.0;
    plan.ranges.iq_gain_db_max = 3.0;
    plan.ranges.iq_phase_deg_min = -15.0;
    plan.ranges.iq_phase_deg_max = 15.0;
    plan.ranges.pa_vsat_min = 0.8;
    plan.ranges.pa_vsat_max = 2.5;
    return plan;
}

std::vector<AblationRow> criterion_7_rows;

void criterion_7() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentPlan plan = desk_plan();
    criterion_7_rows = run_ablation(plan);
    double el = seconds_since(t0);

    const auto& rows = criterion_7_rows;
    bool increasing = true;
    for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].mean_accuracy <= rows[i - 1].mean_accuracy) increasing = false;
    }
    double spread = (rows.back().mean_accuracy - rows.front().mean_accuracy) * 100.0;
    double final_acc = rows.back().mean_accuracy * 100.0;

    std::ostringstream d;
    d << "ladder";
    for (const auto& r : rows) d << " " << r.name << "=" << r.mean_accuracy * 100.0;
    d << ", spread " << spread << " pts, " << el << " s";
    report(7, increasing && spread >= 5.0 && final_acc >= 85.0 && el < 1800.0, d.str());
}

void criterion_8() {
    ExperimentPlan plan = desk_plan();
    std::vector<uint32_t> devices(plan.num_devices);
    for (uint32_t d = 0; d < plan.num_devices; ++d) devices[d] = d;
    SimDataset target = generate_dataset(plan.num_devices, plan.frames_per_device,
                                         plan.snr_db, plan.data_seed, plan.channel,
                                         plan.ranges);
    SimDataset source = generate_dataset(plan.source_devices,
                                         plan.source_frames_per_device, plan.snr_db,
                                         plan.source_data_seed, plan.channel,
                                         plan.ranges);
    FeatureSet source_set = encode_iq_set(source);

    double with_aux = 0.0, without = 0.0;
    for (uint64_t seed : plan.seeds) {
        LabeledSplit split = build_split(target, devices, InputRung::CimTdsg,
                                         plan.train_per_device, plan.test_per_device,
                                         seed);
        TrainConfig tc = plan.train;
        tc.seed = seed;
        SourceModel src = train_source(source_set, tc);
        TargetModel aliq = train_target(split.train, src, tc);
        with_aux += accuracy_on(aliq, split.test);

        TrainConfig plain_cfg = tc;
        plain_cfg.lambda = 0.0;
        TargetModel plain = train_target_plain(split.train, plain_cfg);
        without += accuracy_on(plain, split.test);
    }
    with_aux = with_aux / plan.seeds.size() * 100.0;
    without = without / plan.seeds.size() * 100.0;
    std::ostringstream d;
    d << "lambda=0.30 mean accuracy " << with_aux << " vs lambda=0 " << without
      << " (gain " << (with_aux - without) << " pts over 3 seeds)";
    report(8, with_aux >= without + 2.0, d.str());
}

void criterion_9() {
    ExperimentPlan plan = desk_plan();
    double om = 0.0, sm = 0.0, recall = 0.0;
    for (uint64_t seed : plan.seeds) {
        OpenWorldOutcome out = run_open_world_once(plan, seed);
        om += out.openmax.accuracy;
        sm += out.softmax_only.accuracy;
        recall += out.unknown_recall;
    }
    om = om / plan.seeds.size() * 100.0;
    sm = sm / plan.seeds.size() * 100.0;
    recall = recall / plan.seeds.size() * 100.0;
    std::ostringstream d;
    d << "openmax " << om << " vs softmax-only " << sm << " (gain " << (om - sm)
      << " pts), unknown recall " << recall << "%";
    report(9, om >= sm + 5.0 && recall >= 40.0, d.str());
}

void criterion_10() {
    ExperimentPlan plan = desk_plan();
    std::vector<AblationRow> rerun = run_ablation(plan);
    bool identical = rerun.size() == criterion_7_rows.size();
    if (identical) {
        for (size_t i = 0; i < rerun.size(); ++i) {
            const auto& a = criterion_7_rows[i];
            const auto& b = rerun[i];
            if (a.name != b.name || a.mean_accuracy != b.mean_accuracy ||
                a.per_seed.size() != b.per_seed.size()) {
                identical = false;
                break;
            }
            for (size_t s = 0; s < a.per_seed.size(); ++s) {
                if (a.per_seed[s].accuracy != b.per_seed[s].accuracy ||
                    a.per_seed[s].macro_f1 != b.per_seed[s].macro_f1 ||
                    a.per_seed[s].confusion != b.per_seed[s].confusion) {
                    identical = false;
                }
            }
        }
    }
    report(10, identical,
           identical ? "full ladder rerun reproduced every number bit-for-bit"
                     : "rerun diverged from the first ladder");
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::cout << (failures == 0 ? "all criteria passed"
                                : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
