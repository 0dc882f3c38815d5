#pragma once

#include "csi2q/rng.hpp"
#include "csi2q/signal.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace csi2q {

// Channels-by-time activation map, row major: v[c * n + t].
struct Tensor {
    int ch = 0;
    int n = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int ch_, int n_) : ch(ch_), n(n_), v(static_cast<size_t>(ch_) * n_, 0.0) {}
    double& at(int c, int t) { return v[static_cast<size_t>(c) * n + t]; }
    double at(int c, int t) const { return v[static_cast<size_t>(c) * n + t]; }
    size_t size() const { return v.size(); }
};

using Feature = std::vector<double>;

// Learnable parameter block with its gradient accumulator.
struct Param {
    std::vector<double> w;
    std::vector<double> g;

    void init(size_t count) { w.assign(count, 0.0); g.assign(count, 0.0); }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

// ---------------------------------------------------------------------------
// Layers. Each caches its last forward input; backward must follow the
// matching forward (single-sample, single-threaded training loop).
// ---------------------------------------------------------------------------

class Conv1dCausal {
public:
    Conv1dCausal(int in_ch, int out_ch, int kernel, int dilation, Rng& rng);

    Tensor forward(const Tensor& x);
    // dy -> dx; accumulates into weight/bias gradients
    Tensor backward(const Tensor& dy);

    Param weight; // [out][in][kernel]
    Param bias;   // [out]
    int in_ch, out_ch, kernel, dilation;

private:
    Tensor last_x_;
};

class ReluMap {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    Tensor last_x_;
};

class Dense {
public:
    Dense(int in_dim, int out_dim, Rng& rng);

    Feature forward(const Feature& x);
    Feature backward(const Feature& dy);

    Param weight; // [out][in]
    Param bias;   // [out]
    int in_dim, out_dim;

private:
    Feature last_x_;
};

// ---------------------------------------------------------------------------
// Model components
// ---------------------------------------------------------------------------

struct ExtractorSpec {
    int kernel = 3;
    std::array<int, 4> dilations{1, 2, 4, 8};
    std::array<int, 4> widths{32, 32, 64, 64};

    int feature_dim() const { return widths[3]; }
    std::string fingerprint() const;
};

// Dilated causal convolution stack with temporal mean pooling.
class Extractor {
public:
    Extractor(const ExtractorSpec& spec, Rng& rng);

    Feature forward(const Tensor& x);
    // gradient of the pooled feature -> accumulates parameter gradients
    void backward(const Feature& dfeat);

    std::vector<Param*> params();
    const ExtractorSpec& spec() const { return spec_; }

private:
    ExtractorSpec spec_;
    std::vector<Conv1dCausal> convs_;
    std::vector<ReluMap> relus_;
    int last_n_ = 0;
};

// Two fully connected layers with a rectifier in between. Used for the
// classifier, the discriminator (with softmax applied on top) and the
// auxiliary alignment network.
class Mlp {
public:
    Mlp(int in_dim, int hidden_dim, int out_dim, Rng& rng);

    Feature forward(const Feature& x);
    Feature backward(const Feature& dy);

    std::vector<Param*> params();
    int in_dim() const { return fc1_.in_dim; }
    int hidden_dim() const { return fc1_.out_dim; }
    int out_dim() const { return fc2_.out_dim; }

private:
    Dense fc1_;
    Dense fc2_;
    Feature last_hidden_;
};

// ---------------------------------------------------------------------------
// Losses and input encoding
// ---------------------------------------------------------------------------

constexpr double kProbFloor = 1e-12;

Feature softmax(const Feature& logits);

// -sum_j label_j log(pred_j) with the probability floor applied
double cross_entropy(const Feature& pred, int label);

// loss and dlogits for a softmax classifier head
double softmax_cross_entropy(const Feature& logits, int label, Feature& dlogits);

double mse(const Feature& a, const Feature& b);

// Complex frame -> [2, n] (real, imag) channels, normalized so the complex
// frame RMS is 1. Throws on zero-energy frames.
Tensor encode_complex(const CVec& frame);

// Raw-CSI ablation input: amplitude (unit RMS) and unwrapped phase (scaled
// by 1/pi) as the two channels.
Tensor encode_amp_phase(const CVec& frame);

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

class Adam {
public:
    explicit Adam(std::vector<Param*> params, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void step(double lr);
    void zero_grad();

private:
    std::vector<Param*> params_;
    std::vector<std::vector<double>> m_, v_;
    double beta1_, beta2_, eps_;
    long t_ = 0;
};

double cosine_lr(int epoch, int total_epochs, double lr0);

} // namespace csi2q
