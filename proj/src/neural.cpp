#include "csi2q/neural.hpp"

#include "csi2q/preprocess.hpp"

#include <cmath>
#include <sstream>

namespace csi2q {

namespace {
// He-style uniform bounds: variance 2/fan_in keeps activation scale stable
// through stacked rectifier layers and avoids dead-network collapse
void init_uniform(Param& p, size_t count, int fan_in, Rng& rng) {
    p.init(count);
    double s = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& w : p.w) w = rng.uniform(-s, s);
}
} // namespace

// ---------------------------------------------------------------------------
// Conv1dCausal
// ---------------------------------------------------------------------------

Conv1dCausal::Conv1dCausal(int in_ch_, int out_ch_, int kernel_, int dilation_, Rng& rng)
    : in_ch(in_ch_), out_ch(out_ch_), kernel(kernel_), dilation(dilation_) {
    init_uniform(weight, static_cast<size_t>(out_ch) * in_ch * kernel, in_ch * kernel, rng);
    bias.init(out_ch);
}

Tensor Conv1dCausal::forward(const Tensor& x) {
    if (x.ch != in_ch) throw SignalError("conv: channel mismatch");
    last_x_ = x;
    const int n = x.n;
    Tensor y(out_ch, n);
    for (int o = 0; o < out_ch; ++o) {
        double* yo = &y.v[static_cast<size_t>(o) * n];
        for (int t = 0; t < n; ++t) yo[t] = bias.w[o];
        for (int i = 0; i < in_ch; ++i) {
            const double* xi = &x.v[static_cast<size_t>(i) * n];
            for (int q = 0; q < kernel; ++q) {
                const double w = weight.w[(static_cast<size_t>(o) * in_ch + i) * kernel + q];
                const int off = q * dilation; // left zero padding: x[t - off]
                for (int t = off; t < n; ++t) yo[t] += w * xi[t - off];
            }
        }
    }
    return y;
}

Tensor Conv1dCausal::backward(const Tensor& dy) {
    const int n = last_x_.n;
    Tensor dx(in_ch, n);
    for (int o = 0; o < out_ch; ++o) {
        const double* dyo = &dy.v[static_cast<size_t>(o) * n];
        double db = 0.0;
        for (int t = 0; t < n; ++t) db += dyo[t];
        bias.g[o] += db;
        for (int i = 0; i < in_ch; ++i) {
            const double* xi = &last_x_.v[static_cast<size_t>(i) * n];
            double* dxi = &dx.v[static_cast<size_t>(i) * n];
            for (int q = 0; q < kernel; ++q) {
                const size_t widx = (static_cast<size_t>(o) * in_ch + i) * kernel + q;
                const double w = weight.w[widx];
                const int off = q * dilation;
                double dw = 0.0;
                for (int t = off; t < n; ++t) {
                    dw += dyo[t] * xi[t - off];
                    dxi[t - off] += w * dyo[t];
                }
                weight.g[widx] += dw;
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// ReluMap
// ---------------------------------------------------------------------------

Tensor ReluMap::forward(const Tensor& x) {
    last_x_ = x;
    Tensor y = x;
    for (auto& v : y.v) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor ReluMap::backward(const Tensor& dy) {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i) {
        if (last_x_.v[i] <= 0.0) dx.v[i] = 0.0;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

Dense::Dense(int in_dim_, int out_dim_, Rng& rng) : in_dim(in_dim_), out_dim(out_dim_) {
    init_uniform(weight, static_cast<size_t>(out_dim) * in_dim, in_dim, rng);
    bias.init(out_dim);
}

Feature Dense::forward(const Feature& x) {
    if (static_cast<int>(x.size()) != in_dim) throw SignalError("dense: shape mismatch");
    last_x_ = x;
    Feature y(out_dim);
    for (int o = 0; o < out_dim; ++o) {
        double acc = bias.w[o];
        const double* wo = &weight.w[static_cast<size_t>(o) * in_dim];
        for (int i = 0; i < in_dim; ++i) acc += wo[i] * x[i];
        y[o] = acc;
    }
    return y;
}

Feature Dense::backward(const Feature& dy) {
    Feature dx(in_dim, 0.0);
    for (int o = 0; o < out_dim; ++o) {
        bias.g[o] += dy[o];
        double* go = &weight.g[static_cast<size_t>(o) * in_dim];
        const double* wo = &weight.w[static_cast<size_t>(o) * in_dim];
        for (int i = 0; i < in_dim; ++i) {
            go[i] += dy[o] * last_x_[i];
            dx[i] += wo[i] * dy[o];
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Extractor
// ---------------------------------------------------------------------------

std::string ExtractorSpec::fingerprint() const {
    std::ostringstream os;
    os << "tcn-k" << kernel;
    os << "-d";
    for (int d : dilations) os << d << ".";
    os << "w";
    for (int w : widths) os << w << ".";
    return os.str();
}

Extractor::Extractor(const ExtractorSpec& spec, Rng& rng) : spec_(spec) {
    int in = 2;
    for (int s = 0; s < 4; ++s) {
        convs_.emplace_back(in, spec.widths[s], spec.kernel, spec.dilations[s], rng);
        relus_.emplace_back();
        in = spec.widths[s];
    }
}

Feature Extractor::forward(const Tensor& x) {
    if (x.ch != 2) throw SignalError("extractor: expected 2 input channels");
    if (x.n < 16) throw SignalError("extractor: input shorter than receptive field");
    Tensor h = x;
    for (int s = 0; s < 4; ++s) {
        h = convs_[s].forward(h);
        h = relus_[s].forward(h);
    }
    last_n_ = h.n;
    Feature f(h.ch, 0.0);
    for (int c = 0; c < h.ch; ++c) {
        double acc = 0.0;
        const double* hc = &h.v[static_cast<size_t>(c) * h.n];
        for (int t = 0; t < h.n; ++t) acc += hc[t];
        f[c] = acc / h.n;
    }
    return f;
}

void Extractor::backward(const Feature& dfeat) {
    Tensor dh(spec_.widths[3], last_n_);
    for (int c = 0; c < dh.ch; ++c) {
        double g = dfeat[c] / last_n_;
        double* dc = &dh.v[static_cast<size_t>(c) * dh.n];
        for (int t = 0; t < dh.n; ++t) dc[t] = g;
    }
    for (int s = 3; s >= 0; --s) {
        dh = relus_[s].backward(dh);
        dh = convs_[s].backward(dh);
    }
}

std::vector<Param*> Extractor::params() {
    std::vector<Param*> out;
    for (auto& c : convs_) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

Mlp::Mlp(int in_dim, int hidden_dim, int out_dim, Rng& rng)
    : fc1_(in_dim, hidden_dim, rng), fc2_(hidden_dim, out_dim, rng) {}

Feature Mlp::forward(const Feature& x) {
    Feature h = fc1_.forward(x);
    last_hidden_ = h;
    for (auto& v : h) v = v > 0.0 ? v : 0.0;
    return fc2_.forward(h);
}

Feature Mlp::backward(const Feature& dy) {
    Feature dh = fc2_.backward(dy);
    for (size_t i = 0; i < dh.size(); ++i) {
        if (last_hidden_[i] <= 0.0) dh[i] = 0.0;
    }
    return fc1_.backward(dh);
}

std::vector<Param*> Mlp::params() {
    return {&fc1_.weight, &fc1_.bias, &fc2_.weight, &fc2_.bias};
}

// ---------------------------------------------------------------------------
// Losses and encoding
// ---------------------------------------------------------------------------

Feature softmax(const Feature& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    Feature p(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (auto& v : p) v = std::max(v / z, kProbFloor);
    return p;
}

double cross_entropy(const Feature& pred, int label) {
    return -std::log(std::max(pred[label], kProbFloor));
}

double softmax_cross_entropy(const Feature& logits, int label, Feature& dlogits) {
    Feature p = softmax(logits);
    dlogits = p;
    dlogits[label] -= 1.0;
    return cross_entropy(p, label);
}

double mse(const Feature& a, const Feature& b) {
    if (a.size() != b.size()) throw SignalError("mse: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

Tensor encode_complex(const CVec& frame) {
    if (!all_finite(frame)) throw SignalError("encode: non-finite frame");
    double r = rms(frame);
    if (r <= 0.0) throw SignalError("encode: zero-energy frame");
    const int n = static_cast<int>(frame.size());
    Tensor x(2, n);
    for (int t = 0; t < n; ++t) {
        x.at(0, t) = frame[t].real() / r;
        x.at(1, t) = frame[t].imag() / r;
    }
    return x;
}

Tensor encode_amp_phase(const CVec& frame) {
    if (!all_finite(frame)) throw SignalError("encode: non-finite frame");
    const int n = static_cast<int>(frame.size());
    std::vector<double> amp(n), phase(n);
    double acc = 0.0;
    for (int t = 0; t < n; ++t) {
        amp[t] = std::abs(frame[t]);
        phase[t] = std::arg(frame[t]);
        acc += amp[t] * amp[t];
    }
    double r = std::sqrt(acc / n);
    if (r <= 0.0) throw SignalError("encode: zero-energy frame");
    std::vector<double> unwrapped = unwrap_phases(phase);
    Tensor x(2, n);
    for (int t = 0; t < n; ++t) {
        x.at(0, t) = amp[t] / r;
        x.at(1, t) = unwrapped[t] / M_PI;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Param*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
        m_.emplace_back(p->w.size(), 0.0);
        v_.emplace_back(p->w.size(), 0.0);
    }
}

void Adam::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Param& p = *params_[pi];
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (size_t i = 0; i < p.w.size(); ++i) {
            const double g = p.g[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.w[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::zero_grad() {
    for (auto* p : params_) p->zero_grad();
}

double cosine_lr(int epoch, int total_epochs, double lr0) {
    return lr0 * 0.5 * (1.0 + std::cos(M_PI * epoch / total_epochs));
}

} // namespace csi2q
