#include "csi2q/openmax.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace csi2q {

void weibull_fit_mle(const std::vector<double>& samples, double& shape, double& scale) {
    if (samples.size() < 2) throw SignalError("weibull_fit: need at least 2 samples");
    double mn = samples[0], mx = samples[0];
    for (double x : samples) {
        if (x < 0.0) throw SignalError("weibull_fit: negative sample");
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    if (mx <= 0.0 || mx - mn < 1e-12 * std::max(1.0, mx)) {
        throw SignalError("weibull_fit: degenerate (zero-spread) samples");
    }

    // Profile-likelihood stationarity in the shape parameter k:
    //   f(k) = sum x^k ln x / sum x^k - 1/k - mean(ln x) = 0,
    // f is increasing in k; solve by bisection after bracketing.
    std::vector<double> x;
    x.reserve(samples.size());
    for (double v : samples) x.push_back(std::max(v, 1e-300));
    double mean_ln = 0.0;
    for (double v : x) mean_ln += std::log(v);
    mean_ln /= static_cast<double>(x.size());

    auto f = [&](double k) {
        double sx = 0.0, sxl = 0.0;
        for (double v : x) {
            double p = std::pow(v, k);
            sx += p;
            sxl += p * std::log(v);
        }
        return sxl / sx - 1.0 / k - mean_ln;
    };

    double lo = 1e-3, hi = 1.0;
    while (f(hi) < 0.0 && hi < 1e6) hi *= 2.0;
    if (hi >= 1e6) throw SignalError("weibull_fit: shape bracketing failed");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) lo = mid; else hi = mid;
        if (hi - lo < 1e-8 * hi) break;
    }
    shape = 0.5 * (lo + hi);

    double sx = 0.0;
    for (double v : x) sx += std::pow(v, shape);
    scale = std::pow(sx / static_cast<double>(x.size()), 1.0 / shape);
    if (!std::isfinite(shape) || !std::isfinite(scale) || shape <= 0.0 || scale <= 0.0) {
        throw SignalError("weibull_fit: non-finite fit");
    }
}

double weibull_cdf(double x, double shape, double scale) {
    if (x <= 0.0) return 0.0;
    return 1.0 - std::exp(-std::pow(x / scale, shape));
}

std::vector<ClassCalibration> fit_calibration(
    const std::vector<std::vector<Feature>>& activations_per_class, int tail_size) {
    std::vector<ClassCalibration> out;
    for (size_t cls = 0; cls < activations_per_class.size(); ++cls) {
        const auto& acts = activations_per_class[cls];
        const size_t needed = static_cast<size_t>(std::max(tail_size, 5));
        if (acts.size() < needed) {
            throw SignalError("fit_calibration: class " + std::to_string(cls) +
                              " has too few correctly classified samples");
        }
        ClassCalibration cal;
        cal.tail_size = tail_size;
        cal.mav.assign(acts[0].size(), 0.0);
        for (const auto& a : acts) {
            for (size_t i = 0; i < a.size(); ++i) cal.mav[i] += a[i];
        }
        for (auto& v : cal.mav) v /= static_cast<double>(acts.size());

        std::vector<double> dist;
        dist.reserve(acts.size());
        for (const auto& a : acts) {
            double d2 = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                double d = a[i] - cal.mav[i];
                d2 += d * d;
            }
            dist.push_back(std::sqrt(d2));
        }
        std::sort(dist.begin(), dist.end(), std::greater<double>());
        dist.resize(std::min(dist.size(), static_cast<size_t>(tail_size)));
        try {
            weibull_fit_mle(dist, cal.weibull_shape, cal.weibull_scale);
        } catch (const SignalError& e) {
            throw SignalError("fit_calibration: class " + std::to_string(cls) + ": " +
                              e.what());
        }
        out.push_back(std::move(cal));
    }
    return out;
}

CalibratedPrediction calibrate(const Feature& p, const Feature& activation,
                               const std::vector<ClassCalibration>& calib,
                               double delta) {
    const size_t num_classes = p.size();
    if (calib.size() != num_classes) {
        throw SignalError("calibrate: calibration does not cover all classes");
    }
    double p_sum = 0.0;
    for (double pi : p) p_sum += pi;
    if (std::abs(p_sum - 1.0) > 1e-6) {
        throw SignalError("calibrate: probability vector does not sum to 1");
    }
    CalibratedPrediction out;
    out.g_vector.resize(num_classes + 1);
    double g = 0.0;
    for (size_t i = 0; i < num_classes; ++i) {
        double d2 = 0.0;
        for (size_t k = 0; k < activation.size(); ++k) {
            double d = activation[k] - calib[i].mav[k];
            d2 += d * d;
        }
        double dist = std::sqrt(d2);
        double c = 1.0 - weibull_cdf(dist, calib[i].weibull_shape, calib[i].weibull_scale);
        c = std::clamp(c, 0.0, 1.0);
        out.g_vector[i] = p[i] * c;
        g += p[i] * (1.0 - c);
    }
    out.g_vector[num_classes] = g;
    out.unknown_mass = g;
    if (g > delta) {
        out.decision = static_cast<int>(num_classes);
    } else {
        out.decision = 0;
        for (size_t i = 1; i < num_classes; ++i) {
            if (out.g_vector[i] > out.g_vector[out.decision]) out.decision = static_cast<int>(i);
        }
    }
    return out;
}

void save_calibration(const std::vector<ClassCalibration>& calib, double delta,
                      const std::string& path) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : calib) {
        classes.push_back({{"mav", c.mav},
                           {"shape", c.weibull_shape},
                           {"scale", c.weibull_scale},
                           {"tail_size", c.tail_size}});
    }
    nlohmann::json j = {{"delta", delta}, {"classes", classes}};
    std::ofstream f(path);
    if (!f) throw SignalError("cannot write " + path);
    f << j.dump(2) << "\n";
}

std::vector<ClassCalibration> load_calibration(const std::string& path, double& delta) {
    std::ifstream f(path);
    if (!f) throw SignalError("cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    delta = j.at("delta").get<double>();
    std::vector<ClassCalibration> out;
    for (const auto& cj : j.at("classes")) {
        ClassCalibration c;
        c.mav = cj.at("mav").get<Feature>();
        c.weibull_shape = cj.at("shape").get<double>();
        c.weibull_scale = cj.at("scale").get<double>();
        c.tail_size = cj.at("tail_size").get<int>();
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace csi2q
