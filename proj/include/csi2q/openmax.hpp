#pragma once

#include "csi2q/neural.hpp"

#include <string>
#include <vector>

namespace csi2q {

// Per-class extreme-value model of activation distances to the class mean.
struct ClassCalibration {
    Feature mav;          // mean activation vector of correct training samples
    double weibull_shape = 0.0;
    double weibull_scale = 0.0;
    int tail_size = 0;
};

struct CalibratedPrediction {
    Feature g_vector;     // length I+1, sums to 1
    double unknown_mass = 0.0;
    int decision = 0;     // 0..I-1 registered, I => unknown
};

// Two-parameter Weibull maximum-likelihood fit. Throws on degenerate
// (zero-spread) samples.
void weibull_fit_mle(const std::vector<double>& samples, double& shape, double& scale);

double weibull_cdf(double x, double shape, double scale);

// Per class: mean activation vector of its correctly classified training
// samples, Weibull fit to the tail_size largest distances from that mean.
std::vector<ClassCalibration> fit_calibration(
    const std::vector<std::vector<Feature>>& activations_per_class, int tail_size);

// c_i = 1 - WeibullCDF_i(||activation - mav_i||); G = [p_i c_i ..., g] with
// g = sum p_i (1 - c_i); decision unknown when g > delta, else argmax.
CalibratedPrediction calibrate(const Feature& p, const Feature& activation,
                               const std::vector<ClassCalibration>& calib,
                               double delta);

void save_calibration(const std::vector<ClassCalibration>& calib, double delta,
                      const std::string& path);
std::vector<ClassCalibration> load_calibration(const std::string& path, double& delta);

} // namespace csi2q
