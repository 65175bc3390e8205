#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfprc/pipeline.hpp"

namespace mfprc {

struct ShiftRange {
    long lo = 0;
    long hi = 200;
};

struct ClassifierConfig {
    long nrmse_window = 6000;
    double nrmse_threshold = 0.30;
    ShiftRange shifts;
    long fixedpoint_window = 2000;
    double fixedpoint_threshold = 0.01;
    long acf_window = 10000;
    double acf_threshold = 0.95;
    long acf_min_lag = 51;
    long acf_max_lag = 0;  // 0: half the ACF window

    void validate() const;
    // Longest trace prefix any test looks at.
    long required_length() const;
};

enum class AttractorKind { TrainedA, TrainedB, FixedPoint, Periodic, Aperiodic };

std::string to_string(AttractorKind k);
AttractorKind attractor_kind_from_string(const std::string& s);

struct ShiftedError {
    double error = 0.0;
    long shift = 0;
};

struct AcfResult {
    double max_acf = 0.0;  // over lags in [min_lag, max_lag]
    long lag = 0;
    bool periodic = false;
};

struct AttractorLabel {
    AttractorKind kind = AttractorKind::Aperiodic;
    ShiftedError nrmse_a;
    ShiftedError nrmse_b;
    double output_range = 0.0;
    double max_acf = 0.0;
    long acf_lag = 0;
};

// Two-channel mean of RMSE(y(t+shift) - d(t)) / range(d) over the window,
// minimised over the shift range. y and d are sampled on the same grid; the
// target window ends shift.hi rows before the end. Ties go to the smaller
// shift. Throws ZeroRange, TraceTooShort.
ShiftedError nrmse_shifted(const Series2& y, const Series2& d, long window, ShiftRange shifts);
ShiftedError nrmse_shifted(const Series2& y, const Series2& d, const ClassifierConfig& cfg);

// Largest per-channel range over the final `window` rows.
double output_range(const Series2& y, long window);
bool is_fixed_point(const Series2& y, const ClassifierConfig& cfg);

// Two-channel mean autocorrelation of the final `window` rows for lags
// 0..max_lag; channels with zero variance are left out of the mean.
// Throws ZeroVariance when every channel is constant.
std::vector<double> autocorrelation(const Series2& y, long window, long max_lag);
AcfResult acf_periodicity(const Series2& y, const ClassifierConfig& cfg);

// d_a and d_b are the targets sampled on the grid of y.
AttractorLabel classify(const Series2& y, const Series2& d_a, const Series2& d_b,
                        const ClassifierConfig& cfg);
AttractorLabel classify(const ClosedLoopTrace& trace, const Phenotype& ph,
                        const ClassifierConfig& cfg);

// Planar displacement between the last COM sample and the one `window` rows
// earlier (clipped to the first row).
double locomotion_distance(const Series3& com, long window);

// Per-component z-scored RMSE between r_a(t) and r_b(t + shift) averaged over
// the retained components, minimised over shifts. The comparison window has
// `window` rows and both series are z-scored over the final
// window + max(|lo|, |hi|) rows, which keeps the measure symmetric under
// swapping the series and negating the range. Components constant in either
// series are dropped. Throws AllComponentsConstant, TraceTooShort.
double behavior_difference(const Eigen::MatrixXd& r_a, const Eigen::MatrixXd& r_b, long window,
                           ShiftRange shifts);

// Values of strict local maxima and minima over the final `window` samples.
// Runs of equal values count once; a constant series yields its value once.
std::vector<double> local_extrema(const Eigen::VectorXd& x, long window);

}  // namespace mfprc
