#include "mfprc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfprc/errors.hpp"

namespace mfprc {

void ClassifierConfig::validate() const {
    if (nrmse_window < 1 || fixedpoint_window < 1 || acf_window < 2)
        throw InvalidArgument("classifier windows must be positive");
    if (!(nrmse_threshold > 0.0) || !(fixedpoint_threshold > 0.0) || !(acf_threshold > 0.0))
        throw InvalidArgument("classifier thresholds must be positive");
    if (shifts.lo > shifts.hi) throw InvalidArgument("shift range is empty");
    if (acf_min_lag < 1 || acf_max_lag < 0) throw InvalidArgument("bad ACF lag bounds");
    const long max_lag = acf_max_lag > 0 ? acf_max_lag : acf_window / 2;
    if (max_lag < acf_min_lag || max_lag >= acf_window)
        throw InvalidArgument("ACF lag range must lie inside the ACF window");
}

long ClassifierConfig::required_length() const {
    const long nrmse = nrmse_window + std::max(shifts.hi, 0L) + std::max(-shifts.lo, 0L);
    return std::max({nrmse, fixedpoint_window, acf_window});
}

std::string to_string(AttractorKind k) {
    switch (k) {
        case AttractorKind::TrainedA: return "TrainedA";
        case AttractorKind::TrainedB: return "TrainedB";
        case AttractorKind::FixedPoint: return "FixedPoint";
        case AttractorKind::Periodic: return "Periodic";
        case AttractorKind::Aperiodic: return "Aperiodic";
    }
    return "Aperiodic";
}

AttractorKind attractor_kind_from_string(const std::string& s) {
    for (auto k : {AttractorKind::TrainedA, AttractorKind::TrainedB, AttractorKind::FixedPoint,
                   AttractorKind::Periodic, AttractorKind::Aperiodic})
        if (to_string(k) == s) return k;
    throw InvalidArgument("unknown attractor kind '" + s + "'");
}

ShiftedError nrmse_shifted(const Series2& y, const Series2& d, long window, ShiftRange shifts) {
    if (y.rows() != d.rows()) throw LengthMismatch("output and target differ in length");
    if (window < 1 || shifts.lo > shifts.hi) throw InvalidArgument("bad NRMSE window or shifts");
    const long n = y.rows();
    const long s0 = n - window - std::max(shifts.hi, 0L);
    if (s0 + std::min(shifts.lo, 0L) < 0) throw TraceTooShort("series too short for the NRMSE window");
    const auto target = d.middleRows(s0, window);
    const Eigen::RowVector2d range = target.colwise().maxCoeff() - target.colwise().minCoeff();
    if (!(range[0] > 0.0) || !(range[1] > 0.0))
        throw ZeroRange("target channel is constant over the NRMSE window");
    ShiftedError best{std::numeric_limits<double>::infinity(), shifts.lo};
    for (long dt = shifts.lo; dt <= shifts.hi; ++dt) {
        const auto diff = y.middleRows(s0 + dt, window) - target;
        const Eigen::RowVector2d rmse =
            (diff.colwise().squaredNorm() / static_cast<double>(window)).cwiseSqrt();
        const double e = 0.5 * (rmse[0] / range[0] + rmse[1] / range[1]);
        if (e < best.error) best = {e, dt};
    }
    return best;
}

ShiftedError nrmse_shifted(const Series2& y, const Series2& d, const ClassifierConfig& cfg) {
    return nrmse_shifted(y, d, cfg.nrmse_window, cfg.shifts);
}

double output_range(const Series2& y, long window) {
    if (window < 1 || window > y.rows()) throw TraceTooShort("series shorter than the range window");
    const auto tail = y.bottomRows(window);
    return (tail.colwise().maxCoeff() - tail.colwise().minCoeff()).maxCoeff();
}

bool is_fixed_point(const Series2& y, const ClassifierConfig& cfg) {
    return output_range(y, cfg.fixedpoint_window) < cfg.fixedpoint_threshold;
}

std::vector<double> autocorrelation(const Series2& y, long window, long max_lag) {
    if (window < 2 || window > y.rows()) throw TraceTooShort("series shorter than the ACF window");
    if (max_lag < 0 || max_lag >= window) throw InvalidArgument("ACF lag outside the window");
    std::vector<double> acf(static_cast<std::size_t>(max_lag + 1), 0.0);
    int used = 0;
    for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd x = y.col(c).tail(window);
        if (x.maxCoeff() == x.minCoeff()) continue;
        const Eigen::VectorXd z = x.array() - x.mean();
        const double var = z.squaredNorm() / static_cast<double>(window);
        for (long lag = 0; lag <= max_lag; ++lag) {
            const long len = window - lag;
            const double num = z.head(len).dot(z.tail(len));
            acf[static_cast<std::size_t>(lag)] += num / (static_cast<double>(len) * var);
        }
        ++used;
    }
    if (used == 0) throw ZeroVariance("every channel is constant over the ACF window");
    for (auto& v : acf) v /= used;
    return acf;
}

AcfResult acf_periodicity(const Series2& y, const ClassifierConfig& cfg) {
    const long max_lag = cfg.acf_max_lag > 0 ? cfg.acf_max_lag : cfg.acf_window / 2;
    const auto acf = autocorrelation(y, cfg.acf_window, max_lag);
    AcfResult r{-std::numeric_limits<double>::infinity(), cfg.acf_min_lag, false};
    for (long lag = cfg.acf_min_lag; lag <= max_lag; ++lag) {
        const double v = acf[static_cast<std::size_t>(lag)];
        if (v > r.max_acf) {
            r.max_acf = v;
            r.lag = lag;
        }
    }
    r.periodic = r.max_acf > cfg.acf_threshold;
    return r;
}

AttractorLabel classify(const Series2& y, const Series2& d_a, const Series2& d_b,
                        const ClassifierConfig& cfg) {
    cfg.validate();
    if (y.rows() < cfg.required_length())
        throw TraceTooShort("trace has " + std::to_string(y.rows()) + " rows, classifier needs " +
                            std::to_string(cfg.required_length()));
    AttractorLabel label;
    label.nrmse_a = nrmse_shifted(y, d_a, cfg);
    label.nrmse_b = nrmse_shifted(y, d_b, cfg);
    label.output_range = output_range(y, cfg.fixedpoint_window);
    try {
        const auto acf = acf_periodicity(y, cfg);
        label.max_acf = acf.max_acf;
        label.acf_lag = acf.lag;
    } catch (const ZeroVariance&) {
        label.max_acf = 0.0;
        label.acf_lag = 0;
    }
    const bool pass_a = label.nrmse_a.error < cfg.nrmse_threshold;
    const bool pass_b = label.nrmse_b.error < cfg.nrmse_threshold;
    if (pass_a && pass_b)
        label.kind = label.nrmse_a.error <= label.nrmse_b.error ? AttractorKind::TrainedA
                                                                : AttractorKind::TrainedB;
    else if (pass_a)
        label.kind = AttractorKind::TrainedA;
    else if (pass_b)
        label.kind = AttractorKind::TrainedB;
    else if (label.output_range < cfg.fixedpoint_threshold)
        label.kind = AttractorKind::FixedPoint;
    else if (label.max_acf > cfg.acf_threshold)
        label.kind = AttractorKind::Periodic;
    else
        label.kind = AttractorKind::Aperiodic;
    return label;
}

AttractorLabel classify(const ClosedLoopTrace& trace, const Phenotype& ph,
                        const ClassifierConfig& cfg) {
    const long n = trace.rows();
    const Series2 da = sample_signal(target_signal(ph, Target::A), n, trace.tau, trace.start_time);
    const Series2 db = sample_signal(target_signal(ph, Target::B), n, trace.tau, trace.start_time);
    return classify(trace.outputs, da, db, cfg);
}

double locomotion_distance(const Series3& com, long window) {
    if (com.rows() == 0) throw TraceTooShort("empty COM trajectory");
    if (window < 0) throw InvalidArgument("locomotion window must be non-negative");
    const long last = com.rows() - 1;
    const long first = std::max(0L, last - window);
    return (com.row(last).head<2>() - com.row(first).head<2>()).norm();
}

double behavior_difference(const Eigen::MatrixXd& r_a, const Eigen::MatrixXd& r_b, long window,
                           ShiftRange shifts) {
    if (r_a.rows() != r_b.rows() || r_a.cols() != r_b.cols())
        throw LengthMismatch("measurement series differ in shape");
    if (window < 1 || shifts.lo > shifts.hi) throw InvalidArgument("bad window or shift range");
    const long n = r_a.rows();
    const long reach = std::max(std::abs(shifts.lo), std::abs(shifts.hi));
    const long s0 = n - window - reach;
    if (s0 < 0) throw TraceTooShort("series too short for the behaviour window");
    const long seg = n - s0;

    std::vector<long> keep;
    for (long j = 0; j < r_a.cols(); ++j) {
        const auto a = r_a.col(j).tail(seg);
        const auto b = r_b.col(j).tail(seg);
        if (a.maxCoeff() != a.minCoeff() && b.maxCoeff() != b.minCoeff()) keep.push_back(j);
    }
    if (keep.empty()) throw AllComponentsConstant("every component is constant in one of the series");

    const long m = static_cast<long>(keep.size());
    Eigen::MatrixXd za(seg, m), zb(seg, m);
    for (long k = 0; k < m; ++k) {
        for (int side = 0; side < 2; ++side) {
            const Eigen::VectorXd x = (side == 0 ? r_a : r_b).col(keep[k]).tail(seg);
            const double mean = x.mean();
            const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(seg));
            (side == 0 ? za : zb).col(k) = (x.array() - mean) / sd;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (long dt = shifts.lo; dt <= shifts.hi; ++dt) {
        const long ia = std::max(0L, -dt);
        const long ib = std::max(0L, dt);
        const auto diff = za.middleRows(ia, window) - zb.middleRows(ib, window);
        const double e =
            (diff.colwise().squaredNorm() / static_cast<double>(window)).cwiseSqrt().mean();
        best = std::min(best, e);
    }
    return best;
}

std::vector<double> local_extrema(const Eigen::VectorXd& x, long window) {
    if (x.size() == 0) return {};
    const long w = std::min<long>(window, x.size());
    const Eigen::VectorXd tail = x.tail(w);
    std::vector<double> runs;
    for (long i = 0; i < w; ++i)
        if (runs.empty() || tail[i] != runs.back()) runs.push_back(tail[i]);
    if (runs.size() == 1) return {runs.front()};
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
        const bool peak = runs[i] > runs[i - 1] && runs[i] > runs[i + 1];
        const bool trough = runs[i] < runs[i - 1] && runs[i] < runs[i + 1];
        if (peak || trough) out.push_back(runs[i]);
    }
    return out;
}

}  // namespace mfprc
