#include "mfprc/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "mfprc/errors.hpp"

namespace mfprc {

long substeps(const RobotModel& model, double tau) {
    if (!(tau > 0.0)) throw InvalidArgument("reservoir timestep must be positive");
    const double ratio = tau / model.timestep;
    const long n = std::lround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
        throw InvalidArgument("reservoir timestep must be a whole multiple of the physics timestep");
    return n;
}

namespace {

void record(const SimState& s, const RobotModel& model, long row, SeriesR& meas, Series3& com,
            std::vector<TouchReadings>& touch) {
    meas.row(row) = measure_reservoir(s, model).transpose();
    com.row(row) = center_of_mass(s).transpose();
    touch.push_back(touch_readings(s, model));
}

SimState hold(SimState s, const RobotModel& model, MotorCommand cmd, long n, long row) {
    try {
        for (long i = 0; i < n; ++i) s = step(s, model, cmd, model.timestep);
    } catch (SimulationDiverged& e) {
        e.step = row;
        throw;
    }
    return s;
}

}  // namespace

ReservoirTrace run_open_loop(const RobotModel& model, const SimState& initial,
                             const Signal& signal, long steps, double tau, double start_time) {
    if (steps < 1) throw InvalidArgument("open loop needs at least one step");
    const long sub = substeps(model, tau);
    ReservoirTrace tr;
    tr.tau = tau;
    tr.start_time = start_time;
    tr.measurements.resize(steps, kReservoirDim);
    tr.commands.resize(steps, 2);
    tr.com.resize(steps, 3);
    tr.touch.reserve(static_cast<std::size_t>(steps));
    SimState s = initial;
    for (long n = 0; n < steps; ++n) {
        const MotorCommand u = signal(start_time + static_cast<double>(n) * tau);
        record(s, model, n, tr.measurements, tr.com, tr.touch);
        tr.commands(n, 0) = u.u1;
        tr.commands(n, 1) = u.u2;
        s = hold(s, model, u, sub, n);
    }
    tr.final_state = s;
    return tr;
}

namespace {

TrainingSet assemble_impl(const std::vector<const ReservoirTrace*>& traces,
                          std::span<const Signal> targets, long washout) {
    if (traces.empty() || traces.size() != targets.size())
        throw LengthMismatch("need one target signal per trace");
    if (washout < 0) throw InvalidArgument("washout must be non-negative");
    const long T = traces.front()->rows();
    const double tau = traces.front()->tau;
    for (const auto* t : traces)
        if (t->rows() != T || t->tau != tau)
            throw LengthMismatch("traces differ in length or reservoir timestep");
    if (washout >= T) throw LengthMismatch("washout leaves no samples");
    const long per = T - washout;
    const long cols = per * static_cast<long>(traces.size());
    TrainingSet ts;
    ts.R.resize(kReservoirDim, cols);
    ts.D.resize(2, cols);
    for (std::size_t k = 0; k < traces.size(); ++k) {
        const auto& tr = *traces[k];
        const long base = static_cast<long>(k) * per;
        ts.R.middleCols(base, per) = tr.measurements.middleRows(washout, per).transpose();
        for (long n = washout; n < T; ++n) {
            const MotorCommand d = targets[k](tr.start_time + static_cast<double>(n + 1) * tau);
            ts.D(0, base + n - washout) = d.u1;
            ts.D(1, base + n - washout) = d.u2;
        }
    }
    return ts;
}

}  // namespace

TrainingSet assemble(std::span<const ReservoirTrace> traces, std::span<const Signal> targets,
                     long washout) {
    std::vector<const ReservoirTrace*> ptrs;
    for (const auto& t : traces) ptrs.push_back(&t);
    return assemble_impl(ptrs, targets, washout);
}

TrainingSet assemble(const ReservoirTrace& a, const ReservoirTrace& b, const Phenotype& ph,
                     long washout) {
    const Signal targets[] = {target_signal(ph, Target::A), target_signal(ph, Target::B)};
    return assemble_impl({&a, &b}, targets, washout);
}

ReadoutWeights ridge_train(const TrainingSet& ts, double beta) {
    if (!(beta >= 0.0)) throw InvalidArgument("ridge parameter must be non-negative");
    if (ts.R.cols() != ts.D.cols() || ts.R.cols() == 0)
        throw LengthMismatch("R and D need the same non-zero number of columns");
    const long n = ts.R.rows();
    Eigen::MatrixXd A = ts.R * ts.R.transpose();
    A.diagonal().array() += beta;
    const Eigen::MatrixXd B = ts.D * ts.R.transpose();
    if (beta == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < n) throw SingularMatrix("R R^T is rank deficient and beta = 0");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw SingularMatrix("R R^T + beta I is not positive definite");
    ReadoutWeights w;
    w.beta = beta;
    w.W = llt.solve(B.transpose()).transpose();
    const double scale = B.norm();
    const double resid = (w.W * A - B).norm();
    if (!w.W.allFinite() || resid > 1e-8 * std::max(scale, 1e-300))
        throw SingularMatrix("ridge solve residual too large");
    return w;
}

ClosedLoopTrace run_closed_loop(const RobotModel& model, const SimState& initial,
                                const ReadoutWeights& w, std::optional<MotorCommand> u0,
                                long steps, double tau, double clamp_min, double clamp_max,
                                double start_time) {
    if (steps < 1) throw InvalidArgument("closed loop needs at least one step");
    if (w.W.rows() != 2 || w.W.cols() != kReservoirDim)
        throw LengthMismatch("readout must be 2 x 48");
    if (!(clamp_min > 0.0) || !(clamp_max >= clamp_min))
        throw InvalidArgument("command clamp range must be positive and ordered");
    const long sub = substeps(model, tau);
    ClosedLoopTrace tr;
    tr.tau = tau;
    tr.start_time = start_time;
    tr.outputs.resize(steps, 2);
    tr.measurements.resize(steps, kReservoirDim);
    tr.com.resize(steps, 3);
    tr.touch.reserve(static_cast<std::size_t>(steps));

    SimState s = initial;
    Eigen::Vector2d y;
    long n = 0;
    for (; n < steps; ++n) {
        record(s, model, n, tr.measurements, tr.com, tr.touch);
        if (n == 0) {
            if (u0)
                y = {u0->u1, u0->u2};
            else
                y = w.W * tr.measurements.row(0).transpose();
        }
        tr.outputs.row(n) = y.transpose();
        if (!y.allFinite()) {
            tr.diverged = true;
            tr.diverged_step = n;
            ++n;
            break;
        }
        const MotorCommand u{std::clamp(y[0], clamp_min, clamp_max),
                             std::clamp(y[1], clamp_min, clamp_max)};
        try {
            s = hold(s, model, u, sub, n);
        } catch (const SimulationDiverged&) {
            tr.diverged = true;
            tr.diverged_step = n;
            ++n;
            break;
        }
        y = w.W * tr.measurements.row(n).transpose();
    }
    if (n < steps) {
        tr.outputs.conservativeResize(n, 2);
        tr.measurements.conservativeResize(n, kReservoirDim);
        tr.com.conservativeResize(n, 3);
    }
    tr.final_state = s;
    return tr;
}

MfprcRun run_mfprc(const RobotModel& model, const SimState& rest, const Phenotype& ph,
                   const PipelineConfig& cfg, long closed_steps) {
    MfprcRun run;
    run.open_a = run_open_loop(model, rest, target_signal(ph, Target::A), cfg.steps, cfg.tau);
    run.open_b = run_open_loop(model, rest, target_signal(ph, Target::B), cfg.steps, cfg.tau);
    run.readout = ridge_train(assemble(run.open_a, run.open_b, ph, cfg.washout), cfg.beta);
    const double t0 = static_cast<double>(cfg.steps) * cfg.tau;
    run.closed_a = run_closed_loop(model, run.open_a.final_state, run.readout, std::nullopt,
                                   closed_steps, cfg.tau, cfg.clamp_min, cfg.clamp_max, t0);
    run.closed_b = run_closed_loop(model, run.open_b.final_state, run.readout, std::nullopt,
                                   closed_steps, cfg.tau, cfg.clamp_min, cfg.clamp_max, t0);
    return run;
}

Series2 sample_signal(const Signal& s, long rows, double tau, double start_time) {
    Series2 out(rows, 2);
    for (long n = 0; n < rows; ++n) {
        const MotorCommand u = s(start_time + static_cast<double>(n) * tau);
        out(n, 0) = u.u1;
        out(n, 1) = u.u2;
    }
    return out;
}

}  // namespace mfprc
