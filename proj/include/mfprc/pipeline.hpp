#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfprc/dynamics.hpp"
#include "mfprc/signals.hpp"

namespace mfprc {

using Series2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using Series3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using SeriesR = Eigen::Matrix<double, Eigen::Dynamic, kReservoirDim>;

struct PipelineConfig {
    long steps = 20000;           // open-loop length T
    double tau = 0.01;            // reservoir step, s
    double beta = 0.01;
    double clamp_min = 0.05;      // closed-loop command range
    double clamp_max = 2.0;
    long washout = 0;             // leading columns dropped per block in assemble
    long closed_steps = 20000;    // training-stage closed loop
    long attractor_steps = 80000; // attractor convergence runs
    int start_face = 1;
};

// Row n holds the quantities at t = start_time + n*tau, measured before the
// command of row n is applied.
struct ReservoirTrace {
    SeriesR measurements;
    Series2 commands;
    Series3 com;
    std::vector<TouchReadings> touch;
    SimState final_state;
    double tau = 0.01;
    double start_time = 0.0;

    long rows() const { return static_cast<long>(measurements.rows()); }
};

struct TrainingSet {
    Eigen::MatrixXd R;  // features x samples
    Eigen::MatrixXd D;  // outputs x samples
};

struct ReadoutWeights {
    Eigen::MatrixXd W;  // outputs x features
    double beta = 0.0;
};

struct ClosedLoopTrace {
    Series2 outputs;  // y
    SeriesR measurements;
    Series3 com;
    std::vector<TouchReadings> touch;
    SimState final_state;
    bool diverged = false;
    long diverged_step = -1;
    double tau = 0.01;
    double start_time = 0.0;

    long rows() const { return static_cast<long>(outputs.rows()); }
};

// Physics substeps per reservoir step; throws unless tau is a whole
// multiple of the model timestep.
long substeps(const RobotModel& model, double tau);

// Signal time is start_time + n*tau. SimulationDiverged carries the
// reservoir step index.
ReservoirTrace run_open_loop(const RobotModel& model, const SimState& initial,
                             const Signal& signal, long steps, double tau,
                             double start_time = 0.0);

// Column j of D is the target one reservoir step after column j of R.
TrainingSet assemble(std::span<const ReservoirTrace> traces, std::span<const Signal> targets,
                     long washout = 0);
TrainingSet assemble(const ReservoirTrace& a, const ReservoirTrace& b, const Phenotype& ph,
                     long washout = 0);

// W = D R^T (R R^T + beta I)^-1. Throws SingularMatrix when the system is
// rank deficient (beta = 0) or the solve misses the residual bound.
ReadoutWeights ridge_train(const TrainingSet& ts, double beta);

// y(0) = u0 (default W g(initial)), y(n+1) = W r(n). Commands are clamped to
// [clamp_min, clamp_max] before actuation; y is recorded unclamped. On
// divergence the trace is truncated and flagged.
ClosedLoopTrace run_closed_loop(const RobotModel& model, const SimState& initial,
                                const ReadoutWeights& w, std::optional<MotorCommand> u0,
                                long steps, double tau, double clamp_min, double clamp_max,
                                double start_time = 0.0);

// Open loops A and B from `rest`, ridge training, then closed loops that
// continue from the two open-loop final states.
struct MfprcRun {
    ReservoirTrace open_a;
    ReservoirTrace open_b;
    ReadoutWeights readout;
    ClosedLoopTrace closed_a;
    ClosedLoopTrace closed_b;
};

MfprcRun run_mfprc(const RobotModel& model, const SimState& rest, const Phenotype& ph,
                   const PipelineConfig& cfg, long closed_steps);

// Target samples at start_time + n*tau, n = 0..rows-1.
Series2 sample_signal(const Signal& s, long rows, double tau, double start_time);

}  // namespace mfprc
