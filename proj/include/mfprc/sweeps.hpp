#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfprc/analysis.hpp"
#include "mfprc/pipeline.hpp"

namespace mfprc {

struct Axis {
    double min = 0.0;
    double max = 1.0;
    long count = 1;

    void validate() const;
    // Evenly spaced, endpoints included; a single point sits at min.
    std::vector<double> values() const;
};

struct Rect {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    bool contains(const Rect& inner) const;
};

struct SweepSettings {
    long open_steps = 20000;
    long closed_steps = 80000;
    double tau = 0.01;
    double clamp_min = 0.05;
    double clamp_max = 2.0;
    long locomotion_window = 1000;
    long extrema_window = 10000;
    long face_window = 100;
    int threads = 0;
    ClassifierConfig classifier;

    void validate() const;
};

// One closed-loop outcome.
struct CellResult {
    bool diverged = false;
    std::string error;  // set when a stage failed before classification
    std::optional<AttractorLabel> label;
    int ic_face = 0;     // 0: indeterminate
    int final_face = 0;
    double locomotion = 0.0;
    std::vector<double> extrema;  // local extrema of y1

    std::string kind_name() const;  // label kind, "Diverged" or "Error"
};

struct BasinCell {
    double p = 0.0;
    double q = 0.0;
    CellResult result;
};

struct BasinProbe {
    ReservoirTrace open;
    ClosedLoopTrace closed;
};

// Open loop driven by the interpolated signal from `rest`, then the closed
// loop with W from its final state.
BasinProbe basin_probe(const RobotModel& model, const SimState& rest, const Phenotype& ph,
                       const ReadoutWeights& w, InterpolationPoint pt, const SweepSettings& s);

// Cells in row-major order over (q, p): p varies fastest.
std::vector<BasinCell> basin_sweep(const RobotModel& model, const SimState& rest,
                                   const Phenotype& ph, const ReadoutWeights& w, const Rect& area,
                                   long nx, long ny, const SweepSettings& s);

// One sweep per level; each rectangle must lie inside the previous one.
std::vector<std::vector<BasinCell>> basin_zoom(const RobotModel& model, const SimState& rest,
                                               const Phenotype& ph, const ReadoutWeights& w,
                                               const std::vector<Rect>& levels, long nx, long ny,
                                               const SweepSettings& s);

struct StiffnessCell {
    double k_pas = 0.0;
    double k_act = 0.0;
    char ic = 'A';  // which initial condition
    CellResult result;
};

// Closed loops with the unchanged readout from both initial conditions for
// every (k_pas, k_act). Order: k_act slowest, then k_pas, then IC A before B.
std::vector<StiffnessCell> post_learning_sweep(const RobotModel& model, const ReadoutWeights& w,
                                               const Phenotype& ph, const SimState& ic_a,
                                               const SimState& ic_b, double start_time,
                                               const Axis& k_pas, const Axis& k_act,
                                               const SweepSettings& s);

struct SliceRow {
    double k_act = 0.0;
    char ic = 'A';
    std::vector<double> extrema;
};

// Rows of the sweep whose k_pas equals `k_pas` (within 1e-9).
std::vector<SliceRow> bifurcation_slice(const std::vector<StiffnessCell>& cells, double k_pas);

struct PreLearningCell {
    double k_pas = 0.0;
    double k_act = 0.0;
    std::string stage = "ok";  // settle, open-loop, train, closed-loop when failed
    int rest_face = 0;         // face the rebuilt robot came to rest on, 0 if indeterminate
    std::string error;
    CellResult a;
    CellResult b;
    bool multifunctional = false;
};

// Full retraining per (k_pas, k_act) from the start face of the rebuilt model.
// Soft robots may roll or sag onto several nodes; training then starts from
// wherever they came to rest, recorded in rest_face.
std::vector<PreLearningCell> pre_learning_sweep(const ModelParams& base, const Phenotype& ph,
                                                const PipelineConfig& pipe, const Axis& k_pas,
                                                const Axis& k_act, const SweepSettings& s);

}  // namespace mfprc
