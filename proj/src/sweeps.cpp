#include "mfprc/sweeps.hpp"

#include <cmath>

#include "mfprc/errors.hpp"
#include "mfprc/parallel.hpp"

namespace mfprc {

void Axis::validate() const {
    if (count < 1) throw InvalidArgument("grid axis needs at least one point");
    if (!std::isfinite(min) || !std::isfinite(max) || max < min)
        throw InvalidArgument("grid axis bounds must be finite and ordered");
}

std::vector<double> Axis::values() const {
    validate();
    std::vector<double> v(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i)
        v[static_cast<std::size_t>(i)] =
            count == 1 ? min : min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
    if (count > 1) v.back() = max;
    return v;
}

bool Rect::contains(const Rect& inner) const {
    return inner.x_min >= x_min && inner.x_max <= x_max && inner.y_min >= y_min &&
           inner.y_max <= y_max;
}

void SweepSettings::validate() const {
    if (open_steps < 1 || closed_steps < 1) throw InvalidArgument("sweep horizons must be positive");
    if (locomotion_window < 0 || extrema_window < 1 || face_window < 1)
        throw InvalidArgument("sweep windows must be positive");
    if (!(clamp_min > 0.0) || !(clamp_max >= clamp_min))
        throw InvalidArgument("command clamp range must be positive and ordered");
    classifier.validate();
}

std::string CellResult::kind_name() const {
    if (label) return to_string(label->kind);
    return diverged ? "Diverged" : "Error";
}

namespace {

int face_of(const std::vector<TouchReadings>& touch, long rows, long window, const RobotModel& m) {
    if (rows <= 0) return 0;
    const long w = std::min(window, rows);
    const std::span<const TouchReadings> tail(touch.data() + (rows - w), static_cast<std::size_t>(w));
    return bottom_face(tail, m.faces).value_or(0);
}

// Fills everything except ic_face.
void summarize(const ClosedLoopTrace& tr, const RobotModel& model, const Phenotype& ph,
               const SweepSettings& s, CellResult& out) {
    out.diverged = tr.diverged;
    const long n = tr.rows();
    out.final_face = face_of(tr.touch, n, s.face_window, model);
    if (n > 0) out.locomotion = locomotion_distance(tr.com, s.locomotion_window);
    if (tr.diverged) return;
    try {
        out.label = classify(tr, ph, s.classifier);
    } catch (const Error& e) {
        out.error = e.what();
        return;
    }
    if (out.label->kind == AttractorKind::FixedPoint)
        out.extrema = {tr.outputs(n - 1, 0)};
    else
        out.extrema = local_extrema(tr.outputs.col(0), s.extrema_window);
}

CellResult probe_cell(const RobotModel& model, const SimState& rest, const Phenotype& ph,
                      const ReadoutWeights& w, InterpolationPoint pt, const SweepSettings& s) {
    CellResult r;
    try {
        const BasinProbe probe = basin_probe(model, rest, ph, w, pt, s);
        r.ic_face = face_of(probe.open.touch, probe.open.rows(), s.face_window, model);
        summarize(probe.closed, model, ph, s, r);
    } catch (const SimulationDiverged& e) {
        // open-loop drive itself blew up
        r.diverged = true;
        r.error = e.what();
    } catch (const Error& e) {
        r.error = e.what();
    }
    return r;
}

}  // namespace

BasinProbe basin_probe(const RobotModel& model, const SimState& rest, const Phenotype& ph,
                       const ReadoutWeights& w, InterpolationPoint pt, const SweepSettings& s) {
    BasinProbe out;
    out.open = run_open_loop(model, rest, interpolated_signal(ph, pt), s.open_steps, s.tau);
    out.closed = run_closed_loop(model, out.open.final_state, w, std::nullopt, s.closed_steps, s.tau,
                                 s.clamp_min, s.clamp_max,
                                 static_cast<double>(s.open_steps) * s.tau);
    return out;
}

std::vector<BasinCell> basin_sweep(const RobotModel& model, const SimState& rest,
                                   const Phenotype& ph, const ReadoutWeights& w, const Rect& area,
                                   long nx, long ny, const SweepSettings& s) {
    s.validate();
    const auto ps = Axis{area.x_min, area.x_max, nx}.values();
    const auto qs = Axis{area.y_min, area.y_max, ny}.values();
    std::vector<BasinCell> cells(static_cast<std::size_t>(nx * ny));
    parallel_for(nx * ny, s.threads, [&](long i) {
        auto& c = cells[static_cast<std::size_t>(i)];
        c.p = ps[static_cast<std::size_t>(i % nx)];
        c.q = qs[static_cast<std::size_t>(i / nx)];
        c.result = probe_cell(model, rest, ph, w, {c.p, c.q}, s);
    });
    return cells;
}

std::vector<std::vector<BasinCell>> basin_zoom(const RobotModel& model, const SimState& rest,
                                               const Phenotype& ph, const ReadoutWeights& w,
                                               const std::vector<Rect>& levels, long nx, long ny,
                                               const SweepSettings& s) {
    if (levels.empty()) throw InvalidArgument("zoom needs at least one rectangle");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!levels[i - 1].contains(levels[i]))
            throw InvalidArgument("zoom rectangle " + std::to_string(i) +
                                  " is not inside the previous one");
    std::vector<std::vector<BasinCell>> out;
    for (const auto& r : levels) out.push_back(basin_sweep(model, rest, ph, w, r, nx, ny, s));
    return out;
}

std::vector<StiffnessCell> post_learning_sweep(const RobotModel& model, const ReadoutWeights& w,
                                               const Phenotype& ph, const SimState& ic_a,
                                               const SimState& ic_b, double start_time,
                                               const Axis& k_pas, const Axis& k_act,
                                               const SweepSettings& s) {
    s.validate();
    const auto kp = k_pas.values();
    const auto ka = k_act.values();
    for (double k : kp)
        if (!(k > 0.0)) throw InvalidArgument("stiffness values must be positive");
    for (double k : ka)
        if (!(k > 0.0)) throw InvalidArgument("stiffness values must be positive");
    const long np = k_pas.count;
    const long n = np * k_act.count * 2;
    std::vector<StiffnessCell> cells(static_cast<std::size_t>(n));
    parallel_for(n, s.threads, [&](long i) {
        auto& c = cells[static_cast<std::size_t>(i)];
        c.ic = i % 2 == 0 ? 'A' : 'B';
        c.k_pas = kp[static_cast<std::size_t>((i / 2) % np)];
        c.k_act = ka[static_cast<std::size_t>(i / (2 * np))];
        const RobotModel m = model.with_stiffness(c.k_pas, c.k_act);
        const SimState& ic = c.ic == 'A' ? ic_a : ic_b;
        const TouchReadings first = touch_readings(ic, m);
        c.result.ic_face = bottom_face(std::span(&first, 1), m.faces).value_or(0);
        try {
            const auto tr = run_closed_loop(m, ic, w, std::nullopt, s.closed_steps, s.tau,
                                            s.clamp_min, s.clamp_max, start_time);
            summarize(tr, m, ph, s, c.result);
        } catch (const Error& e) {
            c.result.error = e.what();
        }
    });
    return cells;
}

std::vector<SliceRow> bifurcation_slice(const std::vector<StiffnessCell>& cells, double k_pas) {
    std::vector<SliceRow> rows;
    for (const auto& c : cells)
        if (std::abs(c.k_pas - k_pas) <= 1e-9) rows.push_back({c.k_act, c.ic, c.result.extrema});
    return rows;
}

std::vector<PreLearningCell> pre_learning_sweep(const ModelParams& base, const Phenotype& ph,
                                                const PipelineConfig& pipe, const Axis& k_pas,
                                                const Axis& k_act, const SweepSettings& s) {
    s.validate();
    const auto kp = k_pas.values();
    const auto ka = k_act.values();
    const long np = k_pas.count;
    const long n = np * k_act.count;
    std::vector<PreLearningCell> cells(static_cast<std::size_t>(n));
    parallel_for(n, s.threads, [&](long i) {
        auto& c = cells[static_cast<std::size_t>(i)];
        c.k_pas = kp[static_cast<std::size_t>(i % np)];
        c.k_act = ka[static_cast<std::size_t>(i / np)];
        ModelParams params = base;
        params.passive_stiffness = c.k_pas;
        params.actuator_stiffness = c.k_act;
        try {
            c.stage = "settle";
            const RobotModel m = build_model(params);
            const auto settled = settle_on_face(m, pipe.start_face);
            if (!settled.settled) throw SettleFailed("robot did not settle", pipe.start_face, 0);
            c.rest_face = settled.face.value_or(0);
            const SimState& rest = settled.state;
            c.stage = "open-loop";
            const auto open_a = run_open_loop(m, rest, target_signal(ph, Target::A), pipe.steps, pipe.tau);
            const auto open_b = run_open_loop(m, rest, target_signal(ph, Target::B), pipe.steps, pipe.tau);
            c.stage = "train";
            const auto w = ridge_train(assemble(open_a, open_b, ph, pipe.washout), pipe.beta);
            c.stage = "closed-loop";
            const double t0 = static_cast<double>(pipe.steps) * pipe.tau;
            const ReservoirTrace* opens[] = {&open_a, &open_b};
            CellResult* outs[] = {&c.a, &c.b};
            for (int k = 0; k < 2; ++k) {
                outs[k]->ic_face = face_of(opens[k]->touch, opens[k]->rows(), s.face_window, m);
                const auto tr = run_closed_loop(m, opens[k]->final_state, w, std::nullopt,
                                                s.closed_steps, pipe.tau, pipe.clamp_min,
                                                pipe.clamp_max, t0);
                summarize(tr, m, ph, s, *outs[k]);
            }
            c.stage = "ok";
        } catch (const Error& e) {
            c.error = e.what();
        }
        c.multifunctional = c.a.label && c.a.label->kind == AttractorKind::TrainedA && c.b.label &&
                            c.b.label->kind == AttractorKind::TrainedB;
    });
    return cells;
}

}  // namespace mfprc
