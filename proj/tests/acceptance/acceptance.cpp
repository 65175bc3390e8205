// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mfprc/errors.hpp"
#include "mfprc/io.hpp"
#include "oracles.hpp"

using namespace mfprc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Context {
    std::string cli;
    fs::path work;
    int threads = 0;
};

const RobotModel& model() {
    static const RobotModel m = build_model();
    return m;
}

ExperimentConfig desk() { return profile_config("desk"); }

// Desk-scale training shared by criteria 9, 10 and 12.
const MfprcRun& desk_run() {
    static const MfprcRun run = [] {
        const auto cfg = desk();
        const RobotModel m = build_model(cfg.model);
        const SimState rest = set_initial_face(m, cfg.pipeline.start_face);
        return run_mfprc(m, rest, phenotype_preset(cfg.phenotype), cfg.pipeline, cfg.pipeline.attractor_steps);
    }();
    return run;
}

// ---------------------------------------------------------------------------

Outcome tendon_law(const Context&) {
    Outcome o;
    TendonSpec t;
    t.stiffness = 375.0;
    t.damping = 7.5;
    t.restlength = 0.25;
    const double stretch = tendon_force(0.35, 0.0, t);
    // 0.35 - 0.25 is one ulp short of 0.1 in binary
    o.require(std::abs(stretch + 37.5) <= 2.0 * std::numeric_limits<double>::epsilon() * 37.5, "stretch 0.10 -> -37.5 N");
    o.require(tendon_force(0.375, 0.0, t) == -46.875, "stretch 0.125 -> -46.875 N exactly");
    o.require(tendon_force(0.25, 1.0, t) == -7.5, "rate 1 m/s -> -7.5 N exactly");
    o.require(tendon_force(0.25, 0.0, t) == 0.0, "rest -> 0 N");
    o.note("F(0.35, 0) = " + format_double(stretch) + " N");
    return o;
}

Outcome physics_oracle(const Context&) {
    Outcome o;
    for (double c : {0.0, 7.5}) {
        auto tb = oracle::two_body(c, 0.1);
        SimState s = tb.state;
        double worst = 0.0;
        for (int n = 1; n <= 1000; ++n) {
            s = step(s, tb.model, {1.0, 1.0}, 1e-3);
            const double exact = oracle::damped_oscillator(0.1, tb.k, c, tb.reduced_mass, n * 1e-3);
            worst = std::max(worst, std::abs(oracle::node_gap(tb, s) - exact));
        }
        o.require(worst / 0.1 < 1e-3, "two-body c=" + num(c));
        o.note("c=" + num(c) + ": max rel dev " + num(worst / 0.1));
    }
    return o;
}

Outcome conservation(const Context&) {
    Outcome o;
    const RobotModel m = model().without_gravity().without_contact();
    SimState s = relax_to_equilibrium(model());
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& b : s.bars) {
        b.linear_velocity = Vec3(n(rng), n(rng), n(rng)) * 0.5;
        b.angular_velocity = Vec3(n(rng), n(rng), n(rng));
    }
    const MotorCommand cmd{0.9, 1.1};
    const Vec3 p0 = linear_momentum(s, m);
    double e = mechanical_energy(s, m, cmd);
    double rise = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
        s = step(s, m, cmd, m.timestep);
        const double e2 = mechanical_energy(s, m, cmd);
        rise = std::max(rise, e2 - e);
        e = e2;
    }
    const double dp = (linear_momentum(s, m) - p0).norm() / p0.norm();
    o.require(dp <= 1e-8, "momentum drift");
    o.require(rise <= 1e-6, "energy increase per step");
    o.note("momentum rel drift " + num(dp) + ", max energy step " + num(rise) + " J");
    return o;
}

Outcome symmetry(const Context&) {
    Outcome o;
    const auto& m = model();
    const SimState s = relax_to_equilibrium(m);
    const auto r = measure_reservoir(s, m);
    const auto [lo, hi] = std::minmax_element(r.data(), r.data() + kNumPassive);
    const auto p = node_positions(s, m);
    const double d0 = (p[m.actuator(0).node_b] - p[m.actuator(0).node_a]).norm();
    const double d1 = (p[m.actuator(1).node_b] - p[m.actuator(1).node_a]).norm();
    o.require(*hi - *lo < 1e-4, "24 passive lengths within 1e-4 m");
    o.require(std::abs(d0 - d1) < 1e-4, "actuator distances equal");
    o.note("passive spread " + num(*hi - *lo) + " m, actuator gap " + num(std::abs(d0 - d1)) + " m");
    return o;
}

Outcome ridge(const Context&) {
    Outcome o;
    TrainingSet s{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0)};
    const double w = ridge_train(s, 0.01).W(0, 0);
    o.require(std::abs(w - 1.980198) <= 1e-6 && std::abs(w - 2.0 / 1.01) <= 1e-9, "scalar case");
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        TrainingSet ts{Eigen::MatrixXd(48, 200), Eigen::MatrixXd(2, 200)};
        for (long i = 0; i < ts.R.size(); ++i) ts.R(i) = g(rng);
        for (long i = 0; i < ts.D.size(); ++i) ts.D(i) = g(rng);
        const auto ref = oracle::ridge_oracle(ts.R, ts.D, 0.01);
        worst = std::max(worst, (ridge_train(ts, 0.01).W - ref).norm() / ref.norm());
    }
    o.require(worst < 1e-8, "random 48x200 instances");
    o.note("scalar W = " + format_double(w) + ", worst rel " + num(worst));
    return o;
}

Outcome classifier(const Context&) {
    Outcome o;
    const ClassifierConfig cfg;
    o.require(cfg.nrmse_threshold == 0.30 && cfg.fixedpoint_threshold == 0.01 && cfg.acf_threshold == 0.95 &&
                  cfg.acf_min_lag == 51,
              "default thresholds");
    const long n = cfg.required_length() + 500;
    const Series2 da = oracle::sinusoid(n, 137.3, 0.1, 0.5);
    const Series2 db = oracle::sinusoid(n, 61.1, 0.1, 0.8, 1.0);
    o.require(classify(da, da, db, cfg).kind == AttractorKind::TrainedA, "replayed target");

    const Series2 full = oracle::sinusoid(n + 37, 137.3, 0.1, 0.5);
    const auto lag = classify(Series2(full.topRows(n)), Series2(full.bottomRows(n)), db, cfg);
    o.require(lag.kind == AttractorKind::TrainedA && lag.nrmse_a.shift == 37, "37-step lag");

    Series2 flat(n, 2);
    flat.setConstant(0.7);
    o.require(classify(flat, da, db, cfg).kind == AttractorKind::FixedPoint, "constant");

    const auto per = classify(oracle::sinusoid(n, 80.0, 0.3, 1.2), da, db, cfg);
    o.require(per.kind == AttractorKind::Periodic && per.max_acf > 0.999, "sinusoid");

    const auto ap = classify(oracle::logistic_series(n), da, db, cfg);
    o.require(ap.kind == AttractorKind::Aperiodic, "logistic map");
    o.note("lag shift " + std::to_string(lag.nrmse_a.shift) + ", sinusoid ACF " + num(per.max_acf) +
           ", logistic ACF " + num(ap.max_acf));
    return o;
}

Outcome faces(const Context&) {
    Outcome o;
    const std::map<int, std::set<int>> anchors{{1, {2, 5, 8}}, {6, {3, 5, 10}}, {13, {2, 5, 10}}, {17, {1, 3, 5}}};
    for (const auto& [label, sensors] : anchors) {
        const auto& f = face_by_label(model().faces, label).nodes;
        o.require(std::set<int>{f[0] + 1, f[1] + 1, f[2] + 1} == sensors, "face table {" + std::to_string(label) + "}");
        const SimState s = set_initial_face(model(), label);
        const auto touch = touch_readings(s, model());
        std::set<int> on;
        for (int i = 0; i < kNumNodes; ++i)
            if (touch[i]) on.insert(i + 1);
        o.require(on == sensors, "settled touch set {" + std::to_string(label) + "}");
        o.require(bottom_face(std::span(&touch, 1), model().faces) == label, "detected face {" + std::to_string(label) + "}");
    }
    return o;
}

Outcome nsga(const Context&) {
    Outcome o;
    auto pop = oracle::population_of({{1, 1, 0}, {2, 2, 0}, {0, 3, 0}});
    auto fronts = nondominated_sort(pop);
    std::sort(fronts[0].begin(), fronts[0].end());
    o.require(fronts.size() == 2 && fronts[0] == std::vector<std::size_t>{1, 2} &&
                  fronts[1] == std::vector<std::size_t>{0},
              "three-point example");
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(1, 200);
    int agree = 0;
    for (int t = 0; t < 50; ++t) {
        const auto pts = oracle::random_points(rng, size(rng));
        auto p = oracle::population_of(pts);
        auto f = nondominated_sort(p)[0];
        std::sort(f.begin(), f.end());
        agree += f == oracle::brute_force_front(pts);
    }
    o.require(agree == 50, "brute-force agreement");
    o.note(std::to_string(agree) + "/50 populations agree");
    return o;
}

Outcome endpoints(const Context&) {
    Outcome o;
    const auto cfg = desk();
    const auto s = sweep_settings(cfg);
    const RobotModel m = build_model(cfg.model);
    const SimState rest = set_initial_face(m, cfg.pipeline.start_face);
    const auto ph = phenotype_preset(cfg.phenotype);
    const auto& w = desk_run().readout;
    for (const auto& [pt, tgt] : {std::pair{InterpolationPoint{0.0, 0.0}, Target::A},
                                  std::pair{InterpolationPoint{1.0, 1.0}, Target::B}}) {
        const std::string tag = tgt == Target::A ? "(0,0)" : "(1,1)";
        const auto probe = basin_probe(m, rest, ph, w, pt, s);
        const auto open = run_open_loop(m, rest, target_signal(ph, tgt), s.open_steps, s.tau);
        const auto closed = run_closed_loop(m, open.final_state, w, std::nullopt, s.closed_steps, s.tau, s.clamp_min,
                                            s.clamp_max, static_cast<double>(s.open_steps) * s.tau);
        o.require(probe.open.measurements == open.measurements && probe.open.commands == open.commands &&
                      probe.open.com == open.com,
                  tag + " open loop");
        o.require(probe.closed.outputs == closed.outputs && probe.closed.measurements == closed.measurements &&
                      probe.closed.final_state.flatten() == closed.final_state.flatten(),
                  tag + " closed loop");
        o.require(open_trace_csv(probe.open) == open_trace_csv(open), tag + " CSV");
        o.note(tag + " " + std::to_string(probe.closed.rows()) + " closed rows identical");
    }
    return o;
}

int run_cli(const Context& c, const std::string& args) {
    const std::string cmd = "\"" + c.cli + "\" " + args + " > /dev/null";
    return std::system(cmd.c_str());
}

Outcome end_to_end(const Context& c) {
    Outcome o;
    if (c.cli.empty()) {
        o.require(false, "no CLI path given");
        return o;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::string threads = " --threads " + std::to_string(c.threads);
    std::vector<std::map<std::string, std::string>> hashes;
    Json baseline;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path d = c.work / ("pipeline_" + std::to_string(rep));
        fs::remove_all(d);
        const std::string base = "--profile desk" + threads + " --out ";
        bool ok = run_cli(c, base + (d / "open").string() + " openloop --which A") == 0 &&
                  run_cli(c, base + (d / "open").string() + " openloop --which B") == 0 &&
                  run_cli(c, base + (d / "train").string() + " train --trace-a " + (d / "open/openloop_A.csv").string() +
                                 " --trace-b " + (d / "open/openloop_B.csv").string()) == 0;
        for (const char* t : {"A", "B"})
            ok = ok && run_cli(c, base + (d / ("closed_" + std::string(t))).string() + " closedloop --weights " +
                                      (d / "train/weights.json").string() + " --initial-state " +
                                      (d / ("open/state_" + std::string(t) + ".json")).string()) == 0;
        o.require(ok, "CLI pipeline run " + std::to_string(rep + 1));
        if (!ok) return o;
        std::map<std::string, std::string> h;
        for (const char* f : {"open/openloop_A.csv", "open/openloop_B.csv", "open/state_A.json", "open/state_B.json",
                              "train/weights.json", "closed_A/closedloop.csv", "closed_A/label.json",
                              "closed_B/closedloop.csv", "closed_B/label.json"})
            h[f] = sha256_file(d / f);
        hashes.push_back(h);
        if (rep == 0) {
            for (const char* t : {"A", "B"}) {
                const Json l = Json::parse(read_file(d / ("closed_" + std::string(t)) / "label.json"));
                baseline[std::string("closed_") + t] = l;
            }
            baseline["hashes"] = h;
        }
    }
    o.require(hashes[0] == hashes[1], "identical hashes across two runs");

    // CLI and library agree
    const auto& lib = desk_run();
    const auto w = weights_from_json(Json::parse(read_file(c.work / "pipeline_0/train/weights.json")));
    o.require(w.W == lib.readout.W, "CLI readout equals library readout");
    const auto ph = phenotype_preset(desk().phenotype);
    const auto la = classify(lib.closed_a, ph, desk().classifier);
    const auto lb = classify(lib.closed_b, ph, desk().classifier);
    o.require(baseline["closed_A"]["nrmse_a"] == la.nrmse_a.error && baseline["closed_B"]["nrmse_b"] == lb.nrmse_b.error,
              "CLI labels equal library labels");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < 600.0, "under 10 minutes");
    baseline["seconds"] = secs;
    write_atomic(c.work / "baselines.json", baseline.dump(2) + "\n");
    o.note("IC A: " + baseline["closed_A"]["kind"].get<std::string>() + " nrmse_A " +
           num(baseline["closed_A"]["nrmse_a"].get<double>()) + ", IC B: " +
           baseline["closed_B"]["kind"].get<std::string>() + " nrmse_B " +
           num(baseline["closed_B"]["nrmse_b"].get<double>()) + ", " + num(secs) + " s for two runs");
    return o;
}

Outcome evolution(const Context& c) {
    Outcome o;
    const auto cfg = desk();
    const RobotModel m = build_model(cfg.model);
    const SimState rest = set_initial_face(m, cfg.pipeline.start_face);
    GAConfig ga = ga_config(cfg);
    ga.threads = c.threads;
    o.require(ga.population == 8 && ga.generations == 5, "desk GA size");

    const auto straight = evolve(ga, m, rest);
    o.require(straight.generation == 5 && straight.history.size() == 6, "five generations completed");
    bool monotone = true;
    for (std::size_t g = 1; g < straight.history.size(); ++g) {
        for (int k = 0; k < 3; ++k) monotone = monotone && straight.history[g].best[k] >= straight.history[g - 1].best[k];
        monotone = monotone && straight.history[g].hypervolume >= straight.history[g - 1].hypervolume;
    }
    o.require(monotone, "archive best and hypervolume non-decreasing");

    GAConfig part = ga;
    part.generations = 2;
    const auto half = evolve(part, m, rest);
    const std::string text = checkpoint_to_json(half, part).dump();
    write_atomic(c.work / "evolve_checkpoint_g2.json", text);
    const auto resumed = evolve(ga, m, rest, checkpoint_from_json(Json::parse(read_file(c.work / "evolve_checkpoint_g2.json"))));
    o.require(checkpoint_to_json(resumed, ga).dump() == checkpoint_to_json(straight, ga).dump(),
              "resume equals straight-through");
    o.require(history_csv(resumed.history) == history_csv(straight.history), "history identical");
    const auto& b = straight.history.back();
    o.note("final archive best (" + num(b.best[0]) + ", " + num(b.best[1]) + ", " + num(b.best[2]) + "), HV " +
           num(b.hypervolume) + ", " + std::to_string(b.evaluations) + " evaluations");
    return o;
}

Outcome sweep_determinism(const Context& c) {
    Outcome o;
    const auto cfg = desk();
    const RobotModel m = build_model(cfg.model);
    const auto& run = desk_run();
    const auto ph = phenotype_preset(cfg.phenotype);
    const double t0 = static_cast<double>(cfg.pipeline.steps) * cfg.pipeline.tau;
    o.require(cfg.grid.post_kpas.count == 3 && cfg.grid.post_kact.count == 3, "3x3 grid");
    const unsigned hw = std::max(3u, std::thread::hardware_concurrency());
    std::vector<std::string> csv;
    for (int t : {static_cast<int>(hw), 2}) {
        auto s = sweep_settings(cfg);
        s.threads = t;
        const auto cells = post_learning_sweep(m, run.readout, ph, run.open_a.final_state, run.open_b.final_state, t0,
                                               cfg.grid.post_kpas, cfg.grid.post_kact, s);
        csv.push_back(stiffness_csv(cells));
        write_atomic(c.work / ("postsweep_threads" + std::to_string(t) + ".csv"), csv.back());
    }
    o.require(csv[0] == csv[1], "CSV identical");
    o.note("sha256 " + sha256_hex(csv[0]).substr(0, 16) + " with " + std::to_string(hw) + " and 2 threads");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mfprc acceptance criteria"};
    Context ctx;
    std::string only;
    ctx.work = fs::temp_directory_path() / "mfprc_acceptance";
    app.add_option("--cli", ctx.cli, "path to the mfprc executable");
    app.add_option("--workdir", ctx.work, "scratch directory for run outputs");
    app.add_option("--threads", ctx.threads, "worker threads (0: all cores)");
    app.add_option("--only", only, "comma-separated criterion numbers");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(ctx.work);

    const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria{
        {"tendon law", tendon_law},
        {"two-body physics oracle", physics_oracle},
        {"free-flight conservation", conservation},
        {"equilibrium symmetry", symmetry},
        {"ridge regression oracle", ridge},
        {"classifier synthetic suite", classifier},
        {"face detection anchors", faces},
        {"non-dominated sorting oracle", nsga},
        {"interpolation endpoints", endpoints},
        {"desk pipeline end to end", end_to_end},
        {"evolution smoke and resume", evolution},
        {"post-learning sweep determinism", sweep_determinism},
    };
    std::set<int> selected;
    std::stringstream ss(only);
    for (std::string item; std::getline(ss, item, ',');) selected.insert(std::stoi(item));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second(ctx);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !out.pass;
        std::printf("%s C%-2d %-32s %7.2fs  %s\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), secs,
                    out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
