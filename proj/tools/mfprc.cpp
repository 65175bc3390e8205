// mfprc: command-line front end for the tensegrity reservoir experiments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfprc/errors.hpp"
#include "mfprc/io.hpp"
#include "mfprc/parallel.hpp"

namespace fs = std::filesystem;
using namespace mfprc;

namespace {

struct Globals {
    std::string config_file;
    std::string profile = "paper";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::vector<std::string> sets;
};

// Configuration, model and manifest for one command invocation.
class Run {
public:
    Run(const Globals& g, std::string command) {
        cfg_ = profile_config(g.profile);
        if (!g.config_file.empty()) apply_config_file(cfg_, g.config_file);
        apply_env_overrides(cfg_);
        for (const auto& s : g.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            set_config_value(cfg_, s.substr(0, eq), s.substr(eq + 1));
        }
        if (g.seed) cfg_.seed = *g.seed;
        if (g.out) cfg_.out = *g.out;
        if (g.threads) cfg_.threads = *g.threads;
        manifest_.command = std::move(command);
        manifest_.seed = cfg_.seed;
        manifest_.build = build_identifier();
        manifest_.started = utc_timestamp();
    }

    Run(const Run&) = delete;
    Run& operator=(const Run&) = delete;
    ~Run() {
        if (started_ && !finished_) {
            try {
                finish("failed");
            } catch (...) {
            }
        }
    }

    ExperimentConfig& cfg() { return cfg_; }

    // Call after command-specific overrides are applied.
    const RobotModel& start() {
        cfg_.validate();
        model_ = build_model(cfg_.model);
        manifest_.config_text = cfg_.to_text();
        manifest_.config_hash = sha256_hex(manifest_.config_text);
        manifest_.model_hash = model_hash(*model_);
        write_manifest();
        started_ = true;
        return *model_;
    }

    fs::path path(const std::string& name) const { return fs::path(cfg_.out) / name; }

    void emit(const std::string& name, const std::string& content) {
        write_atomic(path(name), content);
        manifest_.files.emplace_back(name);
    }
    void emit(const std::string& name, const Json& j) { emit(name, j.dump(2) + "\n"); }

    void finish(const std::string& status = "complete") {
        manifest_.status = status;
        manifest_.finished = utc_timestamp();
        finished_ = true;
        write_manifest();
    }

private:
    void write_manifest() {
        write_atomic(path("manifest.json"), manifest_.to_json(cfg_.out).dump(2) + "\n");
    }

    ExperimentConfig cfg_;
    std::optional<RobotModel> model_;
    RunManifest manifest_;
    bool started_ = false;
    bool finished_ = false;
};

Json load_json(const std::string& file) {
    try {
        return Json::parse(read_file(file));
    } catch (const Json::parse_error& e) {
        throw IoError(file + ": " + e.what());
    }
}

// Preset name or phenotype JSON file.
Phenotype load_phenotype(const std::string& spec) {
    if (fs::exists(spec)) return phenotype_from_json(load_json(spec));
    return phenotype_preset(spec);
}

Target parse_target(const std::string& s) {
    if (s == "A" || s == "a") return Target::A;
    if (s == "B" || s == "b") return Target::B;
    throw InvalidArgument("--which must be A or B");
}

double parse_num(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw InvalidArgument("bad number '" + s + "'");
    return v;
}

struct Impulse {
    int bar = 0;  // 0-based
    Vec3 impulse = Vec3::Zero();
    long at = 0;  // reservoir step
};

// "bar=2,ix=0,iy=30,iz=0,at=4000" with a 1-based bar index.
Impulse parse_impulse(const std::string& s) {
    Impulse imp;
    bool have_bar = false;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidArgument("--impulse fields are key=value");
        const std::string k = item.substr(0, eq), v = item.substr(eq + 1);
        if (k == "bar") {
            imp.bar = static_cast<int>(parse_num(v)) - 1;
            have_bar = true;
        } else if (k == "ix") {
            imp.impulse.x() = parse_num(v);
        } else if (k == "iy") {
            imp.impulse.y() = parse_num(v);
        } else if (k == "iz") {
            imp.impulse.z() = parse_num(v);
        } else if (k == "at") {
            imp.at = static_cast<long>(parse_num(v));
        } else {
            throw InvalidArgument("unknown --impulse field '" + k + "'");
        }
    }
    if (!have_bar || imp.bar < 0 || imp.bar >= kNumBars) throw InvalidArgument("--impulse needs bar=1..6");
    return imp;
}

Json label_or_reason(const ClosedLoopTrace& tr, const Phenotype& ph, const ClassifierConfig& cc) {
    if (tr.diverged) return {{"kind", "Diverged"}, {"diverged_step", tr.diverged_step}};
    try {
        return to_json(classify(tr, ph, cc));
    } catch (const Error& e) {
        return {{"kind", "Error"}, {"error", e.what()}};
    }
}

int face_of_trace(const std::vector<TouchReadings>& touch, long window, const RobotModel& m) {
    if (touch.empty()) return 0;
    const long w = std::min<long>(window, static_cast<long>(touch.size()));
    return bottom_face(std::span(touch.data() + touch.size() - w, static_cast<std::size_t>(w)), m.faces).value_or(0);
}

ClosedLoopTrace concat(const ClosedLoopTrace& a, const ClosedLoopTrace& b) {
    ClosedLoopTrace out = b;
    const long n = a.rows() + b.rows();
    out.outputs.resize(n, 2);
    out.outputs << a.outputs, b.outputs;
    out.measurements.resize(n, kReservoirDim);
    out.measurements << a.measurements, b.measurements;
    out.com.resize(n, 3);
    out.com << a.com, b.com;
    out.touch = a.touch;
    out.touch.insert(out.touch.end(), b.touch.begin(), b.touch.end());
    out.start_time = a.start_time;
    if (b.diverged) out.diverged_step = a.rows() + b.diverged_step;
    return out;
}

// --- commands ---

int cmd_openloop(const Globals& g, const std::string& phen, const std::string& which,
                 std::optional<long> steps, std::optional<int> face) {
    Run run(g, "openloop");
    auto& cfg = run.cfg();
    if (steps) cfg.pipeline.steps = *steps;
    if (face) cfg.pipeline.start_face = *face;
    const auto ph = load_phenotype(phen.empty() ? cfg.phenotype : phen);
    const Target t = parse_target(which);
    const auto& model = run.start();
    const SimState rest = set_initial_face(model, cfg.pipeline.start_face);
    const auto tr = run_open_loop(model, rest, target_signal(ph, t), cfg.pipeline.steps, cfg.pipeline.tau);
    const std::string tag = t == Target::A ? "A" : "B";
    run.emit("openloop_" + tag + ".csv", open_trace_csv(tr));
    Json state = state_to_json(tr.final_state, model);
    // where a closed loop continuing from this state picks up the target
    state["signal_time"] = tr.start_time + static_cast<double>(tr.rows()) * tr.tau;
    run.emit("state_" + tag + ".json", state);
    run.emit("phenotype.json", to_json(ph));
    run.finish();
    std::printf("open loop %s: %ld rows, final bottom face %d\n", tag.c_str(), tr.rows(),
                face_of_trace(tr.touch, cfg.sweep.face_window, model));
    return 0;
}

int cmd_train(const Globals& g, const std::string& trace_a, const std::string& trace_b,
              const std::string& phen, std::optional<double> beta) {
    Run run(g, "train");
    auto& cfg = run.cfg();
    if (beta) cfg.pipeline.beta = *beta;
    const auto ph = load_phenotype(phen.empty() ? cfg.phenotype : phen);
    const auto& model = run.start();
    const auto a = open_trace_from_csv(read_file(trace_a));
    const auto b = open_trace_from_csv(read_file(trace_b));
    const auto w = ridge_train(assemble(a, b, ph, cfg.pipeline.washout), cfg.pipeline.beta);
    run.emit("weights.json", weights_to_json(w, ph, model));
    run.finish();
    std::printf("trained readout on %ld columns, beta %g\n", 2 * (a.rows() - cfg.pipeline.washout), w.beta);
    return 0;
}

int cmd_closedloop(const Globals& g, const std::string& weights_file, const std::string& state_file,
                   std::optional<int> face, std::optional<long> steps, const std::string& impulse_spec,
                   std::optional<double> start_time) {
    Run run(g, "closedloop");
    auto& cfg = run.cfg();
    if (steps) cfg.pipeline.attractor_steps = *steps;
    const auto& model = run.start();
    const Json wj = load_json(weights_file);
    const auto w = weights_from_json(wj);
    const auto ph = phenotype_from_json(wj.at("phenotype"));
    const double tau = cfg.pipeline.tau;

    SimState init;
    double t0 = 0.0;
    if (face) {
        init = set_initial_face(model, *face);
    } else {
        const Json sj = load_json(state_file);
        init = state_from_json(sj);
        t0 = sj.value("signal_time", 0.0);
    }
    if (start_time) t0 = *start_time;

    const long n = cfg.pipeline.attractor_steps;
    ClosedLoopTrace tr;
    Json label;
    if (impulse_spec.empty()) {
        tr = run_closed_loop(model, init, w, std::nullopt, n, tau, cfg.pipeline.clamp_min, cfg.pipeline.clamp_max, t0);
        label = label_or_reason(tr, ph, cfg.classifier);
    } else {
        const Impulse imp = parse_impulse(impulse_spec);
        if (imp.at < 1 || imp.at >= n) throw InvalidArgument("--impulse at= must lie inside the run");
        const auto before = run_closed_loop(model, init, w, std::nullopt, imp.at, tau, cfg.pipeline.clamp_min,
                                            cfg.pipeline.clamp_max, t0);
        if (before.diverged) {
            tr = before;
        } else {
            const Eigen::Vector2d y = w.W * before.measurements.bottomRows(1).transpose();
            const SimState kicked = apply_impulse(before.final_state, model, imp.bar, imp.impulse);
            const auto after = run_closed_loop(model, kicked, w, MotorCommand{y[0], y[1]}, n - imp.at, tau,
                                               cfg.pipeline.clamp_min, cfg.pipeline.clamp_max,
                                               t0 + static_cast<double>(imp.at) * tau);
            tr = concat(before, after);
            label["after"] = label_or_reason(after, ph, cfg.classifier);
            label["face_after"] = face_of_trace(after.touch, cfg.sweep.face_window, model);
        }
        label["before"] = label_or_reason(before, ph, cfg.classifier);
        label["face_before"] = face_of_trace(before.touch, cfg.sweep.face_window, model);
        label["impulse"] = {{"bar", imp.bar + 1}, {"impulse", {imp.impulse.x(), imp.impulse.y(), imp.impulse.z()}},
                            {"at", imp.at}};
        label["overall"] = label_or_reason(tr, ph, cfg.classifier);
    }
    label["final_bottom_face"] = face_of_trace(tr.touch, cfg.sweep.face_window, model);
    label["locomotion_m"] = tr.rows() > 0 ? locomotion_distance(tr.com, cfg.sweep.locomotion_window) : 0.0;
    label["diverged"] = tr.diverged;
    run.emit("closedloop.csv", closed_trace_csv(tr));
    run.emit("label.json", label);
    run.emit("state_final.json", state_to_json(tr.final_state, model));
    run.finish();
    std::printf("%s\n", label.dump().c_str());
    return 0;
}

int cmd_faces(const Globals& g, const std::string& weights_file, std::optional<long> steps) {
    Run run(g, "faces");
    auto& cfg = run.cfg();
    if (steps) cfg.pipeline.attractor_steps = *steps;
    const auto& model = run.start();
    const Json wj = load_json(weights_file);
    const auto w = weights_from_json(wj);
    const auto ph = phenotype_from_json(wj.at("phenotype"));
    const auto s = sweep_settings(cfg);

    struct Row {
        int settled = 0;
        CellResult result;
        std::string error;
        std::optional<ClosedLoopTrace> trace;
    };
    std::vector<Row> rows(kNumFaces);
    parallel_for(kNumFaces, cfg.threads, [&](long i) {
        auto& r = rows[static_cast<std::size_t>(i)];
        const int face = static_cast<int>(i) + 1;
        try {
            const SimState init = set_initial_face(model, face);
            r.settled = face;
            r.result.ic_face = face;
            auto tr = run_closed_loop(model, init, w, std::nullopt, cfg.pipeline.attractor_steps, cfg.pipeline.tau,
                                      cfg.pipeline.clamp_min, cfg.pipeline.clamp_max, 0.0);
            r.result.diverged = tr.diverged;
            r.result.final_face = face_of_trace(tr.touch, s.face_window, model);
            r.result.locomotion = tr.rows() > 0 ? locomotion_distance(tr.com, s.locomotion_window) : 0.0;
            if (!tr.diverged) r.result.label = classify(tr, ph, cfg.classifier);
            r.trace = std::move(tr);
        } catch (const SettleFailed& e) {
            r.settled = e.actual;
            r.error = e.what();
        } catch (const Error& e) {
            r.error = e.what();
        }
    });

    std::ostringstream csv;
    csv << "# schema: mfprc.faces/1\nface,settled_face,label_kind,nrmse_A,nrmse_B,max_acf,final_bottom_face,"
           "locomotion_m,diverged,error\n";
    for (int i = 0; i < kNumFaces; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        const auto& l = r.result.label;
        csv << i + 1 << ',' << r.settled << ',' << r.result.kind_name() << ','
            << (l ? format_double(l->nrmse_a.error) : "nan") << ',' << (l ? format_double(l->nrmse_b.error) : "nan")
            << ',' << (l ? format_double(l->max_acf) : "nan") << ',' << r.result.final_face << ','
            << format_double(r.result.locomotion) << ',' << (r.result.diverged ? 1 : 0) << ",\"" << r.error << "\"\n";
        if (r.trace) {
            std::ostringstream y;
            y << "# schema: mfprc.faces_y/1\nstep,y1,y2\n";
            for (long n = 0; n < r.trace->rows(); ++n)
                y << n << ',' << format_double(r.trace->outputs(n, 0)) << ','
                  << format_double(r.trace->outputs(n, 1)) << '\n';
            run.emit("faces/face_" + std::to_string(i + 1) + "_y.csv", y.str());
        }
    }
    run.emit("faces.csv", csv.str());
    run.finish();
    std::fputs(csv.str().c_str(), stdout);
    return 0;
}

std::vector<std::string> kinds(const std::vector<BasinCell>& cells) {
    std::vector<std::string> v;
    for (const auto& c : cells) v.push_back(c.result.kind_name());
    return v;
}

int cmd_basin(const Globals& g, const std::string& weights_file, std::optional<long> nx,
              std::optional<long> ny, bool svg) {
    Run run(g, "basin");
    auto& cfg = run.cfg();
    if (nx) cfg.grid.basin_nx = *nx;
    if (ny) cfg.grid.basin_ny = *ny;
    const auto& model = run.start();
    const Json wj = load_json(weights_file);
    const auto w = weights_from_json(wj);
    const auto ph = phenotype_from_json(wj.at("phenotype"));
    const SimState rest = set_initial_face(model, cfg.pipeline.start_face);
    std::vector<Rect> levels{cfg.grid.basin};
    levels.insert(levels.end(), cfg.grid.basin_zoom.begin(), cfg.grid.basin_zoom.end());
    const auto maps = basin_zoom(model, rest, ph, w, levels, cfg.grid.basin_nx, cfg.grid.basin_ny,
                                 sweep_settings(cfg));
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const std::string stem = "basin_L" + std::to_string(i);
        run.emit(stem + ".csv", basin_csv(maps[i]));
        if (svg) {
            run.emit(stem + ".svg", heatmap_svg("attractor by IC (level " + std::to_string(i) + ")",
                                                cfg.grid.basin_nx, cfg.grid.basin_ny, kinds(maps[i]), "p", "q"));
        }
    }
    run.finish();
    std::printf("basin sweep: %zu level(s) of %ld x %ld cells\n", maps.size(), cfg.grid.basin_nx, cfg.grid.basin_ny);
    return 0;
}

int cmd_postsweep(const Globals& g, const std::string& weights_file, const std::string& state_a,
                  const std::string& state_b, bool svg) {
    Run run(g, "postsweep");
    auto& cfg = run.cfg();
    const auto& model = run.start();
    const Json wj = load_json(weights_file);
    const auto w = weights_from_json(wj);
    const auto ph = phenotype_from_json(wj.at("phenotype"));
    const double tau = cfg.pipeline.tau;
    SimState ic_a, ic_b;
    double t0 = static_cast<double>(cfg.pipeline.steps) * tau;
    if (!state_a.empty() && !state_b.empty()) {
        const Json ja = load_json(state_a);
        ic_a = state_from_json(ja);
        ic_b = state_from_json(load_json(state_b));
        t0 = ja.value("signal_time", t0);
    } else {
        // Regenerate the end states of the two training runs.
        const SimState rest = set_initial_face(model, cfg.pipeline.start_face);
        ic_a = run_open_loop(model, rest, target_signal(ph, Target::A), cfg.pipeline.steps, tau).final_state;
        ic_b = run_open_loop(model, rest, target_signal(ph, Target::B), cfg.pipeline.steps, tau).final_state;
    }
    const auto cells = post_learning_sweep(model, w, ph, ic_a, ic_b, t0, cfg.grid.post_kpas, cfg.grid.post_kact,
                                           sweep_settings(cfg));
    run.emit("postsweep.csv", stiffness_csv(cells));
    run.emit("slice.csv", slice_csv(bifurcation_slice(cells, cfg.grid.slice_kpas)));
    if (svg) {
        for (char ic : {'A', 'B'}) {
            std::vector<std::string> v;
            for (const auto& c : cells)
                if (c.ic == ic) v.push_back(c.result.kind_name());
            run.emit(std::string("postsweep_") + ic + ".svg",
                     heatmap_svg(std::string("attractor from IC ") + ic, cfg.grid.post_kpas.count,
                                 cfg.grid.post_kact.count, v, "k_pas", "k_act"));
        }
    }
    run.finish();
    std::printf("post-learning sweep: %zu closed loops\n", cells.size());
    return 0;
}

int cmd_presweep(const Globals& g, const std::string& phen, bool svg) {
    Run run(g, "presweep");
    auto& cfg = run.cfg();
    const auto ph = load_phenotype(phen.empty() ? cfg.phenotype : phen);
    run.start();
    const auto cells =
        pre_learning_sweep(cfg.model, ph, cfg.pipeline, cfg.grid.pre_kpas, cfg.grid.pre_kact, sweep_settings(cfg));
    run.emit("presweep.csv", pre_learning_csv(cells));
    if (svg) {
        std::vector<std::string> v;
        for (const auto& c : cells) v.push_back(c.multifunctional ? "multifunctional" : c.a.kind_name() + "/" + c.b.kind_name());
        run.emit("presweep.svg", heatmap_svg("region of multifunctionality", cfg.grid.pre_kpas.count,
                                             cfg.grid.pre_kact.count, v, "k_pas", "k_act"));
    }
    run.finish();
    long multi = 0;
    for (const auto& c : cells) multi += c.multifunctional;
    std::printf("pre-learning sweep: %ld of %zu points multifunctional\n", multi, cells.size());
    return 0;
}

int cmd_evolve(const Globals& g, const std::string& resume_file, std::optional<int> generations) {
    Run run(g, "evolve");
    auto& cfg = run.cfg();
    if (generations) cfg.ga.generations = *generations;
    const auto& model = run.start();
    const GAConfig ga = ga_config(cfg);
    const SimState rest = set_initial_face(model, cfg.pipeline.start_face);
    std::optional<EvolutionState> resume;
    if (!resume_file.empty()) {
        const Json j = load_json(resume_file);
        if (j.at("seed").get<std::uint64_t>() != ga.seed)
            throw ConfigError("checkpoint was written with a different seed");
        resume = checkpoint_from_json(j);
    }
    const auto st = evolve(ga, model, rest, resume, [&](const EvolutionState& s) {
        const std::string text = checkpoint_to_json(s, ga).dump() + "\n";
        write_atomic(run.path("checkpoint.json"), text);
        const auto& h = s.history.back();
        std::printf("gen %3d  best f1 %.4f f2 %.4f f3 %.4f  hv %.4f  invalid %ld\n", h.generation, h.best[0],
                    h.best[1], h.best[2], h.hypervolume, h.invalid);
        std::fflush(stdout);
    });
    run.emit("history.csv", history_csv(st.history));
    for (const auto& ind : st.archive) {
        const std::string dir = "archive/" + std::to_string(ind.id) + "/";
        run.emit(dir + "phenotype.json", to_json(ind.phenotype));
        run.emit(dir + "fitness.json", to_json(*ind.fitness));
        if (ind.readout) run.emit(dir + "weights.json", weights_to_json(*ind.readout, ind.phenotype, model));
    }
    run.emit("checkpoint.json", checkpoint_to_json(st, ga).dump() + "\n");
    run.finish();
    return 0;
}

int cmd_model_print(const Globals& g) {
    Run run(g, "model-print");
    const auto& model = run.start();
    std::fputs(describe_topology(model).c_str(), stdout);
    std::printf("model hash %s\n", model_hash(model).c_str());
    run.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multifunctional reservoir computing on a six-bar tensegrity robot"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_file, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--profile", g.profile, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--threads", g.threads, "worker threads (0: all cores)");
    app.add_option("--set", g.sets, "override a config key, key=value");

    std::string phen, which = "A", trace_a, trace_b, weights, state, state_b, impulse, resume;
    std::optional<long> steps, nx, ny;
    std::optional<int> face, generations;
    std::optional<double> beta, start_time;
    bool svg = false;

    auto* open = app.add_subcommand("openloop", "drive the robot with a target signal");
    open->add_option("--phenotype", phen, "preset name or JSON file");
    open->add_option("--which", which, "A or B");
    open->add_option("--steps", steps, "reservoir steps");
    open->add_option("--face", face, "start face");

    auto* train = app.add_subcommand("train", "ridge-regress the readout from two open-loop traces");
    train->add_option("--trace-a", trace_a)->required()->check(CLI::ExistingFile);
    train->add_option("--trace-b", trace_b)->required()->check(CLI::ExistingFile);
    train->add_option("--phenotype", phen, "preset name or JSON file");
    train->add_option("--beta", beta);

    auto* closed = app.add_subcommand("closedloop", "run the trained readout autonomously");
    closed->add_option("--weights", weights)->required()->check(CLI::ExistingFile);
    auto* st_opt = closed->add_option("--initial-state", state)->check(CLI::ExistingFile);
    auto* face_opt = closed->add_option("--face", face, "start at rest on this face");
    st_opt->excludes(face_opt);
    closed->add_option("--steps", steps);
    closed->add_option("--impulse", impulse, "bar=N,ix=..,iy=..,iz=..,at=STEP");
    closed->add_option("--start-time", start_time, "signal time of the first row");

    auto* faces = app.add_subcommand("faces", "closed loop from rest on each of the 20 faces");
    faces->add_option("--weights", weights)->required()->check(CLI::ExistingFile);
    faces->add_option("--steps", steps);

    auto* basin = app.add_subcommand("basin", "basin of attraction over interpolated drives");
    basin->add_option("--weights", weights)->required()->check(CLI::ExistingFile);
    basin->add_option("--nx", nx);
    basin->add_option("--ny", ny);
    basin->add_flag("--svg", svg);

    auto* post = app.add_subcommand("postsweep", "stiffness sweep with a fixed readout");
    post->add_option("--weights", weights)->required()->check(CLI::ExistingFile);
    post->add_option("--state-a", state)->check(CLI::ExistingFile);
    post->add_option("--state-b", state_b)->check(CLI::ExistingFile);
    post->add_flag("--svg", svg);

    auto* pre = app.add_subcommand("presweep", "stiffness sweep with retraining at every point");
    pre->add_option("--phenotype", phen);
    pre->add_flag("--svg", svg);

    auto* evo = app.add_subcommand("evolve", "NSGA-II search over phenotypes");
    evo->add_option("--resume", resume, "checkpoint.json to continue from")->check(CLI::ExistingFile);
    evo->add_option("--generations", generations);

    auto* mprint = app.add_subcommand("model-print", "topology, tendon list and face table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*open) return cmd_openloop(g, phen, which, steps, face);
        if (*train) return cmd_train(g, trace_a, trace_b, phen, beta);
        if (*closed) {
            if (state.empty() && !face) throw InvalidArgument("closedloop needs --initial-state or --face");
            return cmd_closedloop(g, weights, state, face, steps, impulse, start_time);
        }
        if (*faces) return cmd_faces(g, weights, steps);
        if (*basin) return cmd_basin(g, weights, nx, ny, svg);
        if (*post) return cmd_postsweep(g, weights, state, state_b, svg);
        if (*pre) return cmd_presweep(g, phen, svg);
        if (*evo) return cmd_evolve(g, resume, generations);
        if (*mprint) return cmd_model_print(g);
    } catch (const SimulationDiverged& e) {
        std::cerr << "error: simulation diverged";
        if (e.step >= 0) std::cerr << " at reservoir step " << e.step;
        std::cerr << ": " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
