#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mfprc/errors.hpp"
#include "mfprc/io.hpp"

namespace py = pybind11;
using namespace mfprc;

namespace {

Target target_of(const std::string& s) {
    if (s == "A") return Target::A;
    if (s == "B") return Target::B;
    throw InvalidArgument("target must be 'A' or 'B'");
}

py::dict label_dict(const AttractorLabel& l) {
    py::dict d;
    d["kind"] = to_string(l.kind);
    d["nrmse_a"] = l.nrmse_a.error;
    d["shift_a"] = l.nrmse_a.shift;
    d["nrmse_b"] = l.nrmse_b.error;
    d["shift_b"] = l.nrmse_b.shift;
    d["output_range"] = l.output_range;
    d["max_acf"] = l.max_acf;
    d["acf_lag"] = l.acf_lag;
    return d;
}

ExperimentConfig config_from(const std::string& profile, const std::map<std::string, std::string>& overrides) {
    ExperimentConfig c = profile_config(profile);
    for (const auto& [k, v] : overrides) set_config_value(c, k, v);
    return c;
}

}  // namespace

PYBIND11_MODULE(_mfprc, m) {
    m.doc() = "Tensegrity reservoir computing core";
    m.attr("__version__") = MFPRC_VERSION;

    static py::exception<Error> base(m, "Error");
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<SimulationDiverged>(m, "SimulationDiverged", base.ptr());
    py::register_exception<SettleFailed>(m, "SettleFailed", base.ptr());
    py::register_exception<SingularMatrix>(m, "SingularMatrix", base.ptr());
    py::register_exception<LengthMismatch>(m, "LengthMismatch", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<TraceTooShort>(m, "TraceTooShort", base.ptr());
    py::register_exception<ZeroRange>(m, "ZeroRange", base.ptr());

    py::class_<MotorCommand>(m, "MotorCommand")
        .def(py::init<double, double>(), py::arg("u1") = 1.0, py::arg("u2") = 1.0)
        .def_readwrite("u1", &MotorCommand::u1)
        .def_readwrite("u2", &MotorCommand::u2)
        .def("__repr__", [](const MotorCommand& c) {
            return "MotorCommand(" + format_double(c.u1) + ", " + format_double(c.u2) + ")";
        });

    py::class_<RobotModel>(m, "RobotModel")
        .def(py::init([](const std::string& profile, const std::map<std::string, std::string>& overrides) {
                 return build_model(config_from(profile, overrides).model);
             }),
             py::arg("profile") = "paper", py::arg("overrides") = std::map<std::string, std::string>{})
        .def_readonly("timestep", &RobotModel::timestep)
        .def_readonly("actuator_length", &RobotModel::actuator_length)
        .def("with_stiffness", &RobotModel::with_stiffness, py::arg("k_passive"), py::arg("k_actuator"))
        .def("without_gravity", &RobotModel::without_gravity)
        .def("without_contact", &RobotModel::without_contact)
        .def("describe", &describe_topology)
        .def("hash", &model_hash)
        .def("faces", [](const RobotModel& m) {
            std::map<int, std::array<int, 3>> out;
            for (const auto& f : m.faces) out[f.label] = {f.nodes[0] + 1, f.nodes[1] + 1, f.nodes[2] + 1};
            return out;
        });

    py::class_<SimState>(m, "SimState")
        .def_readonly("time", &SimState::time)
        .def("flatten", &SimState::flatten)
        .def("to_json", [](const SimState& s, const RobotModel& model) { return state_to_json(s, model).dump(); })
        .def_static("from_json", [](const std::string& text) { return state_from_json(Json::parse(text)); });

    py::class_<Phenotype>(m, "Phenotype")
        .def(py::init<>())
        .def_static("preset", &phenotype_preset, py::arg("name") = "table1")
        .def_static("from_genes", &Phenotype::from_genes)
        .def_static("presets", &phenotype_preset_names)
        .def("genes", &Phenotype::genes)
        .def("in_range", &Phenotype::in_range)
        .def_readwrite("a", &Phenotype::a)
        .def_readwrite("omega", &Phenotype::omega)
        .def_readwrite("phi", &Phenotype::phi)
        .def_readwrite("b", &Phenotype::b)
        .def("__eq__", [](const Phenotype& x, const Phenotype& y) { return x == y; });

    m.def("tendon_force", [](double length, double rate, double k, double c, double xr) {
        TendonSpec s;
        s.stiffness = k;
        s.damping = c;
        s.restlength = xr;
        return tendon_force(length, rate, s);
    }, py::arg("length"), py::arg("rate"), py::arg("stiffness") = 375.0, py::arg("damping") = 7.5,
       py::arg("restlength") = 0.25);

    m.def("eval_target", [](const Phenotype& ph, const std::string& which, double t) {
        return eval_target(ph, target_of(which), t);
    });
    m.def("eval_interpolated", [](const Phenotype& ph, double p, double q, double t) {
        return eval_interpolated(ph, {p, q}, t);
    });

    m.def("set_initial_face", &set_initial_face, py::arg("model"), py::arg("face") = 1);
    m.def("relax_to_equilibrium", py::overload_cast<const RobotModel&>(&relax_to_equilibrium));
    m.def("measure_reservoir", [](const SimState& s, const RobotModel& m) -> Eigen::VectorXd {
        return measure_reservoir(s, m);
    });
    m.def("touch_readings", &touch_readings);
    m.def("bottom_face", [](const SimState& s, const RobotModel& m) {
        const auto t = touch_readings(s, m);
        return bottom_face(std::span(&t, 1), m.faces);
    });
    m.def("step", &step);

    py::class_<ReservoirTrace>(m, "ReservoirTrace")
        .def_readonly("measurements", &ReservoirTrace::measurements)
        .def_readonly("commands", &ReservoirTrace::commands)
        .def_readonly("com", &ReservoirTrace::com)
        .def_readonly("touch", &ReservoirTrace::touch)
        .def_readonly("final_state", &ReservoirTrace::final_state)
        .def_readonly("tau", &ReservoirTrace::tau)
        .def_readonly("start_time", &ReservoirTrace::start_time)
        .def("rows", &ReservoirTrace::rows);

    py::class_<ClosedLoopTrace>(m, "ClosedLoopTrace")
        .def_readonly("outputs", &ClosedLoopTrace::outputs)
        .def_readonly("measurements", &ClosedLoopTrace::measurements)
        .def_readonly("com", &ClosedLoopTrace::com)
        .def_readonly("touch", &ClosedLoopTrace::touch)
        .def_readonly("final_state", &ClosedLoopTrace::final_state)
        .def_readonly("diverged", &ClosedLoopTrace::diverged)
        .def_readonly("tau", &ClosedLoopTrace::tau)
        .def_readonly("start_time", &ClosedLoopTrace::start_time)
        .def("rows", &ClosedLoopTrace::rows);

    m.def("run_open_loop", [](const RobotModel& model, const SimState& init, const Phenotype& ph,
                              const std::string& which, long steps, double tau) {
        py::gil_scoped_release release;
        return run_open_loop(model, init, target_signal(ph, target_of(which)), steps, tau);
    }, py::arg("model"), py::arg("initial"), py::arg("phenotype"), py::arg("which"), py::arg("steps"),
       py::arg("tau") = 0.01);

    m.def("ridge_train", [](const Eigen::MatrixXd& R, const Eigen::MatrixXd& D, double beta) {
        return ridge_train({R, D}, beta).W;
    }, py::arg("R"), py::arg("D"), py::arg("beta") = 0.01);

    m.def("train_readout", [](const ReservoirTrace& a, const ReservoirTrace& b, const Phenotype& ph, double beta) {
        return ridge_train(assemble(a, b, ph), beta).W;
    }, py::arg("trace_a"), py::arg("trace_b"), py::arg("phenotype"), py::arg("beta") = 0.01);

    m.def("run_closed_loop", [](const RobotModel& model, const SimState& init, const Eigen::MatrixXd& W,
                                long steps, double tau, double clamp_min, double clamp_max, double start_time) {
        py::gil_scoped_release release;
        return run_closed_loop(model, init, {W, 0.0}, std::nullopt, steps, tau, clamp_min, clamp_max, start_time);
    }, py::arg("model"), py::arg("initial"), py::arg("W"), py::arg("steps"), py::arg("tau") = 0.01,
       py::arg("clamp_min") = 0.05, py::arg("clamp_max") = 2.0, py::arg("start_time") = 0.0);

    m.def("classify", [](const ClosedLoopTrace& tr, const Phenotype& ph, const std::string& profile,
                         const std::map<std::string, std::string>& overrides) {
        return label_dict(classify(tr, ph, config_from(profile, overrides).classifier));
    }, py::arg("trace"), py::arg("phenotype"), py::arg("profile") = "paper",
       py::arg("overrides") = std::map<std::string, std::string>{});

    m.def("classify_series", [](const Series2& y, const Series2& da, const Series2& db, const std::string& profile,
                                const std::map<std::string, std::string>& overrides) {
        return label_dict(classify(y, da, db, config_from(profile, overrides).classifier));
    }, py::arg("y"), py::arg("d_a"), py::arg("d_b"), py::arg("profile") = "paper",
       py::arg("overrides") = std::map<std::string, std::string>{});

    m.def("nrmse_shifted", [](const Series2& y, const Series2& d, long window, long lo, long hi) {
        const auto r = nrmse_shifted(y, d, window, {lo, hi});
        return std::make_pair(r.error, r.shift);
    }, py::arg("y"), py::arg("d"), py::arg("window"), py::arg("shift_min") = 0, py::arg("shift_max") = 200);

    m.def("behavior_difference", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, long window, long lo,
                                    long hi) { return behavior_difference(a, b, window, {lo, hi}); },
          py::arg("r_a"), py::arg("r_b"), py::arg("window"), py::arg("shift_min") = 0, py::arg("shift_max") = 200);
    m.def("locomotion_distance", &locomotion_distance);
    m.def("local_extrema", &local_extrema);

    m.def("nondominated_fronts", [](const std::vector<std::array<double, 3>>& pts) {
        std::vector<Individual> pop(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            FitnessVector f;
            f.f1 = pts[i][0];
            f.f2 = pts[i][1];
            f.f3 = pts[i][2];
            f.valid = true;
            pop[i].fitness = f;
        }
        return nondominated_sort(pop);
    });
    m.def("hypervolume", &hypervolume);

    m.def("config_keys", &config_keys);
    m.def("profile_config", [](const std::string& name) {
        const auto c = profile_config(name);
        std::map<std::string, std::string> out;
        for (const auto& k : config_keys()) out[k] = get_config_value(c, k);
        return out;
    }, py::arg("name") = "paper");
    m.def("sha256", [](const std::string& data) { return sha256_hex(data); });
}
