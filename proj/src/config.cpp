#include "mfprc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "mfprc/errors.hpp"

namespace mfprc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto t = trim(s);
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw ConfigError(key + ": expected a number, got '" + s + "'");
    return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& s) {
    Int v = 0;
    const auto t = trim(s);
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
    const auto t = trim(s);
    if (t == "true" || t == "1" || t == "on" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "off" || t == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

struct Entry {
    std::function<std::string(ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

using Registry = std::map<std::string, Entry>;

template <class T, class Ref>
void add(Registry& reg, const std::string& key, Ref ref) {
    Entry e;
    e.get = [ref](ExperimentConfig& c) -> std::string {
        const T& v = ref(c);
        if constexpr (std::is_same_v<T, double>)
            return fmt(v);
        else if constexpr (std::is_same_v<T, bool>)
            return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>)
            return v;
        else
            return std::to_string(v);
    };
    e.set = [ref, key](ExperimentConfig& c, const std::string& s) {
        T& v = ref(c);
        if constexpr (std::is_same_v<T, double>)
            v = parse_double(key, s);
        else if constexpr (std::is_same_v<T, bool>)
            v = parse_bool(key, s);
        else if constexpr (std::is_same_v<T, std::string>)
            v = trim(s);
        else
            v = parse_int<T>(key, s);
    };
    reg.emplace(key, std::move(e));
}

#define KEY(T, name, expr) add<T>(reg, name, [](ExperimentConfig& c) -> T& { return c.expr; })

void add_axis(Registry& reg, const std::string& prefix, Axis GridConfig::*axis) {
    add<double>(reg, prefix + "_min", [axis](ExperimentConfig& c) -> double& { return (c.grid.*axis).min; });
    add<double>(reg, prefix + "_max", [axis](ExperimentConfig& c) -> double& { return (c.grid.*axis).max; });
    add<long>(reg, prefix + "_count", [axis](ExperimentConfig& c) -> long& { return (c.grid.*axis).count; });
}

std::string rect_text(const Rect& r) {
    return fmt(r.x_min) + "," + fmt(r.x_max) + "," + fmt(r.y_min) + "," + fmt(r.y_max);
}

Rect parse_rect(const std::string& key, const std::string& s) {
    const auto f = split(s, ',');
    if (f.size() != 4) throw ConfigError(key + ": a rectangle is 'p_min,p_max,q_min,q_max'");
    return {parse_double(key, f[0]), parse_double(key, f[1]), parse_double(key, f[2]),
            parse_double(key, f[3])};
}

Registry build_registry() {
    Registry reg;
    KEY(double, "model.bar_length", model.bar.length);
    KEY(double, "model.bar_radius", model.bar.radius);
    KEY(double, "model.bar_density", model.bar.density);
    KEY(double, "model.tendon_restlength", model.passive_restlength);
    KEY(double, "model.passive_stiffness", model.passive_stiffness);
    KEY(double, "model.actuator_stiffness", model.actuator_stiffness);
    KEY(double, "model.damping", model.damping);
    KEY(double, "model.actuator_length", model.actuator_length);
    KEY(double, "model.gravity", model.gravity);
    KEY(double, "model.timestep", model.timestep);
    KEY(bool, "model.contact.enabled", model.contact.enabled);
    KEY(double, "model.contact.normal_stiffness", model.contact.normal_stiffness);
    KEY(double, "model.contact.normal_damping", model.contact.normal_damping);
    KEY(double, "model.contact.tangential_friction", model.contact.tangential_friction);
    KEY(double, "model.contact.torsional_friction", model.contact.torsional_friction);
    KEY(double, "model.contact.rolling_friction", model.contact.rolling_friction);
    KEY(double, "model.contact.ground_height", model.contact.ground_height);
    KEY(double, "model.contact.tangential_stiffness", model.contact.tangential_stiffness);
    KEY(double, "model.contact.tangential_damping", model.contact.tangential_damping);
    KEY(double, "model.contact.angular_stiffness", model.contact.angular_stiffness);
    KEY(double, "model.contact.angular_damping", model.contact.angular_damping);
    KEY(double, "model.divergence.max_position", model.divergence.max_position);
    KEY(double, "model.divergence.max_velocity", model.divergence.max_velocity);
    KEY(double, "model.relax_speed_tol", model.relax_speed_tol);
    KEY(double, "model.relax_damping", model.relax_damping);
    KEY(long, "model.relax_max_steps", model.relax_max_steps);
    KEY(double, "model.settle_speed_tol", model.settle_speed_tol);
    KEY(double, "model.settle_damping", model.settle_damping);
    KEY(long, "model.settle_max_steps", model.settle_max_steps);
    reg.emplace("model.actuator_nodes",
                Entry{[](ExperimentConfig& c) {
                          // 1-based node pairs, e.g. "5-12,2-4"
                          std::string s;
                          for (const auto& p : c.model.actuator_nodes) {
                              if (!s.empty()) s += ",";
                              s += std::to_string(p[0] + 1) + "-" + std::to_string(p[1] + 1);
                          }
                          return s;
                      },
                      [](ExperimentConfig& c, const std::string& v) {
                          const auto pairs = split(v, ',');
                          if (pairs.size() != kNumActuators)
                              throw ConfigError("model.actuator_nodes: expected two pairs like '5-12,2-4'");
                          for (std::size_t i = 0; i < pairs.size(); ++i) {
                              const auto ends = split(pairs[i], '-');
                              if (ends.size() != 2)
                                  throw ConfigError("model.actuator_nodes: bad pair '" + pairs[i] + "'");
                              for (int k = 0; k < 2; ++k) {
                                  const int n = parse_int<int>("model.actuator_nodes", ends[k]);
                                  if (n < 1 || n > kNumNodes)
                                      throw ConfigError("model.actuator_nodes: node out of range");
                                  c.model.actuator_nodes[i][k] = n - 1;
                              }
                          }
                      }});

    KEY(long, "pipeline.steps", pipeline.steps);
    KEY(double, "pipeline.tau", pipeline.tau);
    KEY(double, "pipeline.beta", pipeline.beta);
    KEY(double, "pipeline.clamp_min", pipeline.clamp_min);
    KEY(double, "pipeline.clamp_max", pipeline.clamp_max);
    KEY(long, "pipeline.washout", pipeline.washout);
    KEY(long, "pipeline.closed_steps", pipeline.closed_steps);
    KEY(long, "pipeline.attractor_steps", pipeline.attractor_steps);
    KEY(int, "pipeline.start_face", pipeline.start_face);
    KEY(std::string, "pipeline.phenotype", phenotype);

    KEY(long, "classifier.nrmse_window", classifier.nrmse_window);
    KEY(double, "classifier.nrmse_threshold", classifier.nrmse_threshold);
    KEY(long, "classifier.shift_min", classifier.shifts.lo);
    KEY(long, "classifier.shift_max", classifier.shifts.hi);
    KEY(long, "classifier.fixedpoint_window", classifier.fixedpoint_window);
    KEY(double, "classifier.fixedpoint_threshold", classifier.fixedpoint_threshold);
    KEY(long, "classifier.acf_window", classifier.acf_window);
    KEY(double, "classifier.acf_threshold", classifier.acf_threshold);
    KEY(long, "classifier.acf_min_lag", classifier.acf_min_lag);
    KEY(long, "classifier.acf_max_lag", classifier.acf_max_lag);

    KEY(int, "ga.generations", ga.generations);
    KEY(int, "ga.population", ga.population);
    KEY(int, "ga.offspring", ga.offspring);
    KEY(double, "ga.crossover_prob", ga.crossover_prob);
    KEY(double, "ga.mutation_prob", ga.mutation_prob);
    KEY(double, "ga.gene_mutation_prob", ga.gene_mutation_prob);
    KEY(long, "ga.open_steps", ga.horizons.pipeline.steps);
    KEY(long, "ga.closed_steps", ga.horizons.closed_steps);
    KEY(long, "ga.fitness_window", ga.horizons.fitness_window);
    KEY(long, "ga.shift_min", ga.horizons.shifts.lo);
    KEY(long, "ga.shift_max", ga.horizons.shifts.hi);
    reg.emplace("ga.hv_reference",
                Entry{[](ExperimentConfig& c) {
                          const auto& r = c.ga.hv_reference;
                          return fmt(r[0]) + "," + fmt(r[1]) + "," + fmt(r[2]);
                      },
                      [](ExperimentConfig& c, const std::string& v) {
                          const auto f = split(v, ',');
                          if (f.size() != 3) throw ConfigError("ga.hv_reference: expected three numbers");
                          for (int k = 0; k < 3; ++k) c.ga.hv_reference[k] = parse_double("ga.hv_reference", f[k]);
                      }});

    KEY(long, "sweep.open_steps", sweep.open_steps);
    KEY(long, "sweep.closed_steps", sweep.closed_steps);
    KEY(long, "sweep.locomotion_window", sweep.locomotion_window);
    KEY(long, "sweep.extrema_window", sweep.extrema_window);
    KEY(long, "sweep.face_window", sweep.face_window);
    reg.emplace("sweep.basin.rect",
                Entry{[](ExperimentConfig& c) { return rect_text(c.grid.basin); },
                      [](ExperimentConfig& c, const std::string& v) {
                          c.grid.basin = parse_rect("sweep.basin.rect", v);
                      }});
    KEY(long, "sweep.basin.nx", grid.basin_nx);
    KEY(long, "sweep.basin.ny", grid.basin_ny);
    reg.emplace("sweep.basin.zoom",
                Entry{[](ExperimentConfig& c) {
                          std::string s;
                          for (const auto& r : c.grid.basin_zoom) s += (s.empty() ? "" : ";") + rect_text(r);
                          return s;
                      },
                      [](ExperimentConfig& c, const std::string& v) {
                          c.grid.basin_zoom.clear();
                          for (const auto& part : split(v, ';'))
                              if (!part.empty()) c.grid.basin_zoom.push_back(parse_rect("sweep.basin.zoom", part));
                      }});
    add_axis(reg, "sweep.post.kpas", &GridConfig::post_kpas);
    add_axis(reg, "sweep.post.kact", &GridConfig::post_kact);
    KEY(double, "sweep.post.slice_kpas", grid.slice_kpas);
    add_axis(reg, "sweep.pre.kpas", &GridConfig::pre_kpas);
    add_axis(reg, "sweep.pre.kact", &GridConfig::pre_kact);

    KEY(std::uint64_t, "seed", seed);
    KEY(std::string, "out", out);
    KEY(int, "threads", threads);
    return reg;
}

#undef KEY

const Registry& registry() {
    static const Registry reg = build_registry();
    return reg;
}

const Entry& entry(const std::string& key) {
    const auto it = registry().find(key);
    if (it == registry().end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

}  // namespace

void ExperimentConfig::validate() const {
    try {
        build_model(model);
        phenotype_preset(phenotype);
        classifier.validate();
        ga_config(*this).validate();
        sweep_settings(*this).validate();
        for (const auto* a : {&grid.post_kpas, &grid.post_kact, &grid.pre_kpas, &grid.pre_kact}) a->validate();
        if (grid.basin_nx < 1 || grid.basin_ny < 1) throw InvalidArgument("basin grid must be non-empty");
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (pipeline.steps < 1 || pipeline.closed_steps < 1 || pipeline.attractor_steps < 1)
        throw ConfigError("pipeline horizons must be positive");
    if (pipeline.start_face < 1 || pipeline.start_face > kNumFaces)
        throw ConfigError("pipeline.start_face must be in 1..20");
    if (!(pipeline.beta >= 0.0)) throw ConfigError("pipeline.beta must be non-negative");
    if (threads < 0) throw ConfigError("threads must be non-negative");
}

std::string ExperimentConfig::to_text() const {
    std::string out;
    auto& self = const_cast<ExperimentConfig&>(*this);
    for (const auto& [key, e] : registry()) out += key + " = " + e.get(self) + "\n";
    return out;
}

ExperimentConfig profile_config(const std::string& name) {
    ExperimentConfig c;
    if (name == "paper") return c;
    if (name != "desk") throw ConfigError("unknown profile '" + name + "' (available: paper, desk)");
    c.pipeline.steps = 2000;
    c.pipeline.closed_steps = 8000;
    c.pipeline.attractor_steps = 8000;
    c.classifier.acf_window = 6000;
    c.ga.population = 8;
    c.ga.offspring = 8;
    c.ga.generations = 5;
    c.ga.horizons.pipeline.steps = 2000;
    c.ga.horizons.closed_steps = 2000;
    c.ga.horizons.fitness_window = 1000;
    c.sweep.open_steps = 2000;
    c.sweep.closed_steps = 8000;
    c.sweep.extrema_window = 4000;
    c.grid.basin_nx = 4;
    c.grid.basin_ny = 4;
    c.grid.post_kpas.count = 3;
    c.grid.post_kact.count = 3;
    c.grid.pre_kpas.count = 2;
    c.grid.pre_kact.count = 2;
    return c;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    entry(key).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
    return entry(key).get(const_cast<ExperimentConfig&>(cfg));
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, e] : registry()) keys.push_back(k);
    return keys;
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        apply_config_text(cfg, ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string env_name(const std::string& key) {
    std::string s = "MFPRC_";
    for (char ch : key) s += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

std::vector<std::string> apply_env_overrides(ExperimentConfig& cfg) {
    std::vector<std::string> used;
    for (const auto& [key, e] : registry()) {
        if (const char* v = std::getenv(env_name(key).c_str())) {
            e.set(cfg, v);
            used.push_back(key);
        }
    }
    return used;
}

SweepSettings sweep_settings(const ExperimentConfig& cfg) {
    SweepSettings s = cfg.sweep;
    s.tau = cfg.pipeline.tau;
    s.clamp_min = cfg.pipeline.clamp_min;
    s.clamp_max = cfg.pipeline.clamp_max;
    s.classifier = cfg.classifier;
    s.threads = cfg.threads;
    return s;
}

GAConfig ga_config(const ExperimentConfig& cfg) {
    GAConfig g = cfg.ga;
    const long open_steps = g.horizons.pipeline.steps;
    g.horizons.pipeline = cfg.pipeline;
    g.horizons.pipeline.steps = open_steps;
    g.seed = cfg.seed;
    g.threads = cfg.threads;
    return g;
}

}  // namespace mfprc
