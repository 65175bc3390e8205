#include "mfprc/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unistd.h>

#include <openssl/evp.h>

#include "mfprc/errors.hpp"

namespace mfprc {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_atomic(const fs::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

double parse_cell(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw IoError("bad number '" + s + "' in CSV");
    return v;
}

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double num_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json vec3(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void put(std::ostringstream& os, double v) { os << ',' << format_double(v); }

}  // namespace

std::string model_fingerprint(const RobotModel& m) {
    std::ostringstream os;
    auto d = [&](const char* k, double v) { os << k << '=' << format_double(v) << '\n'; };
    d("bar.length", m.bar.length);
    d("bar.radius", m.bar.radius);
    d("bar.density", m.bar.density);
    for (int n = 0; n < kNumNodes; ++n) os << "node " << n << ' ' << m.node_map[n].bar << ' ' << m.node_map[n].end << '\n';
    for (const auto& t : m.tendons)
        os << "tendon " << t.node_a << ' ' << t.node_b << ' ' << format_double(t.stiffness) << ' '
           << format_double(t.damping) << ' ' << format_double(t.restlength) << ' ' << t.is_actuator << '\n';
    d("actuator_length", m.actuator_length);
    const auto& c = m.contact;
    os << "contact.enabled=" << c.enabled << '\n';
    d("contact.normal_stiffness", c.normal_stiffness);
    d("contact.normal_damping", c.normal_damping);
    d("contact.tangential_friction", c.tangential_friction);
    d("contact.torsional_friction", c.torsional_friction);
    d("contact.rolling_friction", c.rolling_friction);
    d("contact.ground_height", c.ground_height);
    d("contact.tangential_stiffness", c.tangential_stiffness);
    d("contact.tangential_damping", c.tangential_damping);
    d("contact.angular_stiffness", c.angular_stiffness);
    d("contact.angular_damping", c.angular_damping);
    for (const auto& f : m.faces) os << "face " << f.label << ' ' << f.nodes[0] << ' ' << f.nodes[1] << ' ' << f.nodes[2] << '\n';
    d("gravity.z", m.gravity.z());
    d("timestep", m.timestep);
    d("divergence.position", m.divergence.max_position);
    d("divergence.velocity", m.divergence.max_velocity);
    d("relax_speed_tol", m.relax_speed_tol);
    d("relax_damping", m.relax_damping);
    d("settle_speed_tol", m.settle_speed_tol);
    d("settle_damping", m.settle_damping);
    os << "relax_max_steps=" << m.relax_max_steps << "\nsettle_max_steps=" << m.settle_max_steps << '\n';
    return os.str();
}

std::string model_hash(const RobotModel& model) { return sha256_hex(model_fingerprint(model)); }

std::string phenotype_hash(const Phenotype& ph) { return sha256_hex(to_json(ph).dump()); }

Json to_json(const Phenotype& ph) {
    Json j = Json::object();
    for (int i = 0; i < 4; ++i) {
        const std::string n = std::to_string(i + 1);
        j["a" + n] = ph.a[i];
        j["omega" + n] = ph.omega[i];
        j["phi" + n] = ph.phi[i];
        j["b" + n] = ph.b[i];
    }
    return j;
}

Phenotype phenotype_from_json(const Json& j) {
    Phenotype ph;
    try {
        for (int i = 0; i < 4; ++i) {
            const std::string n = std::to_string(i + 1);
            ph.a[i] = j.at("a" + n).get<double>();
            ph.omega[i] = j.at("omega" + n).get<double>();
            ph.phi[i] = j.at("phi" + n).get<double>();
            ph.b[i] = j.at("b" + n).get<double>();
        }
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad phenotype record: ") + e.what());
    }
    return ph;
}

Json state_to_json(const SimState& s, const RobotModel& model) {
    Json j;
    j["schema"] = "mfprc.state/1";
    j["time"] = s.time;
    Json bars = Json::array();
    for (const auto& b : s.bars) {
        const auto& q = b.orientation;
        bars.push_back({{"position", vec3(b.position)},
                        {"orientation", {q.w(), q.x(), q.y(), q.z()}},
                        {"linear_velocity", vec3(b.linear_velocity)},
                        {"angular_velocity", vec3(b.angular_velocity)}});
    }
    j["bars"] = bars;
    Json contacts = Json::array();
    for (const auto& c : s.contacts)
        contacts.push_back({{"active", c.active}, {"x", c.x}, {"y", c.y}, {"turn", vec3(c.turn)}});
    j["contacts"] = contacts;
    const auto r = measure_reservoir(s, model);
    j["tendon_lengths"] = std::vector<double>(r.data(), r.data() + kNumPassive);
    const auto t = touch_readings(s, model);
    j["sensors"] = std::vector<bool>(t.begin(), t.end());
    const auto face = bottom_face(std::span(&t, 1), model.faces);
    j["bottom_face"] = face ? Json(*face) : Json(nullptr);
    return j;
}

SimState state_from_json(const Json& j) {
    SimState s;
    try {
        s.time = j.at("time").get<double>();
        const auto& bars = j.at("bars");
        if (bars.size() != kNumBars) throw IoError("state needs exactly 6 bars");
        for (int i = 0; i < kNumBars; ++i) {
            const auto& b = bars.at(i);
            auto& out = s.bars[i];
            out.position = vec3_from(b.at("position"));
            const auto& q = b.at("orientation");
            out.orientation = UnitQuaternion(q.at(0).get<double>(), q.at(1).get<double>(),
                                             q.at(2).get<double>(), q.at(3).get<double>());
            out.linear_velocity = vec3_from(b.at("linear_velocity"));
            out.angular_velocity = vec3_from(b.at("angular_velocity"));
        }
        if (j.contains("contacts")) {
            const auto& cs = j.at("contacts");
            if (cs.size() != kNumNodes) throw IoError("state needs 12 contact records");
            for (int i = 0; i < kNumNodes; ++i) {
                const auto& c = cs.at(i);
                s.contacts[i] = {c.at("active").get<bool>(), c.at("x").get<double>(),
                                 c.at("y").get<double>(), vec3_from(c.at("turn"))};
            }
        }
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad state record: ") + e.what());
    }
    return s;
}

std::vector<double> state_csv_row(const SimState& s) {
    std::vector<double> row{s.time};
    const auto f = s.flatten();
    row.insert(row.end(), f.begin(), f.end());
    return row;
}

Json weights_to_json(const ReadoutWeights& w, const Phenotype& ph, const RobotModel& model) {
    Json rows = Json::array();
    for (long i = 0; i < w.W.rows(); ++i) {
        Json r = Json::array();
        for (long k = 0; k < w.W.cols(); ++k) r.push_back(w.W(i, k));
        rows.push_back(r);
    }
    return {{"schema", "mfprc.weights/1"},
            {"beta", w.beta},
            {"W", rows},
            {"phenotype", to_json(ph)},
            {"phenotype_hash", phenotype_hash(ph)},
            {"model_hash", model_hash(model)}};
}

ReadoutWeights weights_from_json(const Json& j) {
    ReadoutWeights w;
    try {
        w.beta = j.at("beta").get<double>();
        const auto& rows = j.at("W");
        if (rows.size() != 2) throw IoError("readout must have two rows");
        w.W.resize(2, kReservoirDim);
        for (int i = 0; i < 2; ++i) {
            if (rows.at(i).size() != kReservoirDim) throw IoError("readout rows must have 48 entries");
            for (int k = 0; k < kReservoirDim; ++k) w.W(i, k) = rows.at(i).at(k).get<double>();
        }
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad weights record: ") + e.what());
    }
    return w;
}

Json to_json(const AttractorLabel& l) {
    return {{"kind", to_string(l.kind)},
            {"nrmse_a", num(l.nrmse_a.error)},
            {"shift_a", l.nrmse_a.shift},
            {"nrmse_b", num(l.nrmse_b.error)},
            {"shift_b", l.nrmse_b.shift},
            {"output_range", num(l.output_range)},
            {"max_acf", num(l.max_acf)},
            {"acf_lag", l.acf_lag}};
}

Json to_json(const FitnessVector& f) {
    return {{"f1", num(f.f1)}, {"f2", num(f.f2)},   {"f3", num(f.f3)},    {"f3a", num(f.f3a)},
            {"f3b", num(f.f3b)}, {"valid", f.valid}, {"error", f.error}};
}

FitnessVector fitness_from_json(const Json& j) {
    FitnessVector f;
    f.f1 = num_from(j.at("f1"));
    f.f2 = num_from(j.at("f2"));
    f.f3 = num_from(j.at("f3"));
    f.f3a = num_from(j.at("f3a"));
    f.f3b = num_from(j.at("f3b"));
    f.valid = j.at("valid").get<bool>();
    f.error = j.value("error", "");
    return f;
}

namespace {

Json individual_json(const Individual& ind) {
    Json j{{"id", ind.id}, {"generation", ind.generation}, {"phenotype", to_json(ind.phenotype)}};
    j["fitness"] = ind.fitness ? to_json(*ind.fitness) : Json(nullptr);
    if (ind.readout) {
        Json w = Json::array();
        for (long i = 0; i < ind.readout->W.size(); ++i) w.push_back(ind.readout->W.data()[i]);
        j["readout"] = {{"beta", ind.readout->beta}, {"W_colmajor", w}};
    } else {
        j["readout"] = nullptr;
    }
    return j;
}

Individual individual_from(const Json& j) {
    Individual ind;
    ind.id = j.at("id").get<long>();
    ind.generation = j.at("generation").get<int>();
    ind.phenotype = phenotype_from_json(j.at("phenotype"));
    if (!j.at("fitness").is_null()) ind.fitness = fitness_from_json(j.at("fitness"));
    if (!j.at("readout").is_null()) {
        ReadoutWeights w;
        w.beta = j.at("readout").at("beta").get<double>();
        const auto& v = j.at("readout").at("W_colmajor");
        w.W.resize(2, kReservoirDim);
        if (static_cast<long>(v.size()) != w.W.size()) throw IoError("bad readout in checkpoint");
        for (long i = 0; i < w.W.size(); ++i) w.W.data()[i] = v.at(i).get<double>();
        ind.readout = w;
    }
    return ind;
}

Json triple(const std::array<double, 3>& v) { return Json::array({num(v[0]), num(v[1]), num(v[2])}); }
std::array<double, 3> triple_from(const Json& j) { return {num_from(j.at(0)), num_from(j.at(1)), num_from(j.at(2))}; }

}  // namespace

Json checkpoint_to_json(const EvolutionState& st, const GAConfig& cfg) {
    Json j;
    j["schema"] = "mfprc.checkpoint/1";
    j["seed"] = cfg.seed;
    j["generation"] = st.generation;
    j["next_id"] = st.next_id;
    for (const auto* part : {&st.population, &st.archive}) {
        Json arr = Json::array();
        for (const auto& ind : *part) arr.push_back(individual_json(ind));
        j[part == &st.population ? "population" : "archive"] = arr;
    }
    Json hist = Json::array();
    for (const auto& g : st.history)
        hist.push_back({{"generation", g.generation},
                        {"mean", triple(g.mean)},
                        {"stddev", triple(g.stddev)},
                        {"best", triple(g.best)},
                        {"hypervolume", num(g.hypervolume)},
                        {"evaluations", g.evaluations},
                        {"invalid", g.invalid}});
    j["history"] = hist;
    return j;
}

EvolutionState checkpoint_from_json(const Json& j) {
    EvolutionState st;
    try {
        if (j.value("schema", "") != "mfprc.checkpoint/1") throw IoError("not an evolution checkpoint");
        st.generation = j.at("generation").get<int>();
        st.next_id = j.at("next_id").get<long>();
        for (const auto& x : j.at("population")) st.population.push_back(individual_from(x));
        for (const auto& x : j.at("archive")) st.archive.push_back(individual_from(x));
        for (const auto& h : j.at("history")) {
            GenerationStats g;
            g.generation = h.at("generation").get<int>();
            g.mean = triple_from(h.at("mean"));
            g.stddev = triple_from(h.at("stddev"));
            g.best = triple_from(h.at("best"));
            g.hypervolume = num_from(h.at("hypervolume"));
            g.evaluations = h.at("evaluations").get<long>();
            g.invalid = h.at("invalid").get<long>();
            st.history.push_back(g);
        }
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad checkpoint: ") + e.what());
    }
    return st;
}

// --- CSV ---

namespace {

void header_series(std::ostringstream& os, const char* schema, double tau, double start) {
    os << "# schema: " << schema << "\n# tau: " << format_double(tau)
       << "; start_time: " << format_double(start) << "\n";
}

void cols(std::ostringstream& os, const char* prefix, int n) {
    for (int i = 1; i <= n; ++i) os << ',' << prefix << i;
}

void touch_cells(std::ostringstream& os, const TouchReadings& t) {
    for (bool b : t) os << ',' << (b ? 1 : 0);
}

std::string label_cells(const CellResult& r) {
    std::ostringstream os;
    os << r.kind_name();
    if (r.label) {
        os << ',' << format_double(r.label->nrmse_a.error) << ',' << format_double(r.label->nrmse_b.error)
           << ',' << format_double(r.label->max_acf);
    } else {
        os << ",nan,nan,nan";
    }
    os << ',' << r.ic_face << ',' << r.final_face << ',' << format_double(r.locomotion) << ','
       << (r.diverged ? 1 : 0);
    return os.str();
}

std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return out + "\"";
}

constexpr const char* kCellCols =
    "label_kind,nrmse_A,nrmse_B,max_acf,ic_bottom_face,final_bottom_face,locomotion_m,diverged";

}  // namespace

std::string open_trace_csv(const ReservoirTrace& tr) {
    std::ostringstream os;
    header_series(os, "mfprc.openloop/1", tr.tau, tr.start_time);
    os << "step,time";
    cols(os, "r", kReservoirDim);
    os << ",u1,u2,com_x,com_y,com_z";
    cols(os, "s", kNumNodes);
    os << '\n';
    for (long n = 0; n < tr.rows(); ++n) {
        os << n;
        put(os, tr.start_time + static_cast<double>(n) * tr.tau);
        for (int k = 0; k < kReservoirDim; ++k) put(os, tr.measurements(n, k));
        put(os, tr.commands(n, 0));
        put(os, tr.commands(n, 1));
        for (int k = 0; k < 3; ++k) put(os, tr.com(n, k));
        touch_cells(os, tr.touch[static_cast<std::size_t>(n)]);
        os << '\n';
    }
    return os.str();
}

ReservoirTrace open_trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    ReservoirTrace tr;
    bool have_schema = false, have_header = false;
    std::vector<std::vector<double>> rows;
    constexpr std::size_t ncols = 2 + kReservoirDim + 2 + 3 + kNumNodes;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# schema: ", 0) == 0) {
            if (line.substr(10) != "mfprc.openloop/1") throw IoError("not an open-loop trace: " + line);
            have_schema = true;
            continue;
        }
        if (line.rfind("# tau: ", 0) == 0) {
            const auto semi = line.find(';');
            tr.tau = parse_cell(line.substr(7, semi - 7));
            tr.start_time = parse_cell(line.substr(line.find(": ", semi) + 2));
            continue;
        }
        if (line[0] == '#') continue;
        if (!have_header) {
            have_header = true;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(parse_cell(cell));
        if (row.size() != ncols) throw IoError("open-loop trace row has " + std::to_string(row.size()) + " columns");
        rows.push_back(std::move(row));
    }
    if (!have_schema) throw IoError("trace has no schema line");
    if (rows.empty()) throw IoError("trace has no rows");
    const long n = static_cast<long>(rows.size());
    tr.measurements.resize(n, kReservoirDim);
    tr.commands.resize(n, 2);
    tr.com.resize(n, 3);
    for (long i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (int k = 0; k < kReservoirDim; ++k) tr.measurements(i, k) = r[2 + k];
        tr.commands(i, 0) = r[2 + kReservoirDim];
        tr.commands(i, 1) = r[3 + kReservoirDim];
        for (int k = 0; k < 3; ++k) tr.com(i, k) = r[4 + kReservoirDim + k];
        TouchReadings t{};
        for (int k = 0; k < kNumNodes; ++k) t[k] = r[7 + kReservoirDim + k] != 0.0;
        tr.touch.push_back(t);
    }
    return tr;
}

std::string closed_trace_csv(const ClosedLoopTrace& tr) {
    std::ostringstream os;
    header_series(os, "mfprc.closedloop/1", tr.tau, tr.start_time);
    os << "step,time,y1,y2";
    cols(os, "r", kReservoirDim);
    os << ",com_x,com_y,com_z";
    cols(os, "s", kNumNodes);
    os << '\n';
    for (long n = 0; n < tr.rows(); ++n) {
        os << n;
        put(os, tr.start_time + static_cast<double>(n) * tr.tau);
        put(os, tr.outputs(n, 0));
        put(os, tr.outputs(n, 1));
        for (int k = 0; k < kReservoirDim; ++k) put(os, tr.measurements(n, k));
        for (int k = 0; k < 3; ++k) put(os, tr.com(n, k));
        touch_cells(os, tr.touch[static_cast<std::size_t>(n)]);
        os << '\n';
    }
    return os.str();
}

std::string basin_csv(const std::vector<BasinCell>& cells) {
    std::ostringstream os;
    os << "# schema: mfprc.basin/1\np,q,ic_label," << kCellCols << ",error\n";
    for (const auto& c : cells)
        os << format_double(c.p) << ',' << format_double(c.q) << ",interp," << label_cells(c.result)
           << ',' << quoted(c.result.error) << '\n';
    return os.str();
}

std::string stiffness_csv(const std::vector<StiffnessCell>& cells) {
    std::ostringstream os;
    os << "# schema: mfprc.postsweep/1\nk_pas,k_act,ic_label," << kCellCols << ",error\n";
    for (const auto& c : cells)
        os << format_double(c.k_pas) << ',' << format_double(c.k_act) << ',' << c.ic << ','
           << label_cells(c.result) << ',' << quoted(c.result.error) << '\n';
    return os.str();
}

std::string slice_csv(const std::vector<SliceRow>& rows) {
    std::ostringstream os;
    os << "# schema: mfprc.slice/1\nk_act,ic_label,index,y1_extremum\n";
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.extrema.size(); ++i)
            os << format_double(r.k_act) << ',' << r.ic << ',' << i << ',' << format_double(r.extrema[i]) << '\n';
    return os.str();
}

std::string pre_learning_csv(const std::vector<PreLearningCell>& cells) {
    std::ostringstream os;
    os << "# schema: mfprc.presweep/1\nk_pas,k_act,ic_label," << kCellCols
       << ",multifunctional,rest_face,stage,error\n";
    for (const auto& c : cells) {
        for (int k = 0; k < 2; ++k) {
            const CellResult& r = k == 0 ? c.a : c.b;
            os << format_double(c.k_pas) << ',' << format_double(c.k_act) << ',' << (k == 0 ? 'A' : 'B')
               << ',' << label_cells(r) << ',' << (c.multifunctional ? 1 : 0) << ',' << c.rest_face << ',' << c.stage << ','
               << quoted(c.error.empty() ? r.error : c.error) << '\n';
        }
    }
    return os.str();
}

std::string history_csv(const std::vector<GenerationStats>& history) {
    std::ostringstream os;
    os << "# schema: mfprc.history/1\ngeneration,f1_mean,f1_std,f1_best,f2_mean,f2_std,f2_best,"
          "f3_mean,f3_std,f3_best,hypervolume,evaluations,invalid\n";
    for (const auto& g : history) {
        os << g.generation;
        for (int k = 0; k < 3; ++k) {
            put(os, g.mean[k]);
            put(os, g.stddev[k]);
            put(os, g.best[k]);
        }
        put(os, g.hypervolume);
        os << ',' << g.evaluations << ',' << g.invalid << '\n';
    }
    return os.str();
}

std::string heatmap_svg(const std::string& title, long nx, long ny,
                        const std::vector<std::string>& values, const std::string& x_label,
                        const std::string& y_label) {
    if (nx < 1 || ny < 1 || static_cast<long>(values.size()) != nx * ny)
        throw InvalidArgument("heatmap needs nx * ny values");
    bool numeric = true;
    std::vector<double> nums;
    for (const auto& v : values) {
        double d = 0.0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), d);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
            numeric = false;
            break;
        }
        nums.push_back(d);
    }
    static const std::map<std::string, std::string> fixed{
        {"TrainedA", "#d62728"}, {"TrainedB", "#1f77b4"}, {"FixedPoint", "#7f7f7f"},
        {"Periodic", "#2ca02c"}, {"Aperiodic", "#9467bd"}, {"Diverged", "#000000"},
        {"Error", "#ffffff"}};
    static const char* palette[] = {"#ff7f0e", "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#aec7e8"};
    std::map<std::string, std::string> legend;
    double lo = 0.0, hi = 1.0;
    if (numeric) {
        lo = *std::min_element(nums.begin(), nums.end());
        hi = *std::max_element(nums.begin(), nums.end());
    }
    auto colour = [&](std::size_t i) -> std::string {
        if (numeric) {
            const double t = hi > lo ? (nums[i] - lo) / (hi - lo) : 0.5;
            const int r = static_cast<int>(std::lround(68 + t * (253 - 68)));
            const int g = static_cast<int>(std::lround(1 + t * (231 - 1)));
            const int b = static_cast<int>(std::lround(84 + t * (37 - 84)));
            std::ostringstream c;
            c << '#' << std::hex << std::setfill('0') << std::setw(2) << r << std::setw(2) << g << std::setw(2) << b;
            return c.str();
        }
        const auto& v = values[i];
        if (auto it = legend.find(v); it != legend.end()) return it->second;
        const auto f = fixed.find(v);
        const std::string c = f != fixed.end() ? f->second : palette[legend.size() % 6];
        legend[v] = c;
        return c;
    };
    const int cell = 24, left = 60, top = 40;
    const long width = left + nx * cell + 160, height = top + ny * cell + 50;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
    for (long j = 0; j < ny; ++j)
        for (long i = 0; i < nx; ++i) {
            const auto idx = static_cast<std::size_t>(j * nx + i);
            // row 0 at the bottom
            os << "<rect x=\"" << left + i * cell << "\" y=\"" << top + (ny - 1 - j) * cell << "\" width=\""
               << cell << "\" height=\"" << cell << "\" fill=\"" << colour(idx) << "\" stroke=\"#cccccc\"><title>"
               << values[idx] << "</title></rect>\n";
        }
    os << "<text x=\"" << left << "\" y=\"" << top + ny * cell + 20 << "\">" << x_label << "</text>\n";
    os << "<text x=\"12\" y=\"" << top + ny * cell / 2 << "\" transform=\"rotate(-90 12 " << top + ny * cell / 2
       << ")\">" << y_label << "</text>\n";
    const long lx = left + nx * cell + 16;
    if (numeric) {
        os << "<text x=\"" << lx << "\" y=\"" << top + 10 << "\">min " << format_double(lo) << "</text>\n";
        os << "<text x=\"" << lx << "\" y=\"" << top + 26 << "\">max " << format_double(hi) << "</text>\n";
    } else {
        int row = 0;
        for (const auto& [name, c] : legend) {
            const long y = top + row++ * 18;
            os << "<rect x=\"" << lx << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << c
               << "\" stroke=\"#888888\"/><text x=\"" << lx + 18 << "\" y=\"" << y + 10 << "\">" << name
               << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

Json RunManifest::to_json(const fs::path& root) const {
    Json files_j = Json::array();
    for (const auto& f : files) {
        const fs::path full = f.is_absolute() ? f : root / f;
        files_j.push_back({{"path", f.generic_string()}, {"sha256", sha256_file(full)}});
    }
    return {{"schema", "mfprc.manifest/1"},
            {"command", command},
            {"config_hash", config_hash},
            {"model_hash", model_hash},
            {"seed", seed},
            {"build", build},
            {"started", started},
            {"finished", finished.empty() ? Json(nullptr) : Json(finished)},
            {"status", status},
            {"config", config_text},
            {"files", files_j}};
}

std::string build_identifier() {
    return std::string("mfprc ") + MFPRC_VERSION + " (" + __VERSION__ + ")";
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace mfprc
