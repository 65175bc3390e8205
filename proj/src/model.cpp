#include "mfprc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "mfprc/errors.hpp"

namespace mfprc {

namespace {

// Sensor numbers are 1-based in the table below to match the face labels
// people read off the robot; converted to node indices on first use.
constexpr std::array<std::array<int, 4>, kNumFaces> kFaceRows{{
    {1, 2, 5, 8},    {2, 1, 3, 11},   {3, 1, 4, 8},    {4, 1, 4, 11},
    {5, 1, 5, 8},    {6, 3, 5, 10},   {7, 2, 8, 9},    {8, 2, 9, 12},
    {9, 2, 10, 12},  {10, 3, 6, 10},  {11, 3, 6, 11},  {12, 4, 7, 9},
    {13, 2, 5, 10},  {14, 4, 7, 11},  {15, 4, 8, 9},   {16, 6, 7, 11},
    {17, 1, 3, 5},   {18, 6, 7, 12},  {19, 6, 10, 12}, {20, 7, 9, 12},
}};

constexpr std::array<std::array<int, 2>, kNumPassive> kTendonRows{{
    {1, 3},  {1, 4},  {1, 5},   {1, 8},   {2, 5},   {2, 8},
    {2, 9},  {2, 10}, {3, 5},   {3, 6},   {3, 11},  {4, 7},
    {4, 8},  {4, 11}, {5, 10},  {6, 10},  {6, 11},  {6, 12},
    {7, 9},  {7, 11}, {7, 12},  {8, 9},   {9, 12},  {10, 12},
}};

}  // namespace

void BarSpec::validate() const {
    if (!(length > 0.0) || !(radius > 0.0) || !(density > 0.0))
        throw InvalidArgument("bar length, radius and density must be positive");
}

double BarSpec::volume() const {
    const double pi = std::numbers::pi;
    return pi * radius * radius * length + 4.0 / 3.0 * pi * radius * radius * radius;
}

double BarSpec::mass() const { return density * volume(); }

double BarSpec::axial_inertia() const {
    const double pi = std::numbers::pi;
    const double m_cyl = density * pi * radius * radius * length;
    const double m_caps = density * 4.0 / 3.0 * pi * radius * radius * radius;
    return 0.5 * m_cyl * radius * radius + 0.4 * m_caps * radius * radius;
}

double BarSpec::transverse_inertia() const {
    const double pi = std::numbers::pi;
    const double m_cyl = density * pi * radius * radius * length;
    const double m_caps = density * 4.0 / 3.0 * pi * radius * radius * radius;
    const double r2 = radius * radius;
    const double l = length;
    return m_cyl * (l * l / 12.0 + r2 / 4.0) +
           m_caps * (0.4 * r2 + l * l / 4.0 + 3.0 * l * radius / 8.0);
}

void TendonSpec::validate() const {
    if (node_a < 0 || node_a >= kNumNodes || node_b < 0 || node_b >= kNumNodes)
        throw InvalidArgument("tendon node index out of range");
    if (node_a == node_b) throw InvalidArgument("tendon joins a node to itself");
    if (!(stiffness >= 0.0) || !(damping >= 0.0) || !(restlength >= 0.0))
        throw InvalidArgument("tendon stiffness, damping and restlength must be non-negative");
}

void ContactParams::validate() const {
    const double v[] = {normal_stiffness,     normal_damping,    tangential_friction,
                        torsional_friction,   rolling_friction,  tangential_stiffness,
                        tangential_damping,   angular_stiffness, angular_damping};
    for (double x : v)
        if (!(x >= 0.0)) throw InvalidArgument("contact coefficients must be non-negative");
}

void RobotModel::validate() const {
    bar.validate();
    contact.validate();
    if (tendons.size() != static_cast<std::size_t>(kNumPassive + kNumActuators))
        throw InvalidArgument("model needs 24 passive tendons and 2 actuators");
    std::array<int, kNumNodes> degree{};
    for (std::size_t i = 0; i < tendons.size(); ++i) {
        tendons[i].validate();
        const bool act = i >= static_cast<std::size_t>(kNumPassive);
        if (tendons[i].is_actuator != act) throw InvalidArgument("tendon ordering broken");
        if (!act) {
            ++degree[tendons[i].node_a];
            ++degree[tendons[i].node_b];
        }
    }
    for (int d : degree)
        if (d != 4) throw InvalidArgument("each node must join exactly 4 passive tendons");
    std::set<std::pair<int, int>> ends;
    for (const auto& ne : node_map) {
        if (ne.bar < 0 || ne.bar >= kNumBars || (ne.end != 1 && ne.end != -1))
            throw InvalidArgument("bad node map entry");
        ends.insert({ne.bar, ne.end});
    }
    if (ends.size() != static_cast<std::size_t>(kNumNodes))
        throw InvalidArgument("node map must cover every bar end exactly once");
    if (!(actuator_length > 0.0)) throw InvalidArgument("actuator length must be positive");
    if (!(timestep > 0.0)) throw InvalidArgument("timestep must be positive");
}

RobotModel RobotModel::with_stiffness(double k_passive, double k_actuator) const {
    if (!(k_passive > 0.0) || !(k_actuator > 0.0))
        throw InvalidArgument("stiffness values must be positive");
    RobotModel m = *this;
    for (auto& t : m.tendons) t.stiffness = t.is_actuator ? k_actuator : k_passive;
    return m;
}

RobotModel RobotModel::without_gravity() const {
    RobotModel m = *this;
    m.gravity = Vec3::Zero();
    return m;
}

RobotModel RobotModel::without_contact() const {
    RobotModel m = *this;
    m.contact.enabled = false;
    return m;
}

RobotModel RobotModel::with_detached_actuators() const {
    RobotModel m = *this;
    for (auto& t : m.tendons)
        if (t.is_actuator) {
            t.stiffness = 0.0;
            t.damping = 0.0;
        }
    return m;
}

const FaceTable& standard_face_table() {
    static const FaceTable table = [] {
        FaceTable t{};
        for (std::size_t i = 0; i < kFaceRows.size(); ++i) {
            t[i].label = kFaceRows[i][0];
            t[i].nodes = {kFaceRows[i][1] - 1, kFaceRows[i][2] - 1, kFaceRows[i][3] - 1};
        }
        return t;
    }();
    return table;
}

const std::array<std::array<int, 2>, kNumPassive>& standard_tendon_pairs() {
    static const auto pairs = [] {
        std::array<std::array<int, 2>, kNumPassive> p{};
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = {kTendonRows[i][0] - 1, kTendonRows[i][1] - 1};
        return p;
    }();
    return pairs;
}

const std::array<NodeEnd, kNumNodes>& standard_node_map() {
    // Bar b spans nodes 2b (end -1) and 2b+1 (end +1).
    static const auto map = [] {
        std::array<NodeEnd, kNumNodes> m{};
        for (int n = 0; n < kNumNodes; ++n) m[n] = {n / 2, (n % 2 == 0) ? -1 : 1};
        return m;
    }();
    return map;
}

std::array<Vec3, kNumNodes> jessen_node_positions(double bar_length) {
    const double h = 0.5 * bar_length;
    const double e = 0.5 * h;
    return {{
        {e, -h, 0.0},  {e, h, 0.0},    // bar 0: y-parallel at x=+e
        {0.0, -e, h},  {0.0, -e, -h},  // bar 1: z-parallel at y=-e
        {h, 0.0, e},   {-h, 0.0, e},   // bar 2: x-parallel at z=+e
        {-h, 0.0, -e}, {h, 0.0, -e},   // bar 3: x-parallel at z=-e
        {0.0, e, -h},  {0.0, e, h},    // bar 4: z-parallel at y=+e
        {-e, -h, 0.0}, {-e, h, 0.0},   // bar 5: y-parallel at x=-e
    }};
}

RobotModel build_model(const ModelParams& p) {
    RobotModel m;
    m.bar = p.bar;
    m.node_map = standard_node_map();
    for (const auto& pair : standard_tendon_pairs()) {
        TendonSpec t;
        t.node_a = pair[0];
        t.node_b = pair[1];
        t.stiffness = p.passive_stiffness;
        t.damping = p.damping;
        t.restlength = p.passive_restlength;
        m.tendons.push_back(t);
    }
    for (const auto& nodes : p.actuator_nodes) {
        TendonSpec t;
        t.node_a = nodes[0];
        t.node_b = nodes[1];
        t.stiffness = p.actuator_stiffness;
        t.damping = p.damping;
        t.restlength = p.actuator_length;
        t.is_actuator = true;
        m.tendons.push_back(t);
    }
    m.actuator_length = p.actuator_length;
    m.contact = p.contact;
    m.faces = standard_face_table();
    m.gravity = Vec3(0.0, 0.0, -p.gravity);
    m.timestep = p.timestep;
    m.divergence = p.divergence;
    m.relax_speed_tol = p.relax_speed_tol;
    m.relax_damping = p.relax_damping;
    m.settle_speed_tol = p.settle_speed_tol;
    m.settle_damping = p.settle_damping;
    m.relax_max_steps = p.relax_max_steps;
    m.settle_max_steps = p.settle_max_steps;
    m.validate();
    return m;
}

const Face& face_by_label(const FaceTable& table, int label) {
    for (const auto& f : table)
        if (f.label == label) return f;
    throw InvalidArgument("face label must be in 1..20, got " + std::to_string(label));
}

std::string describe_topology(const RobotModel& model) {
    std::ostringstream os;
    os << "bars: " << kNumBars << "  length " << model.bar.length << " m  radius "
       << model.bar.radius << " m  mass " << model.bar.mass() << " kg\n";
    os << "nodes (sensor: bar, end):\n";
    for (int n = 0; n < kNumNodes; ++n)
        os << "  " << n + 1 << ": bar " << model.node_map[n].bar + 1 << ", "
           << (model.node_map[n].end > 0 ? "+" : "-") << "\n";
    os << "tendons (index: sensor a - sensor b, k, c, restlength):\n";
    for (std::size_t i = 0; i < model.tendons.size(); ++i) {
        const auto& t = model.tendons[i];
        os << "  " << i + 1 << ": " << t.node_a + 1 << " - " << t.node_b + 1 << "  k="
           << t.stiffness << "  c=" << t.damping << "  xr=" << t.restlength
           << (t.is_actuator ? "  [actuator]" : "") << "\n";
    }
    os << "actuator equilibrium length L = " << model.actuator_length << " m\n";
    os << "faces (label: sensors):\n";
    for (const auto& f : model.faces)
        os << "  {" << f.label << "}: " << f.nodes[0] + 1 << ", " << f.nodes[1] + 1 << ", "
           << f.nodes[2] + 1 << "\n";
    return os.str();
}

}  // namespace mfprc
