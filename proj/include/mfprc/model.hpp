#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mfprc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using UnitQuaternion = Eigen::Quaterniond;

inline constexpr int kNumBars = 6;
inline constexpr int kNumNodes = 12;
inline constexpr int kNumPassive = 24;
inline constexpr int kNumActuators = 2;
inline constexpr int kNumFaces = 20;
inline constexpr int kReservoirDim = 2 * kNumPassive;

// Rigid bar geometry. Mass and inertia are those of a uniform capsule:
// a cylinder of `length` between the two end nodes plus hemispherical caps.
struct BarSpec {
    double length = 0.90;
    double radius = 0.025;
    double density = 1000.0;

    void validate() const;
    double volume() const;
    double mass() const;
    double axial_inertia() const;
    double transverse_inertia() const;
};

// Node indices are 0-based here; the touch-sensor numbers used in face
// tables and printed output are node index + 1.
struct TendonSpec {
    int node_a = 0;
    int node_b = 0;
    double stiffness = 375.0;
    double damping = 7.5;
    double restlength = 0.25;
    bool is_actuator = false;

    void validate() const;
};

struct ContactParams {
    bool enabled = true;
    double normal_stiffness = 1.0e5;
    double normal_damping = 1.0e3;
    double tangential_friction = 1.0;
    double torsional_friction = 0.005;
    double rolling_friction = 0.0001;
    double ground_height = 0.0;
    // Stick springs of the Coulomb friction model: linear for sliding,
    // angular for spin and rolling (N m/rad, N m s/rad).
    double tangential_stiffness = 1.0e5;
    double tangential_damping = 1.0e3;
    double angular_stiffness = 62.5;
    double angular_damping = 0.625;

    void validate() const;
};

struct NodeEnd {
    int bar = 0;
    int end = 1;  // +1 or -1 along the bar's body z axis
};

struct Face {
    int label = 0;                 // 1..20
    std::array<int, 3> nodes{};    // 0-based node indices, ascending
};

using FaceTable = std::array<Face, kNumFaces>;

struct DivergenceLimits {
    double max_position = 1.0e3;
    double max_velocity = 1.0e4;
};

// Physical parameters plus the contact and numerical knobs.
struct ModelParams {
    BarSpec bar;
    double passive_restlength = 0.25;
    double passive_stiffness = 375.0;
    double actuator_stiffness = 375.0;
    double damping = 7.5;
    double actuator_length = 0.84;
    ContactParams contact;
    double gravity = 9.81;
    double timestep = 1.0e-3;
    std::array<std::array<int, 2>, kNumActuators> actuator_nodes{{{4, 11}, {1, 3}}};
    DivergenceLimits divergence;
    double relax_speed_tol = 1.0e-6;
    double relax_damping = 5.0;
    double settle_speed_tol = 1.0e-4;
    double settle_damping = 20.0;
    long relax_max_steps = 400000;
    long settle_max_steps = 60000;
};

struct RobotModel {
    BarSpec bar;
    std::array<NodeEnd, kNumNodes> node_map{};
    // kNumPassive passive tendons in topology order, then the actuators.
    std::vector<TendonSpec> tendons;
    double actuator_length = 0.84;
    ContactParams contact;
    FaceTable faces{};
    Vec3 gravity{0.0, 0.0, -9.81};
    double timestep = 1.0e-3;
    DivergenceLimits divergence;
    double relax_speed_tol = 1.0e-6;
    // Extra viscous body damping (1/s) used only while relaxing. Tendon damping
    // alone barely acts on the symmetric breathing mode near equilibrium.
    double relax_damping = 5.0;
    double settle_speed_tol = 1.0e-4;
    // Viscous body damping (1/s) while lowering the robot onto a face.
    double settle_damping = 20.0;
    long relax_max_steps = 400000;
    long settle_max_steps = 60000;

    const TendonSpec& actuator(int i) const { return tendons[kNumPassive + i]; }

    void validate() const;

    // Copies with stiffness overridden; used by the parameter sweeps.
    RobotModel with_stiffness(double k_passive, double k_actuator) const;
    RobotModel without_gravity() const;
    RobotModel without_contact() const;
    // Actuators keep their slot but exert no force.
    RobotModel with_detached_actuators() const;
};

RobotModel build_model(const ModelParams& params = {});

const FaceTable& standard_face_table();
// Passive tendon node pairs (0-based) in topology order.
const std::array<std::array<int, 2>, kNumPassive>& standard_tendon_pairs();
const std::array<NodeEnd, kNumNodes>& standard_node_map();

// Jessen orthogonal icosahedron: bar ends at (+-h, 0, +-h/2) and cyclic
// permutations, h = half bar length. Returned in node order.
std::array<Vec3, kNumNodes> jessen_node_positions(double bar_length);

// Looks up a face by label; throws InvalidArgument outside 1..20.
const Face& face_by_label(const FaceTable& table, int label);

// Human-readable dump of nodes, tendons, actuators and faces.
std::string describe_topology(const RobotModel& model);

}  // namespace mfprc
