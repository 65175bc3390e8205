#pragma once

#include <array>
#include <optional>
#include <span>

#include "mfprc/model.hpp"

namespace mfprc {

struct BarState {
    Vec3 position = Vec3::Zero();          // centre of mass, m
    UnitQuaternion orientation = UnitQuaternion::Identity();  // body -> world
    Vec3 linear_velocity = Vec3::Zero();   // m/s, world frame
    Vec3 angular_velocity = Vec3::Zero();  // rad/s, body frame
};

// Friction spring stretch of one end sphere: the material slip (x, y) and
// the spin/rolling angle (world frame) accumulated since touchdown, each
// clipped to its friction limit.
struct ContactAnchor {
    bool active = false;
    double x = 0.0;
    double y = 0.0;
    Vec3 turn = Vec3::Zero();
};

struct SimState {
    std::array<BarState, kNumBars> bars{};
    double time = 0.0;
    std::array<ContactAnchor, kNumNodes> contacts{};

    // 13 scalars per bar: position, quaternion (w,x,y,z), linear and angular velocity.
    std::array<double, 13 * kNumBars> flatten() const;
};

using TouchReadings = std::array<bool, kNumNodes>;
using ReservoirVector = Eigen::Matrix<double, kReservoirDim, 1>;

struct MotorCommand {
    double u1 = 1.0;
    double u2 = 1.0;
};

// Signed tendon force along the tendon: positive pushes the ends apart.
double tendon_force(double length, double rate, const TendonSpec& spec);

// Actuator restlengths L*u1, L*u2.
std::array<double, kNumActuators> apply_actuation(const RobotModel& model, MotorCommand cmd);

// One physics step of length dt. Throws SimulationDiverged.
SimState step(const SimState& state, const RobotModel& model, MotorCommand cmd, double dt);

// Advances `n` steps of model.timestep with a constant command.
SimState advance(SimState state, const RobotModel& model, MotorCommand cmd, long n);

// State with every bar placed on the given node positions, at rest.
SimState state_from_nodes(const RobotModel& model, std::span<const Vec3, kNumNodes> nodes);

// Jessen icosahedron centred at the origin, at rest.
SimState jessen_state(const RobotModel& model);

// Damped relaxation without gravity, contact or actuator forces, starting
// from `initial` (defaults to a regular icosahedron). Throws NoConvergence.
SimState relax_to_equilibrium(const RobotModel& model);
SimState relax_to_equilibrium(const RobotModel& model, const SimState& initial);

std::array<Vec3, kNumNodes> node_positions(const SimState& state, const RobotModel& model);
std::array<Vec3, kNumNodes> node_velocities(const SimState& state, const RobotModel& model);
double max_node_speed(const SimState& state, const RobotModel& model);
Vec3 center_of_mass(const SimState& state);
Vec3 linear_momentum(const SimState& state, const RobotModel& model);

// Kinetic energy plus elastic energy of every tendon at the given actuator
// restlengths. Gravity and contact springs are excluded.
double mechanical_energy(const SimState& state, const RobotModel& model, MotorCommand cmd);

TouchReadings touch_readings(const SimState& state, const RobotModel& model);

// Face whose three sensors are the unique top three by activation count,
// std::nullopt when indeterminate.
std::optional<int> bottom_face(std::span<const TouchReadings> history, const FaceTable& table);

// Passive tendon lengths followed by their rates of change.
ReservoirVector measure_reservoir(const SimState& state, const RobotModel& model);

struct SettleResult {
    SimState state;
    bool settled = false;
    std::optional<int> face;  // detected bottom face, nullopt when indeterminate
};

// Places the robot on `face` and lets it come to rest without checking where it
// ends up. Time is reset to 0.
SettleResult settle_on_face(const RobotModel& model, int face);

// Robot at rest on the ground with `face` at the bottom. Time is reset to 0.
// Throws InvalidArgument for labels outside 1..20 and SettleFailed if the
// robot rolls onto another face.
SimState set_initial_face(const RobotModel& model, int face);

SimState apply_impulse(const SimState& state, const RobotModel& model, int bar, const Vec3& impulse);

}  // namespace mfprc
