#include "mfprc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>

#include "mfprc/errors.hpp"

namespace mfprc {

namespace {

struct Wrench {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();  // world frame, about the centre of mass
};

struct BarFrame {
    Mat3 rot;           // body -> world
    Vec3 half_axis;     // world-frame vector from centre to the +1 end
    Vec3 omega_world;
};

struct BarInertia {
    double mass;
    double inv_mass;
    Vec3 body;  // principal moments (transverse, transverse, axial)
    Vec3 inv_body;
};

BarInertia bar_inertia(const BarSpec& bar) {
    BarInertia b;
    b.mass = bar.mass();
    b.inv_mass = 1.0 / b.mass;
    const double it = bar.transverse_inertia();
    const double ia = bar.axial_inertia();
    b.body = Vec3(it, it, ia);
    b.inv_body = b.body.cwiseInverse();
    return b;
}

std::array<BarFrame, kNumBars> bar_frames(const SimState& s, const RobotModel& m,
                                          const std::array<Vec3, kNumBars>& omega_body) {
    std::array<BarFrame, kNumBars> f;
    const double half = 0.5 * m.bar.length;
    for (int b = 0; b < kNumBars; ++b) {
        f[b].rot = s.bars[b].orientation.toRotationMatrix();
        f[b].half_axis = f[b].rot.col(2) * half;
        f[b].omega_world = f[b].rot * omega_body[b];
    }
    return f;
}


struct ContactRate {
    Eigen::Vector2d vt = Eigen::Vector2d::Zero();  // tangential velocity of the material point
    Vec3 w = Vec3::Zero();                         // bar angular velocity, world frame
};
using Slip = std::array<ContactRate, kNumNodes>;

// Accumulates tendon, gravity and contact wrenches at the current positions
// of `s`, using the supplied velocities. The friction springs read their
// stretch from `anchors`; contact-point rates go to `vt_out`. With `vt_prev`
// set (closing evaluation) the stretch is first advanced by dt times the mean
// of the two rates and stored back into `anchors`.
void compute_wrenches(const SimState& s, const RobotModel& m, const BarInertia& inertia,
                      const std::array<double, kNumActuators>& actuator_rest,
                      const std::array<Vec3, kNumBars>& lin_vel,
                      const std::array<Vec3, kNumBars>& omega_body, double dt,
                      std::array<ContactAnchor, kNumNodes>& anchors, const Slip* vt_prev,
                      Slip& vt_out, std::array<Wrench, kNumBars>& out) {
    const bool commit = vt_prev != nullptr;
    const auto frames = bar_frames(s, m, omega_body);
    std::array<Vec3, kNumNodes> arm;  // node position relative to its bar centre
    std::array<Vec3, kNumNodes> pos;
    std::array<Vec3, kNumNodes> vel;
    for (int n = 0; n < kNumNodes; ++n) {
        const auto& ne = m.node_map[n];
        arm[n] = frames[ne.bar].half_axis * static_cast<double>(ne.end);
        pos[n] = s.bars[ne.bar].position + arm[n];
        vel[n] = lin_vel[ne.bar] + frames[ne.bar].omega_world.cross(arm[n]);
    }
    for (auto& w : out) w = Wrench{};

    for (std::size_t i = 0; i < m.tendons.size(); ++i) {
        TendonSpec t = m.tendons[i];
        if (t.is_actuator) t.restlength = actuator_rest[i - kNumPassive];
        const Vec3 d = pos[t.node_b] - pos[t.node_a];
        const double len = d.norm();
        if (len <= 0.0) continue;
        const Vec3 dir = d / len;
        const double rate = dir.dot(vel[t.node_b] - vel[t.node_a]);
        const Vec3 f = tendon_force(len, rate, t) * dir;
        const auto& ea = m.node_map[t.node_a];
        const auto& eb = m.node_map[t.node_b];
        out[eb.bar].force += f;
        out[eb.bar].torque += arm[t.node_b].cross(f);
        out[ea.bar].force -= f;
        out[ea.bar].torque -= arm[t.node_a].cross(f);
    }

    for (int b = 0; b < kNumBars; ++b) out[b].force += inertia.mass * m.gravity;

    for (auto& v : vt_out) v = ContactRate{};
    if (!m.contact.enabled) {
        if (commit)
            for (auto& a : anchors) a = ContactAnchor{};
        return;
    }
    const auto& c = m.contact;
    const Vec3 up = Vec3::UnitZ();
    for (int n = 0; n < kNumNodes; ++n) {
        const int b = m.node_map[n].bar;
        // Lowest point of the end sphere.
        const Vec3 r = arm[n] - m.bar.radius * up;
        const Vec3 p = s.bars[b].position + r;
        const double penetration = c.ground_height - p.z();
        if (penetration <= 0.0) {
            if (commit) anchors[n] = ContactAnchor{};
            continue;
        }
        const Vec3 v = lin_vel[b] + frames[b].omega_world.cross(r);
        const Mat3& R = frames[b].rot;
        auto inv_eff_mass = [&](const Vec3& dir) {
            const Vec3 rn = R.transpose() * r.cross(dir);
            return inertia.inv_mass + rn.dot(inertia.inv_body.cwiseProduct(rn));
        };
        // Damping is scaled by a local implicit factor so that the stiff
        // defaults stay stable at millisecond steps.
        const double cn = c.normal_damping / (1.0 + c.normal_damping * dt * inv_eff_mass(up));
        const double fn = std::max(0.0, c.normal_stiffness * penetration - cn * v.z());

        const Eigen::Vector2d vt(v.x(), v.y());
        const Vec3& w = frames[b].omega_world;
        vt_out[n] = {vt, w};
        auto& anchor = anchors[n];
        Eigen::Vector2d stretch = Eigen::Vector2d::Zero();
        Vec3 turn = Vec3::Zero();
        if (anchor.active) {
            stretch = {anchor.x, anchor.y};
            turn = anchor.turn;
        }
        if (commit) {
            stretch += 0.5 * dt * ((*vt_prev)[n].vt + vt);
            turn += 0.5 * dt * ((*vt_prev)[n].w + w);
        }
        // Softest tangential direction: largest eigenvalue of the 2x2 inverse
        // effective mass. Axial spin of a bar makes it much softer than x or y.
        const Vec3 jx = R.transpose() * r.cross(Vec3::UnitX());
        const Vec3 jy = R.transpose() * r.cross(Vec3::UnitY());
        const double wxx = inv_eff_mass(Vec3::UnitX());
        const double wyy = inv_eff_mass(Vec3::UnitY());
        const double wxy = jx.dot(inertia.inv_body.cwiseProduct(jy));
        const double w_t = 0.5 * (wxx + wyy) + std::hypot(0.5 * (wxx - wyy), wxy);
        const double ct = c.tangential_damping / (1.0 + c.tangential_damping * dt * w_t);
        Eigen::Vector2d ft = -c.tangential_stiffness * stretch - ct * vt;
        const double limit = c.tangential_friction * fn;
        const double ft_norm = ft.norm();
        if (ft_norm > limit) {
            ft *= limit / ft_norm;
            // Sliding: the spring keeps only the stretch the cone allows.
            if (c.tangential_stiffness > 0.0) stretch = -ft / c.tangential_stiffness;
        }
        const Vec3 f(ft.x(), ft.y(), fn);
        out[b].force += f;
        out[b].torque += r.cross(f);

        // Spin (about z) and rolling (about the horizontal axis) springs,
        // each clipped to its friction limit.
        const Mat3 inv_world = R * inertia.inv_body.asDiagonal() * R.transpose();
        const double inv_spin = inv_world(2, 2);
        const double inv_roll = 0.5 * (inv_world(0, 0) + inv_world(1, 1)) +
                                std::hypot(0.5 * (inv_world(0, 0) - inv_world(1, 1)),
                                           inv_world(0, 1));
        auto angular = [&](double coeff, const Vec3& angle, const Vec3& rate, double inv_i,
                           Vec3& kept) {
            const double cd = c.angular_damping / (1.0 + c.angular_damping * dt * inv_i);
            Vec3 tau = -c.angular_stiffness * angle - cd * rate;
            const double cap = coeff * fn;
            const double norm = tau.norm();
            kept = angle;
            if (norm > cap) {
                tau *= cap / norm;
                if (c.angular_stiffness > 0.0) kept = -tau / c.angular_stiffness;
            }
            return tau;
        };
        const Vec3 spin_angle(0.0, 0.0, turn.z());
        const Vec3 spin_rate(0.0, 0.0, w.z());
        const Vec3 roll_angle(turn.x(), turn.y(), 0.0);
        const Vec3 roll_rate(w.x(), w.y(), 0.0);
        Vec3 spin_kept, roll_kept;
        out[b].torque += angular(c.torsional_friction, spin_angle, spin_rate, inv_spin, spin_kept);
        out[b].torque += angular(c.rolling_friction, roll_angle, roll_rate, inv_roll, roll_kept);
        if (commit)
            anchor = {true, stretch.x(), stretch.y(),
                      Vec3(roll_kept.x(), roll_kept.y(), spin_kept.z())};
    }
}

UnitQuaternion exp_map(const Vec3& rotation) {
    const double angle = rotation.norm();
    if (angle < 1e-300) return UnitQuaternion::Identity();
    const Vec3 axis = rotation / angle;
    const double h = 0.5 * angle;
    const double sh = std::sin(h);
    return UnitQuaternion(std::cos(h), axis.x() * sh, axis.y() * sh, axis.z() * sh);
}

Vec3 angular_accel(const BarInertia& in, const Mat3& rot, const Vec3& torque_world,
                   const Vec3& omega_body) {
    const Vec3 tb = rot.transpose() * torque_world;
    const Vec3 gyro = omega_body.cross(in.body.cwiseProduct(omega_body));
    return in.inv_body.cwiseProduct(tb - gyro);
}

void check_divergence(const SimState& s, const RobotModel& m) {
    const double half = 0.5 * m.bar.length;
    for (const auto& b : s.bars) {
        const bool finite = b.position.allFinite() && b.linear_velocity.allFinite() &&
                            b.angular_velocity.allFinite() && b.orientation.coeffs().allFinite();
        if (!finite || b.position.cwiseAbs().maxCoeff() > m.divergence.max_position ||
            b.linear_velocity.norm() > m.divergence.max_velocity ||
            b.angular_velocity.norm() * half > m.divergence.max_velocity) {
            throw SimulationDiverged("simulation diverged at t=" + std::to_string(s.time), s.time);
        }
    }
}

}  // namespace

std::array<double, 13 * kNumBars> SimState::flatten() const {
    std::array<double, 13 * kNumBars> out{};
    std::size_t k = 0;
    for (const auto& b : bars) {
        for (int i = 0; i < 3; ++i) out[k++] = b.position[i];
        out[k++] = b.orientation.w();
        out[k++] = b.orientation.x();
        out[k++] = b.orientation.y();
        out[k++] = b.orientation.z();
        for (int i = 0; i < 3; ++i) out[k++] = b.linear_velocity[i];
        for (int i = 0; i < 3; ++i) out[k++] = b.angular_velocity[i];
    }
    return out;
}

double tendon_force(double length, double rate, const TendonSpec& spec) {
    return -spec.stiffness * (length - spec.restlength) - spec.damping * rate;
}

std::array<double, kNumActuators> apply_actuation(const RobotModel& model, MotorCommand cmd) {
    if (!(cmd.u1 > 0.0) || !(cmd.u2 > 0.0))
        throw NonPositiveCommand("motor commands must be positive");
    return {model.actuator_length * cmd.u1, model.actuator_length * cmd.u2};
}

SimState step(const SimState& state, const RobotModel& model, MotorCommand cmd, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("timestep must be positive");
    const auto rest = apply_actuation(model, cmd);
    const BarInertia inertia = bar_inertia(model.bar);

    SimState next = state;
    std::array<Vec3, kNumBars> v0, w0, vh, wh;
    for (int b = 0; b < kNumBars; ++b) {
        v0[b] = state.bars[b].linear_velocity;
        w0[b] = state.bars[b].angular_velocity;
    }

    // Kick.
    std::array<Wrench, kNumBars> wrench;
    Slip vt0, vt1;
    compute_wrenches(state, model, inertia, rest, v0, w0, dt, next.contacts, nullptr, vt0,
                     wrench);
    for (int b = 0; b < kNumBars; ++b) {
        const Mat3 rot = state.bars[b].orientation.toRotationMatrix();
        vh[b] = v0[b] + (0.5 * dt * inertia.inv_mass) * wrench[b].force;
        wh[b] = w0[b] + 0.5 * dt * angular_accel(inertia, rot, wrench[b].torque, w0[b]);
    }

    // Drift.
    for (int b = 0; b < kNumBars; ++b) {
        auto& bar = next.bars[b];
        bar.position = state.bars[b].position + dt * vh[b];
        bar.orientation = (state.bars[b].orientation * exp_map(dt * wh[b])).normalized();
    }

    // Closing kick with velocity-dependent forces at the extrapolated velocity.
    std::array<Vec3, kNumBars> ve, we;
    for (int b = 0; b < kNumBars; ++b) {
        ve[b] = 2.0 * vh[b] - v0[b];
        we[b] = 2.0 * wh[b] - w0[b];
    }
    compute_wrenches(next, model, inertia, rest, ve, we, dt, next.contacts, &vt0, vt1, wrench);
    for (int b = 0; b < kNumBars; ++b) {
        auto& bar = next.bars[b];
        const Mat3 rot = bar.orientation.toRotationMatrix();
        bar.linear_velocity = vh[b] + (0.5 * dt * inertia.inv_mass) * wrench[b].force;
        bar.angular_velocity = wh[b] + 0.5 * dt * angular_accel(inertia, rot, wrench[b].torque, we[b]);
    }
    next.time = state.time + dt;
    check_divergence(next, model);
    return next;
}

SimState advance(SimState state, const RobotModel& model, MotorCommand cmd, long n) {
    for (long i = 0; i < n; ++i) state = step(state, model, cmd, model.timestep);
    return state;
}

SimState state_from_nodes(const RobotModel& model, std::span<const Vec3, kNumNodes> nodes) {
    SimState s;
    std::array<Vec3, kNumBars> plus, minus;
    for (int n = 0; n < kNumNodes; ++n) {
        const auto& ne = model.node_map[n];
        (ne.end > 0 ? plus : minus)[ne.bar] = nodes[n];
    }
    for (int b = 0; b < kNumBars; ++b) {
        auto& bar = s.bars[b];
        bar.position = 0.5 * (plus[b] + minus[b]);
        const Vec3 dir = (plus[b] - minus[b]).normalized();
        bar.orientation = UnitQuaternion::FromTwoVectors(Vec3::UnitZ(), dir).normalized();
    }
    return s;
}

SimState jessen_state(const RobotModel& model) {
    const auto nodes = jessen_node_positions(model.bar.length);
    return state_from_nodes(model, nodes);
}

std::array<Vec3, kNumNodes> node_positions(const SimState& state, const RobotModel& model) {
    std::array<Vec3, kNumNodes> out;
    const double half = 0.5 * model.bar.length;
    for (int n = 0; n < kNumNodes; ++n) {
        const auto& ne = model.node_map[n];
        const auto& bar = state.bars[ne.bar];
        out[n] = bar.position + bar.orientation * Vec3(0.0, 0.0, half * ne.end);
    }
    return out;
}

std::array<Vec3, kNumNodes> node_velocities(const SimState& state, const RobotModel& model) {
    std::array<Vec3, kNumNodes> out;
    const double half = 0.5 * model.bar.length;
    for (int n = 0; n < kNumNodes; ++n) {
        const auto& ne = model.node_map[n];
        const auto& bar = state.bars[ne.bar];
        const Vec3 arm = bar.orientation * Vec3(0.0, 0.0, half * ne.end);
        out[n] = bar.linear_velocity + (bar.orientation * bar.angular_velocity).cross(arm);
    }
    return out;
}

double max_node_speed(const SimState& state, const RobotModel& model) {
    double v = 0.0;
    for (const auto& n : node_velocities(state, model)) v = std::max(v, n.norm());
    return v;
}

Vec3 center_of_mass(const SimState& state) {
    Vec3 c = Vec3::Zero();
    for (const auto& b : state.bars) c += b.position;
    return c / static_cast<double>(kNumBars);
}

Vec3 linear_momentum(const SimState& state, const RobotModel& model) {
    Vec3 p = Vec3::Zero();
    for (const auto& b : state.bars) p += b.linear_velocity;
    return model.bar.mass() * p;
}

double mechanical_energy(const SimState& state, const RobotModel& model, MotorCommand cmd) {
    const BarInertia in = bar_inertia(model.bar);
    double e = 0.0;
    for (const auto& b : state.bars) {
        e += 0.5 * in.mass * b.linear_velocity.squaredNorm();
        e += 0.5 * b.angular_velocity.dot(in.body.cwiseProduct(b.angular_velocity));
    }
    const auto rest = apply_actuation(model, cmd);
    const auto pos = node_positions(state, model);
    for (std::size_t i = 0; i < model.tendons.size(); ++i) {
        const auto& t = model.tendons[i];
        const double xr = t.is_actuator ? rest[i - kNumPassive] : t.restlength;
        const double stretch = (pos[t.node_b] - pos[t.node_a]).norm() - xr;
        e += 0.5 * t.stiffness * stretch * stretch;
    }
    return e;
}

SimState relax_to_equilibrium(const RobotModel& model) {
    // Regular icosahedron (offset h/phi) is close to, but not at, equilibrium.
    const double h = 0.5 * model.bar.length;
    const double scale = (h / std::numbers::phi) / (0.5 * h);
    auto nodes = jessen_node_positions(model.bar.length);
    for (auto& n : nodes)
        for (int i = 0; i < 3; ++i)
            if (std::abs(std::abs(n[i]) - 0.5 * h) < 1e-12) n[i] *= scale;
    return relax_to_equilibrium(model, state_from_nodes(model, nodes));
}

SimState relax_to_equilibrium(const RobotModel& model, const SimState& initial) {
    const RobotModel free = model.without_gravity().without_contact().with_detached_actuators();
    const MotorCommand hold{1.0, 1.0};
    constexpr int kQuietSteps = 100;
    const double decay = std::exp(-model.relax_damping * model.timestep);
    SimState s = initial;
    int quiet = 0;
    for (long i = 0; i < model.relax_max_steps; ++i) {
        s = step(s, free, hold, model.timestep);
        for (auto& b : s.bars) {
            b.linear_velocity *= decay;
            b.angular_velocity *= decay;
        }
        quiet = max_node_speed(s, free) < model.relax_speed_tol ? quiet + 1 : 0;
        if (quiet >= kQuietSteps) return s;
    }
    throw NoConvergence("relaxation did not converge within " +
                        std::to_string(model.relax_max_steps) + " steps");
}

TouchReadings touch_readings(const SimState& state, const RobotModel& model) {
    TouchReadings t{};
    const auto pos = node_positions(state, model);
    const double threshold = model.contact.ground_height + model.bar.radius;
    for (int n = 0; n < kNumNodes; ++n) t[n] = pos[n].z() <= threshold;
    return t;
}

std::optional<int> bottom_face(std::span<const TouchReadings> history, const FaceTable& table) {
    if (history.empty()) throw InvalidArgument("bottom_face needs a non-empty window");
    std::array<long, kNumNodes> count{};
    for (const auto& r : history)
        for (int n = 0; n < kNumNodes; ++n) count[n] += r[n] ? 1 : 0;
    std::array<int, kNumNodes> order;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return count[a] > count[b]; });
    if (count[order[2]] == 0 || count[order[2]] == count[order[3]]) return std::nullopt;
    std::array<int, 3> top{order[0], order[1], order[2]};
    std::sort(top.begin(), top.end());
    for (const auto& f : table)
        if (f.nodes == top) return f.label;
    return std::nullopt;
}

ReservoirVector measure_reservoir(const SimState& state, const RobotModel& model) {
    ReservoirVector r;
    const auto pos = node_positions(state, model);
    const auto vel = node_velocities(state, model);
    for (int i = 0; i < kNumPassive; ++i) {
        const auto& t = model.tendons[i];
        const Vec3 d = pos[t.node_b] - pos[t.node_a];
        const double len = d.norm();
        r[i] = len;
        r[kNumPassive + i] = len > 0.0 ? d.dot(vel[t.node_b] - vel[t.node_a]) / len : 0.0;
    }
    return r;
}

SettleResult settle_on_face(const RobotModel& model, int face) {
    const Face& f = face_by_label(model.faces, face);
    auto nodes = jessen_node_positions(model.bar.length);
    const Vec3& a = nodes[f.nodes[0]];
    const Vec3& b = nodes[f.nodes[1]];
    const Vec3& c = nodes[f.nodes[2]];
    Vec3 normal = (b - a).cross(c - a).normalized();
    if (normal.dot(a + b + c) < 0.0) normal = -normal;  // outward
    const Mat3 rot = UnitQuaternion::FromTwoVectors(normal, -Vec3::UnitZ()).toRotationMatrix();
    for (auto& n : nodes) n = rot * n;
    double lowest = nodes[0].z();
    for (const auto& n : nodes) lowest = std::min(lowest, n.z());
    const double lift = model.contact.ground_height + model.bar.radius - lowest;
    for (auto& n : nodes) n.z() += lift;

    SimState s = state_from_nodes(model, nodes);
    const MotorCommand hold{1.0, 1.0};
    constexpr int kWindow = 100;
    constexpr int kQuietSteps = 100;

    // Lower the robot onto the face quasi-statically first. Dropped from the
    // unloaded shape it sags several centimetres and the overshoot can tip it
    // off faces that are statically stable.
    const double decay = std::exp(-model.settle_damping * model.timestep);
    int quiet = 0;
    for (long i = 0; i < model.settle_max_steps && quiet < kQuietSteps; ++i) {
        s = step(s, model, hold, model.timestep);
        for (auto& bar : s.bars) {
            bar.linear_velocity *= decay;
            bar.angular_velocity *= decay;
        }
        quiet = max_node_speed(s, model) < model.settle_speed_tol ? quiet + 1 : 0;
    }

    std::vector<TouchReadings> window;
    window.reserve(kWindow);
    quiet = 0;
    bool settled = false;
    for (long i = 0; i < model.settle_max_steps; ++i) {
        s = step(s, model, hold, model.timestep);
        if (static_cast<int>(window.size()) == kWindow) window.erase(window.begin());
        window.push_back(touch_readings(s, model));
        quiet = max_node_speed(s, model) < model.settle_speed_tol ? quiet + 1 : 0;
        if (quiet >= kQuietSteps && static_cast<int>(window.size()) == kWindow) {
            settled = true;
            break;
        }
    }
    s.time = 0.0;
    return {s, settled, bottom_face(window, model.faces)};
}

SimState set_initial_face(const RobotModel& model, int face) {
    const auto r = settle_on_face(model, face);
    if (!r.settled || r.face != face) {
        const int actual = r.face.value_or(0);
        throw SettleFailed(r.settled ? "robot settled on face " + std::to_string(actual) +
                                           " instead of " + std::to_string(face)
                                     : "robot did not settle on face " + std::to_string(face),
                           face, actual);
    }
    return r.state;
}

SimState apply_impulse(const SimState& state, const RobotModel& model, int bar, const Vec3& impulse) {
    if (bar < 0 || bar >= kNumBars) throw InvalidArgument("bar index out of range");
    SimState s = state;
    s.bars[bar].linear_velocity += impulse / model.bar.mass();
    return s;
}

}  // namespace mfprc
