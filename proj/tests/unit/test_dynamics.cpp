#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mfprc/errors.hpp"
#include "oracles.hpp"

using namespace mfprc;

namespace {

const RobotModel& standard() {
    static const RobotModel m = build_model();
    return m;
}

const SimState& relaxed() {
    static const SimState s = relax_to_equilibrium(standard());
    return s;
}

std::array<double, kNumPassive> passive_lengths(const SimState& s, const RobotModel& m) {
    const auto r = measure_reservoir(s, m);
    std::array<double, kNumPassive> out{};
    for (int i = 0; i < kNumPassive; ++i) out[i] = r[i];
    return out;
}

double actuator_distance(const SimState& s, const RobotModel& m, int i) {
    const auto p = node_positions(s, m);
    const auto& t = m.actuator(i);
    return (p[t.node_b] - p[t.node_a]).norm();
}

}  // namespace

TEST_CASE("tendon force follows the spring-damper law") {
    TendonSpec t;
    t.stiffness = 375.0;
    t.damping = 7.5;
    t.restlength = 0.25;
    CHECK(tendon_force(0.25, 0.0, t) == 0.0);
    CHECK(tendon_force(0.35, 0.0, t) == doctest::Approx(-37.5).epsilon(1e-14));
    CHECK(tendon_force(0.25, 1.0, t) == -7.5);
    // compressive when shorter than rest
    CHECK(tendon_force(0.20, 0.0, t) > 0.0);
}

TEST_CASE("actuation scales the equilibrium length") {
    const auto& m = standard();
    CHECK(m.actuator_length == 0.84);
    CHECK(apply_actuation(m, {1.0, 1.0})[0] == 0.84);
    CHECK(apply_actuation(m, {0.5, 1.0})[0] == doctest::Approx(0.42).epsilon(1e-15));
    CHECK(apply_actuation(m, {1.2, 1.0})[0] == doctest::Approx(1.008).epsilon(1e-15));
    CHECK(apply_actuation(m, {1.0, 0.7})[1] == doctest::Approx(0.588).epsilon(1e-15));
    CHECK_THROWS_AS(apply_actuation(m, {0.0, 1.0}), NonPositiveCommand);
    CHECK_THROWS_AS(apply_actuation(m, {1.0, -0.1}), NonPositiveCommand);
}

TEST_CASE("model topology") {
    const auto& m = standard();
    CHECK(m.tendons.size() == 26u);
    std::array<int, kNumNodes> degree{};
    for (int i = 0; i < kNumPassive; ++i) {
        ++degree[m.tendons[i].node_a];
        ++degree[m.tendons[i].node_b];
    }
    for (int d : degree) CHECK(d == 4);
    // anchors (1-based sensors)
    auto nodes = [&](int label) {
        const auto& f = face_by_label(m.faces, label).nodes;
        return std::array<int, 3>{f[0] + 1, f[1] + 1, f[2] + 1};
    };
    CHECK(nodes(1) == std::array<int, 3>{2, 5, 8});
    CHECK(nodes(6) == std::array<int, 3>{3, 5, 10});
    CHECK(nodes(13) == std::array<int, 3>{2, 5, 10});
    CHECK(nodes(17) == std::array<int, 3>{1, 3, 5});
    CHECK_THROWS_AS(face_by_label(m.faces, 21), InvalidArgument);
    CHECK(m.bar.mass() == doctest::Approx(1000.0 * (std::numbers::pi * 0.025 * 0.025 * 0.9 +
                                                    4.0 / 3.0 * std::numbers::pi * std::pow(0.025, 3))));
}

TEST_CASE("tendons at rest and zero velocity form a fixed point") {
    RobotModel m = standard().without_gravity().without_contact();
    SimState s0 = relaxed();
    for (auto& b : s0.bars) b.linear_velocity = b.angular_velocity = Vec3::Zero();
    const auto len = passive_lengths(s0, m);
    for (int i = 0; i < kNumPassive; ++i) m.tendons[i].restlength = len[i];
    m.tendons[kNumPassive].stiffness = 0.0;
    m.tendons[kNumPassive + 1].stiffness = 0.0;
    SimState s = s0;
    for (int i = 0; i < 100; ++i) s = step(s, m, {1.0, 1.0}, m.timestep);
    // rounding only: lengths are measured through a different position path
    const auto a = s.flatten();
    const auto b = s0.flatten();
    double drift = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) drift = std::max(drift, std::abs(a[i] - b[i]));
    CHECK(drift < 1e-12);
    CHECK(s.time == doctest::Approx(s0.time + 0.1).epsilon(1e-12));
}

TEST_CASE("two-body tendon matches the damped oscillator") {
    for (double c : {0.0, 7.5}) {
        auto tb = oracle::two_body(c, 0.1);
        SimState s = tb.state;
        double worst = 0.0;
        for (int n = 1; n <= 1000; ++n) {
            s = step(s, tb.model, {1.0, 1.0}, 1e-3);
            const double exact = oracle::damped_oscillator(0.1, tb.k, c, tb.reduced_mass, n * 1e-3);
            worst = std::max(worst, std::abs(oracle::node_gap(tb, s) - exact));
        }
        CHECK(worst / 0.1 < 1e-3);
    }
}

TEST_CASE("free flight conserves momentum and dissipates energy") {
    const RobotModel m = standard().without_gravity().without_contact();
    SimState s = relaxed();
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& b : s.bars) {
        b.linear_velocity = Vec3(n(rng), n(rng), n(rng)) * 0.5;
        b.angular_velocity = Vec3(n(rng), n(rng), n(rng));
    }
    const MotorCommand cmd{0.9, 1.1};
    const Vec3 p0 = linear_momentum(s, m);
    double e = mechanical_energy(s, m, cmd);
    double worst_increase = -1.0;
    double worst_q = 0.0;
    for (int i = 0; i < 10000; ++i) {
        s = step(s, m, cmd, m.timestep);
        const double e2 = mechanical_energy(s, m, cmd);
        worst_increase = std::max(worst_increase, e2 - e);
        e = e2;
        for (const auto& b : s.bars) worst_q = std::max(worst_q, std::abs(b.orientation.norm() - 1.0));
    }
    CHECK((linear_momentum(s, m) - p0).norm() <= 1e-8 * std::max(p0.norm(), 1.0));
    CHECK(worst_increase <= 1e-6);
    CHECK(worst_q <= 1e-9);
}

TEST_CASE("relaxation reaches the symmetric equilibrium") {
    const auto& m = standard();
    const auto len = passive_lengths(relaxed(), m);
    const auto [lo, hi] = std::minmax_element(len.begin(), len.end());
    CHECK(*hi - *lo < 1e-4);
    CHECK(std::abs(actuator_distance(relaxed(), m, 0) - actuator_distance(relaxed(), m, 1)) < 1e-4);
    CHECK(max_node_speed(relaxed(), m) < 1e-6);

    // jittered start lands on the same tendon length
    auto nodes = node_positions(jessen_state(m), m);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    for (auto& p : nodes) p += Vec3(u(rng), u(rng), u(rng));
    const auto len2 = passive_lengths(relax_to_equilibrium(m, state_from_nodes(m, nodes)), m);
    CHECK(std::abs(len2[0] - len[0]) < 1e-4);
    const auto [lo2, hi2] = std::minmax_element(len2.begin(), len2.end());
    CHECK(*hi2 - *lo2 < 1e-4);
}

TEST_CASE("touch sensors") {
    const auto& m = standard();
    SimState s = relaxed();
    for (auto& b : s.bars) b.position.z() += 3.0;
    const auto none = touch_readings(s, m);
    CHECK(std::none_of(none.begin(), none.end(), [](bool b) { return b; }));

    // raise the ground until the lowest node sits exactly on the threshold
    const auto p = node_positions(s, m);
    int low = 0;
    for (int i = 1; i < kNumNodes; ++i)
        if (p[i].z() < p[low].z()) low = i;
    RobotModel g = m;
    double h = p[low].z() - m.bar.radius;
    for (int k = 0; k < 8 && h + m.bar.radius != p[low].z(); ++k)
        h = std::nextafter(h, h + m.bar.radius < p[low].z() ? 1e9 : -1e9);
    REQUIRE(h + m.bar.radius == p[low].z());
    g.contact.ground_height = h;
    const auto at = touch_readings(s, g);
    for (int i = 0; i < kNumNodes; ++i) CHECK(at[i] == (p[i].z() <= p[low].z()));
    g.contact.ground_height = std::nextafter(h, -1e9);
    CHECK_FALSE(touch_readings(s, g)[low]);
}

TEST_CASE("bottom face from activation counts") {
    const auto& faces = standard().faces;
    auto history = [](std::initializer_list<int> sensors, int copies) {
        TouchReadings t{};
        for (int s : sensors) t[s - 1] = true;
        return std::vector<TouchReadings>(copies, t);
    };
    CHECK(bottom_face(history({2, 5, 10}, 5), faces) == 13);
    CHECK(bottom_face(history({1, 3, 5}, 5), faces) == 17);
    CHECK(bottom_face(history({2, 5, 8}, 1), faces) == 1);
    // four-way tie
    CHECK_FALSE(bottom_face(history({1, 2, 5, 8}, 4), faces).has_value());
    // three sensors that are not a face
    CHECK_FALSE(bottom_face(history({1, 2, 12}, 4), faces).has_value());
    // majority wins over a brief extra contact
    auto h = history({2, 5, 10}, 10);
    h[3][0] = true;
    CHECK(bottom_face(h, faces) == 13);
}

TEST_CASE("reservoir measurements") {
    const auto& m = standard();
    const auto r = measure_reservoir(relaxed(), m);
    for (int i = 1; i < kNumPassive; ++i) CHECK(std::abs(r[i] - r[0]) < 1e-4);
    for (int i = kNumPassive; i < kReservoirDim; ++i) CHECK(std::abs(r[i]) < 1e-5);

    // rates against a finite difference of the lengths
    const RobotModel free = m.without_gravity().without_contact();
    SimState s = relaxed();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& b : s.bars) {
        b.linear_velocity = Vec3(n(rng), n(rng), n(rng));
        b.angular_velocity = Vec3(n(rng), n(rng), n(rng));
    }
    const double dt = 1e-6;
    const auto r0 = measure_reservoir(s, free);
    const auto r1 = measure_reservoir(step(s, free, {1.0, 1.0}, dt), free);
    for (int i = 0; i < kNumPassive; ++i) CHECK(std::abs((r1[i] - r0[i]) / dt - r0[kNumPassive + i]) < 1e-3);
}

TEST_CASE("settling on a face") {
    const auto& m = standard();
    for (int face : {1, 6, 13, 17}) {
        const SimState s = set_initial_face(m, face);
        CHECK(s.time == 0.0);
        CHECK(max_node_speed(s, m) < m.settle_speed_tol);
        std::vector<TouchReadings> window;
        SimState x = s;
        for (int i = 0; i < 100; ++i) {
            window.push_back(touch_readings(x, m));
            x = step(x, m, {1.0, 1.0}, m.timestep);
        }
        CHECK(bottom_face(window, m.faces) == face);
        double pen = 0.0;
        for (const auto& p : node_positions(s, m)) pen = std::max(pen, m.bar.radius - p.z());
        CHECK(pen < 5e-3);
    }
    CHECK_THROWS_AS(set_initial_face(m, 21), InvalidArgument);
    CHECK_THROWS_AS(set_initial_face(m, 0), InvalidArgument);

    const auto r = settle_on_face(m, 13);
    CHECK(r.settled);
    CHECK(r.face == 13);
    CHECK(r.state.flatten() == set_initial_face(m, 13).flatten());

    // half stiffness: at rest on six nodes, no single face below
    const auto soft = settle_on_face(m.with_stiffness(175.0, 175.0), 1);
    CHECK(soft.settled);
    CHECK_FALSE(soft.face.has_value());
    CHECK_THROWS_AS(set_initial_face(m.with_stiffness(175.0, 175.0), 1), SettleFailed);
}

TEST_CASE("impulses") {
    const auto& m = standard();
    const SimState s = set_initial_face(m, 13);
    CHECK(apply_impulse(s, m, 2, Vec3::Zero()).flatten() == s.flatten());
    const Vec3 imp(1.5, -0.5, 2.0);
    const SimState k = apply_impulse(s, m, 2, imp);
    const Vec3 dv = k.bars[2].linear_velocity - s.bars[2].linear_velocity;
    CHECK((dv - imp / m.bar.mass()).norm() < 1e-15);
    CHECK_THROWS_AS(apply_impulse(s, m, 6, imp), InvalidArgument);

    // a hard lateral kick rolls the robot off face 13
    SimState x = apply_impulse(s, m, 1, Vec3(0.0, 40.0, 0.0));
    x = advance(x, m, {1.0, 1.0}, 3000);
    std::vector<TouchReadings> window;
    for (int i = 0; i < 100; ++i) {
        window.push_back(touch_readings(x, m));
        x = step(x, m, {1.0, 1.0}, m.timestep);
    }
    const auto after = bottom_face(window, m.faces);
    CHECK(after != std::optional<int>(13));
}

TEST_CASE("stepping is deterministic") {
    const auto& m = standard();
    SimState a = set_initial_face(m, 1), b = a;
    for (int i = 0; i < 500; ++i) {
        const MotorCommand u{1.0 + 0.3 * std::sin(0.05 * i), 0.8};
        a = step(a, m, u, m.timestep);
        b = step(b, m, u, m.timestep);
    }
    CHECK(a.flatten() == b.flatten());
}

TEST_CASE("divergence guard") {
    const auto& m = standard();
    SimState s = relaxed();
    s.bars[0].linear_velocity = Vec3(2e4, 0.0, 0.0);
    CHECK_THROWS_AS(step(s, m, {1.0, 1.0}, m.timestep), SimulationDiverged);
    CHECK_THROWS_AS(step(relaxed(), m, {1.0, 1.0}, 0.0), InvalidArgument);
}
