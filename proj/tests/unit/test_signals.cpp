#include <doctest.h>

#include <cmath>
#include <random>

#include "mfprc/errors.hpp"
#include "mfprc/signals.hpp"

using namespace mfprc;

TEST_CASE("reference phenotype at t = 0") {
    const auto ph = phenotype_preset("table1");
    // hand-evaluated
    CHECK(eval_target(ph, Target::A, 0.0).u1 == doctest::Approx(0.5683378290164516).epsilon(1e-14));
    CHECK(eval_target(ph, Target::B, 0.0).u2 == doctest::Approx(0.748153046936514).epsilon(1e-14));
    CHECK(eval_target(ph, Target::A, 0.37).u2 == doctest::Approx(0.7990587839516361).epsilon(1e-12));
    CHECK(ph.in_range());
}

TEST_CASE("zero amplitude is constant") {
    Phenotype ph = phenotype_preset("table1");
    ph.a = {0.0, 0.0, 0.0, 0.0};
    for (double t : {0.0, 0.5, 3.3, 1000.0}) {
        const auto c = eval_target(ph, Target::A, t);
        CHECK(c.u1 == ph.b[0]);
        CHECK(c.u2 == ph.b[1]);
    }
}

TEST_CASE("interpolation endpoints and midpoint") {
    const auto ph = phenotype_preset("table1");
    for (int i = 0; i < 500; ++i) {
        const double t = 0.0137 * i;
        const auto a = eval_target(ph, Target::A, t);
        const auto b = eval_target(ph, Target::B, t);
        const auto pa = eval_interpolated(ph, {0.0, 0.0}, t);
        const auto pb = eval_interpolated(ph, {1.0, 1.0}, t);
        CHECK(pa.u1 == a.u1);
        CHECK(pa.u2 == a.u2);
        CHECK(pb.u1 == b.u1);
        CHECK(pb.u2 == b.u2);
    }
    // a_p = 0.25945 with phase and frequency zeroed out: sin(pi/2) picks the amplitude
    Phenotype flat = ph;
    flat.omega = {0.0, 0.0, 0.0, 0.0};
    flat.phi = {std::numbers::pi / 2, 0.0, std::numbers::pi / 2, 0.0};
    flat.b = {0.0, 0.0, 0.0, 0.0};
    CHECK(eval_interpolated(flat, {0.5, 0.5}, 0.0).u1 == doctest::Approx(0.25945).epsilon(1e-14));
}

TEST_CASE("channels are blended independently") {
    const auto ph = phenotype_preset("table1");
    const auto x = eval_interpolated(ph, {1.0, 0.0}, 0.81);
    CHECK(x.u1 == eval_target(ph, Target::B, 0.81).u1);
    CHECK(x.u2 == eval_target(ph, Target::A, 0.81).u2);
}

TEST_CASE("output stays in the amplitude band") {
    const auto ph = phenotype_preset("table1");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 200.0);
    for (int i = 0; i < 5000; ++i) {
        const double t = u(rng);
        const auto a = eval_target(ph, Target::A, t);
        const auto b = eval_target(ph, Target::B, t);
        CHECK(std::abs(a.u1 - ph.b[0]) <= ph.a[0] + 1e-15);
        CHECK(std::abs(a.u2 - ph.b[1]) <= ph.a[1] + 1e-15);
        CHECK(std::abs(b.u1 - ph.b[2]) <= ph.a[2] + 1e-15);
        CHECK(std::abs(b.u2 - ph.b[3]) <= ph.a[3] + 1e-15);
    }
}

TEST_CASE("gene order round trip and ranges") {
    const auto ph = phenotype_preset("table1");
    const auto g = ph.genes();
    CHECK(g[0] == 0.2563);
    CHECK(g[7] == 103.7);
    CHECK(g[8] == 0.4945);
    CHECK(g[15] == 0.7480);
    CHECK(Phenotype::from_genes(g) == ph);

    Phenotype wild = ph;
    wild.a[0] = 0.5;
    wild.omega[1] = 1.0;
    wild.b[3] = 0.1;
    CHECK_FALSE(wild.in_range());
    wild.clamp_to_range();
    CHECK(wild.in_range());
    CHECK(wild.a[0] == 0.3);
    CHECK(wild.omega[1] == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(wild.b[3] == 0.4);
}

TEST_CASE("argument errors") {
    CHECK_THROWS_AS(phenotype_preset("nope"), InvalidArgument);
    try {
        phenotype_preset("nope");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("table1") != std::string::npos);
    }
    CHECK_THROWS_AS(eval_target(phenotype_preset("table1"), Target::A, -1.0), InvalidArgument);
}
