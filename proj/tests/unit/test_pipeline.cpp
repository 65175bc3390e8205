#include <doctest.h>

#include <random>

#include "mfprc/errors.hpp"
#include "oracles.hpp"

using namespace mfprc;

namespace {

const RobotModel& model() {
    static const RobotModel m = build_model();
    return m;
}

const SimState& rest() {
    static const SimState s = set_initial_face(model(), 1);
    return s;
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, long r, long c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (long j = 0; j < c; ++j)
        for (long i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("open loop shapes and timing") {
    const auto ph = phenotype_preset("table1");
    const auto tr = run_open_loop(model(), rest(), target_signal(ph, Target::A), 3, 0.01, 2.0);
    CHECK(tr.rows() == 3);
    CHECK(tr.commands.rows() == 3);
    CHECK(tr.com.rows() == 3);
    CHECK(tr.touch.size() == 3u);
    CHECK(tr.commands(1, 0) == eval_target(ph, Target::A, 2.01).u1);
    // row 0 is measured before anything moves
    CHECK(tr.measurements.row(0).transpose() == measure_reservoir(rest(), model()));
    CHECK(tr.final_state.time == doctest::Approx(rest().time + 0.03).epsilon(1e-12));

    CHECK_THROWS_AS(run_open_loop(model(), rest(), target_signal(ph, Target::A), 0, 0.01), InvalidArgument);
    CHECK_THROWS_AS(run_open_loop(model(), rest(), target_signal(ph, Target::A), 3, 0.0105), InvalidArgument);
    CHECK(substeps(model(), 0.01) == 10);
}

TEST_CASE("constant drive settles") {
    const Signal still = [](double) { return MotorCommand{1.0, 1.0}; };
    const auto tr = run_open_loop(model(), rest(), still, 300, 0.01);
    CHECK((tr.measurements.row(299) - tr.measurements.row(298)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("assemble aligns D one step ahead") {
    const auto ph = phenotype_preset("table1");
    const auto a = run_open_loop(model(), rest(), target_signal(ph, Target::A), 3, 0.01);
    const auto b = run_open_loop(model(), rest(), target_signal(ph, Target::B), 3, 0.01);
    const auto ts = assemble(a, b, ph);
    CHECK(ts.R.rows() == 48);
    CHECK(ts.R.cols() == 6);
    CHECK(ts.D.cols() == 6);
    CHECK(ts.D(0, 0) == eval_target(ph, Target::A, 0.01).u1);
    CHECK(ts.D(1, 2) == eval_target(ph, Target::A, 0.03).u2);
    CHECK(ts.D(0, 3) == eval_target(ph, Target::B, 0.01).u1);
    CHECK(ts.R.col(4) == b.measurements.row(1).transpose());
    CHECK(ts.R.allFinite());

    // swapping traces and targets swaps the column blocks
    const ReservoirTrace ba[] = {b, a};
    const Signal tb[] = {target_signal(ph, Target::B), target_signal(ph, Target::A)};
    const auto sw = assemble(std::span<const ReservoirTrace>(ba), std::span<const Signal>(tb));
    CHECK(sw.R.leftCols(3) == ts.R.rightCols(3));
    CHECK(sw.D.rightCols(3) == ts.D.leftCols(3));

    const auto washed = assemble(a, b, ph, 1);
    CHECK(washed.R.cols() == 4);
    CHECK(washed.D(0, 0) == eval_target(ph, Target::A, 0.02).u1);

    const auto short_b = run_open_loop(model(), rest(), target_signal(ph, Target::B), 2, 0.01);
    CHECK_THROWS_AS(assemble(a, short_b, ph), LengthMismatch);
}

TEST_CASE("ridge scalar and limits") {
    TrainingSet s{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0)};
    CHECK(std::abs(ridge_train(s, 0.01).W(0, 0) - 1.980198019801980) < 1e-9);

    std::mt19937_64 rng(5);
    TrainingSet sq{gaussian(rng, 6, 6), gaussian(rng, 2, 6)};
    const auto w0 = ridge_train(sq, 0.0);
    CHECK(rel(w0.W * sq.R, sq.D) < 1e-9);

    TrainingSet big{gaussian(rng, 48, 200), gaussian(rng, 2, 200)};
    CHECK(ridge_train(big, 1e12).W.cwiseAbs().maxCoeff() < 1e-8);

    TrainingSet thin{gaussian(rng, 48, 10), gaussian(rng, 2, 10)};
    CHECK_THROWS_AS(ridge_train(thin, 0.0), SingularMatrix);
    CHECK_NOTHROW(ridge_train(thin, 0.01));
    CHECK_THROWS_AS(ridge_train(thin, -1.0), InvalidArgument);
    TrainingSet bad{gaussian(rng, 48, 10), gaussian(rng, 2, 9)};
    CHECK_THROWS_AS(ridge_train(bad, 0.01), LengthMismatch);
}

TEST_CASE("ridge agrees with the normal-equation oracle") {
    std::mt19937_64 rng(17);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        TrainingSet ts{gaussian(rng, 48, 200), gaussian(rng, 2, 200)};
        worst = std::max(worst, rel(ridge_train(ts, 0.01).W, oracle::ridge_oracle(ts.R, ts.D, 0.01)));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("closed loop replay identity") {
    const auto ph = phenotype_preset("table1");
    const auto a = run_open_loop(model(), rest(), target_signal(ph, Target::A), 200, 0.01);
    const auto b = run_open_loop(model(), rest(), target_signal(ph, Target::B), 200, 0.01);
    const auto w = ridge_train(assemble(a, b, ph), 0.01);
    const auto tr = run_closed_loop(model(), a.final_state, w, std::nullopt, 150, 0.01, 0.05, 2.0, 2.0);
    REQUIRE(tr.rows() == 150);
    CHECK_FALSE(tr.diverged);
    CHECK(tr.outputs.row(0).transpose() == w.W * tr.measurements.row(0).transpose());
    for (long n = 0; n + 1 < tr.rows(); ++n) {
        const Eigen::Vector2d y = w.W * tr.measurements.row(n).transpose();
        REQUIRE(tr.outputs.row(n + 1).transpose() == y);
    }

    const auto seeded = run_closed_loop(model(), a.final_state, w, MotorCommand{0.7, 0.9}, 5, 0.01, 0.05, 2.0);
    CHECK(seeded.outputs(0, 0) == 0.7);
    CHECK(seeded.outputs(0, 1) == 0.9);

    // deterministic
    const auto again = run_closed_loop(model(), a.final_state, w, std::nullopt, 150, 0.01, 0.05, 2.0, 2.0);
    CHECK(again.outputs == tr.outputs);
    CHECK(again.final_state.flatten() == tr.final_state.flatten());
}

TEST_CASE("zero readout is floored by the clamp") {
    ReadoutWeights w{Eigen::MatrixXd::Zero(2, 48), 0.0};
    const auto tr = run_closed_loop(model(), rest(), w, std::nullopt, 600, 0.01, 0.05, 2.0);
    CHECK_FALSE(tr.diverged);
    CHECK(tr.outputs.cwiseAbs().maxCoeff() == 0.0);
    CHECK((tr.measurements.row(599) - tr.measurements.row(598)).cwiseAbs().maxCoeff() < 1e-6);

    CHECK_THROWS_AS(run_closed_loop(model(), rest(), w, std::nullopt, 0, 0.01, 0.05, 2.0), InvalidArgument);
    CHECK_THROWS_AS(run_closed_loop(model(), rest(), w, std::nullopt, 5, 0.01, 0.0, 2.0), InvalidArgument);
    ReadoutWeights wrong{Eigen::MatrixXd::Zero(2, 47), 0.0};
    CHECK_THROWS_AS(run_closed_loop(model(), rest(), wrong, std::nullopt, 5, 0.01, 0.05, 2.0), LengthMismatch);
}

TEST_CASE("sampled signal matches pointwise evaluation") {
    const auto ph = phenotype_preset("table1");
    const auto d = sample_signal(target_signal(ph, Target::B), 10, 0.01, 1.0);
    CHECK(d(9, 1) == eval_target(ph, Target::B, 1.0 + 9 * 0.01).u2);
}
