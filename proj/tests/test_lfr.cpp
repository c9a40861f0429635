#include <catch2/catch_amalgamated.hpp>

#include "liftsched/lfr.hpp"

#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace liftsched;
using namespace liftsched::testing;

namespace {

// Random controller respecting the zero pattern, scheduled by a constant lower block-triangular block.
GainScheduledController random_controller(Rng& rng, Index nc, Index rc1, Index rc2, Index k, Index m,
                                          double scale = 0.5) {
    ControllerPartition d{nc, rc1, rc2, k, m};
    GainScheduledController K = GainScheduledController::zeros(d);
    K.M = random_mat(rng, K.M.rows(), K.M.cols(), scale);
    K.set(CtrlRow::Z1, CtrlCol::W2, Mat::Zero(rc1, rc2));
    K.set(CtrlRow::Z1, CtrlCol::Meas, Mat::Zero(rc1, k));
    K.set(CtrlRow::Control, CtrlCol::W2, Mat::Zero(m, rc2));
    K.set(CtrlRow::Control, CtrlCol::Meas, Mat::Zero(m, k));
    Mat dc = random_mat(rng, rc1 + rc2, rc1 + rc2, 0.3);
    dc.topRightCorner(rc1, rc2).setZero();
    K.schedule = ConstantSchedule{dc};
    return K;
}

Mat random_vertex_sample(Rng& rng, const ValueSet& vs) {
    const auto samples = hull_samples(vs, 1, rng());
    return samples.back();
}

std::complex<double> random_frequency(Rng& rng) { return {uniform(rng, -0.5, 0.5), uniform(rng, 0.1, 5.0)}; }

CMat frozen_transfer(const FrozenSystem& f, std::complex<double> s) {
    const Index n = f.A.rows();
    const CMat X = (s * CMat::Identity(n, n) - f.A.cast<std::complex<double>>())
                       .fullPivLu()
                       .solve(f.B.cast<std::complex<double>>());
    return f.C.cast<std::complex<double>>() * X + f.D.cast<std::complex<double>>();
}

}  // namespace

TEST_CASE("desk plant is structurally valid", "[lfr]") {
    const StructuredPlantLfr P = desk1_plant();
    CHECK(validate_plant(P).valid());
    CHECK(validate_value_set(desk1_values()).valid());
}

TEST_CASE("measurement feedthrough of the control is flagged", "[lfr]") {
    StructuredPlantLfr P = desk1_plant();
    P.set(PlantRow::Meas, PlantCol::Control, Mat::Ones(1, 1));
    const PlantReport r = validate_plant(P);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].block == "(y,u)");
    CHECK(r.violations[0].max_abs == 1.0);
}

TEST_CASE("all-zero plant is valid", "[lfr]") {
    PlantPartition d{3, 1, 1, 1, 1, 2, 2, 1, 1};
    CHECK(validate_plant(StructuredPlantLfr::zeros(d)).valid());
}

TEST_CASE("every structural zero block is checked", "[lfr]") {
    const PlantPartition d{2, 1, 1, 1, 1, 1, 1, 1, 1};
    const std::vector<std::pair<PlantRow, PlantCol>> zeros = {{PlantRow::Z1, PlantCol::W2},
                                                              {PlantRow::Z1, PlantCol::Perf},
                                                              {PlantRow::Perf, PlantCol::W2},
                                                              {PlantRow::Perf, PlantCol::Perf},
                                                              {PlantRow::Meas, PlantCol::Control}};
    for (const auto& [r, c] : zeros) {
        StructuredPlantLfr P = StructuredPlantLfr::zeros(d);
        P.set(r, c, Mat::Constant(1, 1, 2.0));
        const PlantReport rep = validate_plant(P);
        REQUIRE(rep.violations.size() == 1);
        CHECK(rep.violations[0].max_abs == 2.0);
    }
    StructuredPlantLfr bad = StructuredPlantLfr::zeros(d);
    bad.M = Mat::Zero(3, 3);
    CHECK_FALSE(validate_plant(bad).dimension_errors.empty());
}

TEST_CASE("value set hull membership of zero", "[lfr]") {
    ValueSet vs{1, 1, {Mat::Constant(1, 1, 0.2), Mat::Constant(1, 1, 0.5)}};
    CHECK_FALSE(validate_value_set(vs).valid());
    vs.vertices.push_back(Mat::Constant(1, 1, -0.1));
    CHECK(validate_value_set(vs).valid());
    ValueSet shapes{1, 2, {Mat::Zero(1, 2), Mat::Zero(2, 1)}};
    CHECK_FALSE(validate_value_set(shapes).shapes_ok);
}

TEST_CASE("zero controller leaves the open plant", "[lfr]") {
    Rng rng(1);
    const PlantPartition d{2, 1, 1, 1, 0, 1, 1, 1, 1};
    const StructuredPlantLfr P = random_plant(rng, d);
    GainScheduledController K = GainScheduledController::zeros(ControllerPartition{0, 0, 0, 1, 1});
    K.schedule = ConstantSchedule{Mat(0, 0)};
    const ClosedLoopLfr CL = close_loop_original(P, K);
    const LfrPlant f = first_display(P);
    CHECK(max_abs(CL.blocks.A11 - f.A11) == 0.0);
    CHECK(max_abs(CL.blocks.A12 - f.A12) == 0.0);
    CHECK(max_abs(CL.blocks.A21 - f.A21) == 0.0);
    CHECK(max_abs(CL.blocks.A22 - f.A22) == 0.0);
    CHECK(max_abs(CL.blocks.B1 - f.B1p) == 0.0);
    CHECK(max_abs(CL.blocks.C1 - f.C1p) == 0.0);
}

TEST_CASE("closed loop matches signal elimination and has zero feedthrough", "[lfr]") {
    Rng rng(2);
    for (int t = 0; t < 30; ++t) {
        const PlantPartition d = random_partition(rng, 3, 2);
        const StructuredPlantLfr P = random_plant(rng, d);
        const GainScheduledController K = random_controller(rng, 2, 2, 1, d.k, d.m);
        const ClosedLoopLfr CL = close_loop_original(P, K);
        const LfrBlocks ref = eliminate_signals(first_display(P), K);
        CHECK(max_abs(CL.blocks.A11 - ref.A11) < 1e-12);
        CHECK(max_abs(CL.blocks.A12 - ref.A12) < 1e-12);
        CHECK(max_abs(CL.blocks.A21 - ref.A21) < 1e-12);
        CHECK(max_abs(CL.blocks.A22 - ref.A22) < 1e-12);
        CHECK(max_abs(CL.blocks.B1 - ref.B1) < 1e-12);
        CHECK(max_abs(CL.blocks.B2 - ref.B2) < 1e-12);
        CHECK(max_abs(CL.blocks.C1 - ref.C1) < 1e-12);
        CHECK(max_abs(CL.blocks.C2 - ref.C2) < 1e-12);
        CHECK(max_abs(CL.blocks.D) == 0.0);
    }
}

TEST_CASE("interconnection rejects mismatched control channels", "[lfr]") {
    Rng rng(3);
    const StructuredPlantLfr P = random_plant(rng, PlantPartition{2, 1, 0, 1, 0, 1, 1, 2, 1});
    const GainScheduledController K = random_controller(rng, 1, 1, 1, 1, 1);
    CHECK_THROWS_AS(close_loop_original(P, K), DimensionError);
}

TEST_CASE("freeze agrees with the implicit loop solve", "[lfr]") {
    Rng rng(4);
    int checked = 0;
    for (int t = 0; t < 30; ++t) {
        const PlantPartition d = random_partition(rng, 3, 2);
        const StructuredPlantLfr P = random_plant(rng, d, 0.5);
        const ValueSet vs = random_value_set(rng, d, 2, 0.5);
        const GainScheduledController K = random_controller(rng, 2, 1, 1, d.k, d.m);
        const ClosedLoopLfr CL = close_loop_original(P, K);
        const Mat V = random_vertex_sample(rng, vs);
        if (!well_posed(CL, {V}, 1e-6).ok) continue;
        const FrozenSystem f = freeze(CL, V);
        CHECK(max_abs(f.D) < 1e-12);
        for (int k = 0; k < 3; ++k) {
            const auto s = random_frequency(rng);
            const CMat ref = closed_loop_transfer(CL.blocks, CL.schedule(V), s);
            CHECK((frozen_transfer(f, s) - ref).norm() <= 1e-9 * (1.0 + ref.norm()));
        }
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("freeze at zero with a nilpotent channel recovers the nominal matrix", "[lfr]") {
    ClosedLoopLfr CL;
    CL.blocks.A11 = (Mat(2, 2) << -1, 2, 0, -3).finished();
    CL.blocks.A12 = (Mat(2, 1) << 1, 1).finished();
    CL.blocks.A21 = (Mat(1, 2) << 1, 0).finished();
    CL.blocks.A22 = Mat::Zero(1, 1);
    CL.blocks.B1 = Mat::Ones(2, 1);
    CL.blocks.B2 = Mat::Zero(1, 1);
    CL.blocks.C1 = Mat::Ones(1, 2);
    CL.blocks.C2 = Mat::Zero(1, 1);
    CL.blocks.D = Mat::Zero(1, 1);
    CL.u_hat = CL.v_hat = 1;
    CL.controller_schedule = ConstantSchedule{Mat(0, 0)};
    const FrozenSystem f = freeze(CL, Mat::Zero(1, 1));
    CHECK(max_abs(f.A - CL.blocks.A11) == 0.0);
}

TEST_CASE("singular channel loop is a well-posedness error", "[lfr]") {
    ClosedLoopLfr CL;
    CL.blocks.A11 = -Mat::Identity(1, 1);
    CL.blocks.A12 = CL.blocks.A21 = CL.blocks.B1 = CL.blocks.B2 = CL.blocks.C1 = CL.blocks.C2 = Mat::Ones(1, 1);
    CL.blocks.A22 = Mat::Constant(1, 1, 2.0);
    CL.blocks.D = Mat::Zero(1, 1);
    CL.u_hat = CL.v_hat = 1;
    CL.controller_schedule = ConstantSchedule{Mat(0, 0)};
    CHECK_THROWS_AS(freeze(CL, Mat::Constant(1, 1, 0.5)), WellPosednessError);
    const WellPosednessReport r = well_posed(CL, {Mat::Constant(1, 1, 0.0), Mat::Constant(1, 1, 0.5)});
    CHECK_FALSE(r.ok);
    CHECK(r.worst_sample == 1);

    CL.blocks.A22 = Mat::Zero(1, 1);
    const WellPosednessReport ok = well_posed(CL, {Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, -3.0)});
    CHECK(ok.ok);
    CHECK(ok.min_sigma == Catch::Approx(1.0));
}

TEST_CASE("freeze is continuous in the scheduling value", "[lfr]") {
    Rng rng(5);
    const PlantPartition d{2, 1, 0, 1, 0, 1, 1, 1, 1};
    const StructuredPlantLfr P = random_plant(rng, d, 0.5);
    const GainScheduledController K = random_controller(rng, 2, 1, 1, 1, 1);
    const ClosedLoopLfr CL = close_loop_original(P, K);
    const Mat V = Mat::Constant(1, 1, 0.2);
    const Mat A0 = freeze(CL, V).A;
    const Mat A1 = freeze(CL, Mat(V + Mat::Constant(1, 1, 1e-6))).A;
    const Mat A2 = freeze(CL, Mat(V + Mat::Constant(1, 1, 2e-6))).A;
    const double d1 = max_abs(A1 - A0), d2 = max_abs(A2 - A0);
    CHECK(d1 < 1e-4);
    CHECK(d2 == Catch::Approx(2.0 * d1).epsilon(1e-3));
}

TEST_CASE("hull samples are convex combinations of the vertices", "[lfr]") {
    Rng rng(6);
    const PlantPartition d{1, 1, 1, 1, 1, 1, 1, 1, 1};
    const ValueSet vs = random_value_set(rng, d, 2, 1.0);
    const auto s = hull_samples(vs, 10, 9);
    REQUIRE(s.size() == vs.vertices.size() + 10);
    for (const Mat& V : s) CHECK(hull_weights(vs.vertices, V).has_value());
    CHECK(max_abs(hull_samples(vs, 10, 9).back() - s.back()) == 0.0);
    CHECK_FALSE(hull_weights(vs.vertices, Mat::Constant(2, 2, 50.0)).has_value());
}
