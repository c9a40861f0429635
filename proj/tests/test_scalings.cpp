#include <catch2/catch_amalgamated.hpp>

#include "liftsched/scalings.hpp"

#include "support/instances.hpp"

using namespace liftsched;
using namespace liftsched::testing;

namespace {

ValueSet interval(double lo, double hi) { return ValueSet{1, 1, {Mat::Constant(1, 1, lo), Mat::Constant(1, 1, hi)}}; }

FullBlockScalingHat hat(const Mat& P, Index u, Index v, Index rc) { return {SymMat(P), u, v, rc}; }

}  // namespace

TEST_CASE("primal class scalar examples", "[scalings]") {
    const ValueSet vs = interval(-1, 1);
    const MarginReport r = check_primal(SymMat((Mat(2, 2) << -1, 0, 0, 2).finished()), vs);
    CHECK(r.member());
    CHECK(r.margin == Catch::Approx(1.0));
    CHECK(r.conditions.size() == 3);
    CHECK_FALSE(check_primal(SymMat::identity(2), vs).member());
}

TEST_CASE("dual class scalar examples", "[scalings]") {
    const ValueSet vs = interval(-1, 1);
    // (*)^T Pt [0; I] = 1 > 0 and (*)^T Pt [I; -v] = -2 + v^2 < 0.
    const MarginReport r = check_dual(SymMat((Mat(2, 2) << -2, 0, 0, 1).finished()), vs);
    CHECK(r.member());
    CHECK(r.margin == Catch::Approx(1.0));
    CHECK_FALSE(check_dual(SymMat::identity(2), vs).member());
}

TEST_CASE("margins scale linearly with the scaling", "[scalings]") {
    Rng rng(1);
    const PlantPartition d{1, 1, 1, 1, 1, 1, 1, 1, 1};
    for (int t = 0; t < 20; ++t) {
        const ValueSet vs = random_value_set(rng, d, 2, 0.7);
        const SymMat P = random_sym(rng, 4);
        const double a = uniform(rng, 0.1, 10.0);
        const SymMat aP(a * P.mat());
        CHECK(check_primal(aP, vs).margin == Catch::Approx(a * check_primal(P, vs).margin).margin(1e-12));
        CHECK(check_dual(aP, vs).margin == Catch::Approx(a * check_dual(P, vs).margin).margin(1e-12));
        CHECK(check_primal(aP, vs).member() == (check_primal(P, vs).margin > kMembershipTol / a));
    }
}

TEST_CASE("passive class examples", "[scalings]") {
    // u_hat = 0: the lifted block is the identity, and a constant identity controller block.
    const ValueSet vs{0, 1, {Mat::Zero(0, 1)}};
    const SchedulingMap dc(ConstantSchedule{Mat::Identity(1, 1)});
    const MarginReport r = check_passive(SymMat::identity(2), dc, vs, SamplingOptions{0, 1});
    CHECK(r.margin == Catch::Approx(2.0));
    CHECK(r.member());
    CHECK_FALSE(check_passive(SymMat(-Mat::Identity(2, 2)), dc, vs, SamplingOptions{0, 1}).member());
}

TEST_CASE("passive class reports vertex and sampled margins separately", "[scalings]") {
    const ValueSet vs = interval(-0.5, 0.5);
    const SchedulingMap dc(ConstantSchedule{Mat::Identity(1, 1)});
    // He[P diag(delta_lift(v), 1)] with P = diag(-1, 2, 1) > 0 when |v| < sqrt(2).
    const SymMat P((Mat(3, 3) << -1, 0, 0, 0, 2, 0, 0, 0, 1).finished());
    const MarginReport none = check_passive(P, dc, vs, SamplingOptions{0, 1});
    CHECK(std::isinf(none.sampled_margin));
    const MarginReport some = check_passive(P, dc, vs, SamplingOptions{50, 3});
    CHECK(some.member());
    CHECK(some.sampled_margin >= some.vertex_margin - 1e-12);
    CHECK(some.margin == Catch::Approx(std::min(some.vertex_margin, some.sampled_margin)));
}

TEST_CASE("hat class examples", "[scalings]") {
    const ValueSet vs = interval(-0.1, 0.1);
    const SchedulingMap dc(ConstantSchedule{Mat::Constant(1, 1, 0.1)});
    // diag(-I, I) on the partition (u_hat, r_c, v_hat, r_c): small-gain instance.
    const Mat P = block_diag({-Mat::Identity(2, 2), Mat::Identity(2, 2)});
    CHECK(check_hat(hat(P, 1, 1, 1), dc, vs).member());
    CHECK(check_hat_F(hat(P, 1, 1, 1), dc, vs).member());
    CHECK_FALSE(check_hat(hat(Mat::Zero(4, 4), 1, 1, 1), dc, vs).member());
}

TEST_CASE("hat F members are hat members", "[scalings]") {
    Rng rng(2);
    const ValueSet vs = interval(-0.4, 0.4);
    const SchedulingMap dc(ConstantSchedule{Mat::Constant(1, 1, 0.3)});
    int members = 0;
    for (int t = 0; t < 300; ++t) {
        const Mat P = block_diag({-Mat::Identity(2, 2), Mat::Identity(2, 2)}) + random_sym(rng, 4, 0.6).mat();
        const FullBlockScalingHat h = hat(P, 1, 1, 1);
        if (check_hat_F(h, dc, vs, SamplingOptions{20, 5}).member()) {
            ++members;
            CHECK(check_hat(h, dc, vs, SamplingOptions{20, 5}).member());
        }
    }
    CHECK(members > 10);
}

TEST_CASE("vertex constraint generation", "[scalings]") {
    const ValueSet vs = interval(-1, 1);
    const auto primal = vertex_constraints_primal(vs);
    REQUIRE(primal.size() == 3);
    const SymMat P((Mat(2, 2) << -1, 0, 0, 2).finished());
    for (const auto& b : primal) {
        CHECK(b.value(P).dim() == 1);
        CHECK(min_eig(b.value(P)) > 0.0);
    }
    const auto dual = vertex_constraints_dual(vs);
    REQUIRE(dual.size() == 3);
    const SymMat Pt((Mat(2, 2) << -2, 0, 0, 1).finished());
    for (const auto& b : dual) CHECK(min_eig(b.value(Pt)) > 0.0);
}

TEST_CASE("solver round trip through the vertex constraints", "[scalings]") {
    Rng rng(3);
    const PlantPartition d{1, 1, 1, 1, 0, 1, 1, 1, 1};
    for (int t = 0; t < 5; ++t) {
        const ValueSet vs = random_value_set(rng, d, 2, 0.6);
        LmiProblem lmi;
        const MatrixVar P = lmi.add_matrix_variable("P", 3, 3, VarKind::Symmetric);
        for (const auto& b : vertex_constraints_primal(vs)) {
            lmi.add_constraint(b.label, -b.sign * (Mat(b.outer.transpose()) * P.expr() * b.outer));
        }
        // Bounded problem: maximize nothing, keep the scale fixed.
        lmi.add_constraint("scale", P.expr() - AffineMat(Mat::Identity(3, 3) * 10.0), "scale", 0.0);
        lmi.add_constraint("scale-", -P.expr() - AffineMat(Mat::Identity(3, 3) * 10.0), "scale", 0.0);
        const SolveResult r = solve(lmi);
        REQUIRE(r.status == SolveStatus::Optimal);
        const MarginReport m = check_primal(SymMat(P.value(r.x)), vs);
        CHECK(m.margin >= lmi.eps_strict() * (1.0 - 1e-3));
    }
}

TEST_CASE("scaling masks", "[scalings]") {
    const ScalingMask none = ScalingMask::none(3);
    CHECK_FALSE(none.Q2.any());
    const ScalingMask bd = ScalingMask::block_diagonal(2, 1);
    CHECK(bd.Q2(0, 2));
    CHECK(bd.Q2(2, 1));
    CHECK_FALSE(bd.Q2(0, 1));
    CHECK_FALSE(bd.Qt1(2, 2));
    const ScalingMask dg = ScalingMask::diagonal(3);
    CHECK(dg.Q3(0, 1));
    CHECK_FALSE(dg.Q3(1, 1));
    CHECK(mask_problem(bd, 3).empty());
    CHECK_FALSE(mask_problem(bd, 4).empty());
    ScalingMask asym = ScalingMask::none(2);
    asym.Q2(0, 1) = true;
    CHECK_FALSE(mask_problem(asym, 2).empty());
}
