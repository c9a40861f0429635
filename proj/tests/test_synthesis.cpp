#include <catch2/catch_amalgamated.hpp>

#include "liftsched/synthesis.hpp"

#include "support/instances.hpp"
#include "support/oracles.hpp"

#include <map>

using namespace liftsched;
using namespace liftsched::testing;

namespace {

ValueSet scaled(const ValueSet& vs, double f) {
    ValueSet out = vs;
    for (Mat& V : out.vertices) V *= f;
    return out;
}

double gamma_opt(const StructuredPlantLfr& P, const ValueSet& vs, const std::optional<ScalingMask>& mask = {}) {
    SynthesisOptions o;
    o.recenter = false;
    o.mask = mask;
    return synthesize(lift_plant(P), vs, o).gamma_opt;
}

StructuredPlantLfr unstabilizable_plant() {
    StructuredPlantLfr P = desk1_plant();
    // The unstable first mode is unreachable from u.
    P.set(PlantRow::State, PlantCol::State, (Mat(2, 2) << 1, 0, 0, -1).finished());
    return P;
}

}  // namespace

TEST_CASE("desk variable and block counts", "[synthesis]") {
    const LiftedPlantLfr Pl = lift_plant(desk1_plant());
    const SynthesisProblem sp = assemble(Pl, desk1_values());
    // Hand count: X1, Y1 (3 each), Q2, Q3, Qt1 (3 each), K11..K33 and L, M blocks (38), Z (1), gamma (1).
    CHECK(sp.lmi.num_variables() == 57);
    CHECK(synthesis_variable_count(Pl.dims) == 57);
    const Index N = static_cast<Index>(desk1_values().vertices.size());
    CHECK(static_cast<Index>(sp.lmi.blocks().size()) == 2 + 2 * (1 + N) + (1 + N) + 1 + 2);
}

TEST_CASE("variable count matches the closed form on random partitions", "[synthesis]") {
    Rng rng(1);
    for (int t = 0; t < 10; ++t) {
        const PlantPartition d = random_partition(rng, 3, 2);
        const StructuredPlantLfr P = random_plant(rng, d);
        const LiftedPlantLfr Pl = lift_plant(P);
        const ValueSet vs = random_value_set(rng, d, 1, 0.3);
        CHECK(assemble(Pl, vs).lmi.num_variables() == synthesis_variable_count(d));
    }
}

TEST_CASE("assembled blocks agree with a dense evaluation", "[synthesis]") {
    Rng rng(2);
    const LiftedPlantLfr Pl = lift_plant(desk1_plant());
    const ValueSet vs = desk1_values();
    const SynthesisProblem sp = assemble(Pl, vs);
    for (int t = 0; t < 20; ++t) {
        Vec x = Vec::Zero(sp.lmi.num_variables());
        for (Index i = 0; i < x.size(); ++i) x(i) = uniform(rng, -1.0, 1.0);
        // Keep Z positive so the dense form with Z^{-1} exists.
        const Eigen::MatrixXi& zi = sp.vars.Z.ids;
        for (Index r = 0; r < zi.rows(); ++r) {
            for (Index c = 0; c < zi.cols(); ++c) x(zi(r, c)) = r == c ? uniform(rng, 1.0, 2.0) : 0.0;
        }
        const SynthesisSolution s = extract_solution(sp, Pl, x);
        const SynthesisLmiReport dense = evaluate_synthesis_lmis(Pl, vs, s, x(sp.vars.gamma));
        std::map<std::string, double> dm;
        for (size_t i = 0; i < dense.labels.size(); ++i) dm[dense.labels[i]] = dense.margins[i];
        for (const LmiBlock& b : sp.lmi.blocks()) {
            REQUIRE(dm.count(b.name));
            const double m = -max_eig(SymMat(b.evaluate(x)));
            if (b.name == "output") {
                // Schur linearization: same sign, different magnitude.
                CHECK((m > 0) == (dm[b.name] > 0));
            } else if (b.name == "trace") {
                CHECK(std::abs(m - dm[b.name]) < 1e-12);
            } else {
                CHECK(std::abs(m - dm[b.name]) <= 1e-10 * (1.0 + std::abs(m)));
            }
        }
    }
}

TEST_CASE("nominal plant reaches the classical optimum", "[synthesis]") {
    const StructuredPlantLfr P = without_uncertainty(desk1_plant());
    const double g = gamma_opt(P, desk1_values());
    const double ref = lti_h2_optimum(first_display(P));
    CHECK(g >= ref * (1.0 - 1e-3));
    CHECK(g <= ref * 1.01);
}

TEST_CASE("shrinking the value set does not increase the bound", "[synthesis]") {
    const StructuredPlantLfr P = desk1_plant();
    const double g0 = gamma_opt(P, scaled(desk1_values(), 0.0));
    const double gh = gamma_opt(P, scaled(desk1_values(), 0.5));
    const double g1 = gamma_opt(P, desk1_values());
    CHECK(g0 <= gh * (1.0 + 1e-6));
    CHECK(gh <= g1 * (1.0 + 1e-6));
}

TEST_CASE("unstabilizable plant is infeasible", "[synthesis]") {
    const LiftedPlantLfr Pl = lift_plant(unstabilizable_plant());
    try {
        (void)synthesize(Pl, desk1_values());
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK_FALSE(e.certificate.empty());
    }
}

TEST_CASE("returned solutions keep the structure pins and re-verify", "[synthesis]") {
    const LiftedPlantLfr Pl = lift_plant(desk1_plant());
    const SynthesisSolution s = synthesize(Pl, desk1_values());
    const Index ns = s.dims.ns, rs = s.r_s();
    CHECK(s.K(2, 2, Pl).topRightCorner(rs, rs) == s.Q2 * Pl.A(2, 2));
    CHECK(s.K(1, 2, Pl).cols() == 2 * rs);
    CHECK(s.K(2, 1, Pl).rows() == 2 * rs);
    CHECK(s.X(1).rows() == ns);
    const Mat x2 = s.X(2), y2 = s.Y(2);
    CHECK(x2.leftCols(rs) == s.Q2);
    CHECK(x2.rightCols(rs) == s.Q3);
    CHECK(y2.leftCols(rs) == s.Qt1);
    CHECK(y2.rightCols(rs) == Mat::Identity(rs, rs));

    const SynthesisLmiReport r = evaluate_synthesis_lmis(Pl, desk1_values(), s, s.gamma);
    CHECK(r.min_margin() >= 0.5 * 1e-6);
    CHECK(s.q2_class.member());
    CHECK(s.q3_class.member());
    CHECK(s.qt1_class.member());
    CHECK(s.gamma >= s.gamma_opt);
    CHECK(s.gamma <= s.gamma_opt * (1.0 + 1e-2));
}

TEST_CASE("candidates are ordered and all feasible", "[synthesis]") {
    const LiftedPlantLfr Pl = lift_plant(desk1_plant());
    const auto cs = synthesize_candidates(Pl, desk1_values());
    REQUIRE_FALSE(cs.empty());
    for (const SynthesisSolution& s : cs) {
        CHECK(evaluate_synthesis_lmis(Pl, desk1_values(), s, s.gamma).feasible());
    }
}

TEST_CASE("restricting the scaling never lowers the bound", "[synthesis]") {
    for (double a : {0.5, 0.75}) {
        const DeskInstance f = mask_family(a);
        const double full = gamma_opt(f.plant, f.values);
        const ScalingMask bd = ScalingMask::block_diagonal(1, 1);
        double masked = std::numeric_limits<double>::infinity();
        try {
            masked = gamma_opt(f.plant, f.values, bd);
        } catch (const InfeasibleError&) {
        }
        CHECK(masked >= full * (1.0 - 1e-6));
    }
}

TEST_CASE("masks incompatible with the problem are rejected", "[synthesis]") {
    const LiftedPlantLfr Pl = lift_plant(desk1_plant());
    CHECK_THROWS_AS(assemble(Pl, desk1_values(), ScalingMask::none(3)), DimensionError);
}
