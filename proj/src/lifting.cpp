#include "liftsched/lifting.hpp"

#include <sstream>

namespace liftsched {

Mat delta_lift(const Mat& V) {
    const Index u = V.rows();
    const Index v = V.cols();
    Mat out = Mat::Zero(u + v, u + v);
    out.topLeftCorner(u, u) = -Mat::Identity(u, u);
    out.topRightCorner(u, v) = 2.0 * V;
    out.bottomRightCorner(v, v).setIdentity();
    return out;
}

const Mat& LiftedPlantLfr::A(int i, int j) const {
    if (i == 1) return j == 1 ? lfr.A11 : lfr.A12;
    return j == 1 ? lfr.A21 : lfr.A22;
}

const Mat& LiftedPlantLfr::Bp(int i) const { return i == 1 ? lfr.B1p : lfr.B2p; }
const Mat& LiftedPlantLfr::B(int i) const { return i == 1 ? lfr.B1 : lfr.B2; }
const Mat& LiftedPlantLfr::Cp(int j) const { return j == 1 ? lfr.C1p : lfr.C2p; }
const Mat& LiftedPlantLfr::C(int j) const { return j == 1 ? lfr.C1 : lfr.C2; }

LiftedPlantLfr lift_plant(const StructuredPlantLfr& P) {
    const PlantReport report = validate_plant(P);
    if (!report.valid()) {
        std::ostringstream os;
        os << "lift_plant: invalid plant";
        for (const auto& e : report.dimension_errors) os << "; " << e;
        for (const auto& v : report.violations) os << "; nonzero block " << v.block << " (max " << v.max_abs << ")";
        throw DimensionError(os.str());
    }
    const LfrPlant h = first_display(P);
    const Index n = h.n(), u = P.dims.u_hat(), v = P.dims.v_hat(), r = u + v;

    LiftedPlantLfr out;
    out.dims = P.dims;
    LfrPlant& l = out.lfr;
    l.A11 = h.A11;
    l.B1p = h.B1p;
    l.B1 = h.B1;
    l.A12 = Mat::Zero(n, r);
    l.A12.leftCols(u) = h.A12;

    l.A21 = Mat::Zero(r, n);
    l.A21.bottomRows(v) = 2.0 * h.A21;
    l.A22 = Mat::Zero(r, r);
    l.A22.topLeftCorner(u, u).setIdentity();
    l.A22.bottomLeftCorner(v, u) = 2.0 * h.A22;
    l.A22.bottomRightCorner(v, v) = -Mat::Identity(v, v);
    l.B2p = Mat::Zero(r, h.q());
    l.B2p.bottomRows(v) = 2.0 * h.B2p;
    l.B2 = Mat::Zero(r, h.m());
    l.B2.bottomRows(v) = 2.0 * h.B2;

    l.C1p = h.C1p;
    l.C2p = Mat::Zero(h.p(), r);
    l.C2p.leftCols(u) = h.C2p;
    l.Dp = h.Dp;
    l.D1 = h.D1;
    l.C1 = h.C1;
    l.C2 = Mat::Zero(h.k(), r);
    l.C2.leftCols(u) = h.C2;
    l.D2 = h.D2;
    l.D3 = h.D3;
    return out;
}

ClosedLoopLfr close_loop_lifted(const LiftedPlantLfr& Pl, const GainScheduledController& K) {
    return interconnect(Pl.lfr, K, ScheduleKind::Lifted, Pl.dims.u_hat(), Pl.dims.v_hat());
}

FullBlockScalingHat build_hat_scaling(const SymMat& Pcal, Index u_hat, Index v_hat, Index r_c) {
    const Index rs = u_hat + v_hat;
    if (Pcal.dim() != rs + r_c) {
        std::ostringstream os;
        os << "build_hat_scaling: scaling has dimension " << Pcal.dim() << ", partition requires " << rs + r_c;
        throw DimensionError(os.str());
    }
    const Mat& P = Pcal.mat();
    const Mat Q11 = P.block(0, 0, u_hat, u_hat);
    const Mat Q12 = P.block(0, u_hat, u_hat, v_hat);
    const Mat Q21 = P.block(u_hat, 0, v_hat, u_hat);
    const Mat Q22 = P.block(u_hat, u_hat, v_hat, v_hat);
    const Mat S1 = P.block(rs, 0, r_c, u_hat);
    const Mat S2 = P.block(rs, u_hat, r_c, v_hat);
    const Mat R = P.block(rs, rs, r_c, r_c);

    const BlockSpec spec{u_hat, r_c, v_hat, r_c};
    const Mat Z;
    const Mat hat = assemble({{2.0 * Q11, S1.transpose(), 2.0 * Q12, S1.transpose()},
                              {S1, Z, S2, R},
                              {2.0 * Q21, S2.transpose(), 2.0 * Q22, S2.transpose()},
                              {S1, R, S2, Z}},
                             spec, spec);
    if (max_abs(hat - hat.transpose()) != 0.0) throw DimensionError("build_hat_scaling: result is not symmetric");
    return {SymMat(hat), u_hat, v_hat, r_c};
}

double he_congruence_identity_check(const Mat& Q, const Mat& S, const Mat& R, const Mat& A, const Mat& B,
                                    const Mat& C) {
    const Index a = Q.rows(), s = R.rows();
    if (Q.cols() != a || S.rows() != s || S.cols() != a || R.cols() != s || A.rows() != a || B.rows() != s ||
        C.rows() != s || B.cols() != A.cols() || C.cols() != A.cols()) {
        throw DimensionError("he_congruence_identity_check: incompatible dimensions");
    }
    Mat P(a + s, a + s);
    P << Q, S.transpose(), S, R;
    Mat left_factor(a + s, A.cols()), right_factor(a + s, A.cols());
    left_factor << A, C;
    right_factor << A, B;
    const Mat lhs = he(left_factor.transpose() * P * right_factor).mat();

    Mat W(a + 2 * s, a + 2 * s);
    W.setZero();
    W.block(0, 0, a, a) = 2.0 * Q;
    W.block(0, a, a, s) = S.transpose();
    W.block(0, a + s, a, s) = S.transpose();
    W.block(a, 0, s, a) = S;
    W.block(a, a + s, s, s) = R;
    W.block(a + s, 0, s, a) = S;
    W.block(a + s, a, s, s) = R;
    Mat stacked(a + 2 * s, A.cols());
    stacked << A, B, C;
    const Mat rhs = stacked.transpose() * W * stacked;
    return max_abs(lhs - rhs);
}

}  // namespace liftsched
