#include "liftsched/reconstruct.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>

#include <sstream>

namespace liftsched {

namespace {

constexpr double kRankTol = 1e-9;
constexpr int kMaxPerturbations = 8;

Mat eye(Index n) { return Mat::Identity(n, n); }

// Block lower-triangular matrix [[a, 0], [b, c]]; products and inverses keep the zero block exact.
struct Lower {
    Mat a, b, c;

    static Lower of(const Mat& m, Index r1, Index c1) {
        return {m.topLeftCorner(r1, c1), m.bottomLeftCorner(m.rows() - r1, c1),
                m.bottomRightCorner(m.rows() - r1, m.cols() - c1)};
    }
    [[nodiscard]] Mat full() const {
        Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + c.cols());
        out.topLeftCorner(a.rows(), a.cols()) = a;
        out.bottomLeftCorner(b.rows(), b.cols()) = b;
        out.bottomRightCorner(c.rows(), c.cols()) = c;
        return out;
    }
    [[nodiscard]] Lower inverse() const {
        const Mat ai = a.inverse(), ci = c.inverse();
        return {ai, -ci * b * ai, ci};
    }
    friend Lower operator*(const Lower& x, const Lower& y) { return {x.a * y.a, x.b * y.a + x.c * y.b, x.c * y.c}; }
};

bool rank_deficient(const Mat& m) {
    if (m.rows() < m.cols()) return true;
    return min_singular_value(m) <= kRankTol * (1.0 + m.norm());
}

// Adds delta * I until m is safely invertible; delta starts at 1e-8 (1 + |m|) and doubles.
void regularize(Mat& m, const std::string& name, std::vector<PerturbationRecord>& log) {
    if (!rank_deficient(m)) return;
    double delta = 1e-8 * (1.0 + m.norm());
    for (int attempt = 1; attempt <= kMaxPerturbations; ++attempt) {
        const Mat trial = m + delta * eye(m.rows());
        if (!rank_deficient(trial)) {
            m = trial;
            log.push_back({name, delta, attempt});
            return;
        }
        delta *= 2.0;
    }
    throw NumericalError("reconstruct: " + name + " stays singular after perturbation");
}

Mat sym(const Mat& m) { return SymMat(m).mat(); }

double two_norm(const Mat& m) { return m.size() == 0 ? 0.0 : Eigen::JacobiSVD<Mat>(m).singularValues()(0); }

}  // namespace

Mat TriangularSchedule::evaluate(const Mat& V) const {
    if (V.rows() != u_hat || V.cols() != v_hat) throw DimensionError("TriangularSchedule: value has wrong shape");
    const Index rs = u_hat + v_hat;
    const Mat Dl = delta_lift(V);
    const Mat DlT = Dl.transpose();
    const Lower inner{Q2 * Dl * Qt1 + DlT, Q3 * Dl * Qt1 + DlT, Q3 * Dl + DlT * Q2};
    const Lower Ut = Lower::of(U2.transpose(), rs, rs);
    const Lower Vl = Lower::of(V2, V2.rows() - rs, rs);
    return -(Ut.inverse() * inner * Vl.inverse()).full();
}

Mat FactorizationX1::Ycal() const {
    const Index n = Y1.rows(), nc = V1.rows();
    Mat out = Mat::Zero(n + nc, 2 * n);
    out << Y1, eye(n), V1, Mat::Zero(nc, n);
    return out;
}

Mat FactorizationX1::Zcal() const {
    const Index n = X1.rows(), nc = U1.rows();
    Mat out = Mat::Zero(n + nc, 2 * n);
    out << eye(n), X1, Mat::Zero(nc, n), U1;
    return out;
}

Mat FactorizationX2::X2() const {
    Mat out(Q2.rows(), 2 * Q2.cols());
    out << Q2, Q3;
    return out;
}

Mat FactorizationX2::Y2() const {
    const Index rs = Qt1.rows();
    Mat out(rs, 2 * rs);
    out << Qt1, eye(rs);
    return out;
}

Mat FactorizationX2::Ycal() const {
    const Index rs = Qt1.rows(), rc = V2.rows();
    Mat out(rs + rc, 3 * rs);
    out << Y2(), eye(rs), V2, Mat::Zero(rc, rs);
    return out;
}

Mat FactorizationX2::Zcal() const {
    const Index rs = Q2.rows(), rc = U2.rows();
    Mat out(rs + rc, 3 * rs);
    out << eye(rs), X2(), Mat::Zero(rc, rs), U2;
    return out;
}

SymMat FactorizationX2::Pcal() const {
    const Index rs = Q3.rows(), r1 = R11.rows(), r2 = R22.rows();
    return SymMat(assemble({{Q3, S13.transpose(), S23.transpose()}, {S13, R11, R21.transpose()}, {S23, R21, R22}},
                           BlockSpec{rs, r1, r2}, BlockSpec{rs, r1, r2}));
}

Factorizations build_factorizations(const SynthesisSolution& s, const FactorizationScales& scales) {
    Factorizations out;
    const Index ns = s.X1.rows(), rs = s.r_s();

    FactorizationX1& f1 = out.f1;
    f1.X1 = s.X1;
    f1.Y1 = s.Y1;
    const Mat V1 = eye(ns) - s.X1 * s.Y1;
    const double sigma = scales.sigma > 0 ? scales.sigma : std::max(1.0, two_norm(V1));
    f1.U1 = sigma * eye(ns);
    f1.V1 = V1 / sigma;
    regularize(f1.V1, "V1", out.perturbations);
    out.Xcal1 = SymMat(f1.Zcal() * f1.Ycal().inverse());

    FactorizationX2& f2 = out.f2;
    f2.Q2 = s.Q2;
    f2.Q3 = s.Q3;
    f2.Qt1 = s.Qt1;
    Mat Qt1 = s.Qt1;
    regularize(Qt1, "Qt1", out.perturbations);
    Mat T1 = s.Q2 - Qt1.inverse();
    Mat T2 = s.Q3 - s.Q2;
    regularize(T1, "Q2 - Qt1^-1", out.perturbations);
    regularize(T2, "Q3 - Q2", out.perturbations);

    double sc = scales.s;
    if (sc <= 0) {
        const Mat V2 = Lower{T1 * s.Qt1, T2 * s.Qt1, T2}.full();
        sc = std::max(1.0, two_norm(V2));
    }
    f2.S13 = sc * eye(rs);
    f2.S23 = sc * eye(rs);
    f2.R21 = Mat::Zero(rs, rs);
    f2.R11 = sym(f2.S13 * T1.inverse() * f2.S13.transpose());
    f2.R22 = sym(f2.S23 * T2.inverse() * f2.S23.transpose());
    f2.S12 = f2.S13 - f2.R21.transpose() * f2.R22.inverse() * f2.S23;
    f2.St22 = -f2.S23.transpose().inverse() * T2;
    f2.St11 = -f2.S13.transpose().inverse() * T1 * s.Qt1;
    f2.St21 = -f2.S23.transpose().inverse() * T2 * s.Qt1;
    f2.U2 = Lower{f2.S12.transpose(), f2.S13.transpose(), f2.S23.transpose()}.full().transpose();
    f2.V2 = Lower{f2.St11, f2.St21, f2.St22}.full();
    return out;
}

TriangularSchedule scheduling_map(const FactorizationX2& f, Index u_hat, Index v_hat) {
    return TriangularSchedule{u_hat, v_hat, f.Q2, f.Q3, f.Qt1, f.U2, f.V2};
}

GainScheduledController controller_matrices(const LiftedPlantLfr& Pl, const SynthesisSolution& s,
                                            const Factorizations& f, double* pin_residual) {
    const Index ns = Pl.dims.ns, rs = Pl.r_s(), m = Pl.dims.m, k = Pl.dims.k;
    const Mat U1iT = f.f1.U1.transpose().inverse();
    const Mat V1i = f.f1.V1.inverse();
    const Lower U2iT = Lower::of(f.f2.U2.transpose(), rs, rs).inverse();
    const Lower V2i = Lower::of(f.f2.V2, rs, rs).inverse();
    const Mat V2i_full = V2i.full();
    const Mat U2iT_full = U2iT.full();

    const Mat X1t = s.X(1).transpose(), X2t = s.X(2).transpose();
    const Mat Y1 = s.Y(1), Y2 = s.Y(2);
    const Mat L1 = s.L(1), L2 = s.L(2), M1 = s.M(1), M2 = s.M(2);

    const Mat Cc1 = M1 * V1i;
    Mat Cc2 = Mat::Zero(m, 2 * rs);
    Cc2.leftCols(rs) = s.Kbar.M2 * V2i.a;
    const Mat Bc1 = U1iT * L1;
    Mat Bc2 = Mat::Zero(2 * rs, k);
    Bc2.bottomRows(rs) = U2iT.c * s.Kbar.L3;

    const auto inner = [&](int i, int j) {
        const Mat& Xt = i == 1 ? X1t : X2t;
        const Mat& Y = j == 1 ? Y1 : Y2;
        const Mat& L = i == 1 ? L1 : L2;
        const Mat& M = j == 1 ? M1 : M2;
        return Mat(s.K(i, j, Pl) - Xt * Pl.A(i, j) * Y - Xt * Pl.B(i) * M - L * Pl.C(j) * Y);
    };
    const Mat Ac11 = U1iT * inner(1, 1) * V1i;
    const Mat Ac12 = U1iT * inner(1, 2) * V2i_full;
    const Mat Ac21 = U2iT_full * inner(2, 1) * V1i;

    // Upper-right block of the (2,2) inner term cancels against the pinned entry.
    Mat in22 = inner(2, 2);
    const double residual = max_abs(in22.topRightCorner(rs, rs));
    const double scale = 1.0 + max_abs(s.Q2) * (1.0 + max_abs(Pl.A(2, 2)));
    if (residual > 1e-9 * scale) {
        std::ostringstream os;
        os << "controller_matrices: pinned block does not cancel (residual " << residual << ")";
        throw NumericalError(os.str());
    }
    if (pin_residual) *pin_residual = residual;
    in22.topRightCorner(rs, rs).setZero();
    const Mat Ac22 = (U2iT * Lower::of(in22, rs, rs) * V2i).full();

    ControllerPartition cd;
    cd.nc = ns;
    cd.rc1 = rs;
    cd.rc2 = rs;
    cd.k = k;
    cd.m = m;
    GainScheduledController K = GainScheduledController::zeros(cd);
    K.M = assemble({{Ac11, Ac12, Bc1}, {Ac21, Ac22, Bc2}, {Cc1, Cc2, Mat::Zero(m, k)}}, BlockSpec{ns, 2 * rs, m},
                   BlockSpec{ns, 2 * rs, k});
    K.schedule = SchedulingMap(scheduling_map(f.f2, Pl.dims.u_hat(), Pl.dims.v_hat()));
    return K;
}

Reconstruction reconstruct(const LiftedPlantLfr& Pl, const SynthesisSolution& s, const FactorizationScales& scales) {
    Reconstruction r;
    r.factors = build_factorizations(s, scales);
    r.controller = controller_matrices(Pl, s, r.factors, &r.pin_residual);
    r.Xcal1 = r.factors.Xcal1;
    r.Pcal = r.factors.f2.Pcal();

    const auto violations = controller_violations(r.controller);
    if (!violations.empty()) throw NumericalError("reconstruct: structural zero block " + violations.front().block + " is nonzero");

    const std::pair<const char*, Mat> watched[] = {{"V1", r.factors.f1.V1},
                                                   {"U2", r.factors.f2.U2},
                                                   {"V2", r.factors.f2.V2},
                                                   {"Ycal1", r.factors.f1.Ycal()},
                                                   {"Ycal2", r.factors.f2.Ycal()}};
    for (const auto& [name, mat] : watched) {
        const double c = condition_number(mat);
        if (c > kConditionWarning) {
            std::ostringstream os;
            os << "ill-conditioned " << name << " (condition number " << c << ")";
            r.warnings.push_back(os.str());
        }
    }
    for (const auto& p : r.factors.perturbations) {
        std::ostringstream os;
        os << "perturbed " << p.target << " by " << p.size;
        r.warnings.push_back(os.str());
    }
    return r;
}

NecessityResult certificate_to_variables(const LiftedPlantLfr& Pl, const GainScheduledController& K,
                                         const SymMat& Xcal1, const SymMat& Pcal, const Mat& Z, double gamma) {
    const Index ns = Pl.dims.ns, rs = Pl.r_s();
    const Index nc = K.dims.nc, rc1 = K.dims.rc1, rc2 = K.dims.rc2;
    if (nc < ns || rc1 < rs || rc2 < rs) throw DimensionError("certificate_to_variables: controller smaller than plant");
    if (Xcal1.dim() != ns + nc || Pcal.dim() != rs + rc1 + rc2) {
        throw DimensionError("certificate_to_variables: certificate dimensions do not match the closed loop");
    }
    if (max_abs(K.block(CtrlRow::Control, CtrlCol::Meas)) != 0.0) {
        throw DimensionError("certificate_to_variables: controller feedthrough must vanish");
    }

    NecessityResult out;
    Mat X = Xcal1.mat();
    Mat P = Pcal.mat();
    FactorizationX1& f1 = out.factors.f1;
    FactorizationX2& f2 = out.factors.f2;
    auto& log = out.factors.perturbations;

    double dx = 1e-8 * (1.0 + X.norm());
    double dr = 1e-8 * (1.0 + P.norm());
    double ds = dr;
    int nx = 0, nr = 0, nsd = 0;
    for (;;) {
        f1.X1 = sym(X.topLeftCorner(ns, ns));
        f1.U1 = X.bottomLeftCorner(nc, ns);
        const Mat Xi = X.inverse();
        f1.Y1 = sym(Xi.topLeftCorner(ns, ns));
        f1.V1 = Xi.bottomLeftCorner(nc, ns);
        if (rank_deficient(f1.V1)) {
            if (++nx > kMaxPerturbations) throw NumericalError("certificate_to_variables: V1 stays rank deficient");
            Mat E = Mat::Zero(ns, nc);
            E.leftCols(ns) = eye(ns);
            X.topRightCorner(ns, nc) += dx * E;
            X.bottomLeftCorner(nc, ns) += dx * E.transpose();
            log.push_back({"X_cal_1 coupling", dx, nx});
            dx *= 2.0;
            continue;
        }

        const BlockSpec part{rs, rc1, rc2};
        f2.Q3 = sym(block_of(P, part, part, 0, 0));
        f2.S13 = block_of(P, part, part, 1, 0);
        f2.S23 = block_of(P, part, part, 2, 0);
        f2.R11 = block_of(P, part, part, 1, 1);
        f2.R21 = block_of(P, part, part, 2, 1);
        f2.R22 = block_of(P, part, part, 2, 2);
        if (rank_deficient(f2.R22)) {
            if (++nr > kMaxPerturbations) throw NumericalError("certificate_to_variables: R22 stays singular");
            P.bottomRightCorner(rc2, rc2) += dr * eye(rc2);
            log.push_back({"R22", dr, nr});
            dr *= 2.0;
            continue;
        }
        const Mat R22i = f2.R22.inverse();
        f2.Q2 = sym(f2.Q3 - f2.S23.transpose() * R22i * f2.S23);
        f2.S12 = f2.S13 - f2.R21.transpose() * R22i * f2.S23;
        f2.St22 = -R22i * f2.S23;
        const Mat Pi = P.inverse();
        f2.Qt1 = sym(block_of(Pi, part, part, 0, 0));
        f2.St11 = block_of(Pi, part, part, 1, 0);
        f2.St21 = block_of(Pi, part, part, 2, 0);
        if (rank_deficient(f2.St11) || rank_deficient(f2.St22)) {
            // A barely invertible R22 leaves St11 nearly singular; keep growing that shift first.
            if (nr > 0 && nr < kMaxPerturbations) {
                ++nr;
                P.bottomRightCorner(rc2, rc2) += dr * eye(rc2);
                log.push_back({"R22", dr, nr});
                dr *= 2.0;
                continue;
            }
            if (++nsd > kMaxPerturbations) throw NumericalError("certificate_to_variables: V2 stays rank deficient");
            Mat E1 = Mat::Zero(rc1, rs), E2 = Mat::Zero(rc2, rs);
            E1.topRows(rs) = eye(rs);
            E2.topRows(rs) = eye(rs);
            set_block(P, part, part, 1, 0, f2.S13 + ds * E1);
            set_block(P, part, part, 0, 1, (f2.S13 + ds * E1).transpose());
            set_block(P, part, part, 2, 0, f2.S23 + ds * E2);
            set_block(P, part, part, 0, 2, (f2.S23 + ds * E2).transpose());
            log.push_back({"S13, S23", ds, nsd});
            ds *= 2.0;
            continue;
        }
        break;
    }
    f2.U2 = Mat::Zero(rc1 + rc2, 2 * rs);
    f2.U2 << f2.S12, f2.S13, Mat::Zero(rc2, rs), f2.S23;
    f2.V2 = Mat::Zero(rc1 + rc2, 2 * rs);
    f2.V2 << f2.St11, Mat::Zero(rc1, rs), f2.St21, f2.St22;
    out.Xcal1 = SymMat(X);
    out.Pcal = SymMat(P);
    out.factors.Xcal1 = out.Xcal1;

    const Mat Xt[2] = {f1.X1, f2.X2().transpose()};
    const Mat Ut[2] = {f1.U1.transpose(), f2.U2.transpose()};
    const Mat Y[2] = {f1.Y1, f2.Y2()};
    const Mat V[2] = {f1.V1, f2.V2};
    Mat Kt[2][2], L[2], M[2];
    for (int i = 0; i < 2; ++i) {
        L[i] = Ut[i] * K.Bc(i + 1);
        M[i] = K.Cc(i + 1) * V[i];
        for (int j = 0; j < 2; ++j) {
            Kt[i][j] = Xt[i] * Pl.A(i + 1, j + 1) * Y[j] + Ut[i] * K.Ac(i + 1, j + 1) * V[j] +
                       Ut[i] * K.Bc(i + 1) * Pl.C(j + 1) * Y[j] + Xt[i] * Pl.B(i + 1) * K.Cc(j + 1) * V[j];
        }
    }

    SynthesisSolution& s = out.solution;
    s.dims = Pl.dims;
    s.X1 = f1.X1;
    s.Y1 = f1.Y1;
    s.Q2 = f2.Q2;
    s.Q3 = f2.Q3;
    s.Qt1 = f2.Qt1;
    s.Z = sym(Z);
    s.gamma = gamma;
    s.gamma_opt = gamma;
    TransformedBlocks& b = s.Kbar;
    b.K11 = Kt[0][0];
    b.K12 = Kt[0][1].leftCols(rs);
    b.K13 = Kt[0][1].rightCols(rs);
    b.L1 = L[0];
    b.K21 = Kt[1][0].topRows(rs);
    b.K31 = Kt[1][0].bottomRows(rs);
    b.K22 = Kt[1][1].topLeftCorner(rs, rs);
    b.K32 = Kt[1][1].bottomLeftCorner(rs, rs);
    b.K33 = Kt[1][1].bottomRightCorner(rs, rs);
    b.L3 = L[1].bottomRows(rs);
    b.M1 = M[0];
    b.M2 = M[1].leftCols(rs);

    out.structure_residual = std::max({max_abs(Kt[1][1].topRightCorner(rs, rs) - f2.Q2 * Pl.A(2, 2)),
                                       max_abs(L[1].topRows(rs)), max_abs(M[1].rightCols(rs))});
    return out;
}

}  // namespace liftsched
