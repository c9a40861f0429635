#include "liftsched/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace liftsched {

namespace {

Mat eye(Index n) { return Mat::Identity(n, n); }

AffineMat hcat(const std::vector<AffineMat>& parts) {
    std::vector<Index> widths;
    for (const auto& p : parts) widths.push_back(p.cols());
    return assemble({parts}, BlockSpec{parts.front().rows()}, BlockSpec(widths));
}

AffineMat vcat(const std::vector<AffineMat>& parts) {
    std::vector<std::vector<AffineMat>> grid;
    std::vector<Index> heights;
    for (const auto& p : parts) {
        grid.push_back({p});
        heights.push_back(p.rows());
    }
    return assemble(grid, BlockSpec(heights), BlockSpec{parts.front().cols()});
}

// Symbolic counterparts of X_i^T, Y_j and the composite K, L, M blocks.
struct Symbolic {
    const LiftedPlantLfr& Pl;
    const SynthesisVariables& v;

    [[nodiscard]] Index ns() const { return Pl.dims.ns; }
    [[nodiscard]] Index rs() const { return Pl.r_s(); }

    [[nodiscard]] AffineMat Xt(int i) const {
        if (i == 1) return v.X1.expr();
        return vcat({v.Q2.expr(), v.Q3.expr()});
    }
    [[nodiscard]] AffineMat Y(int j) const {
        if (j == 1) return v.Y1.expr();
        return hcat({v.Qt1.expr(), AffineMat(eye(rs()))});
    }
    [[nodiscard]] AffineMat K(int i, int j) const {
        if (i == 1 && j == 1) return v.K11.expr();
        if (i == 1) return hcat({v.K12.expr(), v.K13.expr()});
        if (j == 1) return vcat({v.K21.expr(), v.K31.expr()});
        const AffineMat pin = v.Q2.expr() * Pl.A(2, 2);
        return assemble({{v.K22.expr(), pin}, {v.K32.expr(), v.K33.expr()}}, BlockSpec{rs(), rs()},
                        BlockSpec{rs(), rs()});
    }
    [[nodiscard]] AffineMat L(int i) const {
        if (i == 1) return v.L1.expr();
        return vcat({AffineMat(Mat::Zero(rs(), Pl.dims.k)), v.L3.expr()});
    }
    [[nodiscard]] AffineMat M(int j) const {
        if (j == 1) return v.M1.expr();
        return hcat({v.M2.expr(), AffineMat(Mat::Zero(Pl.dims.m, rs()))});
    }

    [[nodiscard]] AffineMat A(int i, int j) const {
        const Mat& Aij = Pl.A(i, j);
        const AffineMat tl = Aij * Y(j) + Pl.B(i) * M(j);
        const AffineMat br = Xt(i) * Aij + L(i) * Pl.C(j);
        return assemble({{tl, AffineMat(Aij)}, {K(i, j), br}}, BlockSpec{tl.rows(), br.rows()},
                        BlockSpec{tl.cols(), Aij.cols()});
    }
    [[nodiscard]] AffineMat B(int i) const {
        const Mat& Bp = Pl.Bp(i);
        return vcat({AffineMat(Bp), Xt(i) * Bp + L(i) * Pl.lfr.D2});
    }
    [[nodiscard]] AffineMat C(int j) const {
        const Mat& Cp = Pl.Cp(j);
        return hcat({Cp * Y(j) + Pl.lfr.D1 * M(j), AffineMat(Cp)});
    }
};

Mat symmetric_part(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Matrices whose singularity makes the completed scaling ill-conditioned: Q3 - Q2 and [Q2 I; I Qt1].
struct Gap {
    std::string name;
    AffineMat expr;
    Mat value;
};

std::vector<Gap> scaling_gaps(const SynthesisVariables& v, const SynthesisSolution& s) {
    const Index rs = s.r_s();
    const AffineMat I = AffineMat(eye(rs));
    Mat H(2 * rs, 2 * rs);
    H << s.Q2, eye(rs), eye(rs), s.Qt1;
    return {{"Q3 - Q2", v.Q3.expr() - v.Q2.expr(), s.Q3 - s.Q2},
            {"[Q2 I; I Qt1]", assemble({{v.Q2.expr(), I}, {I, v.Qt1.expr()}}, BlockSpec{rs, rs}, BlockSpec{rs, rs}), H}};
}

// Smallest singular value relative to max(1, largest).
double relative_gap(const Mat& m) {
    if (m.size() == 0) return 1.0;
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Mat>(symmetric_part(m)).eigenvalues().cwiseAbs();
    return ev.minCoeff() / std::max(1.0, ev.maxCoeff());
}

// Pins the current inertia: the negative eigenspace block stays below -tau and the positive one above tau,
// which bounds every singular value below by tau.
// tau_var < 0 uses the constant tau, otherwise the scalar variable tau_var.
void pin_inertia(LmiProblem& lmi, const Gap& g, double tau, Index tau_var = -1) {
    const auto tau_eye = [&](Index k) {
        if (tau_var < 0) return AffineMat(tau * eye(k));
        AffineMat t(k, k);
        t.add_term(tau_var, eye(k));
        return t;
    };
    const Eigen::SelfAdjointEigenSolver<Mat> es(symmetric_part(g.value));
    std::vector<Index> neg, pos;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) (es.eigenvalues()(i) < 0 ? neg : pos).push_back(i);
    const auto basis = [&](const std::vector<Index>& idx) {
        Mat W(g.value.rows(), static_cast<Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) W.col(static_cast<Index>(j)) = es.eigenvectors().col(idx[j]);
        return W;
    };
    if (!neg.empty()) {
        const Mat W = basis(neg);
        lmi.add_constraint(g.name + ":negative", W.transpose() * g.expr * W + tau_eye(W.cols()),
                           "conditioning", 0.0);
    }
    if (!pos.empty()) {
        const Mat W = basis(pos);
        lmi.add_constraint(g.name + ":positive", tau_eye(W.cols()) - W.transpose() * g.expr * W,
                           "conditioning", 0.0);
    }
}

void require_supported(const LiftedPlantLfr& Pl) {
    if (max_abs(Pl.lfr.Dp) != 0.0) throw DimensionError("synthesis: performance feedthrough D_p must vanish");
    if (max_abs(Pl.lfr.D3) != 0.0) throw DimensionError("synthesis: control-to-measurement feedthrough must vanish");
}

}  // namespace

Mat SynthesisSolution::X(int i) const {
    if (i == 1) return X1;
    Mat out(Q2.rows(), 2 * Q2.cols());
    out << Q2, Q3;
    return out;
}

Mat SynthesisSolution::Y(int j) const {
    if (j == 1) return Y1;
    const Index rs = Qt1.rows();
    Mat out(rs, 2 * rs);
    out << Qt1, eye(rs);
    return out;
}

Mat SynthesisSolution::K(int i, int j, const LiftedPlantLfr& Pl) const {
    const TransformedBlocks& b = Kbar;
    if (i == 1 && j == 1) return b.K11;
    if (i == 1) {
        Mat out(b.K12.rows(), b.K12.cols() + b.K13.cols());
        out << b.K12, b.K13;
        return out;
    }
    if (j == 1) {
        Mat out(b.K21.rows() + b.K31.rows(), b.K21.cols());
        out << b.K21, b.K31;
        return out;
    }
    const Index rs = r_s();
    Mat out(2 * rs, 2 * rs);
    out << b.K22, Q2 * Pl.A(2, 2), b.K32, b.K33;
    return out;
}

Mat SynthesisSolution::L(int i) const {
    if (i == 1) return Kbar.L1;
    Mat out(2 * r_s(), Kbar.L3.cols());
    out << Mat::Zero(r_s(), Kbar.L3.cols()), Kbar.L3;
    return out;
}

Mat SynthesisSolution::M(int j) const {
    if (j == 1) return Kbar.M1;
    Mat out(Kbar.M2.rows(), 2 * r_s());
    out << Kbar.M2, Mat::Zero(Kbar.M2.rows(), r_s());
    return out;
}

Mat SynthesisSolution::Xbold() const {
    const Index n = X1.rows();
    Mat out(2 * n, 2 * n);
    out << Y1, eye(n), eye(n), X1;
    return out;
}

Index synthesis_variable_count(const PlantPartition& d) {
    const Index ns = d.ns, rs = d.r_s(), m = d.m, k = d.k, p = d.p;
    const auto sym = [](Index n) { return n * (n + 1) / 2; };
    return 2 * sym(ns) + 3 * sym(rs) + ns * ns + 2 * ns * rs + ns * k + 2 * rs * ns + 3 * rs * rs + rs * k +
           m * ns + m * rs + sym(p) + 1;
}

SynthesisProblem assemble(const LiftedPlantLfr& Pl, const ValueSet& vs, const std::optional<ScalingMask>& mask,
                          double eps_strict) {
    require_supported(Pl);
    const PlantPartition& d = Pl.dims;
    const Index ns = d.ns, rs = d.r_s(), m = d.m, k = d.k, p = d.p, q = d.q;
    if (vs.u_hat != d.u_hat() || vs.v_hat != d.v_hat()) throw DimensionError("synthesis: value set shape mismatch");
    if (mask) {
        const std::string problem = mask_problem(*mask, rs);
        if (!problem.empty()) throw DimensionError("synthesis: " + problem);
    }

    SynthesisProblem sp{LmiProblem(eps_strict), {}};
    LmiProblem& lmi = sp.lmi;
    SynthesisVariables& v = sp.vars;
    const auto sym = VarKind::Symmetric;
    const auto rect = VarKind::Rectangular;
    v.X1 = lmi.add_matrix_variable("X1", ns, ns, sym);
    v.Y1 = lmi.add_matrix_variable("Y1", ns, ns, sym);
    v.Q2 = lmi.add_matrix_variable("Q2", rs, rs, sym, mask ? std::optional<BoolMat>(mask->Q2) : std::nullopt);
    v.Q3 = lmi.add_matrix_variable("Q3", rs, rs, sym, mask ? std::optional<BoolMat>(mask->Q3) : std::nullopt);
    v.Qt1 = lmi.add_matrix_variable("Qt1", rs, rs, sym, mask ? std::optional<BoolMat>(mask->Qt1) : std::nullopt);
    v.K11 = lmi.add_matrix_variable("K11", ns, ns, rect);
    v.K12 = lmi.add_matrix_variable("K12", ns, rs, rect);
    v.K13 = lmi.add_matrix_variable("K13", ns, rs, rect);
    v.L1 = lmi.add_matrix_variable("L1", ns, k, rect);
    v.K21 = lmi.add_matrix_variable("K21", rs, ns, rect);
    v.K22 = lmi.add_matrix_variable("K22", rs, rs, rect);
    v.K31 = lmi.add_matrix_variable("K31", rs, ns, rect);
    v.K32 = lmi.add_matrix_variable("K32", rs, rs, rect);
    v.K33 = lmi.add_matrix_variable("K33", rs, rs, rect);
    v.L3 = lmi.add_matrix_variable("L3", rs, k, rect);
    v.M1 = lmi.add_matrix_variable("M1", m, ns, rect);
    v.M2 = lmi.add_matrix_variable("M2", m, rs, rect);
    v.Z = lmi.add_matrix_variable("Z", p, p, sym);
    v.gamma = lmi.add_scalar_variable("gamma");

    const Symbolic s{Pl, v};
    const AffineMat A11 = s.A(1, 1), A12 = s.A(1, 2), A21 = s.A(2, 1), A22 = s.A(2, 2);
    const AffineMat B1 = s.B(1), B2 = s.B(2), C1 = s.C(1), C2 = s.C(2);
    const Index n1 = 2 * ns, n2 = 3 * rs;

    const AffineMat Xb = assemble({{v.Y1.expr(), AffineMat(eye(ns))}, {AffineMat(eye(ns)), v.X1.expr()}},
                                  BlockSpec{ns, ns}, BlockSpec{ns, ns});

    // Output-energy inequality, Schur-linearized in Z.
    const AffineMat Phi = assemble({{-Xb, A21.transpose()}, {A21, he(A22)}}, BlockSpec{n1, n2}, BlockSpec{n1, n2});
    lmi.add_constraint("output", schur_linearize(Phi, hcat({C1, C2}), v.Z.expr()), "main");

    // Dissipation inequality.
    const AffineMat G = assemble({{A11, A12, B1}, {A21, A22, B2}, {AffineMat(), AffineMat(), AffineMat()}},
                                 BlockSpec{n1, n2, q}, BlockSpec{n1, n2, q});
    AffineMat perf = he(G);
    for (Index i = 0; i < q; ++i) perf -= AffineMat::variable(n1 + n2 + q, n1 + n2 + q, v.gamma, n1 + n2 + i, n1 + n2 + i);
    lmi.add_constraint("dissipation", perf, "main");

    // Scaling classes: condition sign * outer^T Q outer > 0 becomes -sign * outer^T Q outer < 0.
    const auto add_class = [&](const MatrixVar& Q, const std::vector<VertexBlock>& blocks, const std::string& tag,
                               const std::string& family) {
        for (const auto& b : blocks) {
            const AffineMat F = -b.sign * (Mat(b.outer.transpose()) * Q.expr() * b.outer);
            lmi.add_constraint(tag + ":" + b.label, F, family);
        }
    };
    add_class(v.Q2, vertex_constraints_primal(vs), "Q2", "primal");
    add_class(v.Q3, vertex_constraints_primal(vs), "Q3", "primal");
    add_class(v.Qt1, vertex_constraints_dual(vs), "Qt1", "dual");

    lmi.add_constraint("coupling", -Xb, "coupling");
    lmi.add_constraint("Z", -v.Z.expr(), "energy");
    lmi.add_constraint("trace", trace_of(v.Z.expr()) - AffineMat(Mat::Ones(1, 1)), "energy", eps_strict);

    lmi.set_objective(v.gamma, 1.0);
    return sp;
}

SynthesisSolution extract_solution(const SynthesisProblem& sp, const LiftedPlantLfr& Pl, const Vec& x) {
    const SynthesisVariables& v = sp.vars;
    SynthesisSolution s;
    s.dims = Pl.dims;
    s.X1 = v.X1.value(x);
    s.Y1 = v.Y1.value(x);
    s.Q2 = v.Q2.value(x);
    s.Q3 = v.Q3.value(x);
    s.Qt1 = v.Qt1.value(x);
    TransformedBlocks& b = s.Kbar;
    b.K11 = v.K11.value(x);
    b.K12 = v.K12.value(x);
    b.K13 = v.K13.value(x);
    b.L1 = v.L1.value(x);
    b.K21 = v.K21.value(x);
    b.K22 = v.K22.value(x);
    b.K31 = v.K31.value(x);
    b.K32 = v.K32.value(x);
    b.K33 = v.K33.value(x);
    b.L3 = v.L3.value(x);
    b.M1 = v.M1.value(x);
    b.M2 = v.M2.value(x);
    s.Z = v.Z.value(x);
    s.gamma = x(v.gamma);
    s.gamma_opt = s.gamma;
    s.num_variables = sp.lmi.num_variables();
    s.num_blocks = static_cast<Index>(sp.lmi.blocks().size());
    for (const auto& blk : sp.lmi.blocks()) {
        s.block_names.push_back(blk.name);
        s.block_margins.push_back(-max_eig(SymMat(blk.evaluate(x))));
    }
    return s;
}

std::vector<SynthesisSolution> synthesize_candidates(const LiftedPlantLfr& Pl, const ValueSet& vs,
                                                     const SynthesisOptions& opts) {
    SynthesisProblem sp = assemble(Pl, vs, opts.mask, opts.eps_strict);

    SolverOptions so = opts.solver;
    SolveResult r;
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        r = solve(sp.lmi, so);
        if (r.status != SolveStatus::NumericalFailure) break;
        so.max_iter += 100;
        so.gap_tol *= 4.0;
    }
    if (r.status == SolveStatus::Infeasible) {
        std::ostringstream os;
        os << "synthesis inequalities infeasible;";
        for (const auto& f : r.certificate) os << " " << f.family << "=" << f.weight;
        throw InfeasibleError(os.str(), r.certificate);
    }
    if (r.status != SolveStatus::Optimal) throw NumericalError("synthesis: solver failed: " + r.message);

    const double gamma_opt = r.x(sp.vars.gamma);
    int iterations = r.iterations;

    struct Candidate {
        Vec x;
        double rho = 0.0;
        double slack = 0.0;
        double score = 0.0;
    };
    std::vector<Candidate> found;
    if (opts.recenter) {
        // Feasibility problems at a slightly relaxed level with every scaling and coupling variable bounded by rho.
        // Reconstruction divides margins by roughly max(1, rho)^2, which orders the candidates.
        const auto centred_problem = [&](double rho, double slack) {
            const double level = gamma_opt * (1.0 + slack) + opts.eps_strict;
            SynthesisProblem c = assemble(Pl, vs, opts.mask, opts.eps_strict);
            c.lmi.set_objective(c.vars.gamma, 0.0);
            c.lmi.add_constraint("level", c.lmi.scalar(c.vars.gamma) - AffineMat(Mat::Constant(1, 1, level)), "level",
                                 0.0);
            for (const MatrixVar* v : {&c.vars.X1, &c.vars.Y1, &c.vars.Q2, &c.vars.Q3, &c.vars.Qt1}) {
                const AffineMat bound(rho * eye(v->rows));
                c.lmi.add_constraint(v->name + " upper", v->expr() - bound, "bound", 0.0);
                c.lmi.add_constraint(v->name + " lower", -v->expr() - bound, "bound", 0.0);
            }
            return c;
        };
        const auto min_margin = [&](const Vec& xc) {
            const SynthesisSolution t = extract_solution(sp, Pl, xc);
            return *std::min_element(t.block_margins.begin(), t.block_margins.end());
        };

        double slack = opts.recenter_slack;
        for (int widen = 0; widen <= opts.recenter_widenings && found.empty(); ++widen, slack *= 10.0) {
            for (double rho : opts.recenter_bounds) {
                const SolveResult c = solve(centred_problem(rho, slack).lmi, so);
                iterations += c.iterations;
                if (c.status != SolveStatus::Optimal) continue;
                Candidate cand{c.x.head(sp.lmi.num_variables()), rho, slack, 0.0};
                cand.score = min_margin(cand.x) / std::pow(std::max(1.0, rho), 2);
                if (cand.score > 0.0) found.push_back(std::move(cand));
            }
        }
        std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        if (found.size() > static_cast<size_t>(std::max(1, opts.recenter_keep))) found.resize(std::max(1, opts.recenter_keep));

        for (Candidate& cand : found) {
            const SynthesisSolution current = extract_solution(sp, Pl, cand.x);
            std::vector<Gap> weak;
            for (Gap& g : scaling_gaps(sp.vars, current)) {
                if (relative_gap(g.value) < opts.conditioning_target) weak.push_back(std::move(g));
            }
            if (weak.empty()) continue;
            // Largest inertia-preserving gap, capped at one, then a re-centred point at half of it.
            SynthesisProblem widest = centred_problem(cand.rho, cand.slack);
            const Index tau = widest.lmi.add_scalar_variable("tau");
            widest.lmi.set_objective(tau, -1.0);
            widest.lmi.add_constraint("tau cap", widest.lmi.scalar(tau) - AffineMat(Mat::Constant(1, 1, 1.0)),
                                      "conditioning", 0.0);
            for (const Gap& g : scaling_gaps(widest.vars, current)) {
                if (relative_gap(g.value) < opts.conditioning_target) pin_inertia(widest.lmi, g, 0.0, tau);
            }
            const SolveResult w = solve(widest.lmi, so);
            iterations += w.iterations;
            // Returned iterates are strictly feasible, so a positive tau is usable even without convergence.
            if (w.status == SolveStatus::Infeasible || w.x.size() == 0 || !(w.x(tau) > 0.0)) continue;
            SynthesisProblem refined = centred_problem(cand.rho, cand.slack);
            for (const Gap& g : scaling_gaps(refined.vars, current)) {
                if (relative_gap(g.value) < opts.conditioning_target) pin_inertia(refined.lmi, g, 0.5 * w.x(tau));
            }
            const SolveResult rr = solve(refined.lmi, so);
            iterations += rr.iterations;
            if (rr.status == SolveStatus::Optimal) cand.x = rr.x.head(sp.lmi.num_variables());
        }
    }
    if (found.empty()) found.push_back(Candidate{r.x, 0.0, 0.0, 0.0});

    std::vector<SynthesisSolution> out;
    for (const Candidate& cand : found) {
        SynthesisSolution s = extract_solution(sp, Pl, cand.x);
        s.gamma_opt = gamma_opt;
        s.iterations = iterations;
        s.q2_class = check_primal(SymMat(s.Q2), vs);
        s.q3_class = check_primal(SymMat(s.Q3), vs);
        s.qt1_class = check_dual(SymMat(s.Qt1), vs);
        const double worst = *std::min_element(s.block_margins.begin(), s.block_margins.end());
        if (worst > 0.0) out.push_back(std::move(s));
    }
    if (out.empty()) throw NumericalError("synthesis: no returned point satisfies every constraint strictly");
    return out;
}

SynthesisSolution synthesize(const LiftedPlantLfr& Pl, const ValueSet& vs, const SynthesisOptions& opts) {
    return synthesize_candidates(Pl, vs, opts).front();
}

LfrBlocks transformed_blocks(const LiftedPlantLfr& Pl, const SynthesisSolution& s) {
    LfrBlocks b;
    Mat* Aout[2][2] = {{&b.A11, &b.A12}, {&b.A21, &b.A22}};
    for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
            const Mat& Aij = Pl.A(i, j);
            const Mat Xt = s.X(i).transpose();
            const Mat Yj = s.Y(j);
            const Mat tl = Aij * Yj + Pl.B(i) * s.M(j);
            const Mat br = Xt * Aij + s.L(i) * Pl.C(j);
            Mat out(tl.rows() + br.rows(), tl.cols() + Aij.cols());
            out << tl, Aij, s.K(i, j, Pl), br;
            *Aout[i - 1][j - 1] = out;
        }
    }
    Mat* Bout[2] = {&b.B1, &b.B2};
    Mat* Cout[2] = {&b.C1, &b.C2};
    for (int i = 1; i <= 2; ++i) {
        const Mat& Bp = Pl.Bp(i);
        const Mat lower = s.X(i).transpose() * Bp + s.L(i) * Pl.lfr.D2;
        Mat out(Bp.rows() + lower.rows(), Bp.cols());
        out << Bp, lower;
        *Bout[i - 1] = out;
        const Mat& Cp = Pl.Cp(i);
        const Mat left = Cp * s.Y(i) + Pl.lfr.D1 * s.M(i);
        Mat c(Cp.rows(), left.cols() + Cp.cols());
        c << left, Cp;
        *Cout[i - 1] = c;
    }
    b.D = Pl.lfr.Dp;
    return b;
}

double SynthesisLmiReport::min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : margins) m = std::min(m, v);
    return m;
}

SynthesisLmiReport evaluate_synthesis_lmis(const LiftedPlantLfr& Pl, const ValueSet& vs, const SynthesisSolution& s,
                                           double gamma) {
    SynthesisLmiReport r;
    const auto add = [&](const std::string& label, double margin) {
        r.labels.push_back(label);
        r.margins.push_back(margin);
    };
    const LfrBlocks b = transformed_blocks(Pl, s);
    const Index n1 = b.A11.rows(), n2 = b.A22.rows(), p = Pl.dims.p, q = Pl.dims.q;
    Mat swap1 = Mat::Zero(2 * n1, 2 * n1), swap2 = Mat::Zero(2 * n2, 2 * n2);
    swap1.topRightCorner(n1, n1) = eye(n1);
    swap1.bottomLeftCorner(n1, n1) = eye(n1);
    swap2.topRightCorner(n2, n2) = eye(n2);
    swap2.bottomLeftCorner(n2, n2) = eye(n2);

    const Mat Xb = s.Xbold();
    add("coupling", min_eig(SymMat(Xb)));
    add("Z", min_eig(SymMat(s.Z)));
    add("trace", 1.0 - s.Z.trace());

    const double zmin = min_eig(SymMat(s.Z));
    if (zmin > 0.0) {
        Mat Xslot = Mat::Zero(2 * n1, 2 * n1);
        Xslot.topLeftCorner(n1, n1) = -Xb;
        Mat Sz = Mat::Zero(q + p, q + p);
        Sz.bottomRightCorner(p, p) = s.Z.inverse();
        add("output", -max_eig(l_sub_form(SymMat(Xslot), SymMat(swap2), SymMat(Sz), b)));
    } else {
        add("output", -std::numeric_limits<double>::infinity());
    }
    Mat Sg = Mat::Zero(q + p, q + p);
    Sg.topLeftCorner(q, q) = -gamma * eye(q);
    add("dissipation", -max_eig(l_form(SymMat(swap1), SymMat(swap2), SymMat(Sg), b)));

    const auto add_report = [&](const std::string& tag, const MarginReport& m) {
        for (size_t i = 0; i < m.conditions.size(); ++i) add(tag + ":" + m.labels[i], m.conditions[i]);
    };
    add_report("Q2", check_primal(SymMat(s.Q2), vs));
    add_report("Q3", check_primal(SymMat(s.Q3), vs));
    add_report("Qt1", check_dual(SymMat(s.Qt1), vs));
    return r;
}

}  // namespace liftsched
