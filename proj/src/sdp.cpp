#include "liftsched/sdp.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <sstream>

namespace liftsched {

// ---------------------------------------------------------------------------
// AffineMat

AffineMat::AffineMat(Index rows, Index cols) : c_(Mat::Zero(rows, cols)) {}

AffineMat::AffineMat(const Mat& constant) : c_(constant) {}

AffineMat AffineMat::variable(Index rows, Index cols, Index var, Index r, Index c, double scale) {
    AffineMat a(rows, cols);
    Mat e = Mat::Zero(rows, cols);
    e(r, c) = scale;
    a.terms_.emplace(var, std::move(e));
    return a;
}

void AffineMat::add_term(Index var, const Mat& coef) {
    if (coef.rows() != rows() || coef.cols() != cols()) throw DimensionError("AffineMat: coefficient shape mismatch");
    auto it = terms_.find(var);
    if (it == terms_.end()) {
        terms_.emplace(var, coef);
    } else {
        it->second += coef;
    }
}

Mat AffineMat::evaluate(const Vec& x) const {
    Mat out = c_;
    for (const auto& [k, m] : terms_) out += x(k) * m;
    return out;
}

AffineMat AffineMat::transpose() const {
    AffineMat out(Mat(c_.transpose()));
    for (const auto& [k, m] : terms_) out.terms_.emplace(k, m.transpose());
    return out;
}

AffineMat AffineMat::block(Index r0, Index c0, Index r, Index c) const {
    AffineMat out(Mat(c_.block(r0, c0, r, c)));
    for (const auto& [k, m] : terms_) {
        Mat b = m.block(r0, c0, r, c);
        if (b.size() > 0 && b.cwiseAbs().maxCoeff() != 0.0) out.terms_.emplace(k, std::move(b));
    }
    return out;
}

AffineMat& AffineMat::operator+=(const AffineMat& o) {
    if (o.rows() != rows() || o.cols() != cols()) throw DimensionError("AffineMat: sum of mismatched shapes");
    c_ += o.c_;
    for (const auto& [k, m] : o.terms_) add_term(k, m);
    return *this;
}

AffineMat& AffineMat::operator-=(const AffineMat& o) {
    if (o.rows() != rows() || o.cols() != cols()) throw DimensionError("AffineMat: difference of mismatched shapes");
    c_ -= o.c_;
    for (const auto& [k, m] : o.terms_) add_term(k, -m);
    return *this;
}

AffineMat& AffineMat::operator*=(double s) {
    c_ *= s;
    for (auto& [k, m] : terms_) m *= s;
    return *this;
}

AffineMat operator*(const Mat& L, const AffineMat& a) {
    if (L.cols() != a.rows()) throw DimensionError("AffineMat: left product shape mismatch");
    AffineMat out(Mat(L * a.c_));
    for (const auto& [k, m] : a.terms_) out.terms_.emplace(k, L * m);
    return out;
}

AffineMat operator*(const AffineMat& a, const Mat& R) {
    if (a.cols() != R.rows()) throw DimensionError("AffineMat: right product shape mismatch");
    AffineMat out(Mat(a.c_ * R));
    for (const auto& [k, m] : a.terms_) out.terms_.emplace(k, m * R);
    return out;
}

AffineMat assemble(const std::vector<std::vector<AffineMat>>& grid, const BlockSpec& rows, const BlockSpec& cols) {
    if (static_cast<Index>(grid.size()) != rows.count()) throw DimensionError("assemble: row count mismatch");
    AffineMat out(rows.total(), cols.total());
    for (Index i = 0; i < rows.count(); ++i) {
        const auto& row = grid[static_cast<size_t>(i)];
        if (static_cast<Index>(row.size()) != cols.count()) throw DimensionError("assemble: column count mismatch");
        for (Index j = 0; j < cols.count(); ++j) {
            const AffineMat& b = row[static_cast<size_t>(j)];
            if (b.rows() == 0 && b.cols() == 0) continue;
            if (b.rows() != rows.size(i) || b.cols() != cols.size(j)) {
                std::ostringstream os;
                os << "assemble: block (" << i << "," << j << ") is " << b.rows() << "x" << b.cols() << ", expected "
                   << rows.size(i) << "x" << cols.size(j);
                throw DimensionError(os.str());
            }
            // Embed through selector products to keep the representation uniform.
            Mat Lsel = Mat::Zero(rows.total(), b.rows());
            Lsel.block(rows.offset(i), 0, b.rows(), b.rows()).setIdentity();
            Mat Rsel = Mat::Zero(b.cols(), cols.total());
            Rsel.block(0, cols.offset(j), b.cols(), b.cols()).setIdentity();
            out += Lsel * b * Rsel;
        }
    }
    return out;
}

AffineMat he(const AffineMat& a) {
    if (a.rows() != a.cols()) throw DimensionError("he: affine matrix is not square");
    return a + a.transpose();
}

AffineMat trace_of(const AffineMat& a) {
    if (a.rows() != a.cols()) throw DimensionError("trace_of: affine matrix is not square");
    AffineMat out(Mat::Constant(1, 1, a.constant().trace()));
    for (const auto& [k, m] : a.terms()) out.add_term(k, Mat::Constant(1, 1, m.trace()));
    return out;
}

// ---------------------------------------------------------------------------
// Variables and problem

AffineMat MatrixVar::expr() const {
    AffineMat out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            const int id = ids(i, j);
            if (id < 0) continue;
            if (kind == VarKind::Symmetric && j < i) continue;
            Mat e = Mat::Zero(rows, cols);
            e(i, j) = 1.0;
            if (kind == VarKind::Symmetric) e(j, i) = 1.0;
            out.add_term(id, e);
        }
    }
    return out;
}

Mat MatrixVar::value(const Vec& x) const {
    Mat out = Mat::Zero(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            if (ids(i, j) >= 0) out(i, j) = x(ids(i, j));
        }
    }
    return out;
}

Index MatrixVar::count() const {
    Index n = 0;
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            if (ids(i, j) >= 0 && (kind == VarKind::Rectangular || j >= i)) ++n;
        }
    }
    return n;
}

Mat LmiBlock::evaluate(const Vec& x) const {
    Mat out = F0;
    for (const auto& [k, m] : F) out += x(k) * m;
    return out;
}

MatrixVar LmiProblem::add_matrix_variable(const std::string& name, Index rows, Index cols, VarKind kind,
                                          const std::optional<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>>& mask) {
    if (taken_.count(name)) throw std::invalid_argument("add_matrix_variable: duplicate name " + name);
    if (kind == VarKind::Symmetric && rows != cols) throw DimensionError("add_matrix_variable: symmetric must be square");
    if (mask && (mask->rows() != rows || mask->cols() != cols)) throw DimensionError("add_matrix_variable: mask shape");
    taken_[name] = true;
    MatrixVar v{name, rows, cols, kind, Eigen::MatrixXi::Constant(rows, cols, -1)};
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            if (kind == VarKind::Symmetric && j < i) continue;
            if (mask && (*mask)(i, j)) continue;
            const Index id = static_cast<Index>(names_.size());
            names_.push_back(name + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
            v.ids(i, j) = static_cast<int>(id);
            if (kind == VarKind::Symmetric) v.ids(j, i) = static_cast<int>(id);
        }
    }
    Vec c = Vec::Zero(static_cast<Index>(names_.size()));
    c.head(c_.size()) = c_;
    c_ = c;
    return v;
}

Index LmiProblem::add_scalar_variable(const std::string& name) {
    if (taken_.count(name)) throw std::invalid_argument("add_scalar_variable: duplicate name " + name);
    taken_[name] = true;
    names_.push_back(name);
    Vec c = Vec::Zero(static_cast<Index>(names_.size()));
    c.head(c_.size()) = c_;
    c_ = c;
    return static_cast<Index>(names_.size()) - 1;
}

AffineMat LmiProblem::scalar(Index var) const { return AffineMat::variable(1, 1, var, 0, 0); }

void LmiProblem::add_constraint(const std::string& name, const AffineMat& F, const std::string& family,
                                std::optional<double> epsilon) {
    if (F.rows() != F.cols()) throw DimensionError("add_constraint: block " + name + " is not square");
    auto symmetric_part = [&](const Mat& m) {
        const double asym = max_abs(m - m.transpose());
        if (asym > 1e-9 * (1.0 + max_abs(m))) {
            throw DimensionError("add_constraint: block " + name + " is not symmetric");
        }
        return Mat(0.5 * (m + m.transpose()));
    };
    LmiBlock b;
    b.name = name;
    b.family = family.empty() ? name : family;
    b.F0 = symmetric_part(F.constant());
    for (const auto& [k, m] : F.terms()) {
        if (k < 0 || k >= num_variables()) throw std::out_of_range("add_constraint: unknown variable");
        Mat s = symmetric_part(m);
        if (max_abs(s) != 0.0) b.F.emplace_back(k, std::move(s));
    }
    b.epsilon = epsilon ? *epsilon : eps_strict_ * (1.0 + max_abs(b.F0));
    blocks_.push_back(std::move(b));
}

void LmiProblem::set_objective(Index var, double coef) {
    if (var < 0 || var >= num_variables()) throw std::out_of_range("set_objective: unknown variable");
    c_(var) = coef;
}

std::string LmiProblem::dump_json() const {
    using nlohmann::json;
    auto dense = [](const Mat& m) {
        json rows = json::array();
        for (Index i = 0; i < m.rows(); ++i) {
            json r = json::array();
            for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
            rows.push_back(r);
        }
        return rows;
    };
    json doc;
    doc["format"] = "liftsched-lmi-1";
    doc["sense"] = "minimize c^T x subject to F0 + sum_k x_k F_k <= -epsilon I per block";
    doc["variables"] = names_;
    doc["objective"] = std::vector<double>(c_.data(), c_.data() + c_.size());
    json blocks = json::array();
    for (const auto& b : blocks_) {
        json jb;
        jb["name"] = b.name;
        jb["family"] = b.family;
        jb["dim"] = b.dim();
        jb["epsilon"] = b.epsilon;
        jb["F0"] = dense(b.F0);
        json terms = json::array();
        for (const auto& [k, m] : b.F) terms.push_back({{"var", k}, {"F", dense(m)}});
        jb["F"] = terms;
        blocks.push_back(jb);
    }
    doc["blocks"] = blocks;
    return doc.dump(1);
}

AffineMat schur_linearize(const AffineMat& Phi, const AffineMat& C, const AffineMat& Z) {
    if (Phi.rows() != Phi.cols() || Z.rows() != Z.cols() || C.cols() != Phi.rows() || C.rows() != Z.rows()) {
        throw DimensionError("schur_linearize: incompatible dimensions");
    }
    const BlockSpec spec{Phi.rows(), Z.rows()};
    return assemble({{Phi, C.transpose()}, {C, -Z}}, spec, spec);
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Primal-dual interior point method on the standard pair
//   (P) min <C, X>  s.t. <A_k, X> = b_k, X >= 0
//   (D) max b^T y   s.t. S = C - sum_k y_k A_k >= 0
// The LMI decision vector is y; the dual iterate stays strictly feasible throughout.

namespace {

struct Entry {
    int r, c;
    double v;
};

struct SparseSym {
    std::vector<Entry> entries;  // both triangles
    std::vector<int> rows;       // rows holding a nonzero
};

struct SdpBlock {
    int n = 0;
    Mat C;
    std::vector<std::pair<int, SparseSym>> A;  // variable index, coefficient
    std::string family;
};

struct Sdpa {
    std::vector<SdpBlock> blocks;
    Vec b;
    [[nodiscard]] int m() const { return static_cast<int>(b.size()); }
};

SparseSym to_sparse(const Mat& m) {
    SparseSym s;
    std::vector<char> used(static_cast<size_t>(m.rows()), 0);
    for (int j = 0; j < m.cols(); ++j) {
        for (int i = 0; i < m.rows(); ++i) {
            if (m(i, j) != 0.0) {
                s.entries.push_back({i, j, m(i, j)});
                used[static_cast<size_t>(i)] = 1;
            }
        }
    }
    for (int i = 0; i < static_cast<int>(m.rows()); ++i) {
        if (used[static_cast<size_t>(i)]) s.rows.push_back(i);
    }
    return s;
}

Mat adjoint_op(const SdpBlock& blk, const Vec& y) {
    Mat out = Mat::Zero(blk.n, blk.n);
    for (const auto& [k, a] : blk.A) {
        const double yk = y(k);
        if (yk == 0.0) continue;
        for (const auto& e : a.entries) out(e.r, e.c) += yk * e.v;
    }
    return out;
}

void forward_op(const SdpBlock& blk, const Mat& W, Vec& out) {
    for (const auto& [k, a] : blk.A) {
        double s = 0.0;
        for (const auto& e : a.entries) s += e.v * W(e.r, e.c);
        out(k) += s;
    }
}

Vec forward_all(const Sdpa& P, const std::vector<Mat>& W) {
    Vec out = Vec::Zero(P.m());
    for (size_t b = 0; b < P.blocks.size(); ++b) forward_op(P.blocks[b], W[b], out);
    return out;
}

double inner(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

// Largest alpha with M + alpha*D >= 0 (M positive definite); +inf if unbounded.
double max_step(const Mat& M, const Mat& D) {
    if (M.rows() == 0) return std::numeric_limits<double>::infinity();
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success) return 0.0;
    const Mat Linv = llt.matrixL().solve(Mat::Identity(M.rows(), M.cols()));
    const Mat T = Linv * D * Linv.transpose();
    const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (T + T.transpose()), Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

constexpr size_t kStallWindow = 5;
constexpr double kStallFeasTol = 1e-5;

struct IpmResult {
    enum class Stop { Converged, Stalled, Predicate, MaxIter, Failure } stop = Stop::Failure;
    Vec y;
    std::vector<Mat> X;
    double pobj = 0.0, dobj = 0.0, pinf = 0.0, rel_gap = 0.0;
    int iterations = 0;
    std::string message;
};

struct IterInfo {
    const Vec& y;
    double pobj, dobj, pinf, rel_gap;
};

IpmResult run_ipm(const Sdpa& P, const Vec& y0, const SolverOptions& opts,
                  const std::function<bool(const IterInfo&)>& stop_early) {
    const int m = P.m();
    const size_t nb = P.blocks.size();
    IpmResult res;
    Vec y = y0;
    std::vector<Mat> X(nb), S(nb), Sinv(nb);
    double total_dim = 0.0;
    double xi = 1.0;
    for (int k = 0; k < m; ++k) xi = std::max(xi, 1.0 + std::abs(P.b(k)));
    for (size_t b = 0; b < nb; ++b) {
        const int n = P.blocks[b].n;
        total_dim += n;
        X[b] = xi * Mat::Identity(n, n);
        S[b] = P.blocks[b].C - adjoint_op(P.blocks[b], y);
    }
    const double bnorm = P.b.norm();
    std::vector<double> dobj_history;

    for (int iter = 0; iter <= opts.max_iter; ++iter) {
        res.iterations = iter;
        double pobj = 0.0, xs = 0.0;
        for (size_t b = 0; b < nb; ++b) {
            Eigen::LLT<Mat> llt(S[b]);
            if (llt.info() != Eigen::Success) {
                res.stop = IpmResult::Stop::Failure;
                res.message = "dual slack lost definiteness";
                res.y = y;
                res.X = X;
                return res;
            }
            Sinv[b] = llt.solve(Mat::Identity(S[b].rows(), S[b].cols()));
            pobj += inner(P.blocks[b].C, X[b]);
            xs += inner(X[b], S[b]);
        }
        const double dobj = P.b.dot(y);
        const Vec rp = P.b - forward_all(P, X);
        const double pinf = rp.norm() / (1.0 + bnorm);
        const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        res.y = y;
        res.X = X;
        res.pobj = pobj;
        res.dobj = dobj;
        res.pinf = pinf;
        res.rel_gap = rel_gap;
        if (stop_early && stop_early(IterInfo{y, pobj, dobj, pinf, rel_gap})) {
            res.stop = IpmResult::Stop::Predicate;
            return res;
        }
        if (rel_gap <= opts.gap_tol && pinf <= opts.feas_tol) {
            res.stop = IpmResult::Stop::Converged;
            return res;
        }
        // When the optimum is only approached as the iterate grows, the primal residual stalls;
        // accept once complementarity is small and the dual objective has stopped moving.
        dobj_history.push_back(dobj);
        const size_t h = dobj_history.size();
        if (h > kStallWindow && xs / (1.0 + std::abs(dobj)) <= opts.gap_tol && pinf <= kStallFeasTol &&
            std::abs(dobj - dobj_history[h - 1 - kStallWindow]) <= 0.1 * opts.gap_tol * (1.0 + std::abs(dobj))) {
            res.stop = IpmResult::Stop::Stalled;
            res.message = "primal residual stalled";
            return res;
        }
        if (iter == opts.max_iter) break;
        if (!y.allFinite() || y.lpNorm<Eigen::Infinity>() > 1e12) {
            res.stop = IpmResult::Stop::Failure;
            res.message = "dual iterate diverged (objective unbounded or badly scaled)";
            return res;
        }
        const double mu = xs / total_dim;

        // Schur complement matrix M_ij = <A_i, X A_j S^{-1}>.
        Mat M = Mat::Zero(m, m);
        for (size_t b = 0; b < nb; ++b) {
            const SdpBlock& blk = P.blocks[b];
            for (const auto& [j, aj] : blk.A) {
                // G = X * A_j * S^{-1}, formed through the nonzero rows of A_j.
                const Index nr = static_cast<Index>(aj.rows.size());
                Mat T = Mat::Zero(nr, blk.n);
                std::vector<int> pos(static_cast<size_t>(blk.n), -1);
                for (Index t = 0; t < nr; ++t) pos[static_cast<size_t>(aj.rows[static_cast<size_t>(t)])] = static_cast<int>(t);
                for (const auto& e : aj.entries) T.row(pos[static_cast<size_t>(e.r)]) += e.v * Sinv[b].row(e.c);
                Mat Xr(blk.n, nr);
                for (Index t = 0; t < nr; ++t) Xr.col(t) = X[b].col(aj.rows[static_cast<size_t>(t)]);
                const Mat G = Xr * T;
                for (const auto& [i, ai] : blk.A) {
                    double s = 0.0;
                    for (const auto& e : ai.entries) s += e.v * G(e.c, e.r);
                    M(i, j) += s;
                }
            }
        }
        M = sym(M);
        Eigen::LLT<Mat> Mfac(M);
        Eigen::LDLT<Mat> Mldl;
        bool use_ldl = false;
        if (Mfac.info() != Eigen::Success) {
            Mat Mr = M;
            Mr.diagonal().array() += 1e-13 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
            Mldl.compute(Mr);
            use_ldl = true;
        }
        auto solveM = [&](const Vec& r) -> Vec { return use_ldl ? Vec(Mldl.solve(r)) : Vec(Mfac.solve(r)); };

        std::vector<Mat> Sinv_all = Sinv;
        const Vec ASinv = forward_all(P, Sinv_all);

        // Predictor.
        const Vec dy_aff = solveM(P.b);
        std::vector<Mat> dS_aff(nb), dX_aff(nb);
        double ap = std::numeric_limits<double>::infinity(), ad = ap;
        for (size_t b = 0; b < nb; ++b) {
            dS_aff[b] = -adjoint_op(P.blocks[b], dy_aff);
            dX_aff[b] = -X[b] - sym(X[b] * dS_aff[b] * Sinv[b]);
            ap = std::min(ap, max_step(X[b], dX_aff[b]));
            ad = std::min(ad, max_step(S[b], dS_aff[b]));
        }
        ap = std::min(1.0, ap);
        ad = std::min(1.0, ad);
        double mu_aff = 0.0;
        for (size_t b = 0; b < nb; ++b) mu_aff += inner(X[b] + ap * dX_aff[b], S[b] + ad * dS_aff[b]);
        mu_aff /= total_dim;
        const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

        // Corrector.
        std::vector<Mat> corr(nb);
        for (size_t b = 0; b < nb; ++b) corr[b] = dX_aff[b] * dS_aff[b] * Sinv[b];
        const Vec rhs = P.b - sigma * mu * ASinv + forward_all(P, corr);
        const Vec dy = solveM(rhs);
        std::vector<Mat> dS(nb), dX(nb);
        ap = std::numeric_limits<double>::infinity();
        ad = ap;
        for (size_t b = 0; b < nb; ++b) {
            dS[b] = -adjoint_op(P.blocks[b], dy);
            dX[b] = sigma * mu * Sinv[b] - X[b] - sym(X[b] * dS[b] * Sinv[b]) - sym(corr[b]);
            ap = std::min(ap, max_step(X[b], dX[b]));
            ad = std::min(ad, max_step(S[b], dS[b]));
        }
        const double tau = 0.95;
        ap = std::min(1.0, tau * ap);
        ad = std::min(1.0, tau * ad);
        if (!std::isfinite(ap) || !std::isfinite(ad) || !dy.allFinite()) {
            res.stop = IpmResult::Stop::Failure;
            res.message = "non-finite search direction";
            return res;
        }

        for (size_t b = 0; b < nb; ++b) X[b] = sym(X[b] + ap * dX[b]);
        // Recompute S from y so dual feasibility holds to rounding; shrink the step if needed.
        for (int back = 0; back < 30; ++back) {
            const Vec ytrial = y + ad * dy;
            bool ok = true;
            std::vector<Mat> St(nb);
            for (size_t b = 0; b < nb && ok; ++b) {
                St[b] = P.blocks[b].C - adjoint_op(P.blocks[b], ytrial);
                ok = Eigen::LLT<Mat>(St[b]).info() == Eigen::Success;
            }
            if (ok) {
                y = ytrial;
                S = std::move(St);
                break;
            }
            ad *= 0.5;
            if (back == 29) {
                res.stop = IpmResult::Stop::Failure;
                res.message = "dual step collapsed";
                return res;
            }
        }
    }
    res.stop = IpmResult::Stop::MaxIter;
    res.message = "iteration limit reached";
    return res;
}

Sdpa convert(const LmiProblem& problem) {
    Sdpa P;
    P.b = -problem.objective();
    for (const auto& blk : problem.blocks()) {
        SdpBlock s;
        s.n = static_cast<int>(blk.dim());
        s.C = -blk.epsilon * Mat::Identity(blk.dim(), blk.dim()) - blk.F0;
        for (const auto& [k, m] : blk.F) s.A.emplace_back(static_cast<int>(k), to_sparse(m));
        s.family = blk.family;
        P.blocks.push_back(std::move(s));
    }
    return P;
}

std::vector<double> block_margins(const LmiProblem& problem, const Vec& x) {
    std::vector<double> out;
    for (const auto& blk : problem.blocks()) out.push_back(-max_eig(SymMat(blk.evaluate(x))));
    return out;
}

}  // namespace

SolveResult solve(const LmiProblem& problem, const SolverOptions& opts) {
    if (problem.blocks().empty()) throw std::invalid_argument("solve: problem has no constraints");
    const Index K = problem.num_variables();
    {
        std::vector<char> seen(static_cast<size_t>(K), 0);
        for (const auto& blk : problem.blocks()) {
            for (const auto& [k, m] : blk.F) seen[static_cast<size_t>(k)] = 1;
        }
        std::vector<Index> kept;
        for (Index k = 0; k < K; ++k) {
            if (seen[static_cast<size_t>(k)]) {
                kept.push_back(k);
            } else if (problem.objective()(k) != 0.0) {
                throw std::invalid_argument("solve: objective variable " +
                                            problem.variable_names()[static_cast<size_t>(k)] +
                                            " appears in no constraint");
            }
        }
        if (static_cast<Index>(kept.size()) < K) {
            // Unconstrained cost-free variables are fixed at zero.
            LmiProblem reduced(problem.eps_strict());
            std::vector<Index> map(static_cast<size_t>(K), -1);
            for (Index k : kept) {
                map[static_cast<size_t>(k)] = reduced.add_scalar_variable(problem.variable_names()[static_cast<size_t>(k)]);
                reduced.set_objective(map[static_cast<size_t>(k)], problem.objective()(k));
            }
            for (const auto& blk : problem.blocks()) {
                AffineMat F(blk.F0);
                for (const auto& [k, m] : blk.F) F.add_term(map[static_cast<size_t>(k)], m);
                reduced.add_constraint(blk.name, F, blk.family, blk.epsilon);
            }
            SolveResult r = solve(reduced, opts);
            Vec x = Vec::Zero(K);
            for (size_t i = 0; i < kept.size(); ++i) {
                if (r.x.size() > 0) x(kept[i]) = r.x(static_cast<Index>(i));
            }
            r.x = x;
            return r;
        }
    }
    Sdpa base = convert(problem);
    if (opts.radius > 0.0) {
        for (Index k = 0; k < K; ++k) {
            for (double sign : {1.0, -1.0}) {
                SdpBlock bound;
                bound.n = 1;
                bound.C = Mat::Constant(1, 1, opts.radius);
                bound.A.emplace_back(static_cast<int>(k), SparseSym{{{0, 0, sign}}, {0}});
                bound.family = "radius";
                base.blocks.push_back(std::move(bound));
            }
        }
    }
    SolveResult out;

    // Phase one: minimize t subject to F_b(x) - t I <= -eps_b I and t >= -1.
    Vec x0 = Vec::Zero(K);
    double t0 = -std::numeric_limits<double>::infinity();
    for (const auto& blk : base.blocks) t0 = std::max(t0, max_eig(SymMat(-blk.C)));
    if (t0 >= 0.0) {
        Sdpa p1 = base;
        p1.b = Vec::Zero(K + 1);
        p1.b(K) = -1.0;
        for (auto& blk : p1.blocks) {
            SparseSym minus_eye;
            for (int i = 0; i < blk.n; ++i) {
                minus_eye.entries.push_back({i, i, -1.0});
                minus_eye.rows.push_back(i);
            }
            blk.A.emplace_back(static_cast<int>(K), std::move(minus_eye));
        }
        SdpBlock bound;
        bound.n = 1;
        bound.C = Mat::Constant(1, 1, 1.0);
        bound.A.emplace_back(static_cast<int>(K), SparseSym{{{0, 0, -1.0}}, {0}});
        bound.family = "phase-one bound";
        p1.blocks.push_back(bound);

        Vec y0 = Vec::Zero(K + 1);
        y0(K) = t0 + 1.0;
        bool infeasible_bound = false;
        auto stop = [&](const IterInfo& it) {
            const double t = it.y(K);
            const double lower = -it.pobj;  // valid bound on t* once the primal residual is small
            if (it.pinf <= opts.feas_tol && lower > 1e-9) {
                infeasible_bound = true;
                return true;
            }
            if (t < 0.0 && (t <= -0.9 || (it.pinf <= 1e-6 && t <= 0.5 * lower))) return true;
            return false;
        };
        SolverOptions o1 = opts;
        const IpmResult r1 = run_ipm(p1, y0, o1, stop);
        out.iterations += r1.iterations;
        const double t = r1.y(K);
        if (infeasible_bound || (r1.stop == IpmResult::Stop::Converged && t >= -1e-12)) {
            out.status = SolveStatus::Infeasible;
            out.x = r1.y.head(K);
            out.message = "phase one: no strictly feasible point (optimal t = " + std::to_string(t) + ")";
            double total = 0.0;
            std::map<std::string, double> fam;
            for (size_t b = 0; b + 1 < p1.blocks.size(); ++b) {
                const double w = r1.X[b].trace();
                fam[p1.blocks[b].family] += w;
                total += w;
            }
            for (const auto& [f, w] : fam) out.certificate.push_back({f, total > 0 ? w / total : 0.0});
            out.margins = block_margins(problem, out.x);
            out.objective = problem.objective().dot(out.x);
            return out;
        }
        if (t >= 0.0) {
            out.status = SolveStatus::NumericalFailure;
            out.x = r1.y.head(K);
            out.message = "phase one did not terminate: " + r1.message;
            out.margins = block_margins(problem, out.x);
            return out;
        }
        x0 = r1.y.head(K);
    }

    if (problem.objective().cwiseAbs().maxCoeff() == 0.0) {
        out.status = SolveStatus::Optimal;
        out.x = x0;
        out.objective = 0.0;
        out.margins = block_margins(problem, x0);
        out.message = "feasibility problem: strictly feasible point found";
        return out;
    }

    const IpmResult r2 = run_ipm(base, x0, opts, {});
    out.iterations += r2.iterations;
    out.x = r2.y;
    out.objective = problem.objective().dot(r2.y);
    out.margins = block_margins(problem, r2.y);
    if (r2.stop == IpmResult::Stop::Converged) {
        out.status = SolveStatus::Optimal;
        out.message = "converged";
    } else if (r2.stop == IpmResult::Stop::Stalled) {
        out.status = SolveStatus::Optimal;
        std::ostringstream os;
        os << "converged in the dual; primal residual stalled at " << r2.pinf;
        out.message = os.str();
    } else {
        out.status = SolveStatus::NumericalFailure;
        std::ostringstream os;
        os << "phase two: " << r2.message << " (relative gap " << r2.rel_gap << ", primal residual " << r2.pinf
           << ")";
        out.message = os.str();
    }
    return out;
}

}  // namespace liftsched
