#include "liftsched/matkit.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

namespace liftsched {

namespace {

using CMat = Eigen::MatrixXcd;

std::string shape(const Mat& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require(bool ok, const std::string& what) {
    if (!ok) throw DimensionError(what);
}

// Solves T^* Y + Y T = -C for upper-triangular T (column-wise forward substitution).
CMat triangular_lyapunov(const CMat& T, const CMat& C) {
    const Index n = T.rows();
    CMat Y = CMat::Zero(n, n);
    const CMat Ts = T.adjoint();
    for (Index j = 0; j < n; ++j) {
        Eigen::VectorXcd rhs = -C.col(j);
        for (Index k = 0; k < j; ++k) rhs -= Y.col(k) * T(k, j);
        CMat L = Ts;
        L.diagonal().array() += T(j, j);
        Y.col(j) = L.triangularView<Eigen::Lower>().solve(rhs);
    }
    return Y;
}

}  // namespace

SymMat::SymMat(const Mat& m) {
    if (m.rows() != m.cols()) throw DimensionError("SymMat: matrix is " + shape(m));
    m_ = 0.5 * (m + m.transpose());
}

BlockSpec::BlockSpec(std::initializer_list<Index> sizes) : BlockSpec(std::vector<Index>(sizes)) {}

BlockSpec::BlockSpec(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
    for (Index s : sizes_) {
        if (s < 0) throw DimensionError("BlockSpec: negative block size");
    }
}

Index BlockSpec::offset(Index i) const {
    if (i < 0 || i > count()) throw DimensionError("BlockSpec: block index out of range");
    return std::accumulate(sizes_.begin(), sizes_.begin() + i, Index{0});
}

Index BlockSpec::total() const { return std::accumulate(sizes_.begin(), sizes_.end(), Index{0}); }

Mat block_of(const Mat& m, const BlockSpec& rows, const BlockSpec& cols, Index i, Index j) {
    require(m.rows() == rows.total() && m.cols() == cols.total(), "block_of: partition does not match " + shape(m));
    return m.block(rows.offset(i), cols.offset(j), rows.size(i), cols.size(j));
}

void set_block(Mat& m, const BlockSpec& rows, const BlockSpec& cols, Index i, Index j, const Mat& value) {
    require(m.rows() == rows.total() && m.cols() == cols.total(), "set_block: partition does not match " + shape(m));
    require(value.rows() == rows.size(i) && value.cols() == cols.size(j), "set_block: block is " + shape(value));
    m.block(rows.offset(i), cols.offset(j), rows.size(i), cols.size(j)) = value;
}

Mat assemble(const std::vector<std::vector<Mat>>& grid, const BlockSpec& rows, const BlockSpec& cols) {
    require(static_cast<Index>(grid.size()) == rows.count(), "assemble: row count mismatch");
    Mat out = Mat::Zero(rows.total(), cols.total());
    for (Index i = 0; i < rows.count(); ++i) {
        const auto& row = grid[static_cast<size_t>(i)];
        require(static_cast<Index>(row.size()) == cols.count(), "assemble: column count mismatch");
        for (Index j = 0; j < cols.count(); ++j) {
            const Mat& b = row[static_cast<size_t>(j)];
            if (b.size() == 0) continue;
            set_block(out, rows, cols, i, j, b);
        }
    }
    return out;
}

Mat block_diag(const std::vector<Mat>& blocks) {
    Index r = 0, c = 0;
    for (const auto& b : blocks) {
        r += b.rows();
        c += b.cols();
    }
    Mat out = Mat::Zero(r, c);
    r = c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

SymMat he(const Mat& m) {
    require(m.rows() == m.cols(), "he: matrix is " + shape(m));
    return SymMat(m + m.transpose());
}

namespace {

struct OuterFactor {
    Mat Wx, Wr, Ws;
};

OuterFactor outer_factor(const LfrBlocks& b, bool with_perf_input, Index s_dim) {
    const Index n = b.A11.rows();
    const Index w = b.A12.cols();
    const Index z = b.A21.rows();
    const Index q = with_perf_input ? b.B1.cols() : 0;
    const Index p = b.C1.rows();
    require(b.A11.cols() == n && b.A12.rows() == n && b.A21.cols() == n, "l_form: A11/A12/A21 shapes");
    require(b.A22.rows() == z && b.A22.cols() == w, "l_form: A22 is " + shape(b.A22));
    require(b.C1.cols() == n && b.C2.rows() == p && b.C2.cols() == w, "l_form: C blocks");
    if (with_perf_input) {
        require(b.B1.rows() == n && b.B2.rows() == z && b.B2.cols() == q, "l_form: B blocks");
        require(b.D.rows() == p && b.D.cols() == q, "l_form: D is " + shape(b.D));
    }
    const Index cols = n + w + q;
    OuterFactor f;
    f.Wx = Mat::Zero(2 * n, cols);
    f.Wx.block(0, 0, n, n).setIdentity();
    f.Wx.block(n, 0, n, n) = b.A11;
    f.Wx.block(n, n, n, w) = b.A12;
    f.Wr = Mat::Zero(w + z, cols);
    f.Wr.block(0, n, w, w).setIdentity();
    f.Wr.block(w, 0, z, n) = b.A21;
    f.Wr.block(w, n, z, w) = b.A22;
    if (with_perf_input) {
        f.Wx.block(n, n + w, n, q) = b.B1;
        f.Wr.block(w, n + w, z, q) = b.B2;
        f.Ws = Mat::Zero(q + p, cols);
        f.Ws.block(0, n + w, q, q).setIdentity();
        f.Ws.block(q, 0, p, n) = b.C1;
        f.Ws.block(q, n, p, w) = b.C2;
        f.Ws.block(q, n + w, p, q) = b.D;
    } else {
        require(s_dim >= p, "l_sub_form: S smaller than the output dimension");
        f.Ws = Mat::Zero(s_dim, cols);
        f.Ws.block(s_dim - p, 0, p, n) = b.C1;
        f.Ws.block(s_dim - p, n, p, w) = b.C2;
    }
    return f;
}

SymMat congruence_sum(const SymMat& X, const SymMat& R, const SymMat& S, const OuterFactor& f) {
    require(X.dim() == f.Wx.rows(), "l_form: X has dimension " + std::to_string(X.dim()));
    require(R.dim() == f.Wr.rows(), "l_form: R has dimension " + std::to_string(R.dim()));
    require(S.dim() == f.Ws.rows(), "l_form: S has dimension " + std::to_string(S.dim()));
    Mat out = f.Wx.transpose() * X.mat() * f.Wx;
    out += f.Wr.transpose() * R.mat() * f.Wr;
    out += f.Ws.transpose() * S.mat() * f.Ws;
    return SymMat(out);
}

}  // namespace

SymMat l_form(const SymMat& X, const SymMat& R, const SymMat& S, const LfrBlocks& b) {
    return congruence_sum(X, R, S, outer_factor(b, true, S.dim()));
}

SymMat l_sub_form(const SymMat& X, const SymMat& R, const SymMat& S, const LfrBlocks& b) {
    return congruence_sum(X, R, S, outer_factor(b, false, S.dim()));
}

LyapunovResult solve_lyapunov(const Mat& A, const SymMat& Q) {
    require(A.rows() == A.cols() && A.rows() == Q.dim(), "solve_lyapunov: A is " + shape(A));
    const Index n = A.rows();
    if (n == 0) return {Mat(0, 0), 0.0};
    Eigen::ComplexSchur<CMat> schur(A.cast<std::complex<double>>());
    if (schur.info() != Eigen::Success) throw NumericalError("solve_lyapunov: Schur decomposition failed");
    const CMat& T = schur.matrixT();
    const CMat& U = schur.matrixU();
    double abscissa = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) abscissa = std::max(abscissa, T(i, i).real());
    if (abscissa >= 0.0) {
        throw StabilityError("solve_lyapunov: A is not Hurwitz (spectral abscissa " + std::to_string(abscissa) + ")");
    }

    auto solve_once = [&](const Mat& rhs) {
        const CMat C = U.adjoint() * rhs.cast<std::complex<double>>() * U;
        const CMat Y = triangular_lyapunov(T, C);
        const Mat X = (U * Y * U.adjoint()).real();
        return Mat(0.5 * (X + X.transpose()));
    };
    auto residual_of = [&](const Mat& X) { return Mat(A.transpose() * X + X * A + Q.mat()); };

    Mat X = solve_once(Q.mat());
    Mat res = residual_of(X);
    // One refinement sweep recovers digits lost to non-normal A.
    X += solve_once(res);
    res = residual_of(X);
    const double residual = res.norm();
    if (!std::isfinite(residual) || residual > 1e-10 * (1.0 + Q.mat().norm())) {
        throw NumericalError("solve_lyapunov: residual " + std::to_string(residual) + " exceeds tolerance");
    }
    return {X, residual};
}

Vec sym_eigenvalues(const SymMat& S) {
    if (S.dim() == 0) return Vec(0);
    Eigen::SelfAdjointEigenSolver<Mat> es(S.mat(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("sym_eigenvalues: eigensolver failed");
    return es.eigenvalues();
}

double min_eig(const SymMat& S) {
    if (S.dim() == 0) return std::numeric_limits<double>::infinity();
    return sym_eigenvalues(S).minCoeff();
}

double max_eig(const SymMat& S) {
    if (S.dim() == 0) return -std::numeric_limits<double>::infinity();
    return sym_eigenvalues(S).maxCoeff();
}

double spectral_abscissa(const Mat& A) {
    if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Mat> es(A, false);
    return es.eigenvalues().real().maxCoeff();
}

double spectral_radius(const Mat& A) {
    if (A.rows() == 0) return 0.0;
    Eigen::EigenSolver<Mat> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_singular_value(const Mat& A) {
    if (A.size() == 0) return std::numeric_limits<double>::infinity();
    Eigen::JacobiSVD<Mat> svd(A);
    return svd.singularValues().minCoeff();
}

double condition_number(const Mat& A) {
    if (A.size() == 0) return 1.0;
    Eigen::JacobiSVD<Mat> svd(A);
    const Vec& s = svd.singularValues();
    const double smin = s.minCoeff();
    return smin > 0.0 ? s.maxCoeff() / smin : std::numeric_limits<double>::infinity();
}

Mat solve_care(const Mat& A, const Mat& G, const Mat& Q) {
    const Index n = A.rows();
    require(A.cols() == n && G.rows() == n && G.cols() == n && Q.rows() == n && Q.cols() == n, "solve_care: shapes");
    Mat H(2 * n, 2 * n);
    H << A, -G, -Q, -A.transpose();
    Eigen::ComplexEigenSolver<Mat> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("solve_care: Hamiltonian eigensolver failed");
    CMat basis(2 * n, n);
    Index found = 0;
    for (Index i = 0; i < 2 * n; ++i) {
        if (es.eigenvalues()(i).real() < 0.0) {
            if (found == n) throw NumericalError("solve_care: Hamiltonian has too many stable eigenvalues");
            basis.col(found++) = es.eigenvectors().col(i);
        }
    }
    if (found != n) throw NumericalError("solve_care: no stabilizing solution (imaginary-axis eigenvalues)");
    const CMat U1 = basis.topRows(n);
    const CMat U2 = basis.bottomRows(n);
    Mat X = (U2 * U1.inverse()).real();
    X = 0.5 * (X + X.transpose());
    // Kleinman iterations polish the eigenvector-based solution.
    for (int it = 0; it < 3; ++it) {
        const Mat Acl = A - G * X;
        if (spectral_abscissa(Acl) >= 0.0) break;
        X = solve_lyapunov(Acl, SymMat(Q + X * G * X)).X;
    }
    return X;
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace liftsched
