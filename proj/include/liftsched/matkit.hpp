#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace liftsched {

using Index = Eigen::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Symmetric matrix stored in canonical form; the constructor symmetrizes.
class SymMat {
public:
    SymMat() = default;
    explicit SymMat(const Mat& m);

    static SymMat zero(Index n) { return SymMat(Mat::Zero(n, n)); }
    static SymMat identity(Index n) { return SymMat(Mat::Identity(n, n)); }

    [[nodiscard]] const Mat& mat() const { return m_; }
    [[nodiscard]] Index dim() const { return m_.rows(); }
    [[nodiscard]] double operator()(Index i, Index j) const { return m_(i, j); }

private:
    Mat m_;
};

// Ordered block sizes partitioning one matrix dimension.
class BlockSpec {
public:
    BlockSpec() = default;
    BlockSpec(std::initializer_list<Index> sizes);
    explicit BlockSpec(std::vector<Index> sizes);

    [[nodiscard]] Index count() const { return static_cast<Index>(sizes_.size()); }
    [[nodiscard]] Index size(Index i) const { return sizes_.at(static_cast<size_t>(i)); }
    [[nodiscard]] Index offset(Index i) const;
    [[nodiscard]] Index total() const;
    [[nodiscard]] const std::vector<Index>& sizes() const { return sizes_; }

private:
    std::vector<Index> sizes_;
};

// Block (i, j) of m under the given row and column partitions.
[[nodiscard]] Mat block_of(const Mat& m, const BlockSpec& rows, const BlockSpec& cols, Index i, Index j);
void set_block(Mat& m, const BlockSpec& rows, const BlockSpec& cols, Index i, Index j, const Mat& value);

// Stacks a grid of blocks; empty (0x0) entries become zeros sized by their row/column neighbours.
[[nodiscard]] Mat assemble(const std::vector<std::vector<Mat>>& grid, const BlockSpec& rows, const BlockSpec& cols);

[[nodiscard]] Mat block_diag(const std::vector<Mat>& blocks);

// Blocks of an LFR-type system: state (1), channel (2), performance output.
struct LfrBlocks {
    Mat A11, A12, A21, A22;
    Mat B1, B2;
    Mat C1, C2;
    Mat D;
};

[[nodiscard]] SymMat he(const Mat& m);

// (*)^T diag(X, R, S) W with W = [I 0 0; A11 A12 B1; 0 I 0; A21 A22 B2; 0 0 I; C1 C2 D].
[[nodiscard]] SymMat l_form(const SymMat& X, const SymMat& R, const SymMat& S, const LfrBlocks& b);

// Same without the B/D column; S acts on [0; C1 C2] where the zero rows pad S to its dimension.
[[nodiscard]] SymMat l_sub_form(const SymMat& X, const SymMat& R, const SymMat& S, const LfrBlocks& b);

struct LyapunovResult {
    Mat X;
    double residual = 0.0;
};

// Solves A^T X + X A + Q = 0 for Hurwitz A.
[[nodiscard]] LyapunovResult solve_lyapunov(const Mat& A, const SymMat& Q);

[[nodiscard]] double min_eig(const SymMat& S);
[[nodiscard]] double max_eig(const SymMat& S);
[[nodiscard]] Vec sym_eigenvalues(const SymMat& S);

[[nodiscard]] double spectral_abscissa(const Mat& A);
[[nodiscard]] double spectral_radius(const Mat& A);
[[nodiscard]] double min_singular_value(const Mat& A);
[[nodiscard]] double condition_number(const Mat& A);

// Stabilizing solution of A^T X + X A - X G X + Q = 0 (G, Q symmetric PSD).
[[nodiscard]] Mat solve_care(const Mat& A, const Mat& G, const Mat& Q);

// Largest absolute entry; 0 for empty matrices.
[[nodiscard]] double max_abs(const Mat& m);

}  // namespace liftsched
