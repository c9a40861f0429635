#pragma once

#include "liftsched/matkit.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace liftsched {

// Matrix-valued affine function of the scalar decision vector: constant + sum_k x_k * coef_k.
class AffineMat {
public:
    AffineMat() = default;
    AffineMat(Index rows, Index cols);
    explicit AffineMat(const Mat& constant);

    [[nodiscard]] static AffineMat variable(Index rows, Index cols, Index var, Index r, Index c, double scale = 1.0);

    [[nodiscard]] Index rows() const { return c_.rows(); }
    [[nodiscard]] Index cols() const { return c_.cols(); }
    [[nodiscard]] const Mat& constant() const { return c_; }
    [[nodiscard]] const std::map<Index, Mat>& terms() const { return terms_; }

    [[nodiscard]] Mat evaluate(const Vec& x) const;
    [[nodiscard]] AffineMat transpose() const;
    [[nodiscard]] AffineMat block(Index r0, Index c0, Index r, Index c) const;

    AffineMat& operator+=(const AffineMat& o);
    AffineMat& operator-=(const AffineMat& o);
    AffineMat& operator*=(double s);
    friend AffineMat operator+(AffineMat a, const AffineMat& b) { return a += b; }
    friend AffineMat operator-(AffineMat a, const AffineMat& b) { return a -= b; }
    friend AffineMat operator-(AffineMat a) { return a *= -1.0; }
    friend AffineMat operator*(double s, AffineMat a) { return a *= s; }
    friend AffineMat operator*(const Mat& L, const AffineMat& a);
    friend AffineMat operator*(const AffineMat& a, const Mat& R);

    void add_term(Index var, const Mat& coef);

private:
    Mat c_;
    std::map<Index, Mat> terms_;
};

// Grid assembly with explicit partitions; default-constructed entries are zero blocks.
[[nodiscard]] AffineMat assemble(const std::vector<std::vector<AffineMat>>& grid, const BlockSpec& rows,
                                 const BlockSpec& cols);
[[nodiscard]] AffineMat he(const AffineMat& a);
[[nodiscard]] AffineMat trace_of(const AffineMat& a);

enum class VarKind { Symmetric, Rectangular };

struct MatrixVar {
    std::string name;
    Index rows = 0;
    Index cols = 0;
    VarKind kind = VarKind::Rectangular;
    Eigen::MatrixXi ids;  // scalar variable per entry, -1 when masked to zero

    [[nodiscard]] AffineMat expr() const;
    [[nodiscard]] Mat value(const Vec& x) const;
    [[nodiscard]] Index count() const;
};

struct LmiBlock {
    std::string name;
    std::string family;
    Mat F0;
    std::vector<std::pair<Index, Mat>> F;
    double epsilon = 0.0;

    [[nodiscard]] Index dim() const { return F0.rows(); }
    [[nodiscard]] Mat evaluate(const Vec& x) const;
};

// Minimize c^T x subject to F_b(x) <= -epsilon_b I for every block.
class LmiProblem {
public:
    explicit LmiProblem(double eps_strict = 1e-6) : eps_strict_(eps_strict) {}

    // mask(i, j) == true forces entry (i, j) to zero; symmetric kinds use the upper triangle.
    MatrixVar add_matrix_variable(const std::string& name, Index rows, Index cols, VarKind kind,
                                  const std::optional<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>>& mask = {});
    Index add_scalar_variable(const std::string& name);
    [[nodiscard]] AffineMat scalar(Index var) const;

    // F <= -eps I with eps = eps_strict * (1 + max|F0|) unless given explicitly.
    void add_constraint(const std::string& name, const AffineMat& F, const std::string& family = "",
                        std::optional<double> epsilon = std::nullopt);
    void set_objective(Index var, double coef);

    [[nodiscard]] Index num_variables() const { return static_cast<Index>(names_.size()); }
    [[nodiscard]] const std::vector<std::string>& variable_names() const { return names_; }
    [[nodiscard]] const std::vector<LmiBlock>& blocks() const { return blocks_; }
    [[nodiscard]] const Vec& objective() const { return c_; }
    [[nodiscard]] double eps_strict() const { return eps_strict_; }

    // Documented JSON form: variables, objective, and each block's F0 / F_k as dense symmetric matrices.
    [[nodiscard]] std::string dump_json() const;

private:
    double eps_strict_;
    std::vector<std::string> names_;
    std::map<std::string, bool> taken_;
    std::vector<LmiBlock> blocks_;
    Vec c_ = Vec(0);
};

// [[Phi, C^T], [C, -Z]]: the affine replacement of Phi + C^T Z^{-1} C < 0.
[[nodiscard]] AffineMat schur_linearize(const AffineMat& Phi, const AffineMat& C, const AffineMat& Z);

struct SolverOptions {
    double gap_tol = 1e-7;
    double feas_tol = 1e-8;
    int max_iter = 200;
    // Feasibility radius: every decision variable is bounded by |x_k| <= radius (0 disables).
    double radius = 1e6;
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

[[nodiscard]] const char* to_string(SolveStatus s);

struct FamilyWeight {
    std::string family;
    double weight = 0.0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Vec x;
    std::vector<double> margins;  // -max_eig(F_b(x)) per block
    double objective = 0.0;
    int iterations = 0;
    std::string message;
    // Infeasible only: share of the dual certificate carried by each constraint family.
    std::vector<FamilyWeight> certificate;
};

[[nodiscard]] SolveResult solve(const LmiProblem& problem, const SolverOptions& opts = {});

}  // namespace liftsched
