#pragma once

#include "liftsched/lifting.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace liftsched {

inline constexpr double kMembershipTol = 1e-9;

// Margins are min_eig of each condition written in "> 0" form.
struct MarginReport {
    double margin = std::numeric_limits<double>::infinity();
    double vertex_margin = std::numeric_limits<double>::infinity();
    double sampled_margin = std::numeric_limits<double>::infinity();  // +inf when no samples were taken
    std::vector<double> conditions;
    std::vector<std::string> labels;

    [[nodiscard]] bool member() const { return margin > kMembershipTol; }
    void add(const std::string& label, double value, bool sampled = false);
};

// Primal class: (*)^T P [I;0] < 0 and (*)^T P [V_i;I] > 0 at every vertex.
[[nodiscard]] MarginReport check_primal(const SymMat& P, const ValueSet& vs);
// Dual class: (*)^T Pt [0;I] > 0 and (*)^T Pt [I;-V_i^T] < 0 at every vertex.
[[nodiscard]] MarginReport check_dual(const SymMat& Pt, const ValueSet& vs);

// Passivity forms of the same classes: He[P Delta_l(V_i)] > 0, He[Pt Delta_l(V_i)^T] > 0.
[[nodiscard]] MarginReport check_primal_lifted(const SymMat& P, const ValueSet& vs);
[[nodiscard]] MarginReport check_dual_lifted(const SymMat& Pt, const ValueSet& vs);

struct SamplingOptions {
    int samples = 200;
    std::uint64_t seed = 7;
};

// He[P diag(Delta_l(V), Delta_c(V))] > 0 at vertices, plus hull samples.
[[nodiscard]] MarginReport check_passive(const SymMat& P, const SchedulingMap& dc, const ValueSet& vs,
                                         const SamplingOptions& opts = {});

// (*)^T Phat [Delta_ex(V); I] > 0 at vertices, plus hull samples.
[[nodiscard]] MarginReport check_hat(const FullBlockScalingHat& P, const SchedulingMap& dc, const ValueSet& vs,
                                     const SamplingOptions& opts = {});
// check_hat plus (*)^T Phat [I;0] < 0 and (*)^T Phat [0;I] > 0.
[[nodiscard]] MarginReport check_hat_F(const FullBlockScalingHat& P, const SchedulingMap& dc, const ValueSet& vs,
                                       const SamplingOptions& opts = {});

// He[P diag(Delta_l(V), Delta_l(Delta_c(V)))] > 0: passivity against a lifted controller block.
[[nodiscard]] MarginReport check_lifted_controller_passivity(const SymMat& P, const SchedulingMap& dc,
                                                             const ValueSet& vs, const SamplingOptions& opts = {});

// One affine-in-P condition sign * outer^T P outer > 0.
struct VertexBlock {
    std::string label;
    Mat outer;
    double sign = 1.0;

    [[nodiscard]] SymMat value(const SymMat& P) const;
};

[[nodiscard]] std::vector<VertexBlock> vertex_constraints_primal(const ValueSet& vs);
[[nodiscard]] std::vector<VertexBlock> vertex_constraints_dual(const ValueSet& vs);

using BoolMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Entries marked true are forced to zero in Q2, Q3, Qt1.
struct ScalingMask {
    BoolMat Q2, Q3, Qt1;

    [[nodiscard]] static ScalingMask none(Index r_s);
    // Zeroes the u_hat x v_hat coupling blocks.
    [[nodiscard]] static ScalingMask block_diagonal(Index u_hat, Index v_hat);
    [[nodiscard]] static ScalingMask diagonal(Index r_s);
};

// Empty when the mask is consistent with r_s; otherwise a description of the problem.
[[nodiscard]] std::string mask_problem(const ScalingMask& mask, Index r_s);

}  // namespace liftsched
