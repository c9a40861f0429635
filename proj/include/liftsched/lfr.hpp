#pragma once

#include "liftsched/matkit.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace liftsched {

struct WellPosednessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Value set V = Co{V_1, ..., V_N} of u_hat x v_hat matrices.
struct ValueSet {
    Index u_hat = 0;
    Index v_hat = 0;
    std::vector<Mat> vertices;

    [[nodiscard]] ValueSet scaled(double factor) const;
};

struct ValueSetReport {
    bool shapes_ok = true;
    bool zero_in_hull = false;
    std::vector<std::string> problems;
    [[nodiscard]] bool valid() const { return shapes_ok && zero_in_hull; }
};

[[nodiscard]] ValueSetReport validate_value_set(const ValueSet& vs);

// Convex weights lambda >= 0, sum 1, with sum lambda_i vec(V_i) = target; empty if none exist.
[[nodiscard]] std::optional<Vec> hull_weights(const std::vector<Mat>& points, const Mat& target);

// Vertices followed by seeded pseudo-random convex combinations.
[[nodiscard]] std::vector<Mat> hull_samples(const ValueSet& vs, int count, std::uint64_t seed);

// Sizes of the structured plant: state, uncertainty channel split (u1|u2 in, v1|v2 out),
// performance input q / output p, control input m, measurement k.
struct PlantPartition {
    Index ns = 0;
    Index u1 = 0, u2 = 0;
    Index v1 = 0, v2 = 0;
    Index q = 0, p = 0;
    Index m = 0, k = 0;

    [[nodiscard]] Index u_hat() const { return u1 + u2; }
    [[nodiscard]] Index v_hat() const { return v1 + v2; }
    [[nodiscard]] Index r_s() const { return u_hat() + v_hat(); }
    [[nodiscard]] BlockSpec row_spec() const { return {ns, v1, v2, p, k}; }
    [[nodiscard]] BlockSpec col_spec() const { return {ns, u1, u2, q, m}; }
    bool operator==(const PlantPartition&) const = default;
};

enum class PlantRow { State = 0, Z1, Z2, Perf, Meas };
enum class PlantCol { State = 0, W1, W2, Perf, Control };

// Plant in bar-partitioned form: rows (xdot, zhat1, zhat2, z_p, y), columns (x, what1, what2, w_p, u).
struct StructuredPlantLfr {
    PlantPartition dims;
    Mat M;

    [[nodiscard]] static StructuredPlantLfr zeros(const PlantPartition& dims);
    [[nodiscard]] Mat block(PlantRow r, PlantCol c) const;
    void set(PlantRow r, PlantCol c, const Mat& value);
};

struct BlockViolation {
    std::string block;
    double max_abs = 0.0;
};

struct PlantReport {
    std::vector<std::string> dimension_errors;
    std::vector<BlockViolation> violations;
    [[nodiscard]] bool valid() const { return dimension_errors.empty() && violations.empty(); }
};

[[nodiscard]] PlantReport validate_plant(const StructuredPlantLfr& P);

// True when no vertex couples zhat2 into what1, so the frozen performance feedthrough vanishes.
[[nodiscard]] bool feedthrough_compatible(const ValueSet& vs, const PlantPartition& dims);

// Generic LFR plant: channel w -> z, performance w_p -> z_p, control u -> y.
struct LfrPlant {
    Mat A11, A12, B1p, B1;
    Mat A21, A22, B2p, B2;
    Mat C1p, C2p, Dp, D1;
    Mat C1, C2, D2, D3;

    [[nodiscard]] Index n() const { return A11.rows(); }
    [[nodiscard]] Index w_dim() const { return A12.cols(); }
    [[nodiscard]] Index z_dim() const { return A21.rows(); }
    [[nodiscard]] Index q() const { return B1p.cols(); }
    [[nodiscard]] Index p() const { return C1p.rows(); }
    [[nodiscard]] Index m() const { return B1.cols(); }
    [[nodiscard]] Index k() const { return C1.rows(); }
};

// First display of the structured plant (channel what -> zhat).
[[nodiscard]] LfrPlant first_display(const StructuredPlantLfr& P);

// Closed-form lower-triangular scheduling data (see reconstruct).
struct TriangularSchedule {
    Index u_hat = 0;
    Index v_hat = 0;
    Mat Q2, Q3, Qt1;
    Mat U2, V2;

    [[nodiscard]] Mat evaluate(const Mat& V) const;
};

struct ConstantSchedule {
    Mat value;
};

class SchedulingMap {
public:
    SchedulingMap() = default;
    SchedulingMap(ConstantSchedule c) : impl_(std::move(c)) {}
    SchedulingMap(TriangularSchedule t) : impl_(std::move(t)) {}

    [[nodiscard]] Mat evaluate(const Mat& V) const;
    [[nodiscard]] Index dim() const;
    [[nodiscard]] const std::variant<ConstantSchedule, TriangularSchedule>& impl() const { return impl_; }

private:
    std::variant<ConstantSchedule, TriangularSchedule> impl_{ConstantSchedule{Mat(0, 0)}};
};

struct ControllerPartition {
    Index nc = 0;
    Index rc1 = 0, rc2 = 0;
    Index k = 0, m = 0;

    [[nodiscard]] Index r_c() const { return rc1 + rc2; }
    [[nodiscard]] BlockSpec row_spec() const { return {nc, rc1, rc2, m}; }
    [[nodiscard]] BlockSpec col_spec() const { return {nc, rc1, rc2, k}; }
    bool operator==(const ControllerPartition&) const = default;
};

enum class CtrlRow { State = 0, Z1, Z2, Control };
enum class CtrlCol { State = 0, W1, W2, Meas };

// Controller rows (xc_dot, zc1, zc2, u), columns (xc, wc1, wc2, y), scheduled by wc = Delta_c(V) zc.
struct GainScheduledController {
    ControllerPartition dims;
    Mat M;
    SchedulingMap schedule;

    [[nodiscard]] static GainScheduledController zeros(const ControllerPartition& dims);
    [[nodiscard]] Mat block(CtrlRow r, CtrlCol c) const;
    void set(CtrlRow r, CtrlCol c, const Mat& value);

    [[nodiscard]] Mat Ac(Index i, Index j) const;  // i, j in {1, 2}
    [[nodiscard]] Mat Bc(Index i) const;
    [[nodiscard]] Mat Cc(Index j) const;
};

[[nodiscard]] std::vector<BlockViolation> controller_violations(const GainScheduledController& K);

enum class ScheduleKind { Extended, Lifted };

struct ClosedLoopLfr {
    LfrBlocks blocks;
    ScheduleKind kind = ScheduleKind::Extended;
    Index u_hat = 0;
    Index v_hat = 0;
    SchedulingMap controller_schedule;

    [[nodiscard]] Index n() const { return blocks.A11.rows(); }
    [[nodiscard]] Index w_dim() const { return blocks.A12.cols(); }
    [[nodiscard]] Index z_dim() const { return blocks.A21.rows(); }
    [[nodiscard]] Mat schedule(const Mat& V) const;
};

// Interconnection of a generic LFR plant (D3 = 0) with a controller (no y -> u feedthrough).
[[nodiscard]] ClosedLoopLfr interconnect(const LfrPlant& P, const GainScheduledController& K, ScheduleKind kind,
                                         Index u_hat, Index v_hat);

[[nodiscard]] ClosedLoopLfr close_loop_original(const StructuredPlantLfr& P, const GainScheduledController& K);

struct FrozenSystem {
    Mat A, B, C, D;
};

// Closure of the channel at a fixed scheduling block value.
[[nodiscard]] FrozenSystem freeze_with(const ClosedLoopLfr& CL, const Mat& delta);
[[nodiscard]] FrozenSystem freeze(const ClosedLoopLfr& CL, const Mat& V);

struct WellPosednessReport {
    double min_sigma = std::numeric_limits<double>::infinity();
    Index worst_sample = -1;
    bool ok = true;
};

[[nodiscard]] WellPosednessReport well_posed(const ClosedLoopLfr& CL, const std::vector<Mat>& samples,
                                             double tol = 1e-12);

}  // namespace liftsched
