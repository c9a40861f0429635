#pragma once

#include "liftsched/lfr.hpp"

namespace liftsched {

// [[-I, 2V], [0, I]]: the lifted block replacing what = V zhat by what = -what + 2 V zhat.
[[nodiscard]] Mat delta_lift(const Mat& V);

// Lifted plant: channel w = z = (what, zhat) of size r_s, scheduled by delta_lift(V).
struct LiftedPlantLfr {
    PlantPartition dims;
    LfrPlant lfr;

    [[nodiscard]] Index r_s() const { return dims.r_s(); }
    // Indexed access with 1 = state, 2 = channel.
    [[nodiscard]] const Mat& A(int i, int j) const;
    [[nodiscard]] const Mat& Bp(int i) const;
    [[nodiscard]] const Mat& B(int i) const;
    [[nodiscard]] const Mat& Cp(int j) const;
    [[nodiscard]] const Mat& C(int j) const;
};

[[nodiscard]] LiftedPlantLfr lift_plant(const StructuredPlantLfr& P);

[[nodiscard]] ClosedLoopLfr close_loop_lifted(const LiftedPlantLfr& Pl, const GainScheduledController& K);

// Member candidate of the full block class for the original loop, partitioned (u_hat, r_c, v_hat, r_c).
struct FullBlockScalingHat {
    SymMat P;
    Index u_hat = 0;
    Index v_hat = 0;
    Index r_c = 0;
};

// Back-translation of a passive scaling (partition r_s = u_hat + v_hat, then r_c) to the original loop.
[[nodiscard]] FullBlockScalingHat build_hat_scaling(const SymMat& Pcal, Index u_hat, Index v_hat, Index r_c);

// Max-abs difference between the two sides of the He/congruence identity behind the back-translation.
[[nodiscard]] double he_congruence_identity_check(const Mat& Q, const Mat& S, const Mat& R, const Mat& A,
                                                  const Mat& B, const Mat& C);

}  // namespace liftsched
