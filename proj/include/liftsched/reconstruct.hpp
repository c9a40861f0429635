#pragma once

#include "liftsched/synthesis.hpp"

namespace liftsched {

inline constexpr double kConditionWarning = 1e12;

struct PerturbationRecord {
    std::string target;
    double size = 0.0;
    int attempts = 0;
};

// X_cal_1 Y_cal_1 = Z_cal_1 with Y_cal_1 = [Y1 I; V1 0] and Z_cal_1 = [I X1; 0 U1].
struct FactorizationX1 {
    Mat X1, Y1, U1, V1;

    [[nodiscard]] Mat Ycal() const;
    [[nodiscard]] Mat Zcal() const;
};

// Same identity for the passive scaling, partitioned (r_s, r_c1, r_c2).
struct FactorizationX2 {
    Mat Q2, Q3, Qt1;
    Mat S12, S13, S23;
    Mat R11, R21, R22;
    Mat St11, St21, St22;
    Mat U2, V2;

    [[nodiscard]] Mat X2() const;
    [[nodiscard]] Mat Y2() const;
    [[nodiscard]] Mat Ycal() const;
    [[nodiscard]] Mat Zcal() const;
    [[nodiscard]] SymMat Pcal() const;
};

struct Factorizations {
    FactorizationX1 f1;
    FactorizationX2 f2;
    SymMat Xcal1;
    std::vector<PerturbationRecord> perturbations;
};

// Free choices in the completion: U1 = sigma I and S13 = S23 = s I. Zero selects an automatic balance.
struct FactorizationScales {
    double sigma = 0.0;
    double s = 0.0;
};

// Closed-form completion of the transformed variables into full certificate factorizations.
[[nodiscard]] Factorizations build_factorizations(const SynthesisSolution& s, const FactorizationScales& scales = {});

[[nodiscard]] TriangularSchedule scheduling_map(const FactorizationX2& f, Index u_hat, Index v_hat);

struct Reconstruction {
    GainScheduledController controller;
    Factorizations factors;
    SymMat Xcal1;
    SymMat Pcal;
    double pin_residual = 0.0;  // size of the cancelled (zc1, wc2) inner block before it is zeroed
    std::vector<std::string> warnings;
};

// Controller matrices from the transformed blocks; the structural zero blocks come out exactly zero.
[[nodiscard]] GainScheduledController controller_matrices(const LiftedPlantLfr& Pl, const SynthesisSolution& s,
                                                          const Factorizations& f, double* pin_residual = nullptr);

[[nodiscard]] Reconstruction reconstruct(const LiftedPlantLfr& Pl, const SynthesisSolution& s,
                                        const FactorizationScales& scales = {});

struct NecessityResult {
    SynthesisSolution solution;
    Factorizations factors;
    SymMat Xcal1;  // certificate after any perturbation
    SymMat Pcal;
    double structure_residual = 0.0;  // pinned and zero blocks of the transformed controller
};

// Transformed variables from an analysis certificate (X_cal_1, P_cal, Z, gamma) of a lifted closed loop.
[[nodiscard]] NecessityResult certificate_to_variables(const LiftedPlantLfr& Pl, const GainScheduledController& K,
                                                       const SymMat& Xcal1, const SymMat& Pcal, const Mat& Z,
                                                       double gamma);

}  // namespace liftsched
