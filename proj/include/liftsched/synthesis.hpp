#pragma once

#include "liftsched/scalings.hpp"
#include "liftsched/sdp.hpp"

#include <cstdint>
#include <optional>

namespace liftsched {

struct InfeasibleError : std::runtime_error {
    InfeasibleError(const std::string& what, std::vector<FamilyWeight> cert)
        : std::runtime_error(what), certificate(std::move(cert)) {}
    std::vector<FamilyWeight> certificate;
};

// Unstructured transformed controller blocks; the pinned and zero blocks are implied.
struct TransformedBlocks {
    Mat K11, K12, K13, L1;
    Mat K21, K22, K31, K32, K33, L3;
    Mat M1, M2;
};

struct SynthesisSolution {
    PlantPartition dims;
    Mat X1, Y1;
    Mat Q2, Q3, Qt1;
    TransformedBlocks Kbar;
    Mat Z;
    double gamma = 0.0;      // level certified by the returned variables
    double gamma_opt = 0.0;  // optimal value of the minimization

    Index num_variables = 0;
    Index num_blocks = 0;
    int iterations = 0;
    std::vector<std::string> block_names;
    std::vector<double> block_margins;
    MarginReport q2_class, q3_class, qt1_class;

    [[nodiscard]] Index r_s() const { return dims.r_s(); }
    // X_1 or [Q2 Q3]; Y_1 or [Qt1 I].
    [[nodiscard]] Mat X(int i) const;
    [[nodiscard]] Mat Y(int j) const;
    // Composite blocks with the pinned entry A22-dependent, hence the lifted plant argument.
    [[nodiscard]] Mat K(int i, int j, const LiftedPlantLfr& Pl) const;
    [[nodiscard]] Mat L(int i) const;
    [[nodiscard]] Mat M(int j) const;
    [[nodiscard]] Mat Xbold() const;
};

struct SynthesisOptions {
    double eps_strict = 1e-6;
    SolverOptions solver;
    std::optional<ScalingMask> mask;
    std::uint64_t seed = 1;
    int max_retries = 8;
    // After minimizing, the certificate is re-centred at gamma_opt * (1 + recenter_slack).
    bool recenter = true;
    double recenter_slack = 1e-4;
    // Candidate bounds on |X1|, |Y1|, |Q2|, |Q3|, |Qt1| for the re-centred point.
    std::vector<double> recenter_bounds = {1.0, 4.0, 16.0, 64.0, 256.0, 1024.0};
    // Times the slack is multiplied by ten when no bound admits a point.
    int recenter_widenings = 2;
    // Number of re-centred candidates kept, best bound-adjusted margin first.
    int recenter_keep = 3;
    // Re-centred points where Q3 - Q2 or [Q2 I; I Qt1] is this close to singular (relative to its size)
    // are re-solved with their inertia pinned away from singularity.
    double conditioning_target = 1e-2;
};

struct SynthesisVariables {
    MatrixVar X1, Y1, Q2, Q3, Qt1;
    MatrixVar K11, K12, K13, L1, K21, K22, K31, K32, K33, L3, M1, M2;
    MatrixVar Z;
    Index gamma = -1;
};

struct SynthesisProblem {
    LmiProblem lmi;
    SynthesisVariables vars;
};

[[nodiscard]] SynthesisProblem assemble(const LiftedPlantLfr& Pl, const ValueSet& vs,
                                        const std::optional<ScalingMask>& mask = std::nullopt,
                                        double eps_strict = 1e-6);

// Reads a solution out of a decision vector of the assembled problem.
[[nodiscard]] SynthesisSolution extract_solution(const SynthesisProblem& sp, const LiftedPlantLfr& Pl, const Vec& x);

// Re-centred solutions ordered by margin over max(1, bound)^2; the minimizer itself when recentring is off.
// Throws InfeasibleError or NumericalError.
[[nodiscard]] std::vector<SynthesisSolution> synthesize_candidates(const LiftedPlantLfr& Pl, const ValueSet& vs,
                                                                   const SynthesisOptions& opts = {});

// First candidate. Throws InfeasibleError or NumericalError.
[[nodiscard]] SynthesisSolution synthesize(const LiftedPlantLfr& Pl, const ValueSet& vs,
                                           const SynthesisOptions& opts = {});

// Transformed closed-loop blocks (bold A_ij, B_i, C_j, D) for a solution.
[[nodiscard]] LfrBlocks transformed_blocks(const LiftedPlantLfr& Pl, const SynthesisSolution& s);

struct SynthesisLmiReport {
    std::vector<std::string> labels;
    std::vector<double> margins;  // -max_eig of each "< 0" condition
    [[nodiscard]] double min_margin() const;
    [[nodiscard]] bool feasible() const { return min_margin() > 0.0; }
};

// Dense evaluation of the synthesis inequalities (with Z^{-1} explicit) at the given level.
[[nodiscard]] SynthesisLmiReport evaluate_synthesis_lmis(const LiftedPlantLfr& Pl, const ValueSet& vs,
                                                         const SynthesisSolution& s, double gamma);

// Closed-form number of scalar decision variables for the unmasked problem.
[[nodiscard]] Index synthesis_variable_count(const PlantPartition& dims);

}  // namespace liftsched
