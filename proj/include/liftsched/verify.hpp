#pragma once

#include "liftsched/reconstruct.hpp"

#include <functional>

namespace liftsched {

// Margins are written in "> 0" form; a certificate is valid when all are positive.
struct AnalysisCertificate {
    SymMat Xcal1;
    Mat Z;
    double gamma = 0.0;
    std::vector<std::string> labels;
    std::vector<double> margins;
    MarginReport scaling;

    [[nodiscard]] double min_margin() const;
    [[nodiscard]] bool valid() const { return min_margin() > 0.0; }
    void add(const std::string& label, double margin);
};

[[nodiscard]] AnalysisCertificate check_lifted_analysis(const ClosedLoopLfr& CL, const SymMat& Xcal1,
                                                        const SymMat& Pcal, const Mat& Z, double gamma,
                                                        const ValueSet& vs, const SamplingOptions& opts = {});

[[nodiscard]] AnalysisCertificate check_original_analysis(const ClosedLoopLfr& CL, const SymMat& Xcal1,
                                                          const FullBlockScalingHat& Phat, const Mat& Z, double gamma,
                                                          const ValueSet& vs, const SamplingOptions& opts = {});

// Squared H2 norm of the frozen loop; StabilityError when not Hurwitz.
[[nodiscard]] double frozen_h2(const ClosedLoopLfr& CL, const Mat& V);

using DeltaTrajectory = std::function<Mat(double)>;

// Random hull points held for `period` seconds each.
[[nodiscard]] DeltaTrajectory piecewise_constant_trajectory(const ValueSet& vs, double period, std::uint64_t seed);
[[nodiscard]] DeltaTrajectory constant_trajectory(const Mat& V);

struct SimulationOptions {
    double horizon = 10.0;
    double switch_period = 0.1;  // scheduling value is held constant on [k T, (k+1) T)
    double max_step = 0.01;
};

struct SimulationReport {
    std::vector<double> t;
    std::vector<std::vector<double>> state_norm;  // one trajectory per run
    double decay_rate = 0.0;                      // fitted alpha
    double envelope_gain = 0.0;                   // fitted K
    std::vector<double> impulse_energy;           // per performance input direction
    double total_impulse_energy = 0.0;
    double step = 0.0;

    [[nodiscard]] bool envelope_dominates() const;
};

// Free response from x0.
[[nodiscard]] SimulationReport simulate(const ClosedLoopLfr& CL, const DeltaTrajectory& V, const Vec& x0,
                                        const SimulationOptions& opts = {});
// One run per performance input direction with an impulse at t = 0; energies of z_p.
[[nodiscard]] SimulationReport simulate_impulse(const ClosedLoopLfr& CL, const DeltaTrajectory& V,
                                                const SimulationOptions& opts = {});

// Least-squares fit of log|x| = log K - alpha t over the trailing 80% of the samples, K raised to dominate.
void fit_decay(const std::vector<double>& t, const std::vector<std::vector<double>>& norms, double& alpha, double& K);

// Full design chain: lift, synthesize, reconstruct, and both analysis checks.
struct DesignResult {
    LiftedPlantLfr lifted;
    SynthesisSolution solution;
    Reconstruction reconstruction;
    ClosedLoopLfr lifted_loop;
    ClosedLoopLfr original_loop;
    FullBlockScalingHat hat;
    AnalysisCertificate lifted_check;
    AnalysisCertificate original_check;

    [[nodiscard]] bool verified() const { return lifted_check.valid() && original_check.valid(); }
};

[[nodiscard]] DesignResult design(const StructuredPlantLfr& P, const ValueSet& vs, const SynthesisOptions& opts = {},
                                  const SamplingOptions& sampling = {});

using PlantFamily = std::function<StructuredPlantLfr(double)>;

struct NamedMask {
    std::string id;
    std::optional<ScalingMask> mask;
};

enum class CellStatus { Optimal, Infeasible, NumericalFailure, InputError };

[[nodiscard]] const char* to_string(CellStatus s);

struct SweepCell {
    double a = 0.0;
    std::string mask_id;
    CellStatus status = CellStatus::NumericalFailure;
    double gamma = 0.0;
    double margin = 0.0;
    double solve_time = 0.0;
    std::string message;
};

// Grid-major, mask-minor ordering regardless of the number of worker threads.
[[nodiscard]] std::vector<SweepCell> conservatism_sweep(const PlantFamily& family, const ValueSet& vs,
                                                        const std::vector<double>& grid,
                                                        const std::vector<NamedMask>& masks,
                                                        const SynthesisOptions& opts = {}, unsigned threads = 0);

[[nodiscard]] std::string sweep_csv(const std::vector<SweepCell>& cells, bool with_timing = true);
// Columns a, then gamma per mask (empty when not optimal).
[[nodiscard]] std::string sweep_plot_data(const std::vector<SweepCell>& cells, const std::vector<NamedMask>& masks);

}  // namespace liftsched
