#include "liftsched/verify.hpp"

#include <Eigen/LU>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace liftsched {

namespace {

Mat eye(Index n) { return Mat::Identity(n, n); }

Mat anti_diag(const Mat& P) {
    const Index r = P.rows();
    Mat out = Mat::Zero(2 * r, 2 * r);
    out.topRightCorner(r, r) = P;
    out.bottomLeftCorner(r, r) = P;
    return out;
}

Mat energy_weight(const Mat& Z, Index q) {
    const Index p = Z.rows();
    Mat out = Mat::Zero(q + p, q + p);
    out.bottomRightCorner(p, p) = Z.inverse();
    return out;
}

Mat performance_weight(double gamma, Index q, Index p) {
    Mat out = Mat::Zero(q + p, q + p);
    out.topLeftCorner(q, q) = -gamma * eye(q);
    return out;
}

// Shared part of both analysis checks: X_cal_1, Z, trace and the two dissipation inequalities with channel weight R.
void check_inequalities(AnalysisCertificate& c, const LfrBlocks& b, const SymMat& Xcal1, const Mat& R, const Mat& Z,
                        double gamma) {
    const Index n = b.A11.rows(), q = b.B1.cols(), p = b.C1.rows();
    if (Xcal1.dim() != n || Z.rows() != p || Z.cols() != p || R.rows() != b.A12.cols() + b.A21.rows()) {
        throw DimensionError("analysis: certificate dimensions do not match the closed loop");
    }
    c.add("X_cal_1 > 0", min_eig(Xcal1));
    const double zmin = min_eig(SymMat(Z));
    c.add("Z > 0", zmin);
    c.add("1 - tr(Z) > 0", 1.0 - Z.trace());

    Mat Xsub = Mat::Zero(2 * n, 2 * n);
    Xsub.topLeftCorner(n, n) = -Xcal1.mat();
    if (zmin > 0.0) {
        c.add("output inequality", -max_eig(l_sub_form(SymMat(Xsub), SymMat(R), SymMat(energy_weight(Z, q)), b)));
    } else {
        c.add("output inequality", -std::numeric_limits<double>::infinity());
    }
    c.add("dissipation inequality",
          -max_eig(l_form(SymMat(anti_diag(Xcal1.mat())), SymMat(R), SymMat(performance_weight(gamma, q, p)), b)));
}

// Structurally zero feedthrough can pick up rounding through the channel closure.
bool has_feedthrough(const FrozenSystem& f, const Mat& D) {
    return max_abs(D) > 1e-9 * (1.0 + max_abs(f.B) + max_abs(f.C));
}

}  // namespace

double AnalysisCertificate::min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : margins) m = std::min(m, v);
    return std::min(m, scaling.margin);
}

void AnalysisCertificate::add(const std::string& label, double margin) {
    labels.push_back(label);
    margins.push_back(margin);
}

AnalysisCertificate check_lifted_analysis(const ClosedLoopLfr& CL, const SymMat& Xcal1, const SymMat& Pcal,
                                          const Mat& Z, double gamma, const ValueSet& vs,
                                          const SamplingOptions& opts) {
    if (CL.kind != ScheduleKind::Lifted) throw DimensionError("check_lifted_analysis: closed loop is not lifted");
    if (Pcal.dim() != CL.w_dim()) throw DimensionError("check_lifted_analysis: scaling size differs from the channel");
    AnalysisCertificate c;
    c.Xcal1 = Xcal1;
    c.Z = Z;
    c.gamma = gamma;
    check_inequalities(c, CL.blocks, Xcal1, anti_diag(Pcal.mat()), Z, gamma);
    c.scaling = check_passive(Pcal, CL.controller_schedule, vs, opts);
    return c;
}

AnalysisCertificate check_original_analysis(const ClosedLoopLfr& CL, const SymMat& Xcal1,
                                            const FullBlockScalingHat& Phat, const Mat& Z, double gamma,
                                            const ValueSet& vs, const SamplingOptions& opts) {
    if (CL.kind != ScheduleKind::Extended) throw DimensionError("check_original_analysis: closed loop is lifted");
    AnalysisCertificate c;
    c.Xcal1 = Xcal1;
    c.Z = Z;
    c.gamma = gamma;
    check_inequalities(c, CL.blocks, Xcal1, Phat.P.mat(), Z, gamma);
    c.scaling = check_hat(Phat, CL.controller_schedule, vs, opts);
    return c;
}

double frozen_h2(const ClosedLoopLfr& CL, const Mat& V) {
    const FrozenSystem f = freeze(CL, V);
    if (f.A.rows() > 0 && spectral_abscissa(f.A) >= 0.0) throw StabilityError("frozen_h2: frozen loop is not Hurwitz");
    if (has_feedthrough(f, f.D)) return std::numeric_limits<double>::infinity();
    if (f.A.rows() == 0) return 0.0;
    const Mat G = solve_lyapunov(f.A.transpose(), SymMat(f.B * f.B.transpose())).X;
    return (f.C * G * f.C.transpose()).trace();
}

DeltaTrajectory piecewise_constant_trajectory(const ValueSet& vs, double period, std::uint64_t seed) {
    if (vs.vertices.empty()) throw DimensionError("piecewise_constant_trajectory: empty value set");
    return [vs, period, seed](double t) {
        const auto k = static_cast<std::uint64_t>(std::max(0.0, std::floor(t / period)));
        std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + k);
        std::exponential_distribution<double> ex(1.0);
        Mat out = Mat::Zero(vs.u_hat, vs.v_hat);
        double total = 0.0;
        for (const auto& V : vs.vertices) {
            const double w = ex(rng);
            out += w * V;
            total += w;
        }
        return Mat(out / total);
    };
}

DeltaTrajectory constant_trajectory(const Mat& V) {
    return [V](double) { return V; };
}

bool SimulationReport::envelope_dominates() const {
    for (const auto& run : state_norm) {
        for (size_t i = 0; i < run.size(); ++i) {
            if (run[i] > envelope_gain * std::exp(-decay_rate * t[i]) * (1.0 + 1e-12) + 1e-300) return false;
        }
    }
    return true;
}

void fit_decay(const std::vector<double>& t, const std::vector<std::vector<double>>& norms, double& alpha,
               double& K) {
    alpha = 0.0;
    K = 0.0;
    if (t.empty()) return;
    const double t0 = t.front() + 0.2 * (t.back() - t.front());
    double slowest = std::numeric_limits<double>::infinity();
    for (const auto& run : norms) {
        double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
        for (size_t i = 0; i < run.size(); ++i) {
            if (t[i] < t0 || !(run[i] > 1e-280)) continue;
            const double y = std::log(run[i]);
            n += 1;
            st += t[i];
            sy += y;
            stt += t[i] * t[i];
            sty += t[i] * y;
        }
        if (n < 2) continue;
        const double den = n * stt - st * st;
        if (den <= 0) continue;
        slowest = std::min(slowest, -(n * sty - st * sy) / den);
    }
    if (!std::isfinite(slowest)) return;
    alpha = slowest;
    for (const auto& run : norms) {
        for (size_t i = 0; i < run.size(); ++i) K = std::max(K, run[i] * std::exp(alpha * t[i]));
    }
}

namespace {

struct Segment {
    FrozenSystem sys;
    double t0, t1;
};

std::vector<Segment> segments(const ClosedLoopLfr& CL, const DeltaTrajectory& V, const SimulationOptions& opts) {
    std::vector<Segment> out;
    const double T = opts.switch_period > 0 ? opts.switch_period : opts.horizon;
    for (double t0 = 0.0; t0 < opts.horizon;) {
        const double t1 = std::min(opts.horizon, t0 + T);
        try {
            out.push_back({freeze(CL, V(t0)), t0, t1});
        } catch (const WellPosednessError& e) {
            std::ostringstream os;
            os << "simulate: well-posedness lost at t = " << t0 << " (" << e.what() << ")";
            throw WellPosednessError(os.str());
        }
        t0 = t1;
        if (T <= 0) break;
    }
    return out;
}

// RK4 on the state augmented with the accumulated output energy.
void integrate(const std::vector<Segment>& segs, const SimulationOptions& opts, Vec x, std::vector<double>* t,
               std::vector<double>& norms, double& energy, double& step) {
    energy = 0.0;
    norms.push_back(x.norm());
    if (t) t->push_back(0.0);
    for (const auto& s : segs) {
        const double rho = spectral_radius(s.sys.A);
        double h = opts.max_step;
        if (rho > 0) h = std::min(h, 0.1 / rho);
        const double len = s.t1 - s.t0;
        const int n = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
        h = len / n;
        step = std::max(step, h);
        const auto f = [&](const Vec& xv) { return Vec(s.sys.A * xv); };
        const auto e = [&](const Vec& xv) { return (s.sys.C * xv).squaredNorm(); };
        for (int i = 0; i < n; ++i) {
            const Vec k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
            const double e1 = e(x), e2 = e(x + 0.5 * h * k1), e3 = e(x + 0.5 * h * k2), e4 = e(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            energy += h / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4);
            norms.push_back(x.norm());
            if (t) t->push_back(s.t0 + (i + 1) * h);
        }
    }
}

}  // namespace

SimulationReport simulate(const ClosedLoopLfr& CL, const DeltaTrajectory& V, const Vec& x0,
                          const SimulationOptions& opts) {
    if (x0.size() != CL.n()) throw DimensionError("simulate: initial state has the wrong size");
    SimulationReport r;
    if (opts.horizon <= 0.0) return r;
    const auto segs = segments(CL, V, opts);
    std::vector<double> norms;
    double energy = 0.0;
    integrate(segs, opts, x0, &r.t, norms, energy, r.step);
    r.state_norm.push_back(std::move(norms));
    r.impulse_energy.push_back(energy);
    r.total_impulse_energy = energy;
    fit_decay(r.t, r.state_norm, r.decay_rate, r.envelope_gain);
    return r;
}

SimulationReport simulate_impulse(const ClosedLoopLfr& CL, const DeltaTrajectory& V, const SimulationOptions& opts) {
    SimulationReport r;
    if (opts.horizon <= 0.0) return r;
    const auto segs = segments(CL, V, opts);
    const FrozenSystem& first = segs.front().sys;
    for (Index i = 0; i < first.B.cols(); ++i) {
        std::vector<double> norms;
        double energy = 0.0;
        integrate(segs, opts, first.B.col(i), i == 0 ? &r.t : nullptr, norms, energy, r.step);
        if (has_feedthrough(first, first.D.col(i))) energy = std::numeric_limits<double>::infinity();
        r.state_norm.push_back(std::move(norms));
        r.impulse_energy.push_back(energy);
        r.total_impulse_energy += energy;
    }
    fit_decay(r.t, r.state_norm, r.decay_rate, r.envelope_gain);
    return r;
}

DesignResult design(const StructuredPlantLfr& P, const ValueSet& vs, const SynthesisOptions& opts,
                    const SamplingOptions& sampling) {
    const LiftedPlantLfr lifted = lift_plant(P);
    const auto evaluate = [&](const SynthesisSolution& s) {
        DesignResult d;
        d.lifted = lifted;
        d.solution = s;
        d.reconstruction = reconstruct(d.lifted, d.solution);
        const Reconstruction& r = d.reconstruction;
        d.lifted_loop = close_loop_lifted(d.lifted, r.controller);
        d.original_loop = close_loop_original(P, r.controller);
        d.lifted_check =
            check_lifted_analysis(d.lifted_loop, r.Xcal1, r.Pcal, d.solution.Z, d.solution.gamma, vs, sampling);
        d.hat = build_hat_scaling(r.Pcal, vs.u_hat, vs.v_hat, r.controller.dims.r_c());
        d.original_check =
            check_original_analysis(d.original_loop, r.Xcal1, d.hat, d.solution.Z, d.solution.gamma, vs, sampling);
        return d;
    };
    const auto worst = [](const DesignResult& d) {
        return std::min(d.lifted_check.min_margin(), d.original_check.min_margin());
    };

    // Candidates are tried in order, then again at wider re-centring slacks with every bound kept. The first
    // whose verified margin reaches the target is returned, otherwise the best verified one.
    const double target = 0.25 * opts.eps_strict;
    std::optional<DesignResult> best;
    std::exception_ptr first_error;
    SynthesisOptions o = opts;
    for (int round = 0; round <= opts.recenter_widenings; ++round, o.recenter_slack *= 10.0) {
        for (const SynthesisSolution& s : synthesize_candidates(lifted, vs, o)) {
            try {
                DesignResult d = evaluate(s);
                if (!best || worst(d) > worst(*best)) best = std::move(d);
                if (worst(*best) >= target) return std::move(*best);
            } catch (const WellPosednessError&) {
                if (!first_error) first_error = std::current_exception();
            } catch (const NumericalError&) {
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (!opts.recenter) break;
        o.recenter_keep = static_cast<int>(opts.recenter_bounds.size());
    }
    if (!best) std::rethrow_exception(first_error);
    return std::move(*best);
}

const char* to_string(CellStatus s) {
    switch (s) {
        case CellStatus::Optimal: return "optimal";
        case CellStatus::Infeasible: return "infeasible";
        case CellStatus::NumericalFailure: return "numerical-failure";
        case CellStatus::InputError: return "input-error";
    }
    return "unknown";
}

std::vector<SweepCell> conservatism_sweep(const PlantFamily& family, const ValueSet& vs,
                                          const std::vector<double>& grid, const std::vector<NamedMask>& masks,
                                          const SynthesisOptions& opts, unsigned threads) {
    std::vector<SweepCell> cells(grid.size() * masks.size());
    for (size_t g = 0; g < grid.size(); ++g) {
        for (size_t m = 0; m < masks.size(); ++m) {
            cells[g * masks.size() + m].a = grid[g];
            cells[g * masks.size() + m].mask_id = masks[m].id;
        }
    }
    const auto run = [&](size_t idx) {
        SweepCell& c = cells[idx];
        SynthesisOptions o = opts;
        o.mask = masks[idx % masks.size()].mask;
        o.recenter = false;
        const auto start = std::chrono::steady_clock::now();
        try {
            const LiftedPlantLfr Pl = lift_plant(family(c.a));
            const SynthesisSolution s = synthesize(Pl, vs, o);
            c.status = CellStatus::Optimal;
            c.gamma = s.gamma_opt;
            c.margin = *std::min_element(s.block_margins.begin(), s.block_margins.end());
        } catch (const InfeasibleError& e) {
            c.status = CellStatus::Infeasible;
            c.message = e.what();
        } catch (const NumericalError& e) {
            c.status = CellStatus::NumericalFailure;
            c.message = e.what();
        } catch (const std::exception& e) {
            c.status = CellStatus::InputError;
            c.message = e.what();
        }
        c.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<size_t>(1, cells.size())));
    std::atomic<size_t> next{0};
    const auto worker = [&] {
        for (size_t i = next++; i < cells.size(); i = next++) run(i);
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells, bool with_timing) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "a,mask-id,status,gamma,margin,solve-time\n";
    for (const auto& c : cells) {
        os << c.a << "," << c.mask_id << "," << to_string(c.status) << ",";
        if (c.status == CellStatus::Optimal) os << c.gamma << "," << c.margin;
        else os << ",";
        os << ",";
        if (with_timing) os << std::setprecision(4) << c.solve_time << std::setprecision(12);
        os << "\n";
    }
    return os.str();
}

std::string sweep_plot_data(const std::vector<SweepCell>& cells, const std::vector<NamedMask>& masks) {
    std::ostringstream os;
    os << std::setprecision(12) << "a";
    for (const auto& m : masks) os << "," << m.id;
    os << "\n";
    for (size_t i = 0; i < cells.size(); i += masks.size()) {
        os << cells[i].a;
        for (size_t m = 0; m < masks.size(); ++m) {
            os << ",";
            if (cells[i + m].status == CellStatus::Optimal) os << cells[i + m].gamma;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace liftsched
