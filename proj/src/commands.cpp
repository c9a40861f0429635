#include "liftsched/commands.hpp"

#include "liftsched/io.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace liftsched {

namespace {

// Maps library exceptions onto the exit-code contract.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const WellPosednessError& e) {
        err << "well-posedness: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const StabilityError& e) {
        err << "stability: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

Json margins_json(const std::vector<std::string>& labels, const std::vector<double>& values) {
    Json j = Json::object();
    for (size_t i = 0; i < labels.size(); ++i) j[labels[i]] = values[i];
    return j;
}

// Dimensions of a controller against the plant it is meant for.
void require_compatible(const StructuredPlantLfr& P, const GainScheduledController& K) {
    const ControllerPartition& d = K.dims;
    if (d.k != P.dims.k || d.m != P.dims.m) {
        throw InputError("controller: measurement/control sizes do not match the plant");
    }
    if (const auto* t = std::get_if<TriangularSchedule>(&K.schedule.impl())) {
        if (t->u_hat != P.dims.u_hat() || t->v_hat != P.dims.v_hat()) {
            throw InputError("controller: schedule is defined for a different value set size");
        }
    }
}

}  // namespace

std::string default_certificate_path(const std::string& controller_path) {
    const std::string ext = ".json";
    if (controller_path.size() > ext.size() &&
        controller_path.compare(controller_path.size() - ext.size(), ext.size(), ext) == 0) {
        return controller_path.substr(0, controller_path.size() - ext.size()) + ".certificate.json";
    }
    return controller_path + ".certificate.json";
}

int cmd_synthesize(const SynthesizeArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ProblemFile f = problem_from_json(read_json_file(a.problem), environment_profile());
        const DesignResult d = design(f.plant, f.values, f.options, f.sampling);

        write_text_file(a.out, controller_to_json(d.reconstruction.controller).dump(2) + "\n");
        const std::string cert = a.certificate.empty() ? default_certificate_path(a.out) : a.certificate;
        write_text_file(cert, certificate_to_json(d).dump(2) + "\n");

        const SynthesisSolution& s = d.solution;
        Json report = {{"gamma", s.gamma},
                       {"gamma_opt", s.gamma_opt},
                       {"variables", s.num_variables},
                       {"blocks", s.num_blocks},
                       {"synthesis_margins", margins_json(s.block_names, s.block_margins)},
                       {"pin_residual", d.reconstruction.pin_residual},
                       {"warnings", d.reconstruction.warnings},
                       {"lifted_check", analysis_to_json(d.lifted_check)},
                       {"original_check", analysis_to_json(d.original_check)},
                       {"verified", d.verified()},
                       {"controller", a.out},
                       {"certificate", cert}};
        const std::string text = report.dump(2) + "\n";
        if (!a.report.empty()) write_text_file(a.report, text);
        out << text;
        if (!d.verified()) {
            err << "verification failed: lifted margin " << d.lifted_check.min_margin() << ", original margin "
                << d.original_check.min_margin() << "\n";
            return static_cast<int>(kExitInfeasible);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ProblemFile f = problem_from_json(read_json_file(a.problem), environment_profile());
        const GainScheduledController K = controller_from_json(read_json_file(a.controller));
        const CertificateFile c = certificate_from_json(read_json_file(a.certificate));
        require_compatible(f.plant, K);

        const LiftedPlantLfr Pl = lift_plant(f.plant);
        const AnalysisCertificate lifted =
            check_lifted_analysis(close_loop_lifted(Pl, K), c.Xcal1, c.Pcal, c.Z, c.gamma, f.values, f.sampling);
        const FullBlockScalingHat hat = build_hat_scaling(c.Pcal, f.values.u_hat, f.values.v_hat, K.dims.r_c());
        const AnalysisCertificate original = check_original_analysis(close_loop_original(f.plant, K), c.Xcal1, hat,
                                                                     c.Z, c.gamma, f.values, f.sampling);
        const bool ok = lifted.valid() && original.valid();
        const Json report = {{"gamma", c.gamma},
                             {"lifted_check", analysis_to_json(lifted)},
                             {"original_check", analysis_to_json(original)},
                             {"verified", ok}};
        out << report.dump(2) << "\n";
        if (!ok) err << "verification failed\n";
        return static_cast<int>(ok ? kExitOk : kExitInfeasible);
    });
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const FamilyFile f = family_from_json(read_json_file(a.family), environment_profile());
        const std::vector<double> grid = a.grid.empty() ? f.grid : parse_grid(a.grid);
        if (grid.empty()) throw InputError("sweep: no grid in the family file and none given");
        std::vector<NamedMask> masks;
        if (!a.masks.empty()) {
            for (const auto& id : a.masks) masks.push_back(named_mask(id, f.dims.u_hat(), f.dims.v_hat()));
        } else if (!f.masks.empty()) {
            masks = f.masks;
        } else {
            masks = {named_mask("none", f.dims.u_hat(), f.dims.v_hat()),
                     named_mask("block-diagonal", f.dims.u_hat(), f.dims.v_hat())};
        }

        const auto family = [&f](double x) { return f.plant(x); };
        const std::vector<SweepCell> cells = conservatism_sweep(family, f.values, grid, masks, f.options, a.threads);
        const std::string csv = sweep_csv(cells, a.timing);
        if (a.out.empty()) {
            out << csv;
        } else {
            write_text_file(a.out, csv);
        }
        if (!a.plot.empty()) write_text_file(a.plot, sweep_plot_data(cells, masks));

        int optimal = 0, infeasible = 0;
        for (const auto& c : cells) {
            optimal += c.status == CellStatus::Optimal;
            infeasible += c.status == CellStatus::Infeasible;
            if (c.status != CellStatus::Optimal) err << "a = " << c.a << ", " << c.mask_id << ": " << c.message << "\n";
        }
        if (optimal > 0) return static_cast<int>(kExitOk);
        if (infeasible == static_cast<int>(cells.size())) return static_cast<int>(kExitAllInfeasible);
        return static_cast<int>(kExitNumerical);
    });
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!(a.horizon >= 0.0)) throw InputError("simulate: horizon must be non-negative");
        if (!(a.period > 0.0)) throw InputError("simulate: switching period must be positive");
        const ProblemFile f = problem_from_json(read_json_file(a.problem), environment_profile());
        const GainScheduledController K = controller_from_json(read_json_file(a.controller));
        require_compatible(f.plant, K);

        SimulationOptions so;
        so.horizon = a.horizon;
        so.switch_period = a.period;
        const ClosedLoopLfr CL = close_loop_original(f.plant, K);
        const SimulationReport r = simulate_impulse(CL, piecewise_constant_trajectory(f.values, a.period, a.seed), so);

        if (!a.out.empty()) {
            std::ostringstream csv;
            csv << std::setprecision(17) << "t";
            for (size_t i = 0; i < r.state_norm.size(); ++i) csv << ",norm" << i;
            csv << "\n";
            for (size_t k = 0; k < r.t.size(); ++k) {
                csv << r.t[k];
                for (const auto& run : r.state_norm) csv << "," << run[k];
                csv << "\n";
            }
            write_text_file(a.out, csv.str());
        }
        const Json summary = {{"horizon", a.horizon},
                              {"seed", a.seed},
                              {"samples", r.t.size()},
                              {"step", r.step},
                              {"decay_rate", r.decay_rate},
                              {"envelope_gain", r.envelope_gain},
                              {"envelope_dominates", r.envelope_dominates()},
                              {"impulse_energy", r.impulse_energy},
                              {"total_impulse_energy", r.total_impulse_energy}};
        out << summary.dump(2) << "\n";
        return static_cast<int>(kExitOk);
    });
}

}  // namespace liftsched
