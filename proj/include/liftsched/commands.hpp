#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace liftsched {

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 1,
    kExitInfeasible = 2,  // also: verification failed
    kExitNumerical = 3,   // also: well-posedness lost
    kExitAllInfeasible = 4,
};

struct SynthesizeArgs {
    std::string problem;
    std::string out = "controller.json";
    std::string certificate;  // empty: next to `out` as <stem>.certificate.json
    std::string report;       // empty: report on stdout only
};

struct VerifyArgs {
    std::string problem;
    std::string controller;
    std::string certificate;
};

struct SweepArgs {
    std::string family;
    std::string grid;                // empty: the family file's grid
    std::vector<std::string> masks;  // empty: the family file's masks, else none and block-diagonal
    std::string out;                 // empty: CSV on stdout
    std::string plot;                // companion plot data, optional
    bool timing = true;
    unsigned threads = 0;
};

struct SimulateArgs {
    std::string problem;
    std::string controller;
    std::uint64_t seed = 1;
    double horizon = 10.0;
    double period = 0.1;
    std::string out;  // trajectory CSV, optional
};

// Each command writes its report to `out`, diagnostics to `err`, and returns an ExitCode.
int cmd_synthesize(const SynthesizeArgs& a, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err);

[[nodiscard]] std::string default_certificate_path(const std::string& controller_path);

}  // namespace liftsched
