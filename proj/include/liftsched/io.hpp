#pragma once

#include "liftsched/reconstruct.hpp"
#include "liftsched/verify.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace liftsched {

using Json = nlohmann::json;

// Malformed or inconsistent input files; the message carries the file and the offending location.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Matrices are {"shape": [rows, cols], "data": [[row 0], [row 1], ...]}.
[[nodiscard]] Json matrix_to_json(const Mat& m);
[[nodiscard]] Mat matrix_from_json(const Json& j, const std::string& where);

// Parses text, reporting line and column of syntax errors.
[[nodiscard]] Json parse_json(const std::string& text, const std::string& source);
[[nodiscard]] Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Eps and sampling defaults by name: "default", "strict" or "relaxed".
struct ToleranceProfile {
    double eps_strict = 1e-6;
    int samples = 200;
};
[[nodiscard]] ToleranceProfile tolerance_profile(const std::string& name);
// Profile named by LIFTSCHED_TOLERANCE_PROFILE, or the default one.
[[nodiscard]] ToleranceProfile environment_profile();

// Problem file: partition, plant (full matrix or named blocks), value set, options.
struct ProblemFile {
    StructuredPlantLfr plant;
    ValueSet values;
    SynthesisOptions options;
    SamplingOptions sampling;
};

[[nodiscard]] ProblemFile problem_from_json(const Json& j, const ToleranceProfile& profile = {});
[[nodiscard]] Json problem_to_json(const StructuredPlantLfr& P, const ValueSet& vs);

// Family file: plant(a) = P0 + a P1 over a default grid, with named or explicit masks.
struct FamilyFile {
    PlantPartition dims;
    Mat P0, P1;
    ValueSet values;
    SynthesisOptions options;
    std::vector<double> grid;
    std::vector<NamedMask> masks;

    [[nodiscard]] StructuredPlantLfr plant(double a) const;
};

[[nodiscard]] FamilyFile family_from_json(const Json& j, const ToleranceProfile& profile = {});

// "a0:a1:steps" with steps >= 1 points, endpoints included.
[[nodiscard]] std::vector<double> parse_grid(const std::string& spec);
// "none", "block-diagonal" or "diagonal" for a channel of u_hat + v_hat.
[[nodiscard]] NamedMask named_mask(const std::string& id, Index u_hat, Index v_hat);

[[nodiscard]] Json controller_to_json(const GainScheduledController& K);
[[nodiscard]] GainScheduledController controller_from_json(const Json& j);

// Serialized certificate of a design: X_cal_1, P_cal, Z, gamma and the margins found at design time.
struct CertificateFile {
    SymMat Xcal1;
    SymMat Pcal;
    Mat Z;
    double gamma = 0.0;
    double gamma_opt = 0.0;
};

[[nodiscard]] Json certificate_to_json(const DesignResult& d);
[[nodiscard]] CertificateFile certificate_from_json(const Json& j);

[[nodiscard]] Json analysis_to_json(const AnalysisCertificate& c);

}  // namespace liftsched
