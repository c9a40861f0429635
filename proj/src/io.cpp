#include "liftsched/io.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace liftsched {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw InputError(where + ": " + what); }

const Json& field(const Json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(where, "missing field \"" + key + "\"");
    return *it;
}

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

Index count(const Json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(where, "expected a non-negative integer");
    return static_cast<Index>(j.get<long long>());
}

template <typename T>
T optional_value(const Json& j, const std::string& key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const Json::exception&) {
        fail(key, "has the wrong type");
    }
}

BoolMat bool_matrix(const Json& j, const std::string& where, Index n) {
    const Mat m = matrix_from_json(j, where);
    if (m.rows() != n || m.cols() != n) fail(where, "mask must be " + std::to_string(n) + "x" + std::to_string(n));
    return m.array() != 0.0;
}

PlantPartition partition_from_json(const Json& j) {
    const std::string w = "partition";
    PlantPartition d;
    d.ns = count(field(j, "ns", w), w + ".ns");
    d.u1 = count(field(j, "u1", w), w + ".u1");
    d.u2 = count(field(j, "u2", w), w + ".u2");
    d.v1 = count(field(j, "v1", w), w + ".v1");
    d.v2 = count(field(j, "v2", w), w + ".v2");
    d.q = count(field(j, "q", w), w + ".q");
    d.p = count(field(j, "p", w), w + ".p");
    d.m = count(field(j, "m", w), w + ".m");
    d.k = count(field(j, "k", w), w + ".k");
    return d;
}

Json partition_to_json(const PlantPartition& d) {
    return {{"ns", d.ns}, {"u1", d.u1}, {"u2", d.u2}, {"v1", d.v1}, {"v2", d.v2},
            {"q", d.q},   {"p", d.p},   {"m", d.m},   {"k", d.k}};
}

const std::vector<std::pair<std::string, PlantRow>> kRows = {{"x", PlantRow::State},
                                                             {"z1", PlantRow::Z1},
                                                             {"z2", PlantRow::Z2},
                                                             {"zp", PlantRow::Perf},
                                                             {"y", PlantRow::Meas}};
const std::vector<std::pair<std::string, PlantCol>> kCols = {{"x", PlantCol::State},
                                                             {"w1", PlantCol::W1},
                                                             {"w2", PlantCol::W2},
                                                             {"wp", PlantCol::Perf},
                                                             {"u", PlantCol::Control}};

// Either {"matrix": M} or {"blocks": {"row/col": B, ...}} with unnamed blocks zero.
Mat plant_matrix(const Json& j, const PlantPartition& d, const std::string& where) {
    const BlockSpec rows = d.row_spec(), cols = d.col_spec();
    if (j.contains("matrix")) {
        const Mat M = matrix_from_json(j["matrix"], where + ".matrix");
        if (M.rows() != rows.total() || M.cols() != cols.total()) {
            fail(where + ".matrix", "shape does not match the partition");
        }
        return M;
    }
    const Json& blocks = field(j, "blocks", where);
    if (!blocks.is_object()) fail(where + ".blocks", "expected an object");
    StructuredPlantLfr P = StructuredPlantLfr::zeros(d);
    for (const auto& [key, value] : blocks.items()) {
        const auto slash = key.find('/');
        const std::string r = key.substr(0, slash), c = slash == std::string::npos ? "" : key.substr(slash + 1);
        const auto ri = std::find_if(kRows.begin(), kRows.end(), [&](const auto& e) { return e.first == r; });
        const auto ci = std::find_if(kCols.begin(), kCols.end(), [&](const auto& e) { return e.first == c; });
        if (ri == kRows.end() || ci == kCols.end()) fail(where + ".blocks", "unknown block \"" + key + "\"");
        const Mat b = matrix_from_json(value, where + ".blocks." + key);
        const Index ir = static_cast<Index>(ri - kRows.begin()), ic = static_cast<Index>(ci - kCols.begin());
        if (b.rows() != rows.size(ir) || b.cols() != cols.size(ic)) {
            fail(where + ".blocks." + key, "shape does not match the partition");
        }
        P.set(ri->second, ci->second, b);
    }
    return P.M;
}

ValueSet values_from_json(const Json& j, const PlantPartition& d) {
    const std::string w = "values";
    ValueSet vs;
    vs.u_hat = count(field(j, "u_hat", w), w + ".u_hat");
    vs.v_hat = count(field(j, "v_hat", w), w + ".v_hat");
    const Json& verts = field(j, "vertices", w);
    if (!verts.is_array()) fail(w + ".vertices", "expected an array");
    for (size_t i = 0; i < verts.size(); ++i) {
        vs.vertices.push_back(matrix_from_json(verts[i], w + ".vertices[" + std::to_string(i) + "]"));
    }
    if (vs.u_hat != d.u_hat() || vs.v_hat != d.v_hat()) fail(w, "value set size does not match the partition");
    const ValueSetReport rep = validate_value_set(vs);
    if (!rep.valid()) {
        std::string msg = "invalid value set";
        for (const auto& p : rep.problems) msg += "; " + p;
        fail(w, msg);
    }
    return vs;
}

Json values_to_json(const ValueSet& vs) {
    Json verts = Json::array();
    for (const Mat& v : vs.vertices) verts.push_back(matrix_to_json(v));
    return {{"u_hat", vs.u_hat}, {"v_hat", vs.v_hat}, {"vertices", verts}};
}

std::optional<ScalingMask> mask_from_json(const Json& j, Index u_hat, Index v_hat, const std::string& where) {
    if (j.is_string()) return named_mask(j.get<std::string>(), u_hat, v_hat).mask;
    const Index r = u_hat + v_hat;
    ScalingMask m;
    m.Q2 = bool_matrix(field(j, "Q2", where), where + ".Q2", r);
    m.Q3 = bool_matrix(field(j, "Q3", where), where + ".Q3", r);
    m.Qt1 = bool_matrix(field(j, "Qt1", where), where + ".Qt1", r);
    const std::string problem = mask_problem(m, r);
    if (!problem.empty()) fail(where, problem);
    return m;
}

void read_options(const Json& j, const PlantPartition& d, const ToleranceProfile& profile, SynthesisOptions& o,
                  SamplingOptions* sampling) {
    o.eps_strict = profile.eps_strict;
    if (sampling) sampling->samples = profile.samples;
    if (!j.contains("options")) return;
    const Json& opt = j["options"];
    if (!opt.is_object()) fail("options", "expected an object");
    o.eps_strict = optional_value(opt, "eps_strict", o.eps_strict);
    if (!(o.eps_strict > 0.0)) fail("options.eps_strict", "must be positive");
    o.seed = optional_value<std::uint64_t>(opt, "seed", o.seed);
    o.recenter = optional_value(opt, "recenter", o.recenter);
    o.recenter_slack = optional_value(opt, "recenter_slack", o.recenter_slack);
    if (opt.contains("mask")) o.mask = mask_from_json(opt["mask"], d.u_hat(), d.v_hat(), "options.mask");
    if (sampling) {
        sampling->samples = optional_value(opt, "samples", sampling->samples);
        sampling->seed = optional_value<std::uint64_t>(opt, "sampling_seed", sampling->seed);
    }
}

}  // namespace

Json matrix_to_json(const Mat& m) {
    Json data = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        data.push_back(row);
    }
    return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Mat matrix_from_json(const Json& j, const std::string& where) {
    const Json& shape = field(j, "shape", where);
    if (!shape.is_array() || shape.size() != 2) fail(where + ".shape", "expected [rows, cols]");
    const Index r = count(shape[0], where + ".shape[0]"), c = count(shape[1], where + ".shape[1]");
    const Json& data = field(j, "data", where);
    if (!data.is_array() || static_cast<Index>(data.size()) != r) {
        fail(where + ".data", "expected " + std::to_string(r) + " rows");
    }
    Mat m(r, c);
    for (Index i = 0; i < r; ++i) {
        const Json& row = data[static_cast<size_t>(i)];
        const std::string rw = where + ".data[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<Index>(row.size()) != c) {
            fail(rw, "expected " + std::to_string(c) + " entries");
        }
        for (Index k = 0; k < c; ++k) m(i, k) = number(row[static_cast<size_t>(k)], rw + "[" + std::to_string(k) + "]");
    }
    return m;
}

Json parse_json(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // Byte offset to line and column.
        size_t line = 1, col = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << source << ": malformed JSON at line " << line << ", column " << col << " (byte " << e.byte << ")";
        throw InputError(os.str());
    }
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_json(os.str(), path);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(path + ": cannot write file");
    out << text;
}

ToleranceProfile tolerance_profile(const std::string& name) {
    if (name.empty() || name == "default") return {};
    if (name == "strict") return {1e-7, 500};
    if (name == "relaxed") return {1e-5, 100};
    throw InputError("unknown tolerance profile \"" + name + "\"");
}

ToleranceProfile environment_profile() {
    const char* v = std::getenv("LIFTSCHED_TOLERANCE_PROFILE");
    return tolerance_profile(v ? v : "");
}

ProblemFile problem_from_json(const Json& j, const ToleranceProfile& profile) {
    ProblemFile f;
    const PlantPartition d = partition_from_json(field(j, "partition", "problem"));
    f.plant = StructuredPlantLfr::zeros(d);
    f.plant.M = plant_matrix(field(j, "plant", "problem"), d, "plant");
    const PlantReport rep = validate_plant(f.plant);
    if (!rep.valid()) {
        std::string msg = "invalid plant";
        for (const auto& e : rep.dimension_errors) msg += "; " + e;
        for (const auto& v : rep.violations) msg += "; block " + v.block + " must vanish";
        fail("plant", msg);
    }
    f.values = values_from_json(field(j, "values", "problem"), d);
    read_options(j, d, profile, f.options, &f.sampling);
    return f;
}

Json problem_to_json(const StructuredPlantLfr& P, const ValueSet& vs) {
    return {{"partition", partition_to_json(P.dims)},
            {"plant", {{"matrix", matrix_to_json(P.M)}}},
            {"values", values_to_json(vs)}};
}

StructuredPlantLfr FamilyFile::plant(double a) const {
    StructuredPlantLfr P = StructuredPlantLfr::zeros(dims);
    P.M = P0 + a * P1;
    return P;
}

FamilyFile family_from_json(const Json& j, const ToleranceProfile& profile) {
    FamilyFile f;
    f.dims = partition_from_json(field(j, "partition", "family"));
    f.P0 = plant_matrix(field(j, "P0", "family"), f.dims, "P0");
    f.P1 = plant_matrix(field(j, "P1", "family"), f.dims, "P1");
    // Structural zeros must hold for every a, hence for both terms.
    for (const Mat* M : {&f.P0, &f.P1}) {
        StructuredPlantLfr P = StructuredPlantLfr::zeros(f.dims);
        P.M = *M;
        if (!validate_plant(P).valid()) fail(M == &f.P0 ? "P0" : "P1", "violates the plant structure");
    }
    f.values = values_from_json(field(j, "values", "family"), f.dims);
    read_options(j, f.dims, profile, f.options, nullptr);
    if (j.contains("grid")) {
        if (!j["grid"].is_string()) fail("grid", "expected \"a0:a1:steps\"");
        f.grid = parse_grid(j["grid"].get<std::string>());
    }
    if (j.contains("masks")) {
        const Json& ms = j["masks"];
        if (!ms.is_array()) fail("masks", "expected an array");
        for (size_t i = 0; i < ms.size(); ++i) {
            const std::string w = "masks[" + std::to_string(i) + "]";
            if (ms[i].is_string()) {
                f.masks.push_back(named_mask(ms[i].get<std::string>(), f.dims.u_hat(), f.dims.v_hat()));
            } else {
                const Json& id = field(ms[i], "id", w);
                if (!id.is_string()) fail(w + ".id", "expected a string");
                f.masks.push_back({id.get<std::string>(), mask_from_json(ms[i], f.dims.u_hat(), f.dims.v_hat(), w)});
            }
        }
    }
    return f;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::istringstream in(spec);
    double a0 = 0.0, a1 = 0.0;
    long steps = 0;
    char c1 = 0, c2 = 0;
    if (!(in >> a0 >> c1 >> a1 >> c2 >> steps) || c1 != ':' || c2 != ':' || steps < 1 || !(in >> std::ws).eof()) {
        throw InputError("grid \"" + spec + "\": expected a0:a1:steps with steps >= 1");
    }
    std::vector<double> g;
    if (steps == 1) return {a0};
    for (long i = 0; i < steps; ++i) g.push_back(a0 + (a1 - a0) * static_cast<double>(i) / static_cast<double>(steps - 1));
    return g;
}

NamedMask named_mask(const std::string& id, Index u_hat, Index v_hat) {
    if (id == "none" || id == "full") return {id, std::nullopt};
    if (id == "block-diagonal") return {id, ScalingMask::block_diagonal(u_hat, v_hat)};
    if (id == "diagonal") return {id, ScalingMask::diagonal(u_hat + v_hat)};
    throw InputError("unknown mask \"" + id + "\"");
}

Json controller_to_json(const GainScheduledController& K) {
    const ControllerPartition& d = K.dims;
    Json j = {{"partition", {{"nc", d.nc}, {"rc1", d.rc1}, {"rc2", d.rc2}, {"k", d.k}, {"m", d.m}}},
              {"matrix", matrix_to_json(K.M)}};
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantSchedule>) {
                j["schedule"] = {{"kind", "constant"}, {"value", matrix_to_json(s.value)}};
            } else {
                j["schedule"] = {{"kind", "triangular"},       {"u_hat", s.u_hat},
                                 {"v_hat", s.v_hat},           {"Q2", matrix_to_json(s.Q2)},
                                 {"Q3", matrix_to_json(s.Q3)}, {"Qt1", matrix_to_json(s.Qt1)},
                                 {"U2", matrix_to_json(s.U2)}, {"V2", matrix_to_json(s.V2)}};
            }
        },
        K.schedule.impl());
    return j;
}

GainScheduledController controller_from_json(const Json& j) {
    const std::string w = "controller";
    const Json& p = field(j, "partition", w);
    ControllerPartition d;
    d.nc = count(field(p, "nc", w + ".partition"), w + ".partition.nc");
    d.rc1 = count(field(p, "rc1", w + ".partition"), w + ".partition.rc1");
    d.rc2 = count(field(p, "rc2", w + ".partition"), w + ".partition.rc2");
    d.k = count(field(p, "k", w + ".partition"), w + ".partition.k");
    d.m = count(field(p, "m", w + ".partition"), w + ".partition.m");
    GainScheduledController K = GainScheduledController::zeros(d);
    const Mat M = matrix_from_json(field(j, "matrix", w), w + ".matrix");
    if (M.rows() != K.M.rows() || M.cols() != K.M.cols()) fail(w + ".matrix", "shape does not match the partition");
    K.M = M;
    const Json& s = field(j, "schedule", w);
    const Json& kind = field(s, "kind", w + ".schedule");
    if (kind == "constant") {
        K.schedule = ConstantSchedule{matrix_from_json(field(s, "value", w + ".schedule"), w + ".schedule.value")};
    } else if (kind == "triangular") {
        TriangularSchedule t;
        const std::string sw = w + ".schedule";
        t.u_hat = count(field(s, "u_hat", sw), sw + ".u_hat");
        t.v_hat = count(field(s, "v_hat", sw), sw + ".v_hat");
        t.Q2 = matrix_from_json(field(s, "Q2", sw), sw + ".Q2");
        t.Q3 = matrix_from_json(field(s, "Q3", sw), sw + ".Q3");
        t.Qt1 = matrix_from_json(field(s, "Qt1", sw), sw + ".Qt1");
        t.U2 = matrix_from_json(field(s, "U2", sw), sw + ".U2");
        t.V2 = matrix_from_json(field(s, "V2", sw), sw + ".V2");
        K.schedule = t;
    } else {
        fail(w + ".schedule.kind", "expected \"constant\" or \"triangular\"");
    }
    if (K.schedule.dim() != d.r_c()) fail(w + ".schedule", "size does not match the partition");
    return K;
}

Json certificate_to_json(const DesignResult& d) {
    return {{"Xcal1", matrix_to_json(d.reconstruction.Xcal1.mat())},
            {"Pcal", matrix_to_json(d.reconstruction.Pcal.mat())},
            {"Z", matrix_to_json(d.solution.Z)},
            {"gamma", d.solution.gamma},
            {"gamma_opt", d.solution.gamma_opt}};
}

CertificateFile certificate_from_json(const Json& j) {
    const std::string w = "certificate";
    CertificateFile c;
    const Mat X = matrix_from_json(field(j, "Xcal1", w), w + ".Xcal1");
    const Mat P = matrix_from_json(field(j, "Pcal", w), w + ".Pcal");
    if (X.rows() != X.cols()) fail(w + ".Xcal1", "must be square");
    if (P.rows() != P.cols()) fail(w + ".Pcal", "must be square");
    c.Xcal1 = SymMat(X);
    c.Pcal = SymMat(P);
    c.Z = matrix_from_json(field(j, "Z", w), w + ".Z");
    if (c.Z.rows() != c.Z.cols()) fail(w + ".Z", "must be square");
    c.gamma = number(field(j, "gamma", w), w + ".gamma");
    c.gamma_opt = j.contains("gamma_opt") ? number(j["gamma_opt"], w + ".gamma_opt") : c.gamma;
    return c;
}

Json analysis_to_json(const AnalysisCertificate& c) {
    Json margins = Json::object();
    for (size_t i = 0; i < c.labels.size(); ++i) margins[c.labels[i]] = c.margins[i];
    return {{"valid", c.valid()},
            {"min_margin", c.min_margin()},
            {"margins", margins},
            {"scaling_margin", c.scaling.margin},
            {"scaling_vertex_margin", c.scaling.vertex_margin},
            {"scaling_sampled_margin", c.scaling.sampled_margin}};
}

}  // namespace liftsched
