#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

fs::path data(const std::string& name) { return fs::path(LIFTSCHED_DATA_DIR) / name; }

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("liftsched_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Run run(const fs::path& dir, const std::string& args) {
    const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(LIFTSCHED_CLI_PATH) + "' " + args + " > '" +
                            o.string() + "' 2> '" + e.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
}

Json load(const fs::path& p) { return Json::parse(slurp(p)); }

Json matrix(const std::vector<std::vector<double>>& rows) {
    return Json{{"shape", {rows.size(), rows.front().size()}}, {"data", rows}};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Synthesizes DESK-1 once; later cases reuse the files.
const fs::path& desk_outputs() {
    static const fs::path dir = [] {
        const fs::path d = scratch("desk");
        const Run r = run(d, "synthesize '" + data("desk1.json").string() + "' --out controller.json --report report.json");
        REQUIRE(r.code == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("synthesize desk problem", "[cli]") {
    const fs::path& d = desk_outputs();
    REQUIRE(fs::exists(d / "controller.json"));
    REQUIRE(fs::exists(d / "controller.certificate.json"));
    const Json rep = load(d / "report.json");
    CHECK(rep.at("verified").get<bool>());
    CHECK(rep.at("gamma").get<double>() > 0.0);
    CHECK(rep.at("variables").get<int>() == 57);
    CHECK(rep.at("lifted_check").at("margins").size() == 5);
    CHECK(rep.at("original_check").at("min_margin").get<double>() > 0.0);
    CHECK(load(d / "stdout.txt") == rep);
}

TEST_CASE("synthesize is deterministic", "[cli]") {
    const fs::path d = scratch("determinism");
    REQUIRE(run(d, "synthesize '" + data("desk1.json").string() + "' --out again.json").code == 0);
    CHECK(slurp(d / "again.json") == slurp(desk_outputs() / "controller.json"));
    CHECK(slurp(d / "again.certificate.json") == slurp(desk_outputs() / "controller.certificate.json"));
}

TEST_CASE("malformed problem reports its position", "[cli]") {
    const fs::path d = scratch("malformed");
    write(d / "bad.json", "{\n  \"partition\": {\n    \"ns\": 2,,\n  }\n}\n");
    const Run r = run(d, "synthesize bad.json");
    CHECK(r.code == 1);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(r.err.find("column") != std::string::npos);
}

TEST_CASE("missing and invalid inputs are input errors", "[cli]") {
    const fs::path d = scratch("invalid");
    CHECK(run(d, "synthesize does-not-exist.json").code == 1);
    CHECK(run(d, "frobnicate").code == 1);
    Json p = load(data("desk1.json"));
    p["plant"]["blocks"]["zp/wp"] = matrix({{1.0}});
    write(d / "feedthrough.json", p.dump(2));
    const Run r = run(d, "synthesize feedthrough.json");
    CHECK(r.code == 1);
    CHECK(r.err.find("(z_p,w_p)") != std::string::npos);
}

TEST_CASE("unstabilizable problem is infeasible", "[cli]") {
    const fs::path d = scratch("unstabilizable");
    Json p = load(data("desk1.json"));
    p["plant"]["blocks"]["x/x"] = matrix({{1, 0}, {0, -1}});
    write(d / "unstab.json", p.dump(2));
    const Run r = run(d, "synthesize unstab.json");
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(d / "controller.json"));
}

TEST_CASE("verify round trip and boundary", "[cli]") {
    const fs::path& s = desk_outputs();
    const fs::path d = scratch("verify");
    const std::string problem = "'" + data("desk1.json").string() + "'";
    const std::string ctrl = "'" + (s / "controller.json").string() + "'";
    const std::string cert = "'" + (s / "controller.certificate.json").string() + "'";
    const Run ok = run(d, "verify " + problem + " " + ctrl + " " + cert);
    CHECK(ok.code == 0);
    CHECK(ok.out.find("dissipation inequality") != std::string::npos);

    Json c = load(s / "controller.certificate.json");
    c["gamma"] = 0.9 * c["gamma"].get<double>();
    write(d / "lowered.json", c.dump(2));
    CHECK(run(d, "verify " + problem + " " + ctrl + " lowered.json").code == 2);

    const std::string full = slurp(s / "controller.json");
    write(d / "truncated.json", full.substr(0, full.size() / 2));
    const Run t = run(d, "verify " + problem + " truncated.json " + cert);
    CHECK(t.code == 1);
    CHECK(t.err.find("line") != std::string::npos);
}

TEST_CASE("verify rejects a controller for another problem", "[cli]") {
    const fs::path& s = desk_outputs();
    const fs::path d = scratch("mismatch");
    Json fam = load(data("family.json"));
    Json p;
    p["partition"] = fam["partition"];
    p["plant"] = fam["P0"];
    p["values"] = fam["values"];
    write(d / "other.json", p.dump(2));
    const Run r = run(d, "verify other.json '" + (s / "controller.json").string() + "' '" +
                             (s / "controller.certificate.json").string() + "'");
    CHECK(r.code == 1);
}

TEST_CASE("sweep over the desk family", "[cli]") {
    const fs::path d = scratch("sweep");
    const Run r = run(d, "sweep '" + data("family.json").string() + "' --out sweep.csv --plot plot.csv");
    CHECK(r.code == 0);
    const auto rows = lines(slurp(d / "sweep.csv"));
    REQUIRE(rows.size() == 23);
    CHECK(rows.front() == "a,mask-id,status,gamma,margin,solve-time");
    bool separated = false;
    for (size_t i = 1; i + 1 < rows.size(); i += 2) {
        const auto u = fields(rows[i]), m = fields(rows[i + 1]);
        REQUIRE(u.size() == 6);
        REQUIRE(m.size() == 6);
        CHECK(u[0] == m[0]);
        CHECK(u[1] == "none");
        CHECK(m[1] == "block-diagonal");
        if (u[2] != "optimal") continue;
        if (m[2] == "optimal") {
            CHECK(std::stod(m[3]) >= std::stod(u[3]) * (1.0 - 1e-6));
        } else {
            CHECK(m[3].empty());
            separated = true;
        }
    }
    CHECK(separated);
    CHECK(lines(slurp(d / "plot.csv")).size() == 12);
}

TEST_CASE("sweep grid and masks from flags", "[cli]") {
    const fs::path d = scratch("sweepflags");
    const Run r = run(d, "sweep '" + data("family.json").string() + "' --grid 0.5:1:3 --masks none --no-timing");
    CHECK(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 4);
    for (size_t i = 1; i < rows.size(); ++i) CHECK(fields(rows[i])[5].empty());
    CHECK(run(d, "sweep '" + data("family.json").string() + "' --grid 1:0").code == 1);
    CHECK(run(d, "sweep '" + data("family.json").string() + "' --masks nonsense").code == 1);
}

TEST_CASE("sweep of an infeasible family exits with code four", "[cli]") {
    const fs::path d = scratch("sweepinfeasible");
    Json fam = load(data("family.json"));
    // An unstable mode that neither u nor y can see.
    fam["P0"]["blocks"]["x/x"] = matrix({{1, 0}, {0, -1}});
    fam["P0"]["blocks"]["y/x"] = matrix({{0, 1}});
    write(d / "family.json", fam.dump(2));
    const Run r = run(d, "sweep family.json --grid 0.5:1:3");
    CHECK(r.code == 4);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 7);
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        CHECK(f[2] == "infeasible");
        CHECK(f[3].empty());
    }
}

TEST_CASE("simulate certified pair", "[cli]") {
    const fs::path& s = desk_outputs();
    const fs::path d = scratch("simulate");
    const std::string args = "simulate '" + data("desk1.json").string() + "' '" + (s / "controller.json").string() + "'";
    const Run a = run(d, args + " --seed 4 --horizon 5 --out a.csv");
    REQUIRE(a.code == 0);
    const Run b = run(d, args + " --seed 4 --horizon 5 --out b.csv");
    REQUIRE(b.code == 0);
    CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
    CHECK(a.out == b.out);
    const Json summary = Json::parse(a.out);
    CHECK(summary.at("decay_rate").get<double>() > 0.0);
    CHECK(lines(slurp(d / "a.csv")).size() > 10);

    const Run c = run(d, args + " --seed 5 --horizon 5 --out c.csv");
    CHECK(c.code == 0);
    CHECK(slurp(d / "a.csv") != slurp(d / "c.csv"));

    const Run z = run(d, args + " --horizon 0 --out z.csv");
    CHECK(z.code == 0);
    CHECK(lines(slurp(d / "z.csv")).size() == 1);
}
