#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <json.hpp>


namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
    int code;
    std::string err;
};

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("prde_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run run(const std::string& args, const fs::path& out) {
    const auto err = out.string() + ".stderr";
    const std::string cmd = std::string(PRDE_CLI_PATH) + " " + args + " --out " + out.string() + " > /dev/null 2> " + err;
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json result(const fs::path& dir) { return json::parse(slurp(dir / "result.json")); }

/// Rows of table.csv for one series.
std::vector<std::pair<double, double>> series(const fs::path& dir, const std::string& name) {
    std::ifstream in(dir / "table.csv");
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<double, double>> out;
    while (std::getline(in, line)) {
        auto a = line.find(','), b = line.find(',', a + 1);
        if (line.substr(0, a) == name) out.emplace_back(std::stod(line.substr(a + 1, b - a - 1)), std::stod(line.substr(b + 1)));
    }
    return out;
}

}  // namespace

TEST(Cli, WongZakaiErrorsAreNonIncreasing) {
    auto dir = scratch("wz");
    auto r = run("wong-zakai --seed 7 --levels 4,6,8,10 --dim 2 --base 0.6 --amplitude 0.25 --frequency 1", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    auto e = series(dir, "e_N");
    ASSERT_EQ(e.size(), 4u);
    for (std::size_t k = 1; k + 1 < e.size(); ++k) EXPECT_LE(e[k].second, 1.1 * e[k - 1].second);
    EXPECT_EQ(e.back().second, 0.0);
    auto j = result(dir);
    EXPECT_EQ(j["config_hash"].get<std::string>().size(), 40u);
    EXPECT_TRUE(fs::exists(dir / "config.resolved"));
}

TEST(Cli, RampDownPushesByTheHorizon) {
    auto dir = scratch("ramp");
    auto r = run("skorohod --path ramp-down --domain halfline --level 8 --horizon 2", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = result(dir);
    EXPECT_NEAR(j["values"]["phi_final"].get<double>(), 2.0, 1e-12);
    for (const auto& row : j["metrics"]) EXPECT_EQ(row["verdict"], "pass") << row["name"];
}

TEST(Cli, MalformedExponentsAreRejected) {
    auto dir = scratch("bad");
    auto r = run("solve --alpha 0.36 --alpha-tilde 0.45 --beta 0.4", dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("alpha~ < beta"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "result.json"));
}

TEST(Cli, SameConfigGivesIdenticalTables) {
    auto a = scratch("det_a"), b = scratch("det_b");
    const std::string args = "solve --seed 3 --level 8 --domain box --dim 2 --xi 0.5";
    ASSERT_EQ(run(args, a).code, 0);
    ASSERT_EQ(run(args, b).code, 0);
    EXPECT_EQ(slurp(a / "table.csv"), slurp(b / "table.csv"));
    EXPECT_EQ(result(a)["config_hash"], result(b)["config_hash"]);
}

TEST(Cli, PerturbedCheckIsDetected) {
    auto dir = scratch("perturb");
    auto clean = run("checks --samples 4 --seed 11", dir);
    ASSERT_EQ(clean.code, 0) << clean.err;
    auto r = run("checks --samples 4 --seed 11 --perturb young", dir);
    EXPECT_EQ(r.code, 4);
    auto fails = result(dir)["diagnostics"]["failures"];
    ASSERT_EQ(fails.size(), 1u);
    EXPECT_EQ(fails[0]["family"], "young");
    EXPECT_EQ(fails[0]["seed"], 11);
}

TEST(Cli, ZeroSamplesIsAValidationError) {
    auto dir = scratch("zero");
    auto r = run("checks --samples 0", dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("sample"), std::string::npos);
}

TEST(Cli, PathFileDriver) {
    auto dir = scratch("file");
    std::ofstream(dir / "w.csv") << "t,x1\n0,0\n0.5,-1\n1,-0.5\n";
    auto r = run("skorohod --domain halfline --xi 0 --path " + (dir / "w.csv").string(), dir / "out");
    ASSERT_EQ(r.code, 0) << r.err;
    auto phi = series(dir / "out", "phi1");
    ASSERT_EQ(phi.size(), 3u);
    EXPECT_DOUBLE_EQ(phi[1].second, 1.0);
    EXPECT_DOUBLE_EQ(phi[2].second, 1.0);
    EXPECT_EQ(run("skorohod --path " + (dir / "missing.csv").string(), dir / "out2").code, 2);
}

TEST(Cli, UnknownOptionIsAValidationError) {
    auto dir = scratch("usage");
    EXPECT_EQ(run("solve --no-such-flag 1", dir).code, 2);
    EXPECT_EQ(run("solve --domain torus", dir).code, 2);
}
