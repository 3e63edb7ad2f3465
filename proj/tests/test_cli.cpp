#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <algorithm>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("renewnet_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

Run cli(const std::string& args) {
    const auto log = scratch("log.txt");
    fs::create_directories(log.parent_path());
    const std::string cmd = std::string("\"") + RENEWNET_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    r.out = ss.str();
    return r;
}

std::string config(const std::string& name) { return std::string(RENEWNET_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST(Cli, MissingConfigExitsWithTwo) {
    const auto r = cli("simulate --config /no/such/dir/model.json");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("/no/such/dir/model.json"), std::string::npos);
}

TEST(Cli, InvalidConfigExitsWithOne) {
    const auto p = scratch("bad.json");
    fs::create_directories(p.parent_path());
    std::ofstream(p) << R"({"edges": [{"id": "u", "g": "-1"}]})";
    EXPECT_EQ(cli("simulate --config " + p.string()).code, 1);
}

TEST(Cli, ZeroModelWritesZeros) {
    const auto out = scratch("zero");
    const auto r = cli("simulate --config " + config("zero.json") + " --snapshots 0,1,2 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_TRUE(fs::exists(out / "manifest.json"));
    for (const char* name : {"snapshot_000.csv", "snapshot_001.csv", "snapshot_002.csv"}) {
        std::istringstream body(slurp(out / name));
        std::string line;
        std::getline(body, line);
        EXPECT_EQ(line, "t,edge,x,u");
        std::size_t rows = 0;
        while (std::getline(body, line)) {
            ++rows;
            ASSERT_EQ(line.substr(line.rfind(',') + 1), "0") << line;
        }
        EXPECT_EQ(rows, 300u);
    }
    EXPECT_EQ(slurp(out / "boundary.csv").substr(0, 9), "t,edge,b\n");
    EXPECT_EQ(slurp(out / "apriori.csv").substr(0, 22), "t,quantity,lhs,rhs,ok\n");
}

TEST(Cli, MatingSnapshotsOnReferenceMesh) {
    const auto out = scratch("mating");
    const auto r = cli("simulate --config " + config("mating.json") + " --da 0.04167 --snapshots 0,250,500 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(out / "snapshot_002.csv"));
    EXPECT_FALSE(fs::exists(out / "snapshot_003.csv"));
}

TEST(Cli, SinglePointSweep) {
    const auto out = scratch("sweep");
    const auto r = cli("sweep --config " + config("mating.json") + " --param theta --from 0.5 --points 1 --da 0.5 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto body = slurp(out / "sweep.csv");
    EXPECT_EQ(body.substr(0, 16), "param,objective\n");
    EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 2);
}

TEST(Cli, OptimizePrintsTheMaximiser) {
    const auto out = scratch("opt");
    const auto r = cli("optimize --config " + config("resource.json") + " --param eta --da 0.02 --tol 0.01 --jobs 2 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("eta* = "), std::string::npos);
    EXPECT_NE(r.out.find("netgain* = "), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "refinement.csv"));
}

TEST(Cli, UnknownParameterFails) {
    EXPECT_EQ(cli("sweep --config " + config("mating.json") + " --param zeta --da 0.5 --out " + scratch("u").string()).code, 1);
}

TEST(Cli, VerifyZeroModelPasses) {
    const auto r = cli("verify --config " + config("zero.json") + " --level fast");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, VerifySingleEdgeReportsOrder) {
    const auto out = scratch("verify");
    const auto r = cli("verify --config " + config("single_edge.json") + " --level fast --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto pos = r.out.find("observed order ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_GE(std::stod(r.out.substr(pos + 15)), 0.8);
    EXPECT_TRUE(fs::exists(out / "verify.csv"));
}

TEST(Cli, MissignedFixtureMatchesItsNote) {
    const auto r = cli("verify --config " + config("fixtures/missigned.json") + " --level fast");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("ok   comparison"), std::string::npos);
    EXPECT_NE(r.out.find("ok   apriori"), std::string::npos);
}

TEST(Cli, RepeatedRunsGiveIdenticalCsv) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const std::string args = "simulate --config " + config("resource.json") + " --da 0.02 --snapshots 0,3 --solver picard --out ";
    ASSERT_EQ(cli(args + a.string()).code, 0);
    ASSERT_EQ(cli(args + b.string()).code, 0);
    for (const auto& e : fs::directory_iterator(a))
        if (e.path().extension() == ".csv") {
            EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
        }
}
