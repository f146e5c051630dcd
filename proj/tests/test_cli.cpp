#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "censored/cli.hpp"

using namespace censored;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("censored_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_tool(const std::string& args) {
    const int st = std::system((std::string(CENSORED_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Cli, ParsesExampleFlags) {
    const auto req = parse_args({"--phi", "stable:alpha=1.2", "--domain", "ball:r=1", "--exp", "threeg", "--triples",
                                 "20000", "--seed", "42"});
    EXPECT_EQ(req.cfg.exp, "threeg");
    EXPECT_EQ(req.cfg.phi, "stable:alpha=1.2");
    EXPECT_EQ(req.cfg.triples, 20000u);
    EXPECT_EQ(req.cfg.seed, 42u);
}

TEST(Cli, ListsAndHelpsWithoutAnExperiment) {
    EXPECT_TRUE(parse_args({"--list"}).list);
    EXPECT_FALSE(parse_args({"--help"}).help.empty());
}

TEST(Cli, RejectsAlphaOutOfRange) {
    EXPECT_THROW(parse_args({"--phi", "stable:alpha=2.5", "--exp", "kernel-info"}), ConfigError);
}

TEST(Cli, RejectsProfileWithoutWeakScaling) {
    try {
        parse_args({"--phi", "stablelog:alpha=1.9,gamma=2", "--exp", "kernel-info"});
        FAIL() << "expected a validation error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos) << e.what();
    }
}

TEST(Cli, RejectsUnknownFlagsAndExperiments) {
    EXPECT_THROW(parse_args({"--exp", "kernel-info", "--bogus", "1"}), ConfigError);
    EXPECT_THROW(parse_args({"--exp", "nonsense"}), ConfigError);
    EXPECT_THROW(parse_args({"--exp", "green", "--x", "0.1"}), ConfigError);  // wrong dimension
}

TEST(Cli, FlagOverridesFile) {
    const auto dir = scratch("override");
    std::ofstream(dir / "c.json") << R"({"exp": "green", "N": 500, "seed": 7, "phi": "stable:alpha=0.8"})";
    const auto req = parse_args({"--config", (dir / "c.json").string(), "--N", "1000"});
    EXPECT_EQ(req.cfg.N, 1000u);
    EXPECT_EQ(req.cfg.seed, 7u);
    EXPECT_EQ(req.cfg.phi, "stable:alpha=0.8");
}

TEST(Cli, FileErrorsNameTheProblem) {
    try {
        parse_config_text(R"({"exp": "green", "Nn": 5})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("'Nn'"), std::string::npos) << e.what();
    }
    try {
        parse_config_text("{\n  \"exp\": \"green\",\n  \"N\": ]\n}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    try {
        parse_config_text(R"({"N": "many"})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("'N'"), std::string::npos) << e.what();
    }
}

TEST(Cli, HashIgnoresWorkersAndOutput) {
    ExperimentConfig a;
    a.exp = "threeg";
    ExperimentConfig b = a;
    b.workers = 4;
    b.out = "/elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Harness, KernelInfoReportsStableExponents) {
    ExperimentConfig c;
    c.exp = "kernel-info";
    const auto r = run_experiment(c);
    const auto& s = r.report["results"]["scaling"];
    for (const char* k : {"delta1", "delta2", "delta3", "delta4"}) EXPECT_NEAR(s[k].get<double>(), 0.6, 0.01) << k;
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.report["config_hash"], config_hash(c));
}

TEST(Harness, ReportsAreByteIdentical) {
    ExperimentConfig c;
    c.exp = "threeg";
    c.triples = 300;
    const auto a = run_experiment(c).report.dump();
    const auto b = run_experiment(c).report.dump();
    EXPECT_EQ(a, b);
    c.exp = "boundary";
    c.phi = "stable:alpha=1.5";
    c.N = 64;
    c.horizons = {1, 10};
    EXPECT_EQ(run_experiment(c).report.dump(), run_experiment(c).report.dump());
    c.workers = 2;
    const auto one = run_experiment(c).report.dump();
    c.workers = 1;
    EXPECT_EQ(one, run_experiment(c).report.dump());
}

TEST(Harness, WritesReportSamplesAndManifest) {
    const auto dir = scratch("write");
    ExperimentConfig c;
    c.exp = "threeg";
    c.triples = 200;
    c.out = dir.string();
    const auto [res, man] = run_and_write(c);
    ASSERT_EQ(man.outputs.size(), 3u);
    for (const auto& f : man.outputs) EXPECT_TRUE(fs::exists(f)) << f;
    const auto rep = nlohmann::json::parse(slurp(man.outputs[0]));
    EXPECT_EQ(rep["config_hash"], man.config_hash);
    EXPECT_EQ(rep["schema"], kReportSchema);
    EXPECT_EQ(slurp(man.outputs[1]).rfind("level,scale,index,ratio\n", 0), 0u);
    const auto m = nlohmann::json::parse(slurp(man.outputs[2]));
    EXPECT_EQ(m["outputs"].size(), 3u);
    EXPECT_TRUE(m.contains("wall_time_s"));
}

TEST(Harness, OutputDirectoryFromEnvironment) {
    ExperimentConfig c;
    ::setenv("CENSORED_OUT", "/tmp/from-env", 1);
    EXPECT_EQ(output_dir(c), fs::path("/tmp/from-env"));
    c.out = "/tmp/explicit";
    EXPECT_EQ(output_dir(c), fs::path("/tmp/explicit"));
    ::unsetenv("CENSORED_OUT");
}

TEST(Tool, ExitCodes) {
    const auto dir = scratch("tool").string();
    EXPECT_EQ(run_tool("--exp kernel-info --out " + dir), 0);
    EXPECT_EQ(run_tool("--phi stable:alpha=2.5 --exp kernel-info --out " + dir), 1);
    // 40 paths cannot resolve a Green value to 10%
    EXPECT_EQ(run_tool("--exp green --N 40 --x 0,0 --y 0.5,0 --out " + dir), 2);
}
