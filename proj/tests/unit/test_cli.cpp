#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "coint/cli.hpp"
#include "coint/dgp.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "coint");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return coint::cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("coint_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const std::vector<std::string> kQuickCrit{"--crit-grid-n", "200", "--crit-reps", "1000"};

}  // namespace

TEST(Cli, SimulateWritesPanel) {
    const fs::path dir = scratch("simulate");
    const std::string out = (dir / "panel.csv").string();
    EXPECT_EQ(run({"simulate", "--p", "2", "--T", "250", "--c", "-5", "--dist", "t3", "--seed", "7", "--out", out}), 0);
    const coint::dgp::Panel panel = coint::dgp::read_panel_csv(out);
    EXPECT_EQ(panel.length(), 250);
    EXPECT_EQ(panel.dim(), 2);
    const std::string first = slurp(out);
    EXPECT_EQ(run({"simulate", "--p", "2", "--T", "250", "--c", "-5", "--dist", "t3", "--seed", "7", "--out", out}), 0);
    EXPECT_EQ(slurp(out), first);
}

TEST(Cli, TestPrintsJsonAndExitCode) {
    const fs::path dir = scratch("test");
    const std::string data = (dir / "panel.csv").string();
    ASSERT_EQ(run({"simulate", "--T", "200", "--c", "-30", "--seed", "3", "--tau", "0.1,0.2", "--out", data}), 0);
    std::vector<std::string> args{"test", "--data", data, "--test", "sl-semipar", "--trend", "linear"};
    args.insert(args.end(), kQuickCrit.begin(), kQuickCrit.end());
    testing::internal::CaptureStdout();
    const int code = run(args);
    const std::string text = testing::internal::GetCapturedStdout();
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j.at("kind"), "sl-semipar");
    EXPECT_EQ(j.at("trend"), "linear");
    EXPECT_EQ(code, j.at("reject").get<bool>() ? 1 : 0);
}

TEST(Cli, UsageErrorsExitTwo) {
    testing::internal::CaptureStderr();
    EXPECT_EQ(run({"test", "--data", "x.csv"}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({"test", "--data", "/nonexistent/panel.csv", "--test", "johansen-gauss"}), 2);
    EXPECT_EQ(run({"test", "--data", "x.csv", "--test", "johansen-gauss", "--trend", "linear"}), 2);
    testing::internal::GetCapturedStderr();
}

TEST(Cli, HelpExitsZero) {
    testing::internal::CaptureStdout();
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_EQ(run({"power", "--help"}), 0);
    const std::string text = testing::internal::GetCapturedStdout();
    EXPECT_NE(text.find("--critvals"), std::string::npos);
}

TEST(Cli, PowerIsByteReproducible) {
    const fs::path dir = scratch("power");
    const fs::path cfg = dir / "study.json";
    {
        std::ofstream out(cfg);
        out << R"({"dist": "t5", "T": 40, "reps": 100, "c_grid": [0, -8],
                  "tests": ["johansen-gauss", "johansen-semipar"], "seed": 4,
                  "critvals": {"grid_n": 200, "reps": 1000}})";
    }
    const std::string a = (dir / "a").string();
    const std::string b = (dir / "b").string();
    EXPECT_EQ(run({"power", "--config", cfg.string(), "--out-dir", a, "--workers", "1"}), 0);
    EXPECT_EQ(run({"power", "--config", cfg.string(), "--out-dir", b, "--workers", "2"}), 0);
    EXPECT_EQ(slurp(fs::path(a) / "power.csv"), slurp(fs::path(b) / "power.csv"));
    EXPECT_EQ(slurp(fs::path(a) / "study.json"), slurp(fs::path(b) / "study.json"));
    const auto study = nlohmann::json::parse(slurp(fs::path(a) / "study.json"));
    EXPECT_EQ(study.at("config").at("reps"), 100);
}

TEST(Cli, CritvalsAndEnvelopeShapes) {
    const fs::path dir = scratch("critvals");
    const std::string out = (dir / "cv.json").string();
    std::vector<std::string> args{"critvals", "--p", "2", "--trend", "linear", "--alpha", "0.05,0.1", "--out", out};
    args.insert(args.end(), kQuickCrit.begin(), kQuickCrit.end());
    EXPECT_EQ(run(args), 0);
    const auto j = nlohmann::json::parse(slurp(out));
    EXPECT_EQ(j.at("values").size(), 4u);
    const std::string env = (dir / "env.csv").string();
    EXPECT_EQ(run({"envelope", "--reps", "200", "--grid-n", "200", "--c-grid", "0,-5", "--out", env}), 0);
    const std::string csv = slurp(env);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "c,test,trend,rate,se,reps,T");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
    const std::string lab = (dir / "labf.json").string();
    EXPECT_EQ(run({"diag-labf", "--T-list", "10,20", "--grid-n", "200", "--reps", "200", "--out", lab}), 0);
    EXPECT_EQ(nlohmann::json::parse(slurp(lab)).at("rows").size(), 2u);
}
