#include "rollwave/cli.hpp"
#include "rollwave/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace rollwave;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string dir() {
    const auto d = fs::temp_directory_path() / ("rollwave_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d.string();
}

}  // namespace

TEST(Cli, KdvPeriod) {
    const auto r = run({"kdv", "--k", "0.9421"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["X"].get<double>(), 8.436, 1e-3);
    EXPECT_NE(r.err.find("command = kdv"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"nonsense"}).code, 1);
    EXPECT_EQ(run({"kdv", "--k", "2"}).code, 1);
    EXPECT_EQ(run({"kdv", "--k", "abc"}).code, 1);
    EXPECT_EQ(run({"kdv", "--unknown", "1"}).code, 1);
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"spectrum", "--in", dir() + "/missing.json"}).code, 1);
    EXPECT_EQ(run({"profile", "--F", "3", "--nu", "0.1", "--q", "1", "--X", "-2"}).code, 1);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
    const std::string cfg = dir() + "/kdv.cfg";
    io::write_atomic(cfg, "command = kdv\nk = 0.5\n");
    auto r = run({"--config", cfg});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(nlohmann::json::parse(r.out)["k"].get<double>(), 0.5, 0);
    r = run({"--config", cfg, "kdv", "--k", "0.9"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(nlohmann::json::parse(r.out)["k"].get<double>(), 0.9, 0);
    io::write_atomic(cfg, "command = kdv\nk = 0.5\nkk = 1\n");
    EXPECT_EQ(run({"--config", cfg}).code, 1);
    io::write_atomic(cfg, "command = kdv\nk = 0.5\n");
    EXPECT_EQ(run({"--config", cfg, "fit"}).code, 1);
}

TEST(Cli, ManifestRoundTrip) {
    const std::string d = dir();
    const std::string out = d + "/period.json";
    auto r = run({"kdv", "--X", "17", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string first = io::read_file(out);
    const std::string manifest = io::read_file(out + ".manifest");
    EXPECT_NE(manifest.find("X = 17"), std::string::npos);
    fs::remove(out);
    r = run({"--config", out + ".manifest"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::read_file(out), first);
    EXPECT_EQ(io::read_file(out + ".manifest"), manifest);
}

TEST(Cli, ProfileSpectrumPipeline) {
    const std::string d = dir();
    auto r = run({"profile", "--F", "2.4494897427831781", "--nu", "0.1", "--q", "1.5745", "--X", "17.15", "--out",
                  d + "/prof.json"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run({"spectrum", "--in", d + "/prof.json", "--modes", "21", "--xi-points", "3", "--out", d + "/spec.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = io::read_file(d + "/spec.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2 * 21);
    r = run({"spectrum", "--in", d + "/prof.json", "--modes", "21", "--xi-points", "3", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["spectra"].size(), 3u);
}

TEST(Cli, FitFromBoundaryCsv) {
    const std::string d = dir();
    std::string csv = "alpha,F,nu,q,X_lower,X_upper\n";
    for (double F : {4.0, 5.0, 6.0, 8.0})
        csv += "-2," + std::to_string(F) + ",0.1," + std::to_string(0.4 * F) + "," +
               std::to_string(0.05 * std::pow(F, 2.83)) + ",\n";
    io::write_atomic(d + "/b.csv", csv);
    const auto r = run({"fit", "--in", d + "/b.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(nlohmann::json::parse(r.out)["b1"].get<double>(), 2.83, 1e-5);
    EXPECT_EQ(run({"fit", "--in", d + "/b.csv", "--column", "upper"}).code, 1);
}
