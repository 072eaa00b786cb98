#include "rollwave/errors.hpp"
#include "rollwave/io.hpp"
#include "rollwave/sweep.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>

using namespace rollwave;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("rollwave_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return (dir / name).string();
}

sweep::GridSpec small_grid() {
    sweep::GridSpec g;
    g.alpha = -2.0;
    g.nu = 0.1;
    g.q = sweep::QRule::scaling(-2.0, 0.4);
    g.F = {5.0, 6.0};
    g.X = {7.0, 8.0, 9.0};
    return g;
}

sweep::SweepRecord fake(const sweep::SweepRecord& k) {
    sweep::SweepRecord r = k;
    r.overall = k.X > 7.5 ? "stable" : "unstable";
    r.max_re = k.X > 7.5 ? -1e-4 : 1e-2;
    r.c = 1.0 / k.X;
    r.n = 256;
    return r;
}

}  // namespace

TEST(QRule, ParseAndEvaluate) {
    const auto r = sweep::parse_q_rule("0.4*F^-2");
    EXPECT_DOUBLE_EQ(r(2.0), 0.1);
    EXPECT_DOUBLE_EQ(sweep::parse_q_rule("1.5")(7.0), 1.5);
    EXPECT_DOUBLE_EQ(sweep::QRule::scaling(-2.0, 0.4)(6.0), 2.4);
    EXPECT_EQ(sweep::parse_q_rule(r.describe()).exponent, -2.0);
    EXPECT_THROW(sweep::parse_q_rule("abc"), DomainError);
    EXPECT_THROW(sweep::parse_q_rule("-1*F^2"), DomainError);
}

TEST(Boundary, CsvRow) {
    EXPECT_EQ(sweep::boundary_csv_header(), "alpha,F,nu,q,X_lower,X_upper");
    EXPECT_EQ(sweep::boundary_csv_row(-2, 5, 0.5, 2, 5.5, std::nullopt), "-2,5,0.5,2,5.5,");
    EXPECT_EQ(sweep::parse_which("upper"), sweep::Which::upper);
    EXPECT_THROW(sweep::parse_which("middle"), DomainError);
}

TEST(Boundary, RejectsBadBracket) {
    EXPECT_THROW(sweep::boundary_bisect(-2, 5, 0.1, sweep::QRule::scaling(-2, 0.4), 8.0, 6.0, sweep::Which::lower),
                 DomainError);
}

TEST(Records, JsonRoundTrip) {
    sweep::SweepRecord r;
    r.alpha = -2;
    r.F = 5;
    r.nu = 0.1;
    r.q = 2;
    r.X = 6.25;
    r.X0 = 0.25;
    r.overall = "stable";
    r.max_re = -1.5e-4;
    r.lower_stable = true;
    const auto back = sweep::record_from_json(sweep::to_json_line(r));
    EXPECT_EQ(back.key(), r.key());
    EXPECT_EQ(sweep::to_json_line(back), sweep::to_json_line(r));
    EXPECT_FALSE(back.seconds.has_value());
}

TEST(Map, EmptyGridGivesEmptyStore) {
    sweep::GridSpec g = small_grid();
    g.X.clear();
    std::vector<sweep::SweepRecord> out;
    const auto path = temp_path("empty.jsonl");
    const auto s = sweep::stability_map(g, path, out, {}, fake);
    EXPECT_EQ(s.total, 0u);
    EXPECT_TRUE(out.empty());
    EXPECT_EQ(io::read_file(path), "");
}

TEST(Map, ResumeAndDeterminism) {
    const auto g = small_grid();
    const auto a = temp_path("a.jsonl"), b = temp_path("b.jsonl");
    fs::remove(a);
    fs::remove(b);
    std::atomic<int> calls{0};
    auto counted = [&](const sweep::SweepRecord& k) {
        ++calls;
        return fake(k);
    };
    std::vector<sweep::SweepRecord> out;
    sweep::MapOptions opt;
    opt.threads = 3;
    auto s = sweep::stability_map(g, a, out, opt, counted);
    EXPECT_EQ(s.computed, 6u);
    EXPECT_EQ(calls.load(), 6);
    ASSERT_EQ(out.size(), 6u);
    EXPECT_EQ(out[0].F, 5.0);
    EXPECT_EQ(out[3].F, 6.0);

    s = sweep::stability_map(g, a, out, opt, counted);
    EXPECT_EQ(s.computed, 0u);
    EXPECT_EQ(s.skipped, 6u);
    EXPECT_EQ(calls.load(), 6);

    opt.threads = 1;
    sweep::stability_map(g, b, out, opt, fake);
    EXPECT_EQ(io::read_file(a), io::read_file(b));
}

TEST(Map, TornLineIsRecomputed) {
    const auto g = small_grid();
    const auto p = temp_path("torn.jsonl");
    fs::remove(p);
    std::vector<sweep::SweepRecord> out;
    sweep::stability_map(g, p, out, {}, fake);
    std::string text = io::read_file(p);
    text = text.substr(0, text.size() - 10);
    io::write_atomic(p, text);
    const auto s = sweep::stability_map(g, p, out, {}, fake);
    EXPECT_EQ(s.computed, 1u);
}

TEST(Map, FailuresAreRecorded) {
    const auto g = small_grid();
    std::vector<sweep::SweepRecord> out;
    auto failing = [](const sweep::SweepRecord& k) {
        auto r = fake(k);
        if (k.X == 9.0) {
            r.overall = "failed";
            r.reason = "synthetic";
        }
        return r;
    };
    const auto s = sweep::stability_map(g, "", out, {}, failing);
    EXPECT_EQ(s.failed, 2u);
    EXPECT_EQ(out.size(), 6u);
}

TEST(Fit, ExactPowerLaw) {
    std::vector<sweep::FitPoint> pts;
    for (double F : {10.0, 13.0, 17.0, 22.0, 30.0})
        for (double q : {0.3, 0.45})
            pts.push_back({F, q, std::exp(0.3) * std::pow(F, -0.692) * std::pow(q, 3.46)});
    const auto fit = sweep::powerlaw_fit(pts);
    EXPECT_NEAR(fit.b1, -0.692, 1e-12);
    EXPECT_NEAR(fit.b2, 3.46, 1e-12);
    EXPECT_NEAR(fit.b3, 0.3, 1e-12);
    EXPECT_LT(fit.max_abs_error, 1e-12);
    EXPECT_EQ(fit.rank, 3);
}

TEST(Fit, CollinearQIsReported) {
    std::vector<sweep::FitPoint> pts;
    for (double F : {4.0, 5.0, 6.0, 8.0}) pts.push_back({F, 0.4 * F, 0.05 * std::pow(F, 2.83)});
    const auto fit = sweep::powerlaw_fit(pts);
    EXPECT_EQ(fit.rank, 2);
    EXPECT_FALSE(fit.identified[1]);
    EXPECT_FALSE(fit.note.empty());
    EXPECT_NEAR(fit.b1, 2.83, 1e-12);
}

TEST(Fit, LeaveOneOutIsWithinStandardErrors) {
    std::mt19937 rng(7);
    std::normal_distribution<double> noise(0.0, 0.02);
    std::vector<sweep::FitPoint> pts;
    for (double F : {10.0, 12.0, 14.0, 17.0, 20.0, 24.0, 28.0})
        for (double q : {0.3, 0.4, 0.5})
            pts.push_back({F, q, std::exp(3.9 + noise(rng)) * std::pow(F, -0.79) * std::pow(q, 1.73)});
    const auto fit = sweep::powerlaw_fit(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto rest = pts;
        rest.erase(rest.begin() + static_cast<long>(i));
        EXPECT_LT(std::abs(sweep::powerlaw_fit(rest).b1 - fit.b1), 3.0 * fit.std_error[0]);
    }
}

TEST(Fit, NeedsEnoughSpread) {
    std::vector<sweep::FitPoint> pts{{10, 1, 1}, {11, 1, 2}, {12, 1, 3}, {13, 1, 4}};
    EXPECT_THROW(sweep::powerlaw_fit(pts), DomainError);
    pts.pop_back();
    EXPECT_THROW(sweep::powerlaw_fit(pts), DomainError);
}
