#include "rollwave/errors.hpp"
#include "rollwave/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rollwave;

TEST(Model, ScalingExponents) {
    EXPECT_DOUBLE_EQ(model::q_exponent(-2.0), 1.0);
    EXPECT_DOUBLE_EQ(model::c_exponent(-2.0), 2.0);
    EXPECT_DOUBLE_EQ(model::X_exponent(-2.0), 2.0);
    EXPECT_DOUBLE_EQ(model::X_exponent(0.0), -0.5);
}

TEST(Model, ScalingRoundTrip) {
    ScalingFamily fam{-1.4, 0.4, 0.7, 1.0 / 0.35, 0.35};
    const auto p = model::scale_to_physical(fam, 12.0, 0.1);
    EXPECT_NEAR(p.q, 0.4 * std::pow(12.0, 0.7), 1e-13);
    EXPECT_NEAR(p.X, 0.35 * std::pow(12.0, -0.5 + 1.75), 1e-12);
    const auto back = model::physical_to_scaling(p, -1.4);
    EXPECT_NEAR(back.q0, fam.q0, 1e-14);
    EXPECT_NEAR(back.c0, fam.c0, 1e-14);
    EXPECT_NEAR(back.X0, fam.X0, 1e-14);
}

TEST(Model, HopfStateHasRequestedOutflow) {
    for (double F : {2.5, 6.0, 20.0}) {
        const double q = 0.4 * F;
        const double tau0 = model::hopf_tau0(q, F);
        EXPECT_NEAR(model::equilibrium_q(tau0, model::hopf_speed(tau0, F)), q, 1e-12 * q);
        EXPECT_NEAR(model::hopf_period(tau0, F, 0.1) * model::hopf_frequency(tau0, F, 0.1), 2.0 * M_PI, 1e-12);
    }
}

TEST(Model, ValidateRejectsNonPositive) {
    PhysicalParams p{3.0, 0.1, 1.0, 1.0, 5.0, std::nullopt};
    EXPECT_NO_THROW(p.validate());
    p.X = 0.0;
    EXPECT_THROW(p.validate(), DomainError);
    p.X = 5.0;
    p.nu = -1.0;
    EXPECT_THROW(p.validate(), DomainError);
}

TEST(Model, KeyValueRoundTripIsExact) {
    PhysicalParams p{std::sqrt(6.0), 0.1, 1.5745, 0.1 / 3.0, 17.15, 1.0 / 7.0};
    const auto parsed = model::parse_params(model::to_key_value(p)).params();
    EXPECT_EQ(parsed.F, p.F);
    EXPECT_EQ(parsed.c, p.c);
    EXPECT_EQ(parsed.X, p.X);
    ASSERT_TRUE(parsed.tau0.has_value());
    EXPECT_EQ(*parsed.tau0, *p.tau0);
}

TEST(Model, KeyValueErrors) {
    EXPECT_THROW(model::parse_params("F = 3\nFF = 2\n"), DomainError);
    EXPECT_THROW(model::parse_params("F = 3x\n"), DomainError);
    EXPECT_THROW(model::parse_params("F = 3\nF = 4\n"), DomainError);
    EXPECT_THROW(model::parse_key_values("no equals sign\n"), DomainError);
    const auto kv = model::parse_key_values("# comment\n  a = 1  # trailing\n\nb=two\n");
    ASSERT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv[0].first, "a");
    EXPECT_EQ(kv[1].second, "two");
}
