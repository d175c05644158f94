#include <doctest.h>

#include <cmath>
#include <vector>

#include "wfkit/grpo.hpp"
#include "wfkit/rng.hpp"

using namespace wfkit;

TEST_SUITE("grpo") {

TEST_CASE("group_advantages matches the worked examples") {
    const std::vector<double> a = group_advantages(std::vector<double>{1, 1, -1, -1});
    REQUIRE(a.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(i < 2 ? 1.0 : -1.0).epsilon(1e-12));

    // Constant group: zero numerator, std floor keeps it finite.
    const std::vector<double> z = group_advantages(std::vector<double>{0.875, 0.875, 0.875, 0.875});
    for (const double v : z) CHECK(v == 0.0);

    const std::vector<double> two = group_advantages(std::vector<double>{1, 0});
    CHECK(two[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(two[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("group_advantages rejects groups smaller than 2") {
    CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), GroupTooSmall);
    CHECK_THROWS_AS(group_advantages(std::vector<double>{}), GroupTooSmall);
}

TEST_CASE("clipped_term hand values") {
    // Hand evaluation in the same arithmetic: clip to 1 +/- eps, multiply.
    CHECK(clipped_term(1.5, 1.0, 0.2) == (1.0 + 0.2) * 1.0);
    CHECK(clipped_term(0.5, -1.0, 0.2) == (1.0 - 0.2) * -1.0);
    CHECK(clipped_term(1.0, 2.0, 0.2) == 2.0);
    CHECK(clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8).epsilon(1e-12));
    CHECK_THROWS_AS(clipped_term(0.0, 1.0, 0.2), NonPositiveRatio);
    CHECK_THROWS_AS(clipped_term(-1.0, 1.0, 0.2), NonPositiveRatio);
}

TEST_CASE("kl_estimate hand values") {
    CHECK(kl_estimate(1.0) == 0.0);
    CHECK(kl_estimate(2.0) == doctest::Approx(2.0 - std::log(2.0) - 1.0).epsilon(1e-15));
    CHECK(kl_estimate(2.0) == doctest::Approx(0.306852819440055).epsilon(1e-9));
    CHECK(kl_estimate(0.5) == doctest::Approx(0.193147180559945).epsilon(1e-9));
    CHECK_THROWS_AS(kl_estimate(0.0), NonPositiveRatio);
}

TEST_CASE("grpo_objective worked examples") {
    GrpoConfig cfg;

    // Symmetric rewards, identity ratios: objective is exactly 0.
    std::vector<GroupSample> sym{{1, 1, 1}, {1, 1, 1}, {-1, 1, 1}, {-1, 1, 1}};
    CHECK(grpo_objective(sym, cfg) == doctest::Approx(0.0).epsilon(1e-12));

    GrpoConfig g2 = cfg;
    g2.group_size = 2;
    std::vector<GroupSample> pair{{1, 1, 1}, {0, 1, 1}};
    g2.kl_beta = 0.37;  // beta is irrelevant when both ref ratios are 1
    CHECK(grpo_objective(pair, g2) == doctest::Approx(0.0).epsilon(1e-12));

    g2.kl_beta = 0.0;
    std::vector<GroupSample> ex{{1, 1.5, 1}, {0, 1.0, 1}};
    CHECK(grpo_objective(ex, g2) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("grpo config validation") {
    GrpoConfig bad;
    bad.group_size = 1;
    CHECK_THROWS_AS(bad.validate(), GroupTooSmall);
    bad = GrpoConfig{};
    bad.clip_eps = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = GrpoConfig{};
    bad.kl_beta = -0.1;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("property: advantages are z-normalized") {
    SplitMix64 rng(31337);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(14);
        std::vector<double> rewards(n);
        for (double& r : rewards) r = rng.unit() * 2.0 - 1.0;
        const auto a = group_advantages(rewards);

        double mean = 0.0;
        for (const double v : a) mean += v;
        mean /= static_cast<double>(n);
        CHECK(std::abs(mean) < 1e-12);

        double in_var = 0.0, in_mean = 0.0;
        for (const double r : rewards) in_mean += r;
        in_mean /= static_cast<double>(n);
        for (const double r : rewards) in_var += (r - in_mean) * (r - in_mean);
        in_var /= static_cast<double>(n);
        if (std::sqrt(in_var) > 1e-8) {
            double var = 0.0;
            for (const double v : a) var += (v - mean) * (v - mean);
            var /= static_cast<double>(n);
            CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("property: kl_estimate is nonnegative, zero only at 1") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const double x = 1e-3 + rng.unit() * 4.0;
        const double v = kl_estimate(x);
        CHECK(v >= -1e-15);
        if (std::abs(x - 1.0) > 1e-6) CHECK(v > 0.0);
    }
}

TEST_CASE("property: clipped term never exceeds the unclipped product") {
    SplitMix64 rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        const double ratio = 1e-3 + rng.unit() * 3.0;
        const double adv = rng.unit() * 4.0 - 2.0;
        CHECK(clipped_term(ratio, adv, 0.2) <= ratio * adv + 1e-15);
    }
}

}  // TEST_SUITE
