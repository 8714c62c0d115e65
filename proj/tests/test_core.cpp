#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "modtd/core.hpp"

using namespace modtd;

TEST_CASE("softmax of a constant vector is uniform") {
    for (double c : {-3.0, 0.0, 2.5}) {
        for (double tau : {0.5, 1.0, 2.0}) {
            const auto p = softmax_policy(std::vector<double>{c, c, c}, tau);
            for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax matches high-precision two-action values") {
    // Frozen from a 30-digit evaluation of 1 / (1 + exp(-1/tau)).
    const auto p1 = softmax_policy(std::vector<double>{1.0, 0.0}, 1.0);
    CHECK(std::abs(p1[0] - 0.731058578630004879) < 1e-12);
    CHECK(std::abs(p1[1] - 0.268941421369995121) < 1e-12);
    const auto p2 = softmax_policy(std::vector<double>{1.0, 0.0}, 0.5);
    CHECK(std::abs(p2[0] - 0.880797077977882444) < 1e-12);
    CHECK(std::abs(p2[1] - 0.119202922022117556) < 1e-12);
}

TEST_CASE("softmax does not overflow on large values") {
    const auto p = softmax_policy(std::vector<double>{1e6, 1e6 - 1.0, -1e6}, 1.0);
    CHECK(p[0] == doctest::Approx(0.731058578630004879).epsilon(1e-12));
    CHECK(p[2] == 0.0);
}

TEST_CASE("softmax rejects bad input") {
    CHECK_THROWS_AS(softmax_policy(std::vector<double>{1.0, 0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(softmax_policy(std::vector<double>{1.0, 0.0}, -1.0), std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(softmax_policy(std::vector<double>{nan, 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(softmax_policy(std::vector<double>{inf, 0.0}, 1.0), std::invalid_argument);
}

TEST_CASE("softmax properties over random vectors") {
    Rng rng(7);
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    std::uniform_int_distribution<int> length(2, 12);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> v(static_cast<std::size_t>(length(rng)));
        for (double& x : v) x = value(rng);
        const auto argmax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
        double previous_max = 2.0;
        for (double tau : {0.5, 1.0, 2.0}) {
            const auto p = softmax_policy(v, tau);
            double sum = 0.0;
            for (double q : p.probs()) {
                REQUIRE(q > 0.0);
                sum += q;
            }
            REQUIRE(std::abs(sum - 1.0) <= 1e-9);
            const auto pmax = std::max_element(p.probs().begin(), p.probs().end());
            REQUIRE(p[argmax] == *pmax);
            // Max-action probability never grows with temperature.
            REQUIRE(p[argmax] <= previous_max);
            previous_max = p[argmax];
        }
    }
}

TEST_CASE("policy distribution validates its vector") {
    CHECK_NOTHROW(PolicyDistribution({0.25, 0.75}));
    CHECK_THROWS_AS(PolicyDistribution({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(PolicyDistribution({-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(PolicyDistribution({}), std::invalid_argument);
}

TEST_CASE("sample_action") {
    SUBCASE("degenerate distribution") {
        Rng rng(1);
        const PolicyDistribution d({1.0, 0.0, 0.0});
        for (int i = 0; i < 1000; ++i) CHECK(sample_action(d, rng) == 0);
    }
    SUBCASE("fair coin frequency") {
        Rng rng(2);
        const PolicyDistribution d({0.5, 0.5});
        int zeros = 0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) zeros += sample_action(d, rng) == 0 ? 1 : 0;
        // Binomial sd at 1e5 draws is 0.0016; 0.01 is more than 6 sd.
        CHECK(std::abs(zeros / double(draws) - 0.5) < 0.01);
    }
    SUBCASE("zero-probability entries are never drawn") {
        Rng rng(3);
        const PolicyDistribution d({0.0, 0.3, 0.0, 0.7, 0.0});
        for (int i = 0; i < 10000; ++i) {
            const auto a = sample_action(d, rng);
            CHECK((a == 1 || a == 3));
        }
    }
    SUBCASE("same seed gives the same sequence") {
        const PolicyDistribution d({0.2, 0.3, 0.5});
        Rng a(99), b(99);
        for (int i = 0; i < 1000; ++i) CHECK(sample_action(d, a) == sample_action(d, b));
    }
}

TEST_CASE("td_error") {
    CHECK(td_error(1.0, 0.9, 0.0, 0.5) == doctest::Approx(0.5));
    CHECK(td_error(-1.0, 0.0, 123.0, 0.8) == doctest::Approx(-1.8));
    CHECK(td_error(0.0, 1.0, 0.37, 0.37) == 0.0);
}

TEST_CASE("conventional_update") {
    ActionValues v(std::vector<double>{0.5, 0.2, -0.1});
    conventional_update(v, 0, 0.5, 0.1);
    CHECK(v[0] == doctest::Approx(0.55));
    CHECK(v[1] == 0.2);
    CHECK(v[2] == -0.1);

    ActionValues same(std::vector<double>{0.5, 0.2});
    conventional_update(same, 1, 42.0, 0.0);
    CHECK(same == ActionValues(std::vector<double>{0.5, 0.2}));

    ActionValues upper(std::vector<double>{0.5, 0.0});
    conventional_update(upper, 0, -1.5, 2.0);
    CHECK(upper[0] == doctest::Approx(-2.5));

    CHECK_THROWS_AS(conventional_update(upper, 2, 1.0, 0.1), std::out_of_range);
}

TEST_CASE("modulated_update") {
    SUBCASE("pi = 1 reproduces the conventional update bit for bit") {
        Rng rng(5);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        std::uniform_real_distribution<double> a(0.0, 2.0);
        for (int i = 0; i < 1000; ++i) {
            ActionValues x(std::vector<double>{u(rng), u(rng), u(rng)});
            ActionValues y = x;
            const double delta = u(rng), alpha = a(rng);
            conventional_update(x, 1, delta, alpha);
            modulated_update(y, 1, delta, alpha, 1.0);
            REQUIRE(x == y);
        }
    }
    SUBCASE("pi = 0 leaves the table unchanged") {
        ActionValues v(std::vector<double>{0.5, -0.5});
        modulated_update(v, 0, 3.0, 1.5, 0.0);
        CHECK(v == ActionValues(std::vector<double>{0.5, -0.5}));
    }
    SUBCASE("arithmetic") {
        ActionValues v(std::vector<double>{0.5, 0.0});
        modulated_update(v, 0, 0.5, 0.1, 0.2);
        CHECK(v[0] == doctest::Approx(0.51));
        CHECK(v[1] == 0.0);
    }
    SUBCASE("pi outside [0, 1] is rejected") {
        ActionValues v(2);
        CHECK_THROWS_AS(modulated_update(v, 0, 1.0, 0.1, 1.01), std::invalid_argument);
        CHECK_THROWS_AS(modulated_update(v, 0, 1.0, 0.1, -0.01), std::invalid_argument);
        CHECK_THROWS_AS(modulated_update(v, 5, 1.0, 0.1, 0.5), std::out_of_range);
    }
}

TEST_CASE("modulation scales the step by pi and touches one entry") {
    Rng rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> start{u(rng), u(rng), u(rng), u(rng)};
        const double delta = u(rng), alpha = 2.0 * unit(rng), pi = unit(rng);
        const std::size_t action = static_cast<std::size_t>(i % 4);
        ActionValues conv(start), mod(start);
        conventional_update(conv, action, delta, alpha);
        modulated_update(mod, action, delta, alpha, pi);
        const double conv_step = conv[action] - start[action];
        const double mod_step = mod[action] - start[action];
        REQUIRE(std::abs(mod_step) == doctest::Approx(pi * std::abs(conv_step)).epsilon(1e-9));
        REQUIRE(std::abs(mod_step) <= std::abs(conv_step) + 1e-12);
        for (std::size_t j = 0; j < 4; ++j) {
            if (j != action) REQUIRE(mod[j] == start[j]);
        }
    }
}

TEST_CASE("a negative surprise hits likely actions harder") {
    const double alpha = 0.7, delta = -1.3;
    double previous_drop = -1.0;
    for (int k = 1; k <= 20; ++k) {
        const double pi = k / 20.0;
        ActionValues v(std::vector<double>{0.8, 0.1});
        modulated_update(v, 0, delta, alpha, pi);
        const double drop = 0.8 - v[0];
        CHECK(drop > previous_drop);
        previous_drop = drop;
    }
}

TEST_CASE("hyperparameter validation") {
    CHECK_NOTHROW((Hyperparams{2.0, 1.0, 0.5}).validate());
    CHECK_THROWS_AS((Hyperparams{2.1, 0.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((Hyperparams{-0.1, 0.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((Hyperparams{0.1, 1.5, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((Hyperparams{0.1, 0.0, 0.0}).validate(), std::invalid_argument);
}

TEST_CASE("tabular agent") {
    SUBCASE("starts uniform") {
        TabularAgent agent(4, {0.5, 0.9, 1.0}, UpdateRule::modulated);
        Rng rng(1);
        const auto d = agent.act(rng);
        for (std::size_t i = 0; i < 4; ++i) CHECK(d.policy[i] == doctest::Approx(0.25));
    }
    SUBCASE("bootstraps from the best value of the recurring state") {
        TabularAgent agent(3, {0.5, 0.9, 1.0}, UpdateRule::conventional);
        agent.learn(0, 1.0, 0.3);  // V = [0.5, 0, 0]
        CHECK(agent.values()[0] == doctest::Approx(0.5));
        agent.learn(1, -1.0, 0.3);  // delta = -1 + 0.9 * 0.5 - 0
        CHECK(agent.values()[1] == doctest::Approx(0.5 * (-1.0 + 0.45)));
    }
    SUBCASE("modulated agent scales by the supplied probability") {
        TabularAgent agent(3, {0.5, 0.0, 1.0}, UpdateRule::modulated);
        agent.learn(2, 1.0, 0.4);
        CHECK(agent.values()[2] == doctest::Approx(0.5 * 0.4));
    }
    SUBCASE("unit modulation matches the conventional agent") {
        TabularAgent conv(3, {1.3, 0.9, 0.5}, UpdateRule::conventional);
        TabularAgent mod(3, {1.3, 0.9, 0.5}, UpdateRule::modulated);
        mod.force_unit_modulation(true);
        Rng rng(4);
        std::uniform_real_distribution<double> pi(0.0, 1.0);
        for (int t = 0; t < 500; ++t) {
            const auto a = static_cast<std::size_t>(t % 3);
            const double r = (t % 5 == 0) ? -1.0 : 1.0;
            const double p = pi(rng);
            conv.learn(a, r, p);
            mod.learn(a, r, p);
            REQUIRE(conv.values() == mod.values());
        }
    }
    SUBCASE("rejects bad hyperparameters and actions") {
        CHECK_THROWS_AS(TabularAgent(3, {3.0, 0.0, 1.0}, UpdateRule::conventional), std::invalid_argument);
        TabularAgent agent(3, {0.1, 0.0, 1.0}, UpdateRule::conventional);
        CHECK_THROWS_AS(agent.learn(3, 1.0, 0.5), std::out_of_range);
    }
}

TEST_CASE("update rule names round-trip") {
    CHECK(parse_update_rule(to_string(UpdateRule::conventional)) == UpdateRule::conventional);
    CHECK(parse_update_rule(to_string(UpdateRule::modulated)) == UpdateRule::modulated);
    CHECK_THROWS_AS(parse_update_rule("ipse"), std::invalid_argument);
}
