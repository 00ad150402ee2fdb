#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bernmix/special_functions.hpp"

using namespace bernmix;

TEST_CASE("log_binomial matches exact small values", "[special]") {
    CHECK(std::exp(log_binomial(5, 2)) == Catch::Approx(10.0).epsilon(1e-13));
    CHECK(std::exp(log_binomial(10, 0)) == Catch::Approx(1.0).epsilon(1e-13));
    CHECK(std::exp(log_binomial(10, 10)) == Catch::Approx(1.0).epsilon(1e-13));
    CHECK(std::exp(log_binomial(30, 15)) == Catch::Approx(155117520.0).epsilon(1e-12));
    CHECK(log_binomial(5, 6) == -std::numeric_limits<double>::infinity());
    CHECK(log_binomial(5, -1) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("log_beta agrees with factorial identity", "[special]") {
    // B(a, b) = (a-1)!(b-1)!/(a+b-1)! for integers
    CHECK(std::exp(log_beta(3, 4)) == Catch::Approx(2.0 * 6.0 / 720.0).epsilon(1e-13));
    CHECK(std::exp(log_beta(1, 1)) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("regularized incomplete beta matches high-precision references", "[special]") {
    struct Case {
        double a, b, x, expected;
    };
    // Reference values computed with 30-digit arithmetic.
    const Case cases[] = {
        {2.42, 6.78, 0.2, 0.37145888537986763},
        {2.42, 6.78, 0.5, 0.93852448404664926},
        {0.73, 2.57, 0.1, 0.36533735121797144},
        {0.48, 1.72, 0.01, 0.14910996952381804},
        {5.0, 1.0, 0.9, 0.59049000000000007},
        {1.0, 1.0, 0.37, 0.37},
        {0.68, 2.38, 0.35, 0.75911492090110966},
        {12.5, 0.5, 0.99, 0.61970055304144935},
        {2.42, 6.78, 0.7212310464, 0.99822721169536263},
        {30.0, 40.0, 0.42, 0.44704953086047479},
    };
    for (const auto& c : cases) {
        CAPTURE(c.a, c.b, c.x);
        CHECK(regularized_incomplete_beta(c.a, c.b, c.x) ==
              Catch::Approx(c.expected).epsilon(1e-13));
    }
}

TEST_CASE("regularized incomplete beta edge cases and errors", "[special]") {
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, -0.5) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.5) == 1.0);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.0, -2.0, 0.5), std::invalid_argument);
}

TEST_CASE("regularized incomplete beta respects symmetry I_x(a,b) = 1 - I_{1-x}(b,a)", "[special]") {
    for (double a : {0.48, 1.0, 2.42, 7.3}) {
        for (double b : {0.5, 1.72, 6.78}) {
            for (double x : {0.05, 0.3, 0.5, 0.77, 0.95}) {
                const double lhs = regularized_incomplete_beta(a, b, x);
                const double rhs = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);
                CHECK(lhs == Catch::Approx(rhs).margin(1e-13));
            }
        }
    }
}

TEST_CASE("kolmogorov survival matches high-precision references", "[special]") {
    struct Case {
        double x, expected;
    };
    const Case cases[] = {
        {0.3, 0.99999069419866543},
        {0.5, 0.96394524366487509},
        {0.8, 0.54414241157419808},
        {1.0, 0.26999967167735452},
        {1.18, 0.12345380942976571},
        {1.2, 0.11224966667072498},
        {1.5, 0.022217962616525129},
        {2.0, 0.00067092525577969535},
        {0.05, 1.0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.x);
        CHECK(kolmogorov_survival(c.x) == Catch::Approx(c.expected).margin(1e-12));
    }
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(kolmogorov_survival(-1.0) == 1.0);
    CHECK(kolmogorov_survival(10.0) == Catch::Approx(0.0).margin(1e-30));
}

TEST_CASE("kolmogorov survival is continuous across the branch point", "[special]") {
    const double below = kolmogorov_survival(1.18 - 1e-9);
    const double above = kolmogorov_survival(1.18 + 1e-9);
    CHECK(below == Catch::Approx(above).margin(1e-7));
    // monotone decreasing
    double prev = 1.0;
    for (double x = 0.05; x < 3.0; x += 0.01) {
        const double q = kolmogorov_survival(x);
        CHECK(q <= prev + 1e-15);
        prev = q;
    }
}
