#include <doctest.h>

#include "homlab/errors.hpp"
#include "homlab/spectral.hpp"

#include <cmath>
#include <random>

using namespace homlab;

namespace {
constexpr double pi = 3.14159265358979323846;
constexpr double th0 = pi / 4.0;
}

TEST_CASE("c_of branch structure") {
    CHECK(c_of(SpectralParameter::make({0.0, 0.0}, th0)) == 1.0);
    CHECK(c_of(SpectralParameter::make({0.0, 1.0}, th0)) == 1.0);  // theta = pi/2
    const auto p = SpectralParameter::make(std::polar(1.0, pi / 6.0), th0);
    CHECK(c_of(p) == doctest::Approx(2.0).epsilon(1e-14));  // |sin(pi/6)|^{-1}
    CHECK_THROWS_AS(SpectralParameter::make({2.0, 0.0}, th0), ConfigError);
}

TEST_CASE("in_sector angle comparisons") {
    CHECK(in_sector({-1.0, 0.0}, th0));
    CHECK(in_sector(std::polar(1.0, 7.0 * pi / 8.0), th0));
    CHECK_FALSE(in_sector({0.0, 1.0}, th0));  // pi/2 < 3pi/4
    CHECK_FALSE(in_sector({0.0, 0.0}, th0));
}

TEST_CASE("sweep_grid ordering and rejection") {
    auto grid = sweep_grid({0.0}, {}, th0);
    REQUIRE(grid.size() == 1);
    CHECK(grid[0].is_zero());

    grid = sweep_grid({1.0, 10.0}, {pi}, th0);
    REQUIRE(grid.size() == 2);
    CHECK(grid[0].value.real() == doctest::Approx(-1.0));
    CHECK(grid[1].value.real() == doctest::Approx(-10.0));

    CHECK_THROWS_AS(sweep_grid({1.0}, {pi / 2.0}, th0), ConfigError);
}

TEST_CASE("properties: conjugation symmetry, c >= 1, sector monotonicity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mod(0.01, 100.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * pi);
    int checked = 0;
    for (int t = 0; t < 2000; ++t) {
        const double r = mod(rng), a = ang(rng);
        if (std::abs(std::remainder(a, 2.0 * pi)) < 1e-3) continue;  // skip positive axis
        const cplx lam = std::polar(r, a);
        const auto p = SpectralParameter::make(lam, th0);
        const auto pc = SpectralParameter::make(std::conj(lam), th0);
        CHECK(c_of(p) == doctest::Approx(c_of(pc)).epsilon(1e-12));
        CHECK(c_of(p) >= 1.0);
        if (in_sector(lam, 0.3)) CHECK(in_sector(lam, 0.5));
        ++checked;
    }
    CHECK(checked > 1500);
}
