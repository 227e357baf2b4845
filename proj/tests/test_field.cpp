#include "doctest.h"

#include "actionforge/field.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace actionforge;

namespace {

constexpr double pi = std::numbers::pi;

Field gaussian(const Grid& g, double center, double sigma) {
    return Field::sample(g, [&](const std::array<double, 3>& x) {
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) r2 += (x[a] - center) * (x[a] - center);
        return cplx(std::exp(-r2 / (2.0 * sigma * sigma)), 0.0);
    });
}

/// Smooth random field: a few low modes with random amplitudes.
Field random_smooth(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> amp(0.0, 1.0);
    std::vector<std::array<double, 4>> modes;
    for (int m = 0; m < 6; ++m) {
        std::uniform_int_distribution<int> wn(-5, 5);
        modes.push_back({double(wn(rng)), double(g.dim == 3 ? wn(rng) : 0), double(g.dim == 3 ? wn(rng) : 0),
                         amp(rng)});
    }
    return Field::sample(g, [&](const std::array<double, 3>& x) {
        double v = 0.0;
        for (auto& m : modes) v += m[3] * std::cos(m[0] * x[0] + m[1] * x[1] + m[2] * x[2] + m[3]);
        return cplx(v, 0.0);
    });
}

double max_abs_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace

TEST_CASE("grid validation and wavenumbers") {
    CHECK_THROWS_AS(Grid(2, 16), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1, 24), std::invalid_argument);
    Grid g(1, 16);
    CHECK(g.wavevector(0)[0] == 0.0);
    CHECK(g.wavevector(7)[0] == doctest::Approx(7.0));
    CHECK(g.wavevector(8)[0] == doctest::Approx(-8.0));
    CHECK(g.wavevector(15)[0] == doctest::Approx(-1.0));
    Grid h(1, 16, 4.0 * pi);
    CHECK(h.wavevector(1)[0] == doctest::Approx(0.5));
    Grid g3(3, 8);
    CHECK(g3.size() == 512);
    auto k = g3.wavevector(1 * 64 + 2 * 8 + 7);
    CHECK(k[0] == doctest::Approx(1.0));
    CHECK(k[1] == doctest::Approx(2.0));
    CHECK(k[2] == doctest::Approx(-1.0));
}

TEST_CASE("transform round trip and Parseval") {
    std::mt19937_64 rng(5);
    for (int dim : {1, 3}) {
        Grid g(dim, dim == 1 ? 128 : 16);
        Field f = random_smooth(g, rng);
        Field back = to_physical(to_spectral(f));
        double scale = 0.0;
        for (auto& v : f.values) scale = std::max(scale, std::abs(v));
        CHECK(max_abs_diff(f, back) <= 1e-12 * scale);

        Field spec = to_spectral(f);
        double phys = 0.0, spectral = 0.0;
        for (auto& v : f.values) phys += std::norm(v);
        for (auto& v : spec.values) spectral += std::norm(v);
        phys *= g.cell_volume();
        spectral *= g.cell_volume() / static_cast<double>(g.size());
        CHECK(std::abs(phys - spectral) <= 1e-12 * phys);
    }
}

TEST_CASE("apply_spatial") {
    Grid g(1, 64);
    Field s = Field::sample(g, [](auto& x) { return cplx(std::sin(x[0]), 0.0); });
    Field c = Field::sample(g, [](auto& x) { return cplx(std::cos(x[0]), 0.0); });
    CHECK(max_abs_diff(apply_spatial(DiffOp::d(1, 1), s), c) <= 1e-14);

    Field e = Field::sample(g, [](auto& x) { return std::exp(cplx(0.0, 3.0 * x[0])); });
    Field lap_e = apply_spatial(DiffOp::laplacian(1), e);
    CHECK(max_abs_diff(lap_e, e * cplx(-9.0)) <= 9e-12);

    Grid g3(3, 16);
    Field one = Field::sample(g3, [](auto&) { return cplx(1.0); });
    Field adv = apply_spatial(parse_diffop("dx + 2 dy - dz", 3), one);
    CHECK(l2_norm(adv) <= 1e-14);

    CHECK_THROWS_AS(apply_spatial(DiffOp::dt(1), s), std::invalid_argument);

    // spectral input stays spectral
    Field spec = apply_spatial(DiffOp::d(1, 1), to_spectral(s));
    CHECK(spec.tag == FieldTag::spectral);
    CHECK(max_abs_diff(to_physical(spec), c) <= 1e-14);
}

TEST_CASE("apply_spatial respects composition and reality") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int dim = trial % 2 ? 3 : 1;
        Grid g(dim, dim == 1 ? 64 : 16);
        Field f = random_smooth(g, rng);
        DiffOp a = testing::random_op(rng, dim, 3, 3);
        DiffOp b = testing::random_op(rng, dim, 3, 3);
        // keep the spatial parts only
        a = a.time_slice(0);
        b = b.time_slice(0);
        Field lhs = apply_spatial(a * b, f);
        Field rhs = apply_spatial(a, apply_spatial(b, f));
        double scale = std::max(l2_norm(lhs), 1e-300);
        CHECK(l2_distance(lhs, rhs) <= 1e-12 * scale);
        // real operator on a real field stays exactly real
        CHECK(lhs.imaginary_residue() == 0.0);
    }
    Grid g(1, 32);
    Field complex_field = Field::sample(g, [](auto& x) { return cplx(std::cos(x[0]), std::sin(x[0])); });
    CHECK_THROWS_AS(truncate_real(complex_field), std::domain_error);
}

TEST_CASE("integrate") {
    for (int n : {8, 64, 256}) {
        Grid g(1, n);
        CHECK(integrate(Field::sample(g, [](auto&) { return cplx(1.0); })) == doctest::Approx(2.0 * pi).epsilon(1e-15));
        CHECK(std::abs(integrate(Field::sample(g, [](auto& x) { return cplx(std::sin(x[0])); }))) <= 1e-14);
    }
    // oracle: adaptive quadrature of the same bump
    Grid g(1, 256);
    double sigma = 0.35;
    Field bump = gaussian(g, pi, sigma);
    double reference = testing::adaptive_simpson(
        [&](double x) { return std::exp(-(x - pi) * (x - pi) / (2 * sigma * sigma)); }, 0.0, 2.0 * pi, 1e-14);
    CHECK(std::abs(integrate(bump) - reference) <= 1e-10);
    CHECK_THROWS_AS(integrate(to_spectral(bump)), std::invalid_argument);
}

TEST_CASE("l2_distance") {
    Grid g(1, 64);
    Field zero(g);
    Field one = Field::sample(g, [](auto&) { return cplx(1.0); });
    CHECK(l2_distance(one, one) == 0.0);
    CHECK(l2_distance(zero, one) == doctest::Approx(std::sqrt(2.0 * pi)).epsilon(1e-15));
    CHECK_THROWS_AS(l2_distance(zero, Field(Grid(1, 32))), std::invalid_argument);
}

TEST_CASE("serialization") {
    Grid g(1, 32);
    Field f = gaussian(g, pi, 0.5);
    std::stringstream csv;
    write_csv(csv, f);
    CHECK(csv.str().rfind("x,value\n", 0) == 0);
    Field back = read_csv(csv, g);
    CHECK(max_abs_diff(f, back) == 0.0);

    Grid g3(3, 8);
    Field f3 = gaussian(g3, pi, 0.8);
    std::stringstream bin;
    write_binary(bin, f3);
    CHECK(bin.str().size() == 16 + 8 * 512);
    Field back3 = read_binary(bin);
    CHECK(back3.grid == g3);
    CHECK(max_abs_diff(f3, back3) == 0.0);

    std::stringstream truncated(bin.str().substr(0, 40));
    CHECK_THROWS_AS(read_binary(truncated), std::invalid_argument);
}

TEST_CASE("periodic gaussian from exact coefficients") {
    for (int dim : {1, 3}) {
        Grid g(dim, dim == 1 ? 128 : 16, 2 * std::numbers::pi);
        const double c = 2.5, s = dim == 1 ? 0.4 : 1.1;  // resolved: exp(-k_max^2 s^2 / 2) < 1e-16
        Field spec = periodic_gaussian(g, c, s, 1.5);
        CHECK(spec.tag == FieldTag::spectral);
        // Oracle: direct sum over periodic images.
        Field direct = Field::sample(g, [&](const std::array<double, 3>& x) {
            double v = 1.5;
            for (int a = 0; a < dim; ++a) {
                double acc = 0.0;
                for (int image = -3; image <= 3; ++image) {
                    double y = x[a] - c + image * g.length;
                    acc += std::exp(-y * y / (2 * s * s));
                }
                v *= acc;
            }
            return cplx(v, 0.0);
        });
        Field phys = to_physical(spec);
        double worst = 0.0;
        for (std::size_t i = 0; i < phys.size(); ++i) worst = std::max(worst, std::abs(phys.values[i] - direct.values[i]));
        CHECK(worst <= 1e-12);
        CHECK(spec.imaginary_residue() <= 1e-15);
    }
}
