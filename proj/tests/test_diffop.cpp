#include "doctest.h"

#include "actionforge/diffop.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace actionforge;

namespace {

DiffOp op(std::string_view text, int dim = 1, const ParamMap& params = {}) {
    return parse_diffop(text, dim, params);
}

}  // namespace

TEST_CASE("op_add") {
    CHECK(op_add(op("dt"), op("-dt")).is_zero());
    CHECK(op_add(op("dt", 3), op("dx + dy + dz", 3)) == op("dt + dx + dy + dz", 3));
    DiffOp a = op("dt^2 + 1/2 dt - lap");
    CHECK(op_add(a, DiffOp::zero(1)) == a);
    CHECK_THROWS_AS(op_add(op("dt"), op("dt", 3)), std::invalid_argument);
}

TEST_CASE("op_mul") {
    DiffOp B = op("dx + 2 dy - 1/3 dz", 3);
    DiffOp lhs = op_mul(-DiffOp::dt(3) + B, DiffOp::dt(3) + B);
    CHECK(lhs == -DiffOp::dt(3, 2) + B * B);
    CHECK(op_mul(op("-dt + dx^3"), op("dt + dx^3")) == op("-dt^2 + dx^6"));
    DiffOp a = op("dt^2 + 1/2 dt - lap");
    CHECK(op_mul(DiffOp::identity(1), a) == a);
    CHECK_THROWS_AS(op_mul(op("dt"), op("dt", 3)), std::invalid_argument);
}

TEST_CASE("adjoint") {
    CHECK(adjoint(op("dt + dx + 1/2 dy", 3)) == op("-dt - dx - 1/2 dy", 3));
    CHECK(adjoint(DiffOp::laplacian(3)) == DiffOp::laplacian(3));
    ParamMap p{{"d0", Rational(1, 2)}};
    CHECK(adjoint(op("dt^2 + d0 dt - lap", 1, p)) == op("dt^2 - d0 dt - lap", 1, p));
    // complex coefficients are conjugated
    CHECK(adjoint(op("i dt + 1/2 dx^2")) == op("i dt + 1/2 dx^2"));
}

TEST_CASE("time_reverse") {
    CHECK(time_reverse(op("dt + dx^3")) == op("-dt + dx^3"));
    CHECK(time_reverse(op("dt + 3 dx", 1)) == op("-dt + 3 dx"));
    CHECK(time_reverse(DiffOp::laplacian(3)) == DiffOp::laplacian(3));
}

TEST_CASE("normal_op") {
    ParamMap p{{"d0", Rational(1, 2)}};
    DiffOp tel = op("dt^2 + d0 dt - lap", 3, p);
    DiffOp wave = op("dt^2 - lap", 3);
    CHECK(normal_op(tel) == wave * wave - Rational(1, 4) * DiffOp::dt(3, 2));
    DiffOp adv = op("dt + 2 dx");
    CHECK(normal_op(adv) == -(adv * adv));
    CHECK(normal_op(DiffOp::identity(1)) == DiffOp::identity(1));
    CHECK(normal_op(-tel) == normal_op(tel));
}

TEST_CASE("exact_divide") {
    auto q = exact_divide(op("-dt^2 + dx^6"), op("dt + dx^3"));
    REQUIRE(q.has_value());
    CHECK(*q == op("-dt + dx^3"));

    ParamMap p{{"d0", Rational(1, 2)}};
    CHECK_FALSE(exact_divide(op("lap - dt^2", 3), op("dt^2 + d0 dt - lap", 3, p)).has_value());

    DiffOp a = op("dt^2 + d0 dt - lap", 3, p);
    auto self = exact_divide(a, a);
    REQUIRE(self.has_value());
    CHECK(*self == DiffOp::identity(3));

    CHECK_THROWS_AS((void)exact_divide(a, DiffOp::zero(3)), std::invalid_argument);
}

TEST_CASE("symbol_eval") {
    std::vector<double> k{0.7, -1.3, 2.0};
    cplx s(0.3, -1.1);
    CHECK(std::abs(symbol_eval(DiffOp::dt(3), s, k) - s) == 0.0);
    CHECK(std::abs(symbol_eval(DiffOp::laplacian(3), s, k) - cplx(-(0.49 + 1.69 + 4.0), 0.0)) < 1e-14);
    ParamMap p{{"d0", Rational(1, 2)}};
    cplx tel = symbol_eval(op("dt^2 + d0 dt - lap", 3, p), s, k);
    CHECK(std::abs(tel - (s * s + 0.5 * s + cplx(0.49 + 1.69 + 4.0))) < 1e-13);
    CHECK_THROWS_AS(symbol_eval(DiffOp::dt(3), s, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("parser round trip and syntax") {
    ParamMap p{{"tau0", Rational(1, 2)}, {"tau1", Rational(1, 4)}};
    DiffOp nsw = op("tau0 dt^3 + dt^2 - (1 + tau1 dt) lap", 3, p);
    CHECK(nsw.coefficient(MultiIndex{{3, 0, 0, 0}}) == QComplex(Rational(1, 2)));
    CHECK(nsw.coefficient(MultiIndex{{1, 0, 2, 0}}) == QComplex(Rational(-1, 4)));
    CHECK(op("0.25 dt") == op("1/4 dt"));
    CHECK(op("dt/2") == op("1/2 dt"));
    CHECK(op("(dt + dx)^2") == op("dt^2 + 2 dt dx + dx^2"));
    CHECK(op("dt dt") == op("dt^2"));
    CHECK(op("2*dx") == op("2 dx"));
    CHECK(op("id") == DiffOp::identity(1));
    CHECK_THROWS_AS(op("dy"), std::invalid_argument);
    CHECK_THROWS_AS(op("dt / dx"), std::invalid_argument);
    CHECK_THROWS_AS(op("foo dt"), std::invalid_argument);
    CHECK_THROWS_AS(op("dt^-1"), std::invalid_argument);
    CHECK_THROWS_AS(op("(dt"), std::invalid_argument);

    for (const char* text : {"dt^2 + 1/2 dt - lap", "i dt + 1/2 dx^2", "-dt + dx^3", "0", "1",
                             "(1/2 - 3 i) dt dx - 7/3 i", "-i dt"}) {
        DiffOp a = op(text);
        CAPTURE(text);
        CAPTURE(to_string(a));
        CHECK(op(to_string(a)) == a);
        CHECK(to_string(op(to_string(a))) == to_string(a));
    }
    CHECK(to_string(op("dt^2 + 1/2 dt - dx^2")) == "dt^2 + 1/2 dt - dx^2");
}

TEST_CASE("parser round trip on random operators") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        int dim = trial % 2 ? 3 : 1;
        DiffOp a = testing::random_op(rng, dim, 6, 5, true);
        CAPTURE(to_string(a));
        CHECK(parse_diffop(to_string(a), dim) == a);
    }
}

TEST_CASE("algebraic properties on random operators") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        int dim = trial % 3 == 0 ? 3 : 1;
        DiffOp a = testing::random_op(rng, dim, 4, 4, trial % 2 == 0);
        DiffOp b = testing::random_op(rng, dim, 4, 4, trial % 2 == 0);
        CHECK(adjoint(adjoint(a)) == a);
        CHECK(time_reverse(time_reverse(a)) == a);
        CHECK(adjoint(a * b) == adjoint(b) * adjoint(a));
        CHECK(adjoint(a * b) == adjoint(a) * adjoint(b));
        if (!b.is_zero()) {
            auto q = exact_divide(a * b, b);
            REQUIRE(q.has_value());
            CHECK(*q == a);
        }
    }
}

TEST_CASE("symbol is a ring homomorphism in exact arithmetic") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        int dim = trial % 2 ? 3 : 1;
        DiffOp a = testing::random_op(rng, dim, 4, 4, true);
        DiffOp b = testing::random_op(rng, dim, 4, 4, true);
        QComplex s(testing::random_rational(rng), testing::random_rational(rng));
        std::vector<Rational> k;
        for (int i = 0; i < dim; ++i) k.push_back(testing::random_rational(rng));
        CHECK(symbol_eval(a * b, s, k) == symbol_eval(a, s, k) * symbol_eval(b, s, k));
        CHECK(symbol_eval(a + b, s, k) == symbol_eval(a, s, k) + symbol_eval(b, s, k));
    }
}

TEST_CASE("frac_delta_kernel") {
    // Oracle: invert the Laplace symbol s^{-alpha} along a Talbot contour.
    for (double t : {0.05, 0.3, 1.0, 2.7}) {
        double talbot = testing::talbot_inverse([](cplx s) { return std::pow(s, -0.5); }, t);
        double value = frac_delta_kernel(Rational(1, 2), t);
        CHECK(value == doctest::Approx(1.0 / std::sqrt(std::numbers::pi * t)).epsilon(1e-14));
        CHECK(std::abs(value - talbot) <= 1e-8 * value);
    }
    CHECK(frac_delta_kernel(Rational(1), 0.4) == 1.0);
    CHECK(frac_delta_kernel(Rational(1, 2), 0.0) == 0.0);
    CHECK(frac_delta_kernel(Rational(1, 2), -1.0) == 0.0);
    // alpha = 3/2 is the running integral of the alpha = 1/2 kernel.
    for (double t : {0.1, 1.0, 3.0}) {
        // sigma^2 substitution removes the endpoint singularity
        double integral = testing::adaptive_simpson(
            [](double sigma) { return 2.0 * sigma * frac_delta_kernel(Rational(1, 2), sigma * sigma); },
            0.0, std::sqrt(t), 1e-14);
        double value = frac_delta_kernel(Rational(3, 2), t);
        CHECK(value == doctest::Approx(2.0 * std::sqrt(t / std::numbers::pi)).epsilon(1e-14));
        CHECK(std::abs(value - integral) <= 1e-12);
    }
    CHECK_THROWS_AS(frac_delta_kernel(Rational(0), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(frac_delta_kernel(Rational(-1, 2), 1.0), std::invalid_argument);

    FracKernel k{Rational(1, 2), -2.0};
    CHECK(k.derivative(0, 0.5) == doctest::Approx(k(0.5)));
    // d/dt t^{-1/2}/sqrt(pi) = -1/2 t^{-3/2}/sqrt(pi)
    CHECK(k.derivative(1, 0.5) ==
          doctest::Approx(-2.0 * -0.5 * std::pow(0.5, -1.5) / std::sqrt(std::numbers::pi)));
    CHECK(FracKernel{Rational(1), 1.0}.derivative(1, 0.5) == 0.0);
}
