#include <cmath>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>

#include "semipert/numerics.hpp"
#include "test_support.hpp"

using namespace semipert;
using semipert::testing::random_matrix;
using semipert::testing::random_vector;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double series_exp(double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= x / k;
        sum += term;
    }
    return sum;
}

}  // namespace

TEST_CASE("grid nodes and trapezoid weights") {
    Grid g(0.0, 0.1, 37);
    REQUIRE(g.size() == 38);
    REQUIRE_THAT(g.point(37), WithinAbs(3.7, 1e-12));
    double total = 0.0;
    for (double w : g.trapezoid_weights()) {
        REQUIRE(w >= 0.0);
        total += w;
    }
    REQUIRE_THAT(total, WithinRel(37 * 0.1, 1e-12));
    REQUIRE(g.index_of(1.2) == 12);
    REQUIRE_ERROR(g.index_of(1.25), ErrorCode::GridAlignment);
    REQUIRE_ERROR(g.index_of(5.0), ErrorCode::Domain);
    REQUIRE_ERROR(Grid(0.0, 0.0, 3), ErrorCode::Domain);
    REQUIRE_ERROR(Grid(0.0, 0.1, 0), ErrorCode::Domain);
    REQUIRE_ERROR(Grid::over(0.0, 1.0, 0.3), ErrorCode::GridAlignment);
    REQUIRE(Grid::over(-1.0, 0.0, 1.0 / 256).count() == 256);
}

TEST_CASE("matexp special values") {
    REQUIRE(matexp(Matrix::Constant(3, 3, 2.5), 0.0).isApprox(Matrix::Identity(3, 3)));
    REQUIRE_THAT(matexp(Matrix::Constant(1, 1, -1.0), 1.0)(0, 0), WithinAbs(series_exp(-1.0), 1e-15));
    REQUIRE_THAT(matexp(Matrix::Constant(1, 1, -1.0), 1.0)(0, 0), WithinAbs(0.36787944117144233, 1e-15));

    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;
    const Matrix r = matexp(rot, std::numbers::pi);
    REQUIRE((r + Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);

    REQUIRE_ERROR(matexp(Matrix::Zero(2, 3), 1.0), ErrorCode::Dimension);
    REQUIRE_ERROR(matexp(Matrix::Zero(2, 2), -1.0), ErrorCode::Domain);
}

TEST_CASE("matexp agrees with an independent Pade implementation") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 6;
        const Matrix a = random_matrix(rng, n, n, 1.5);
        const double t = 0.3 * (trial % 5 + 1);
        const Matrix ours = matexp(a, t);
        const Matrix ref = (a * t).exp();
        REQUIRE((ours - ref).cwiseAbs().maxCoeff() <= 1e-11 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("matexp semigroup law") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 4;
        Matrix a = random_matrix(rng, n, n);
        a /= operator_norm(a, ValueNorm::Euclidean);
        const double s = 0.7 + 0.2 * (trial % 7), t = 1.9 + 0.5 * (trial % 5);
        REQUIRE(a.norm() * (s + t) <= 10.0 * std::sqrt(n));
        const Matrix lhs = matexp(a, s) * matexp(a, t);
        const Matrix rhs = matexp(a, s + t);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("exponential weights match the scalar closed form") {
    for (double a : {-3.0, -1.0, -1e-4, 0.5}) {
        const double h = 0.01;
        const auto w = exponential_weights(Matrix::Constant(1, 1, a), h);
        const double z = a * h;
        // phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2; series near 0.
        const double phi1 = std::abs(z) > 1e-3 ? std::expm1(z) / z : 1 + z / 2 + z * z / 6 + z * z * z / 24;
        const double phi2 = std::abs(z) > 1e-3 ? (std::expm1(z) - z) / (z * z) : 0.5 + z / 6 + z * z / 24 + z * z * z / 120;
        REQUIRE_THAT(w.E(0, 0), WithinRel(std::exp(z), 1e-14));
        REQUIRE_THAT(w.W1(0, 0), WithinRel(h * phi2, 1e-9));
        REQUIRE_THAT(w.W0(0, 0), WithinRel(h * (phi1 - phi2), 1e-9));
    }
}

TEST_CASE("exponential weights reproduce the convolution of a linear input") {
    // int_0^h e^{(h-s)A}(u0 (1 - s/h) + u1 s/h) ds by fine trapezoid.
    std::mt19937 rng(3);
    const Matrix a = random_matrix(rng, 3, 3);
    const Vector u0 = random_vector(rng, 3), u1 = random_vector(rng, 3);
    const double h = 0.2;
    const auto w = exponential_weights(a, h);
    const int n = 4000;
    Vector acc = Vector::Zero(3);
    for (int i = 0; i <= n; ++i) {
        const double s = h * i / n;
        const double wt = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += wt * (h / n) * matexp(a, h - s) * (u0 * (1 - s / h) + u1 * (s / h));
    }
    REQUIRE((w.W0 * u0 + w.W1 * u1 - acc).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("quad examples") {
    auto samples = [](const Grid& g, auto f) {
        std::vector<StateVector> out;
        for (int k = 0; k < g.size(); ++k) out.emplace_back(Vector::Constant(1, f(g.point(k))), Norm::sup());
        return out;
    };
    const Grid g1(0.0, 0.5, 4);
    REQUIRE_THAT(quad(g1, samples(g1, [](double) { return 1.0; })).coords(0), WithinAbs(2.0, 1e-15));
    const Grid g2(0.0, 0.25, 4);
    REQUIRE_THAT(quad(g2, samples(g2, [](double s) { return s; })).coords(0), WithinAbs(0.5, 1e-15));
    const Grid g3 = Grid::over(0.0, 1.0, std::ldexp(1.0, -10));
    REQUIRE_THAT(quad(g3, samples(g3, [](double s) { return std::exp(-s); })).coords(0), WithinAbs(0.63212056, 1e-6));

    auto short_list = samples(g1, [](double) { return 1.0; });
    short_list.pop_back();
    REQUIRE_ERROR(quad(g1, short_list), ErrorCode::Dimension);
}

TEST_CASE("quad converges at second order") {
    const double exact = -std::expm1(-2.0) + std::sin(2.0);
    std::vector<double> errs;
    for (int n : {16, 32, 64, 128}) {
        const Grid g(0.0, 2.0 / n, n);
        std::vector<StateVector> s;
        for (int k = 0; k < g.size(); ++k)
            s.emplace_back(Vector::Constant(1, std::exp(-g.point(k)) + std::cos(g.point(k))), Norm::sup());
        errs.push_back(std::abs(quad(g, s).coords(0) - exact));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) REQUIRE(std::log2(errs[i - 1] / errs[i]) >= 1.9);
}

TEST_CASE("norm axioms on random vectors") {
    std::mt19937 rng(5);
    const std::vector<Norm> norms{Norm::sup(), Norm::euclidean(), Norm::l1_grid(0.1), Norm::l1_grid(0.05, 2),
                                  Norm::product({Norm::sup(), Norm::l1_grid(0.25, 2)}, {2, 8})};
    for (const auto& n : norms) {
        for (int trial = 0; trial < 50; ++trial) {
            const Vector x = random_vector(rng, 10), y = random_vector(rng, 10), phi = random_vector(rng, 10);
            const double c = std::normal_distribution<double>(0, 3)(rng);
            REQUIRE(n(x) > 0.0);
            REQUIRE(n(x + y) <= n(x) + n(y) + 1e-12);
            REQUIRE_THAT(n(c * x), WithinRel(std::abs(c) * n(x), 1e-13));
            REQUIRE(std::abs(phi.dot(x)) <= n.dual(phi) * n(x) * (1 + 1e-12));
        }
        REQUIRE(n(Vector::Zero(10)) == 0.0);
    }
    Vector x(4);
    x << 1, -2, 3, -4;
    REQUIRE_THAT(Norm::l1_grid(0.5)(x), WithinAbs(5.0, 1e-15));
    REQUIRE_THAT(Norm::l1_grid(0.5, 2)(x), WithinAbs(0.5 * (2 + 4), 1e-15));
    REQUIRE_THAT(Norm::l1_grid(0.5, 2, ValueNorm::Euclidean)(x), WithinAbs(0.5 * (std::sqrt(5.0) + 5.0), 1e-15));
}

TEST_CASE("operator norms") {
    Matrix m(2, 2);
    m << 1, -2, 3, 0.5;
    REQUIRE_THAT(operator_norm(m, ValueNorm::Sup), WithinAbs(3.5, 1e-15));
    Matrix d = Matrix::Zero(2, 2);
    d.diagonal() << -3, 2;
    REQUIRE_THAT(operator_norm(d, ValueNorm::Euclidean), WithinAbs(3.0, 1e-14));
}

TEST_CASE("integrate rules and line fit") {
    const std::vector<double> f{1, 2, 3, 4};
    REQUIRE_THAT(integrate(f, 0.5, Quadrature::Trapezoid), WithinAbs(0.5 * (0.5 + 2 + 3 + 2), 1e-15));
    REQUIRE_THAT(integrate(f, 0.5, Quadrature::LeftEndpoint), WithinAbs(0.5 * 6, 1e-15));
    const std::vector<double> x{0, 1, 2, 3}, y{1, -1, -3, -5};
    const auto fit = fit_line(x, y);
    REQUIRE_THAT(fit.slope, WithinAbs(-2.0, 1e-14));
    REQUIRE_THAT(fit.intercept, WithinAbs(1.0, 1e-14));
    REQUIRE_THAT(fit.r_squared, WithinAbs(1.0, 1e-14));
}
