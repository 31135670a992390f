#include <cmath>

#include "semipert/semigroups.hpp"
#include "test_support.hpp"

using namespace semipert;
using semipert::testing::random_matrix;
using semipert::testing::random_vector;
using Catch::Matchers::WithinAbs;

namespace {

StateVector scalar(double v) { return StateVector(Vector::Constant(1, v), Norm::sup()); }

Vector sample_cells(const Grid& g, double (*f)(double)) {
    Vector v(g.count());
    for (int i = 0; i < g.count(); ++i) v(i) = f(g.point(i));
    return v;
}

}  // namespace

TEST_CASE("matrix semigroup apply") {
    const auto spec = SemigroupSpec::matrix(Matrix::Constant(1, 1, -1.0));
    REQUIRE_THAT(apply(spec, 1.0, scalar(1.0)).coords(0), WithinAbs(std::exp(-1.0), 1e-15));
    REQUIRE_ERROR(apply(spec, -0.5, scalar(1.0)), ErrorCode::Domain);
    REQUIRE_ERROR(apply(spec, 1.0, StateVector(Vector::Ones(2), Norm::sup())), ErrorCode::Dimension);
}

TEST_CASE("apply at t = 0 is the identity") {
    std::mt19937 rng(1);
    const Grid hist(-1.0, 0.125, 8);
    const std::vector<SemigroupSpec> specs{
        SemigroupSpec::matrix(random_matrix(rng, 3, 3)), SemigroupSpec::nilpotent_shift(hist),
        SemigroupSpec::left_translation(Grid(-3.0, 0.125, 24)),
        SemigroupSpec::block_diag({SemigroupSpec::matrix(random_matrix(rng, 2, 2)), SemigroupSpec::nilpotent_shift(hist, 2)})};
    for (const auto& s : specs) {
        const StateVector x = s.state(random_vector(rng, s.dim()));
        REQUIRE(apply(s, 0.0, x).coords == x.coords);
    }
}

TEST_CASE("nilpotent shift") {
    const Grid hist(-1.0, 1.0 / 16, 16);
    const auto spec = SemigroupSpec::nilpotent_shift(hist);
    const StateVector f = spec.state(sample_cells(hist, [](double s) { return std::cos(3 * s) + 2; }));
    REQUIRE(apply(spec, 1.0, f).coords.isZero(0.0));
    REQUIRE(apply(spec, 1.5, f).coords.isZero(0.0));

    // (S(t)f)(s) = f(s + t) on cell left endpoints.
    const StateVector g = apply(spec, 0.25, f);
    for (int i = 0; i < 16; ++i) {
        const double s = hist.point(i);
        const double expect = s + 0.25 < 0.0 - 1e-12 ? std::cos(3 * (s + 0.25)) + 2 : 0.0;
        REQUIRE_THAT(g.coords(i), WithinAbs(expect, 1e-14));
    }
    REQUIRE_ERROR(apply(spec, 0.1, f), ErrorCode::GridAlignment);
    REQUIRE_ERROR(SemigroupSpec::nilpotent_shift(Grid(-2.0, 0.125, 16)), ErrorCode::Domain);

    const auto o = orbit(spec, f, Grid(0.0, 1.0 / 16, 32));
    for (int k = 0; k < o.size(); ++k)
        if (o.grid.point(k) >= 1.0) REQUIRE(o.norms[k] == 0.0);
}

TEST_CASE("left translation reports the dropped mass") {
    const Grid space(-2.0, 0.1, 20);
    const auto spec = SemigroupSpec::left_translation(space);
    const StateVector f = spec.state(Vector::Ones(20));
    REQUIRE_THAT(f.norm(), WithinAbs(2.0, 1e-14));
    REQUIRE_THAT(truncated_mass(spec, 0.5, f), WithinAbs(0.5, 1e-14));
    REQUIRE_THAT(apply(spec, 0.5, f).norm(), WithinAbs(1.5, 1e-14));
    const auto o = orbit(spec, f, Grid(0.0, 0.1, 30));
    REQUIRE_THAT(o.dropped_mass, WithinAbs(2.0, 1e-12));
    REQUIRE_ERROR(SemigroupSpec::left_translation(Grid(-0.5, 0.1, 5)), ErrorCode::Domain);
}

TEST_CASE("orbit examples") {
    const auto spec = SemigroupSpec::matrix(Matrix::Constant(1, 1, -1.0));
    const auto z = orbit(spec, scalar(0.0), Grid(0.0, 0.1, 10));
    for (double n : z.norms) REQUIRE(n == 0.0);
    const auto o = orbit(spec, scalar(1.0), Grid::over(0.0, 5.0, 0.01));
    REQUIRE(o.size() == 501);
    for (int k = 0; k < o.size(); ++k) REQUIRE_THAT(o.norms[k], WithinAbs(std::exp(-o.grid.point(k)), 1e-8));
    REQUIRE_ERROR(orbit(spec, scalar(1.0), Grid(1.0, 0.1, 10)), ErrorCode::Domain);
}

TEST_CASE("semigroup law") {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spec = SemigroupSpec::matrix(random_matrix(rng, 3, 3, 0.5));
        const StateVector x = spec.state(random_vector(rng, 3));
        const double s = 0.3 + 0.1 * trial, t = 1.1;
        const Vector lhs = apply(spec, s, apply(spec, t, x)).coords;
        REQUIRE((lhs - apply(spec, s + t, x).coords).cwiseAbs().maxCoeff() < 1e-9);
    }
    const Grid hist(-1.0, 0.125, 8);
    const auto blk = SemigroupSpec::block_diag({SemigroupSpec::matrix(Matrix::Constant(1, 1, -0.5)),
                                                SemigroupSpec::nilpotent_shift(hist)});
    const StateVector x = blk.state(random_vector(rng, 9));
    const Vector lhs = apply(blk, 0.25, apply(blk, 0.5, x)).coords;
    const Vector rhs = apply(blk, 0.75, x).coords;
    REQUIRE((lhs.tail(8) - rhs.tail(8)).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(std::abs(lhs(0) - rhs(0)) < 1e-15);
}

TEST_CASE("block diagonal semigroup is bounded by max(M, 1)") {
    std::mt19937 rng(4);
    const Grid hist(-1.0, 1.0 / 32, 32);
    const auto blk = SemigroupSpec::block_diag({SemigroupSpec::matrix(-Matrix::Identity(2, 2)),
                                                SemigroupSpec::nilpotent_shift(hist, 2)});
    REQUIRE(blk.dim() == 66);
    for (int trial = 0; trial < 5; ++trial) {
        const StateVector x = blk.state(random_vector(rng, blk.dim()));
        const auto o = orbit(blk, x, Grid(0.0, 1.0 / 32, 96));
        for (double n : o.norms) REQUIRE(n <= x.norm() * (1 + 1e-14));
        REQUIRE_THAT(o.states.back().head(2).cwiseAbs().maxCoeff(),
                     WithinAbs(std::exp(-3.0) * x.coords.head(2).cwiseAbs().maxCoeff(), 1e-14));
        REQUIRE(o.states.back().tail(64).isZero(0.0));
    }
}

TEST_CASE("Hurwitz matrices decay on the diagonalizable test set") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> rate(0.5, 3.0);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + trial % 3;
        Matrix v = random_matrix(rng, n, n) + 2.0 * Matrix::Identity(n, n);
        Vector lam(n);
        for (int i = 0; i < n; ++i) lam(i) = -rate(rng);
        const double omega = -lam.maxCoeff();
        const Matrix a = v * lam.asDiagonal() * v.inverse();
        const double cond = operator_norm(v, ValueNorm::Euclidean) * operator_norm(v.inverse(), ValueNorm::Euclidean);
        const auto spec = SemigroupSpec::matrix(a, ValueNorm::Euclidean);
        const StateVector x = spec.state(random_vector(rng, n));
        const auto o = orbit(spec, x, Grid::over(0.0, 20.0, 0.05));
        for (int k = 0; k < o.size(); ++k) {
            const double t = o.grid.point(k);
            if (t >= 1.0) REQUIRE(o.norms[k] <= cond * std::exp(-omega * t / 2) * x.norm());
        }
    }
}
