#include <cmath>

#include "semipert/translation.hpp"
#include "test_support.hpp"

using namespace semipert;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

InputSignal scalar_signal(const Grid& g, const std::function<double(double)>& f,
                          Quadrature rule = Quadrature::LeftEndpoint) {
    return InputSignal::sample(g, SignalLayout::single(1, ValueNorm::Sup, rule),
                               [&](double t) { return Vector::Constant(1, f(t)); });
}

// Random signal with u(0) = 0 and support in [0, support].
InputSignal random_signal(std::mt19937& rng, const Grid& g, double support) {
    std::normal_distribution<double> nd;
    Matrix v = Matrix::Zero(1, g.size());
    for (int k = 1; k < g.size(); ++k)
        if (g.point(k) < support) v(0, k) = nd(rng);
    return InputSignal(g, v, SignalLayout::single(1, ValueNorm::Sup, Quadrature::LeftEndpoint));
}

}  // namespace

TEST_CASE("Dirichlet operator samples") {
    const DirichletSpec one(1.0);
    const Grid space = Grid::over(-10.0, 0.0, 1e-4);
    CHECK(dirichlet_apply(one, 0.0, space).coords.isZero(0.0));
    const auto f = dirichlet_apply(one, 1.0, space);
    CHECK_THAT(f.norm(), WithinAbs(0.9999546, 1e-4));
    CHECK_THAT(f.coords(space.index_of(-1.0)), WithinAbs(0.3678794, 1e-7));

    const DirichletSpec osc({0.5, 2.0});
    const auto g = dirichlet_apply(osc, 1.0, space);
    CHECK(g.dim() == 2 * space.count());
    CHECK_THAT(g.norm(), WithinAbs((1 - std::exp(-5.0)) / 0.5, 2e-4));

    REQUIRE_ERROR(DirichletSpec({0.0, 1.0}), ErrorCode::Domain);
    REQUIRE_ERROR(DirichletSpec(-1.0), ErrorCode::Domain);
    REQUIRE_ERROR(dirichlet_apply(one, 1.0, Grid::over(-2.0, -1.0, 0.5)), ErrorCode::Domain);
}

TEST_CASE("boundary control closed form") {
    const DirichletSpec spec(1.0);
    const double h = 1.0 / 64;
    const Grid space = Grid::over(-3.0, 0.0, h);
    const Grid tg = Grid::over(0.0, 1.0, h);
    CHECK(boundary_control_closed_form(spec, 1.0, InputSignal::zeros(tg, SignalLayout::single(1)), space)
              .state.coords.isZero(0.0));

    const auto ramp = scalar_signal(tg, [](double r) { return r; });
    const auto res = boundary_control_closed_form(spec, 1.0, ramp, space);
    CHECK_FALSE(res.nonzero_at_origin);
    CHECK_THAT(res.state.coords(space.index_of(-0.25)), WithinAbs(0.75, 1e-15));
    CHECK(res.state.coords(space.index_of(-1.5)) == 0.0);

    const auto shifted = scalar_signal(tg, [](double r) { return 1.0 + r; });
    const auto bad = boundary_control_closed_form(spec, 1.0, shifted, space);
    CHECK(bad.nonzero_at_origin);
    CHECK_FALSE(bad.warning.empty());
    CHECK_THAT(bad.state.coords(space.index_of(-1.5)), WithinAbs(std::exp(-0.5), 1e-15));

    REQUIRE_ERROR(boundary_control_closed_form(spec, 1.0, ramp, Grid::over(-3.0, 0.0, h / 2)),
                  ErrorCode::GridAlignment);
}

TEST_CASE("closed form never increases the L1 norm") {
    const DirichletSpec spec(1.0);
    const double h = 1.0 / 32;
    const Grid space = Grid::over(-10.0, 0.0, h);
    const Grid tg = Grid::over(0.0, 8.0, h);
    std::mt19937 rng(7);
    for (int seed = 0; seed < 100; ++seed) {
        const auto u = random_signal(rng, tg, 8.0);
        const double t0 = tg.point(1 + seed * 2);
        const auto b = boundary_control_closed_form(spec, t0, u, space).state;
        CHECK(b.norm() <= u.l1_norm(tg.index_of(t0)) * (1 + 1e-10));
    }
}

TEST_CASE("closed form, quadrature and the discrete control map agree") {
    for (std::complex<double> lam : {std::complex<double>(1.0), std::complex<double>(0.7, 1.5)}) {
        const DirichletSpec spec(lam);
        double prev = 0.0;
        for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
            const Grid space = Grid::over(-3.0, 0.0, h);
            const Grid tg = Grid::over(0.0, 2.0, h);
            const auto u = scalar_signal(tg, [](double r) { return r * std::cos(3 * r); });
            const auto closed = boundary_control_closed_form(spec, 2.0, u, space).state;
            const auto quad = boundary_control_quadrature(spec, 2.0, u, space);
            const double err = closed.norm_tag(closed.coords - quad.coords);
            INFO("lambda " << lam << " h " << h);
            CHECK(err <= 5 * h);
            if (prev > 0.0) CHECK(prev / err >= 2.0);
            prev = err;

            if (!spec.is_complex()) {
                const auto tri = translation_triple(spec, MeasureSpec::atom(-1.0, 0.5), 3.0, h);
                const auto b = control_map(tri, 2.0, u);
                CHECK(closed.norm_tag(closed.coords - b.coords) <= 1e-14);
            }
        }
    }
}

TEST_CASE("measure observation") {
    const Grid space = Grid::over(-4.0, 0.0, 1.0 / 64);
    const DirichletSpec spec(1.0);
    const auto f = dirichlet_apply(spec, 1.0, space);
    CHECK(measure_observation(MeasureSpec::atom(-1.0, 0.8), StateVector(Vector::Zero(f.dim()), f.norm_tag), space)(0) ==
          0.0);
    CHECK_THAT(measure_observation(MeasureSpec::atom(-1.0, 0.8), f, space)(0), WithinAbs(0.2943036, 1e-7));
    const StateVector ones(Vector::Ones(space.count()), f.norm_tag);
    CHECK_THAT(measure_observation(MeasureSpec::density(-1.0, 0.0, 0.5), ones, space)(0), WithinAbs(0.5, 1e-14));
    REQUIRE_ERROR(measure_observation(MeasureSpec::atom(-1.0 - 1.0 / 256, 0.8), f, space), ErrorCode::Alignment);
    REQUIRE_ERROR(measure_observation(MeasureSpec::atom(-1.0, 0.8), StateVector(Vector::Ones(3), f.norm_tag), space),
                  ErrorCode::Dimension);
}

TEST_CASE("infinite-time input-output map") {
    const double h = 1.0 / 64;
    const Grid tg = Grid::over(0.0, 10.0, h);
    std::mt19937 rng(11);

    CHECK(io_infty_closed_form(MeasureSpec::atom(-1.0, 0.8), InputSignal::zeros(tg, SignalLayout::single(1)))
              .values.isZero(0.0));

    SECTION("a single atom is a pure delay") {
        const auto mu = MeasureSpec::atom(-1.0, 0.8);
        const auto u = random_signal(rng, tg, 8.5);
        const auto fu = io_infty_closed_form(mu, u);
        for (int k = 0; k < tg.size(); ++k)
            CHECK(fu.values(0, k) == (k >= 64 ? 0.8 * u.values(0, k - 64) : 0.0));
        CHECK_THAT(fu.l1_norm(), WithinRel(0.8 * u.l1_norm(), 1e-12));
    }

    SECTION("contraction by the total variation on 100 signals") {
        MeasureSpec mu(1);
        mu.add_atom(-0.5, Matrix::Constant(1, 1, 0.3)).add_atom(-2.0, Matrix::Constant(1, 1, -0.2));
        mu.add_density(-3.0, -1.0, Matrix::Constant(1, 1, 0.15));
        const double tv = mu.total_variation();
        REQUIRE_THAT(tv, WithinAbs(0.8, 1e-14));
        for (int s = 0; s < 100; ++s) {
            const auto u = random_signal(rng, tg, 6.0);
            CHECK(io_infty_closed_form(mu, u).l1_norm() <= tv * u.l1_norm() * (1 + 1e-12));
        }
    }

    SECTION("agreement with the discrete input-output map") {
        const DirichletSpec spec(1.0);
        const auto u = random_signal(rng, tg, 9.0);
        const auto atoms = MeasureSpec::atom(-1.0, 0.5).add_atom(-2.5, Matrix::Constant(1, 1, 0.25));
        const auto tri = translation_triple(spec, atoms, 4.0, h);
        const auto a = io_map(tri, 10.0, u), b = io_infty_closed_form(atoms, u);
        CHECK(InputSignal(tg, a.values - b.values, u.layout).l1_norm() <= 1e-6);

        const auto smooth = scalar_signal(tg, [](double r) { return std::sin(r) * std::exp(-0.2 * r) * r; });
        const auto dens = MeasureSpec::density(-2.0, -0.5, 0.4);
        const auto tri2 = translation_triple(spec, dens, 4.0, h);
        const auto c = io_map(tri2, 10.0, smooth), d = io_infty_closed_form(dens, smooth);
        CHECK(InputSignal(tg, c.values - d.values, smooth.layout).l1_norm() <= 5 * h);
    }
}

TEST_CASE("perturbed translation semigroup stays bounded") {
    const double h = 1.0 / 32;
    MeasureSpec mu(1);
    mu.add_atom(-1.0, Matrix::Constant(1, 1, 0.5)).add_density(-2.0, -1.0, Matrix::Constant(1, 1, 0.2));
    const double tv = mu.total_variation();
    const auto tri = translation_triple(DirichletSpec(1.0), mu, 6.0, h);
    const Grid space = tri.base.space_grid();
    Vector f(tri.base.dim());
    for (int i = 0; i < f.size(); ++i) f(i) = std::exp(0.5 * space.point(i)) * std::cos(2 * space.point(i));
    const auto x = tri.state(f);
    double sup_h = 0.0, sup_2h = 0.0;
    const auto orb = perturbed_orbit(tri, x, Grid::over(0.0, 40.0, h));
    for (int k = 0; k < orb.size(); ++k) {
        if (orb.grid.point(k) <= 20.0) sup_h = std::max(sup_h, orb.norms[k]);
        sup_2h = std::max(sup_2h, orb.norms[k]);
    }
    CHECK(sup_2h <= x.norm() / (1 - tv) * (1 + 1e-12));
    CHECK(sup_2h <= sup_h * (1 + 1e-9));
}
