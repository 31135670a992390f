#include <cmath>

#include "semipert/admissibility.hpp"
#include "semipert/measure.hpp"
#include "test_support.hpp"

using namespace semipert;
using semipert::testing::random_matrix;
using semipert::testing::random_vector;
using Catch::Matchers::WithinAbs;

namespace {

PerturbationTriple scalar(double q, ControlSpec control) {
    return {SemigroupSpec::matrix(Matrix::Constant(1, 1, -1.0)), std::move(control), Matrix::Constant(1, 1, q)};
}

std::vector<InputSignal> smooth_signals(const PerturbationTriple& tri, double horizon, double h, int count, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> freq(0.2, 3.0), phase(0.0, 6.0);
    const Grid g = Grid::over(0.0, horizon, h);
    std::vector<InputSignal> out;
    for (int s = 0; s < count; ++s) {
        const int d = tri.signal_dim();
        std::vector<double> f(d), p(d);
        for (int i = 0; i < d; ++i) {
            f[i] = freq(rng);
            p[i] = phase(rng);
        }
        out.push_back(InputSignal::sample(g, tri.signal_layout(), [&](double t) {
            Vector v(d);
            for (int i = 0; i < d; ++i) v(i) = std::sin(f[i] * t + p[i]) * std::exp(-0.1 * t);
            return v;
        }));
    }
    return out;
}

}  // namespace

TEST_CASE("B = 0 gives zero control constants") {
    const auto tri = scalar(0.5, ControlSpec::bounded(Matrix::Zero(1, 1)));
    const auto probes = default_probes(tri.base, 3);
    const auto sigs = smooth_signals(tri, 10.0, 0.01, 3, 1);
    const auto rep = estimate_constants(tri, probes, sigs, 10.0);
    REQUIRE(rep.M_B_est == 0.0);
    REQUIRE(rep.M_BC_est == 0.0);
    REQUIRE(rep.io_norm_est == 0.0);
    REQUIRE_ERROR(estimate_constants(tri, std::vector<StateVector>{}, sigs, 10.0), ErrorCode::Configuration);
}

TEST_CASE("scalar Miyadera-Voigt constants") {
    const auto tri = scalar(0.5, ControlSpec::identity());
    const auto probes = default_probes(tri.base, 4);
    const auto sigs = smooth_signals(tri, 40.0, 1e-3, 2, 2);
    const auto rep = estimate_constants(tri, probes, sigs, 40.0);
    REQUIRE(rep.q_est.has_value());
    REQUIRE_THAT(*rep.q_est, WithinAbs(0.5, 1e-6));
    REQUIRE(rep.sup_inv_obs_est <= 1.0 + 1e-6);
    REQUIRE_THAT(rep.sup_inv_obs_est, WithinAbs(1.0, 1e-6));
    REQUIRE(rep.io_norm_est <= 0.5 + 1e-9);
    REQUIRE(rep.verdicts.at("infinite_time").outcome == Outcome::Pass);
    REQUIRE(rep.verdicts.at("contraction").outcome == Outcome::Pass);
    REQUIRE(rep.M_B_est <= 1.0 + 1e-9);
    REQUIRE(rep.perturbed_contraction_est <= std::exp(-0.5 * 40.0) * 1.01);
}

TEST_CASE("translation atom keeps the input-output norm below the total variation") {
    const double h = 0.05;
    const Grid space = Grid::over(-4.0, 0.0, h);
    const PerturbationTriple tri{SemigroupSpec::left_translation(space), ControlSpec::boundary_dirichlet(1.0),
                                 MeasureSpec::atom(-1.0, 0.8).cell_functional(space)};
    const auto probes = default_probes(tri.base, 3, 42, 16);
    const auto sigs = smooth_signals(tri, 10.0, h, 3, 3);
    const auto rep = estimate_constants(tri, probes, sigs, 10.0);
    REQUIRE(rep.io_norm_est <= 0.8 + 1e-12);
    REQUIRE_THAT(rep.io_norm_est, WithinAbs(0.8, 1e-12));
    REQUIRE(rep.M_B_est <= 1.0 + 1e-12);
}

TEST_CASE("contraction violation is reported") {
    const auto tri = scalar(1.5, ControlSpec::identity());
    const auto rep = estimate_constants(tri, default_probes(tri.base, 1), smooth_signals(tri, 20.0, 0.01, 1, 4), 20.0);
    REQUIRE(rep.io_norm_est > 1.0);
    REQUIRE(rep.verdicts.at("contraction").outcome == Outcome::Fail);
    REQUIRE(rep.verdicts.at("infinite_time").outcome == Outcome::Fail);
}

TEST_CASE("estimates are monotone in horizon and probe set") {
    std::mt19937 rng(6);
    const Matrix a = random_matrix(rng, 3, 3, 0.3) - Matrix::Identity(3, 3);
    const PerturbationTriple tri{SemigroupSpec::matrix(a), ControlSpec::bounded(random_matrix(rng, 3, 2, 0.3)),
                                 random_matrix(rng, 2, 3, 0.3)};
    const auto probes = default_probes(tri.base, 5);
    const auto sigs = smooth_signals(tri, 20.0, 0.01, 3, 5);
    const auto small = estimate_constants(tri, std::span(probes).first(2), std::span(sigs).first(1), 10.0);
    const auto mid = estimate_constants(tri, probes, sigs, 10.0);
    const auto big = estimate_constants(tri, probes, sigs, 20.0);
    for (auto [lo, hi] : {std::pair{&small, &mid}, std::pair{&mid, &big}}) {
        REQUIRE(lo->M_B_est <= hi->M_B_est + 1e-15);
        REQUIRE(lo->M_C_est <= hi->M_C_est + 1e-15);
        REQUIRE(lo->M_BC_est <= hi->M_BC_est + 1e-15);
        REQUIRE(lo->sup_inv_obs_est <= hi->sup_inv_obs_est + 1e-15);
    }
}

TEST_CASE("bound chain of the boundedness argument") {
    // sup_t ||B_t (I-F_t)^-1 C_t x|| <= M_B sup_t ||(I-F_t)^-1 C_t x||_1
    std::mt19937 rng(12);
    const Matrix a = random_matrix(rng, 3, 3, 0.3) - Matrix::Identity(3, 3);
    const PerturbationTriple tri{SemigroupSpec::matrix(a), ControlSpec::bounded(random_matrix(rng, 3, 2, 0.4)),
                                 random_matrix(rng, 2, 3, 0.4)};
    const Grid g = Grid::over(0.0, 15.0, 0.01);
    const auto probes = default_probes(tri.base, 4);
    std::vector<InputSignal> sigs = smooth_signals(tri, 15.0, 0.01, 2, 7);
    std::vector<PerturbedRun> runs;
    for (const auto& x : probes) {
        runs.push_back(perturbed_run(tri, x, g));
        sigs.push_back(runs.back().feedback);
    }
    const auto rep = estimate_constants(tri, probes, sigs, 15.0);
    const DiscreteSystem sys(tri, 0.01);
    for (const auto& run : runs) {
        const auto states = sys.control_states(run.feedback.values);
        double lhs = 0.0;
        for (const auto& b : states) lhs = std::max(lhs, sys.state_norm()(b));
        REQUIRE(lhs <= rep.M_B_est * run.feedback.l1_norm() * (1 + 1e-12));
    }
}

TEST_CASE("Miyadera-Voigt chain on random instances") {
    std::mt19937 rng(14);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 2 + trial % 2;
        const Matrix a = random_matrix(rng, n, n, 0.3) - 1.5 * Matrix::Identity(n, n);
        Matrix c = random_matrix(rng, n, n);
        const PerturbationTriple probe{SemigroupSpec::matrix(a), ControlSpec::identity(), c};
        c *= 0.18 * (trial + 1) / io_norm_estimate(probe, Grid::over(0.0, 20.0, 0.01));
        const PerturbationTriple tri{SemigroupSpec::matrix(a), ControlSpec::identity(), c};
        const auto probes = default_probes(tri.base, 6);
        const auto rep = estimate_constants(tri, probes, smooth_signals(tri, 20.0, 0.01, 1, 8), 20.0);
        const double q = std::max(*rep.q_est, rep.io_norm_est);
        REQUIRE(q < 1.0);
        REQUIRE(rep.sup_inv_obs_est <= q / (1 - q) + 1e-6);
    }
}

TEST_CASE("check_miyadera_voigt examples") {
    const std::vector<StateVector> probes{StateVector(Vector::Ones(1), Norm::sup())};
    const auto zero = check_miyadera_voigt(scalar(0.0, ControlSpec::identity()), probes, 40.0, 0.9, 1e-3);
    REQUIRE(zero.verdict.outcome == Outcome::Pass);
    REQUIRE(zero.ratio == 0.0);
    const auto half = check_miyadera_voigt(scalar(0.5, ControlSpec::identity()), probes, 40.0, 0.9, 1e-3);
    REQUIRE(half.verdict.outcome == Outcome::Pass);
    REQUIRE_THAT(half.ratio, WithinAbs(0.5, 1e-6));
    const auto big = check_miyadera_voigt(scalar(1.5, ControlSpec::identity()), probes, 40.0, 0.9, 1e-3);
    REQUIRE(big.verdict.outcome == Outcome::Fail);
    REQUIRE_THAT(big.ratio, WithinAbs(1.5, 1e-6));
    REQUIRE_ERROR(check_miyadera_voigt(scalar(0.5, ControlSpec::bounded(Matrix::Ones(1, 1))), probes, 40.0, 0.9, 1e-3),
                  ErrorCode::Configuration);
}

TEST_CASE("Favard estimates") {
    const auto s1 = SemigroupSpec::matrix(Matrix::Constant(1, 1, -1.0));
    const Grid probes(1e-4, 1e-4, 200);
    REQUIRE(favard_norm(s1, s1.state(Vector::Zero(1)), probes).favard_norm == 0.0);
    const auto f1 = favard_norm(s1, s1.state(Vector::Ones(1)), probes);
    REQUIRE(f1.favard_norm <= 1.0);
    REQUIRE_THAT(f1.favard_norm, WithinAbs(1.0, 1e-4));
    REQUIRE_THAT(f1.argmax_t, WithinAbs(1e-4, 1e-15));

    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << -1, -3;
    const auto s2 = SemigroupSpec::matrix(a);
    const auto f2 = favard_norm(s2, s2.state(Vector::Ones(2)), probes);
    REQUIRE_THAT(f2.favard_norm, WithinAbs((a * Vector::Ones(2)).cwiseAbs().maxCoeff(), 1e-3));

    const auto coarse = favard_norm(s2, s2.state(Vector::Ones(2)), Grid(0.01, 0.01, 100));
    const auto fine = favard_norm(s2, s2.state(Vector::Ones(2)), Grid(0.01, 0.005, 200));
    REQUIRE(fine.favard_norm >= coarse.favard_norm - 1e-12);
    REQUIRE_ERROR(favard_norm(s2, s2.state(Vector::Ones(2)), Grid(0.0, 0.1, 10)), ErrorCode::Domain);
}

TEST_CASE("Desch-Schappacher Neumann bound") {
    const std::vector<StateVector> probes{StateVector(Vector::Ones(1), Norm::sup()),
                                          StateVector(Vector::Constant(1, -2.5), Norm::sup())};
    DeschSchappacherOptions opt;
    opt.step = std::ldexp(1.0, -12);
    opt.horizon = 45.0;

    auto pair = [](double b) {
        return PerturbationTriple{SemigroupSpec::matrix(Matrix::Constant(1, 1, -1.0)),
                                  ControlSpec::bounded(Matrix::Constant(1, 1, b)), Matrix::Identity(1, 1)};
    };
    const auto zero = check_desch_schappacher(pair(0.0), probes, 1.0, 1.0, opt);
    REQUIRE(zero.verdict.outcome == Outcome::Pass);
    REQUIRE(zero.rho == 0.0);
    for (std::size_t p = 0; p < probes.size(); ++p)
        REQUIRE(zero.probes[p].partial_sums.back() <= probes[p].norm() * (1 + 1e-8));

    const auto half = check_desch_schappacher(pair(0.5), probes, 1.0, 1.0, opt);
    REQUIRE(half.verdict.outcome == Outcome::Pass);
    REQUIRE_THAT(half.rho, WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(half.M_est, WithinAbs(1.0, 1e-12));
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const auto& tr = half.probes[p];
        REQUIRE(tr.partial_sums.back() <= 2.0 * probes[p].norm() * (1 + 1e-8));
        // Equality case: F^n[e^{-.}] = (bt)^n/n! e^{-t} has L1 norm b^n exactly.
        for (std::size_t n = 0; n < tr.terms.size(); ++n)
            REQUIRE_THAT(tr.terms[n], WithinAbs(std::pow(0.5, n) * probes[p].norm(), 1e-7));
    }

    const auto div = check_desch_schappacher(pair(1.5), probes, 1.0, 1.0, opt);
    REQUIRE(div.verdict.outcome == Outcome::Fail);
    REQUIRE(div.probes[0].terms.back() > div.probes[0].terms.front());

    REQUIRE_ERROR(check_desch_schappacher(pair(0.5), probes, 2.0, 1.0, opt), ErrorCode::Precondition);
    try {
        const PerturbationTriple growing{SemigroupSpec::matrix(Matrix::Constant(1, 1, 0.1)),
                                         ControlSpec::bounded(Matrix::Constant(1, 1, 0.1)), Matrix::Identity(1, 1)};
        check_desch_schappacher(growing, probes, 1.0, 1.0, opt);
        FAIL("expected PreconditionFailure");
    } catch (const PreconditionFailure& e) {
        REQUIRE_THAT(e.measured_rate, WithinAbs(0.1, 1e-6));
    }
    const PerturbationTriple not_id{SemigroupSpec::matrix(Matrix::Constant(1, 1, -1.0)),
                                    ControlSpec::bounded(Matrix::Constant(1, 1, 0.5)), Matrix::Constant(1, 1, 0.5)};
    REQUIRE_ERROR(check_desch_schappacher(not_id, probes, 1.0, 1.0, opt), ErrorCode::Configuration);
}
