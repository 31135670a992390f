#pragma once

#include <complex>
#include <string>

#include "semipert/maps.hpp"
#include "semipert/measure.hpp"

namespace semipert {

/// Dirichlet operator c -> c e^{lambda s} on the half line, Re(lambda) > 0.
///
/// Real lambda gives scalar functions; complex lambda gives value_dim 2 with
/// coordinates (re, im) and the modulus as value norm.
struct DirichletSpec {
    std::complex<double> lambda{1.0, 0.0};

    explicit DirichletSpec(std::complex<double> l);
    bool is_complex() const { return lambda.imag() != 0.0; }
    int value_dim() const { return is_complex() ? 2 : 1; }
    ValueNorm value_norm() const { return is_complex() ? ValueNorm::Euclidean : ValueNorm::Sup; }
};

/// Cell samples of s -> c e^{lambda s} on a grid over [-L, 0].
StateVector dirichlet_apply(const DirichletSpec& spec, std::complex<double> c, const Grid& space);

struct ClosedFormResult {
    StateVector state;
    bool nonzero_at_origin = false;  ///< u(0) != 0: the formula is outside its hypotheses
    std::string warning;
};

/// s -> e^{lambda min(0, s + t0)} u(max(0, s + t0)) on the cells of `space`.
/// u has one (real) or two (re, im) rows and its grid step must equal the space step.
ClosedFormResult boundary_control_closed_form(const DirichletSpec& spec, double t0, const InputSignal& u,
                                              const Grid& space);

/// The same map by quadrature of the integration-by-parts identity
///   B_t u = D u(t) - T(t) D u(0) + int_0^t T(t - r) D (lambda u(r) - u'(r)) dr,
/// with u' from central differences and the trapezoid rule in r.
StateVector boundary_control_quadrature(const DirichletSpec& spec, double t0, const InputSignal& u,
                                        const Grid& space);

/// int f dmu for a cell function f on `space`.
Vector measure_observation(const MeasureSpec& mu, const StateVector& f, const Grid& space);

/// (F_inf u)(t) = int_{[-t, 0]} u(s + t) dmu(s) on the nodes of u's grid. Densities are integrated
/// exactly against the piecewise-linear interpolant of u.
InputSignal io_infty_closed_form(const MeasureSpec& mu, const InputSignal& u);

/// Left translation on [-length, 0] with Dirichlet control and C = mu.
PerturbationTriple translation_triple(const DirichletSpec& spec, const MeasureSpec& mu, double length, double step);

}  // namespace semipert
