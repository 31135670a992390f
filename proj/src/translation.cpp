#include "semipert/translation.hpp"

#include <cmath>

namespace semipert {

namespace {

using cplx = std::complex<double>;

constexpr double kAlignTol = 1e-9;

Norm cell_norm(const Grid& space, int value_dim) {
    return Norm::l1_grid(space.step(), value_dim, value_dim == 2 ? ValueNorm::Euclidean : ValueNorm::Sup);
}

void put(Vector& v, int i, int d, cplx z) {
    v(i * d) = z.real();
    if (d == 2) v(i * d + 1) = z.imag();
}

cplx signal_value(const InputSignal& u, int k) {
    return u.dim() == 2 ? cplx(u.values(0, k), u.values(1, k)) : cplx(u.values(0, k), 0.0);
}

void check_signal(const InputSignal& u, const Grid& space) {
    if (u.dim() != 1 && u.dim() != 2) throw Error(ErrorCode::Dimension, "Dirichlet input must be real or complex scalar");
    if (std::abs(u.grid.start()) > kAlignTol * u.grid.step())
        throw Error(ErrorCode::Domain, "input signal must start at t = 0");
    if (std::abs(u.grid.step() - space.step()) > kAlignTol * space.step())
        throw Error(ErrorCode::GridAlignment, "input and space grids need the same step");
}

int output_dim(const DirichletSpec& spec, const InputSignal& u) { return std::max(spec.value_dim(), u.dim()); }

// Node offset m = location / h for an aligned atom.
int atom_offset(double location, double h) {
    const double pos = location / h;
    const double m = std::round(pos);
    if (std::abs(pos - m) > kAlignTol) throw Error(ErrorCode::Alignment, "atom is not on a grid node");
    return static_cast<int>(m);
}

}  // namespace

DirichletSpec::DirichletSpec(std::complex<double> l) : lambda(l) {
    if (!(l.real() > 0.0)) throw Error(ErrorCode::Domain, "Dirichlet operator needs Re(lambda) > 0");
}

StateVector dirichlet_apply(const DirichletSpec& spec, std::complex<double> c, const Grid& space) {
    if (std::abs(space.end()) > kAlignTol * space.step())
        throw Error(ErrorCode::Domain, "space grid must end at 0");
    const int d = spec.value_dim();
    if (d == 1 && c.imag() != 0.0) throw Error(ErrorCode::Domain, "complex coefficient needs a complex lambda");
    Vector v(space.count() * d);
    for (int i = 0; i < space.count(); ++i) put(v, i, d, c * std::exp(spec.lambda * space.point(i)));
    return StateVector(std::move(v), cell_norm(space, d));
}

ClosedFormResult boundary_control_closed_form(const DirichletSpec& spec, double t0, const InputSignal& u,
                                              const Grid& space) {
    check_signal(u, space);
    const int kt = u.grid.index_of(t0);
    const int d = output_dim(spec, u);
    const double h = space.step();
    ClosedFormResult res;
    const cplx u0 = signal_value(u, 0);
    if (u0 != 0.0) {
        res.nonzero_at_origin = true;
        res.warning = "u(0) != 0: closed form evaluated outside its hypotheses";
    }
    Vector v = Vector::Zero(space.count() * d);
    for (int i = 0; i < space.count(); ++i) {
        const int k = kt + static_cast<int>(std::lround(space.point(i) / h));
        const cplx z = k >= 0 ? signal_value(u, k) : std::exp(spec.lambda * (space.point(i) + t0)) * u0;
        put(v, i, d, z);
    }
    res.state = StateVector(std::move(v), cell_norm(space, d));
    return res;
}

StateVector boundary_control_quadrature(const DirichletSpec& spec, double t0, const InputSignal& u,
                                        const Grid& space) {
    check_signal(u, space);
    const int K = u.grid.index_of(t0);
    const int d = output_dim(spec, u);
    const double h = u.grid.step();
    const cplx lam = spec.lambda;

    // g = lambda u - u' on the nodes 0..K.
    std::vector<cplx> g(K + 1);
    for (int j = 0; j <= K; ++j) {
        cplx du;
        if (K == 0)
            du = 0.0;
        else if (j == 0)
            du = (signal_value(u, 1) - signal_value(u, 0)) / h;
        else if (j == K)
            du = (signal_value(u, K) - signal_value(u, K - 1)) / h;
        else
            du = (signal_value(u, j + 1) - signal_value(u, j - 1)) / (2 * h);
        g[j] = lam * signal_value(u, j) - du;
    }
    const cplx ut = signal_value(u, K), u0 = signal_value(u, 0);
    Vector v = Vector::Zero(space.count() * d);
    for (int i = 0; i < space.count(); ++i) {
        const double s = space.point(i);
        const int shift = static_cast<int>(std::lround(s / h));  // s + t0 = t_{K + shift}
        cplx z = std::exp(lam * s) * ut;
        if (K + shift < 0) z -= std::exp(lam * (s + t0)) * u0;
        const int j0 = std::max(0, K + shift);
        cplx acc = 0.0;
        for (int j = j0; j <= K; ++j) {
            const double w = (j == j0 || j == K) ? 0.5 * h : h;
            acc += w * std::exp(lam * (s + t0 - j * h)) * g[j];
        }
        if (j0 < K) z += acc;
        put(v, i, d, z);
    }
    return StateVector(std::move(v), cell_norm(space, d));
}

Vector measure_observation(const MeasureSpec& mu, const StateVector& f, const Grid& space) {
    const Matrix row = mu.cell_functional(space);
    if (f.dim() != row.cols()) throw Error(ErrorCode::Dimension, "function does not live on the measure grid");
    return row * f.coords;
}

InputSignal io_infty_closed_form(const MeasureSpec& mu, const InputSignal& u) {
    const int d = u.dim();
    const bool scalar_weights = mu.value_dim() == 1 && d != 1;
    if (!scalar_weights && mu.value_dim() != d) throw Error(ErrorCode::Dimension, "measure and signal dimensions differ");
    if (std::abs(u.grid.start()) > kAlignTol * u.grid.step())
        throw Error(ErrorCode::Domain, "input signal must start at t = 0");
    auto weigh = [&](const Matrix& w, const Vector& x) -> Vector { return scalar_weights ? Vector(w(0, 0) * x) : Vector(w * x); };

    const double h = u.grid.step();
    const int K = u.grid.count();
    // Cumulative integrals of the piecewise-linear interpolant at the nodes.
    std::vector<Vector> cum(K + 1, Vector::Zero(d));
    for (int k = 1; k <= K; ++k) cum[k] = cum[k - 1] + 0.5 * h * (u.values.col(k - 1) + u.values.col(k));
    auto integral_to = [&](double r) -> Vector {
        if (r <= 0.0) return Vector::Zero(d);
        const double pos = r / h;
        int j = static_cast<int>(std::floor(pos + kAlignTol));
        if (j >= K) return cum[K];
        const double th = std::max(0.0, pos - j);
        const Vector a = u.values.col(j), b = u.values.col(j + 1);
        return cum[j] + h * (th * a + 0.5 * th * th * (b - a));
    };

    Matrix out = Matrix::Zero(d, K + 1);
    for (int k = 0; k <= K; ++k) {
        const double t = u.grid.point(k);
        for (const auto& at : mu.atoms()) {
            const int m = atom_offset(at.location, h);
            if (k + m < 0) continue;
            out.col(k) += weigh(at.weight, u.values.col(k + m));
        }
        for (const auto& seg : mu.segments()) {
            const double lo = std::max(0.0, t + seg.from), hi = t + std::min(0.0, seg.to);
            if (hi <= lo) continue;
            out.col(k) += weigh(seg.value, integral_to(hi) - integral_to(lo));
        }
    }
    return InputSignal(u.grid, std::move(out), u.layout);
}

PerturbationTriple translation_triple(const DirichletSpec& spec, const MeasureSpec& mu, double length, double step) {
    const Grid space = Grid::over(-length, 0.0, step);
    const int d = spec.value_dim();
    MeasureSpec m(d);
    if (mu.value_dim() == d) {
        m = mu;
    } else if (mu.value_dim() == 1) {
        for (const auto& at : mu.atoms()) m.add_atom(at.location, at.weight(0, 0) * Matrix::Identity(d, d));
        for (const auto& seg : mu.segments()) m.add_density(seg.from, seg.to, seg.value(0, 0) * Matrix::Identity(d, d));
    } else {
        throw Error(ErrorCode::Dimension, "measure dimension does not match the Dirichlet values");
    }
    PerturbationTriple tri{SemigroupSpec::left_translation(space, d, spec.value_norm()),
                           ControlSpec::boundary_dirichlet(spec.lambda), m.cell_functional(space)};
    tri.validate();
    return tri;
}

}  // namespace semipert
