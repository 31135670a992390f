#include "semipert/maps.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace semipert {

SignalLayout::SignalLayout(std::vector<SignalChannel> channels) : channels_(std::move(channels)) {
    for (const auto& c : channels_) {
        if (c.dim < 1) throw Error(ErrorCode::Dimension, "signal channel dimension must be positive");
        offsets_.push_back(dim_);
        dim_ += c.dim;
    }
}

SignalLayout SignalLayout::single(int dim, ValueNorm norm, Quadrature rule) {
    return SignalLayout({SignalChannel{dim, norm, rule}});
}

double SignalLayout::weight(int channel, int k, int upto, double h) const {
    if (k < 0 || k > upto) return 0.0;
    if (channels_[channel].rule == Quadrature::LeftEndpoint) return k < upto ? h : 0.0;
    if (upto == 0) return 0.0;
    return (k == 0 || k == upto) ? 0.5 * h : h;
}

double SignalLayout::l1(const Matrix& values, double h, int upto) const {
    if (values.rows() != dim_) throw Error(ErrorCode::Dimension, "signal dimension does not match layout");
    if (upto >= values.cols()) throw Error(ErrorCode::Dimension, "signal shorter than requested interval");
    double total = 0.0;
    for (std::size_t c = 0; c < channels_.size(); ++c) {
        const auto& ch = channels_[c];
        std::vector<double> nodal(upto + 1);
        for (int k = 0; k <= upto; ++k) {
            const Vector col = values.col(k).segment(offsets_[c], ch.dim);
            nodal[k] = value_norm(ch.norm, col.data(), ch.dim);
        }
        total += integrate(nodal, h, ch.rule);
    }
    return total;
}

InputSignal::InputSignal(const Grid& g, Matrix v, SignalLayout l) : grid(g), values(std::move(v)), layout(std::move(l)) {
    if (values.cols() != grid.size()) throw Error(ErrorCode::Dimension, "signal needs one column per grid node");
    if (values.rows() != layout.dim()) throw Error(ErrorCode::Dimension, "signal rows do not match its layout");
}

InputSignal InputSignal::zeros(const Grid& grid, const SignalLayout& layout) {
    return InputSignal(grid, Matrix::Zero(layout.dim(), grid.size()), layout);
}

InputSignal InputSignal::sample(const Grid& grid, const SignalLayout& layout, const std::function<Vector(double)>& f) {
    Matrix v(layout.dim(), grid.size());
    for (int k = 0; k < grid.size(); ++k) {
        Vector val = f(grid.point(k));
        if (val.size() != layout.dim()) throw Error(ErrorCode::Dimension, "sampled value has the wrong dimension");
        v.col(k) = val;
    }
    return InputSignal(grid, std::move(v), layout);
}

std::vector<double> InputSignal::cumulative_l1() const {
    const double h = grid.step();
    std::vector<double> out(grid.size(), 0.0);
    const auto& chans = layout.channels();
    for (std::size_t c = 0; c < chans.size(); ++c) {
        const auto& ch = chans[c];
        double left_sum = 0.0;
        double first = 0.0;
        for (int k = 0; k < grid.size(); ++k) {
            const Vector col = values.col(k).segment(layout.offset(static_cast<int>(c)), ch.dim);
            const double nk = value_norm(ch.norm, col.data(), ch.dim);
            if (k == 0) first = nk;
            if (k > 0) {
                out[k] += ch.rule == Quadrature::LeftEndpoint ? h * left_sum : h * (left_sum + 0.5 * (nk - first));
            }
            left_sum += nk;
        }
    }
    return out;
}

InputSignal InputSignal::prefix(int count) const {
    if (count < 1 || count > grid.count()) throw Error(ErrorCode::Domain, "signal prefix outside the grid");
    return InputSignal(grid.prefix(count), values.leftCols(count + 1), layout);
}

ControlSpec ControlSpec::bounded(Matrix b) {
    ControlSpec c;
    c.kind_ = Kind::Bounded;
    c.b_ = std::move(b);
    return c;
}

ControlSpec ControlSpec::identity() {
    ControlSpec c;
    c.kind_ = Kind::Identity;
    return c;
}

ControlSpec ControlSpec::boundary_dirichlet(std::complex<double> lambda) {
    if (!(lambda.real() > 0.0)) throw Error(ErrorCode::Domain, "Dirichlet operator needs Re(lambda) > 0");
    ControlSpec c;
    c.kind_ = Kind::BoundaryDirichlet;
    c.lambda_ = lambda;
    return c;
}

ControlSpec ControlSpec::neutral_boundary() {
    ControlSpec c;
    c.kind_ = Kind::NeutralBoundary;
    return c;
}

namespace {

// Matrix block and history block of a neutral base.
void check_neutral_base(const SemigroupSpec& base) {
    if (base.kind() != SemigroupSpec::Kind::BlockDiag || base.blocks().size() != 2 ||
        base.blocks()[0].kind() != SemigroupSpec::Kind::Matrix ||
        base.blocks()[1].kind() != SemigroupSpec::Kind::NilpotentShift)
        throw Error(ErrorCode::Configuration, "neutral boundary control needs base diag(matrix, nilpotent shift)");
    if (base.blocks()[1].value_dim() != base.blocks()[0].dim())
        throw Error(ErrorCode::Dimension, "history values must have the dimension of the matrix block");
}

}  // namespace

int PerturbationTriple::signal_dim() const {
    switch (control.kind()) {
        case ControlSpec::Kind::Bounded: return static_cast<int>(control.matrix().cols());
        case ControlSpec::Kind::Identity: return base.dim();
        case ControlSpec::Kind::BoundaryDirichlet: return base.value_dim();
        case ControlSpec::Kind::NeutralBoundary: return 2 * base.blocks().at(0).dim();
    }
    return 0;
}

SignalLayout PerturbationTriple::signal_layout() const {
    switch (control.kind()) {
        case ControlSpec::Kind::Bounded:
        case ControlSpec::Kind::Identity:
            return SignalLayout::single(signal_dim(), base.value_norm(), Quadrature::Trapezoid);
        case ControlSpec::Kind::BoundaryDirichlet:
            return SignalLayout::single(base.value_dim(), base.value_norm(), Quadrature::LeftEndpoint);
        case ControlSpec::Kind::NeutralBoundary: {
            const auto& m = base.blocks().at(0);
            return SignalLayout({SignalChannel{m.dim(), m.value_norm(), Quadrature::Trapezoid},
                                 SignalChannel{m.dim(), m.value_norm(), Quadrature::LeftEndpoint}});
        }
    }
    return {};
}

void PerturbationTriple::validate() const {
    switch (control.kind()) {
        case ControlSpec::Kind::Bounded:
            if (base.kind() != SemigroupSpec::Kind::Matrix)
                throw Error(ErrorCode::Configuration, "bounded control needs a matrix base semigroup");
            if (control.matrix().rows() != base.dim())
                throw Error(ErrorCode::Dimension, "B must have one row per state coordinate");
            break;
        case ControlSpec::Kind::Identity:
            if (base.kind() != SemigroupSpec::Kind::Matrix)
                throw Error(ErrorCode::Configuration, "identity control needs a matrix base semigroup");
            break;
        case ControlSpec::Kind::BoundaryDirichlet:
            if (!base.is_shift()) throw Error(ErrorCode::Configuration, "Dirichlet control needs a translation base");
            break;
        case ControlSpec::Kind::NeutralBoundary: check_neutral_base(base); break;
    }
    if (C.rows() != signal_dim() || C.cols() != base.dim())
        throw Error(ErrorCode::Dimension, "C must be " + std::to_string(signal_dim()) + " x " + std::to_string(base.dim()) +
                                              ", got " + std::to_string(C.rows()) + " x " + std::to_string(C.cols()));
}

bool PerturbationTriple::is_unperturbed() const {
    return C.size() == 0 || C.cwiseAbs().maxCoeff() == 0.0 || control.is_zero();
}

DiscreteSystem::DiscreteSystem(const PerturbationTriple& triple, double h)
    : h_(h), step_op_(triple.base, h), c_(triple.C), layout_(triple.signal_layout()), state_norm_(triple.base.norm()) {
    triple.validate();
    const auto& base = triple.base;
    switch (triple.control.kind()) {
        case ControlSpec::Kind::Bounded:
            add_dense(0, base.generator(), triple.control.matrix(), 0);
            break;
        case ControlSpec::Kind::Identity:
            add_dense(0, base.generator(), Matrix::Identity(base.dim(), base.dim()), 0);
            break;
        case ControlSpec::Kind::BoundaryDirichlet:
            add_cell(0, base.dim(), base.value_dim(), 0);
            break;
        case ControlSpec::Kind::NeutralBoundary: {
            const auto& m = base.blocks()[0];
            const auto& hist = base.blocks()[1];
            add_dense(0, m.generator(), Matrix::Identity(m.dim(), m.dim()), 0);
            add_cell(m.dim(), hist.dim(), hist.value_dim(), m.dim());
            break;
        }
    }
    if (auto s = base.shift_step(); s && std::abs(h - *s) > 1e-9 * *s)
        throw Error(ErrorCode::GridAlignment, "time step " + std::to_string(h) + " must equal the shift grid step " +
                                                  std::to_string(*s));

    const int m = signal_dim();
    Matrix diag = Matrix::Identity(m, m);
    for (const auto& inj : injections_) {
        if (inj.cell) continue;
        diag.middleCols(inj.signal_offset, inj.signal_size) -= c_.middleCols(inj.state_offset, inj.state_size) * inj.g1;
        has_g1_ = true;
    }
    diag_lu_.compute(diag);
    if (std::abs(diag_lu_.determinant()) < 1e-12)
        throw Error(ErrorCode::Construction, "I - F is singular on one step; refine the time step");
}

void DiscreteSystem::add_dense(int state_offset, const Matrix& a, const Matrix& b, int signal_offset) {
    const auto w = exponential_weights(a, h_);
    Injection inj;
    inj.state_offset = state_offset;
    inj.state_size = static_cast<int>(a.rows());
    inj.signal_offset = signal_offset;
    inj.signal_size = static_cast<int>(b.cols());
    inj.g0 = w.W0 * b;
    inj.g1 = w.W1 * b;
    injections_.push_back(std::move(inj));
}

void DiscreteSystem::add_cell(int state_offset, int block_size, int value_dim, int signal_offset) {
    Injection inj;
    inj.cell = true;
    inj.state_offset = state_offset + block_size - value_dim;
    inj.state_size = value_dim;
    inj.signal_offset = signal_offset;
    inj.signal_size = value_dim;
    injections_.push_back(std::move(inj));
}

void DiscreteSystem::control_step(Vector& b, const Vector& u_prev, const Vector& u_next, Vector& scratch) const {
    step_op_.apply(b, scratch);
    for (const auto& inj : injections_) {
        auto target = scratch.segment(inj.state_offset, inj.state_size);
        const auto prev = u_prev.segment(inj.signal_offset, inj.signal_size);
        if (inj.cell) {
            target += prev;
            continue;
        }
        target.noalias() += inj.g0 * prev;
        target.noalias() += inj.g1 * u_next.segment(inj.signal_offset, inj.signal_size);
    }
    b.swap(scratch);
}

std::vector<Vector> DiscreteSystem::control_states(const Matrix& u) const {
    if (u.rows() != signal_dim()) throw Error(ErrorCode::Dimension, "signal dimension mismatch");
    std::vector<Vector> out;
    out.reserve(u.cols());
    Vector b = Vector::Zero(state_dim());
    Vector scratch(state_dim());
    out.push_back(b);
    for (Eigen::Index k = 1; k < u.cols(); ++k) {
        control_step(b, u.col(k - 1), u.col(k), scratch);
        out.push_back(b);
    }
    return out;
}

Matrix DiscreteSystem::observe(const Vector& x, int count) const {
    if (x.size() != state_dim()) throw Error(ErrorCode::Dimension, "state dimension mismatch");
    Matrix out(signal_dim(), count + 1);
    Vector cur = x;
    Vector next(state_dim());
    out.col(0) = c_ * cur;
    for (int k = 1; k <= count; ++k) {
        step_op_.apply(cur, next);
        cur.swap(next);
        out.col(k).noalias() = c_ * cur;
    }
    return out;
}

Matrix DiscreteSystem::apply_io(const Matrix& u) const {
    if (u.rows() != signal_dim()) throw Error(ErrorCode::Dimension, "signal dimension mismatch");
    Matrix out = Matrix::Zero(signal_dim(), u.cols());
    Vector b = Vector::Zero(state_dim());
    Vector scratch(state_dim());
    for (Eigen::Index k = 1; k < u.cols(); ++k) {
        control_step(b, u.col(k - 1), u.col(k), scratch);
        out.col(k).noalias() = c_ * b;
    }
    return out;
}

Matrix DiscreteSystem::solve(const Matrix& v) const {
    if (v.rows() != signal_dim()) throw Error(ErrorCode::Dimension, "signal dimension mismatch");
    const Vector zero = Vector::Zero(signal_dim());
    Matrix w(signal_dim(), v.cols());
    Vector b = Vector::Zero(state_dim());
    Vector scratch(state_dim());
    Vector rhs(signal_dim());
    w.col(0) = v.col(0);
    for (Eigen::Index k = 1; k < v.cols(); ++k) {
        control_step(b, w.col(k - 1), zero, scratch);
        rhs = v.col(k);
        rhs.noalias() += c_ * b;
        if (has_g1_) {
            w.col(k) = diag_lu_.solve(rhs);
            for (const auto& inj : injections_)
                if (!inj.cell)
                    b.segment(inj.state_offset, inj.state_size).noalias() +=
                        inj.g1 * w.col(k).segment(inj.signal_offset, inj.signal_size);
        } else {
            w.col(k) = rhs;
        }
    }
    return w;
}

double DiscreteSystem::io_norm(int count, unsigned seed) const {
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    double best = 0.0;
    const auto& chans = layout_.channels();
    for (std::size_t c = 0; c < chans.size(); ++c) {
        const auto& ch = chans[c];
        std::vector<Vector> dirs;
        if (ch.norm == ValueNorm::Sup && ch.dim <= 10) {
            for (int mask = 0; mask < (1 << (ch.dim - 1)); ++mask) {
                Vector e(ch.dim);
                e(0) = 1.0;
                for (int i = 1; i < ch.dim; ++i) e(i) = (mask >> (i - 1)) & 1 ? -1.0 : 1.0;
                dirs.push_back(e);
            }
        } else {
            for (int i = 0; i < ch.dim; ++i) dirs.push_back(Vector::Unit(ch.dim, i));
            for (int r = 0; r < 16; ++r) {
                Vector e(ch.dim);
                for (int i = 0; i < ch.dim; ++i) e(i) = normal(rng);
                e /= value_norm(ch.norm, e.data(), ch.dim);
                dirs.push_back(e);
            }
        }
        std::vector<int> nodes{0};
        if (ch.rule == Quadrature::Trapezoid) {
            if (count >= 2) nodes.push_back(1);
            nodes.push_back(count);
        }
        for (int j : nodes) {
            const double w = layout_.weight(static_cast<int>(c), j, count, h_);
            if (w <= 0.0) continue;
            for (const auto& e : dirs) {
                Matrix u = Matrix::Zero(signal_dim(), count + 1);
                u.col(j).segment(layout_.offset(static_cast<int>(c)), ch.dim) = e / w;
                const double out = layout_.l1(apply_io(u), h_, count);
                best = std::max(best, out);
            }
        }
    }
    return best;
}

namespace {

int node_of(const InputSignal& u, double t) {
    if (u.grid.start() != 0.0) throw Error(ErrorCode::Domain, "signals must start at 0");
    return u.grid.index_of(t);
}

}  // namespace

StateVector control_map(const PerturbationTriple& triple, double t, const InputSignal& u) {
    const int k = node_of(u, t);
    const DiscreteSystem sys(triple, u.grid.step());
    if (k == 0) return StateVector(Vector::Zero(sys.state_dim()), sys.state_norm());
    auto states = sys.control_states(u.values.leftCols(k + 1));
    return StateVector(std::move(states.back()), sys.state_norm());
}

InputSignal observation_map(const PerturbationTriple& triple, const Grid& time_grid, const StateVector& x) {
    if (time_grid.start() != 0.0) throw Error(ErrorCode::Domain, "observation grid must start at 0");
    const DiscreteSystem sys(triple, time_grid.step());
    return InputSignal(time_grid, sys.observe(x.coords, time_grid.count()), sys.layout());
}

InputSignal io_map(const PerturbationTriple& triple, double t, const InputSignal& u) {
    const int k = node_of(u, t);
    if (k == 0) throw Error(ErrorCode::Domain, "io_map needs t > 0");
    const DiscreteSystem sys(triple, u.grid.step());
    const InputSignal p = u.prefix(k);
    return InputSignal(p.grid, sys.apply_io(p.values), p.layout);
}

InversionResult invert_io_detailed(const PerturbationTriple& triple, double t, const InputSignal& v,
                                   const InversionMethod& method) {
    const int k = node_of(v, t);
    if (k == 0) throw Error(ErrorCode::Domain, "invert_io needs t > 0");
    const DiscreteSystem sys(triple, v.grid.step());
    const InputSignal p = v.prefix(k);
    InversionResult res;
    const double h = p.grid.step();

    if (method.kind == InversionMethod::Kind::DirectSolve) {
        res.solution = InputSignal(p.grid, sys.solve(p.values), p.layout);
        const Matrix r = res.solution.values - sys.apply_io(res.solution.values) - p.values;
        res.residual = p.layout.l1(r, h, k);
        return res;
    }

    res.contraction_estimate = sys.io_norm(k);
    if (res.contraction_estimate >= 1.0)
        throw ContractionViolation(res.contraction_estimate,
                                   "Neumann inversion refused: estimated ||F_t|| = " +
                                       std::to_string(res.contraction_estimate) + " >= 1");
    const double vnorm = p.layout.l1(p.values, h, k);
    Matrix w = p.values;
    Matrix term = p.values;
    bool converged = vnorm == 0.0;
    while (!converged && res.terms < method.max_terms) {
        term = sys.apply_io(term);
        const double tn = p.layout.l1(term, h, k);
        res.term_norms.push_back(tn);
        w += term;
        ++res.terms;
        converged = tn <= method.tol * vnorm;
    }
    const Matrix r = w - sys.apply_io(w) - p.values;
    res.residual = vnorm > 0.0 ? p.layout.l1(r, h, k) / vnorm : 0.0;
    if (!converged)
        throw NoConvergence(res.term_norms, res.residual,
                            "Neumann series did not reach tol " + std::to_string(method.tol) + " within " +
                                std::to_string(method.max_terms) + " terms");
    res.solution = InputSignal(p.grid, std::move(w), p.layout);
    return res;
}

InputSignal invert_io(const PerturbationTriple& triple, double t, const InputSignal& v, const InversionMethod& method) {
    return invert_io_detailed(triple, t, v, method).solution;
}

double io_norm_estimate(const PerturbationTriple& triple, const Grid& time_grid, unsigned seed) {
    const DiscreteSystem sys(triple, time_grid.step());
    return sys.io_norm(time_grid.count(), seed);
}

PerturbedRun perturbed_run(const PerturbationTriple& triple, const StateVector& x, const Grid& time_grid,
                           const InversionMethod& method) {
    triple.validate();
    if (time_grid.start() != 0.0) throw Error(ErrorCode::Domain, "orbit time grid must start at 0");
    if (x.dim() != triple.base.dim()) throw Error(ErrorCode::Dimension, "state dimension mismatch");
    PerturbedRun run;
    const int count = time_grid.count();
    if (triple.is_unperturbed()) {
        run.orbit = orbit(triple.base, x, time_grid);
        run.feedback = InputSignal::zeros(time_grid, triple.signal_layout());
        return run;
    }
    const DiscreteSystem sys(triple, time_grid.step());
    const StepOperator& op = sys.propagator();
    Matrix u;

    // v = C T(.) x, u = (I - F)^{-1} v, then T_BC(t_k) x = T(t_k) x + b_k with b driven by u.
    const Matrix v = sys.observe(x.coords, count);
    if (method.kind == InversionMethod::Kind::DirectSolve) {
        u = sys.solve(v);
    } else {
        const InputSignal vs(time_grid, v, sys.layout());
        auto res = invert_io_detailed(triple, time_grid.end(), vs, method);
        run.neumann_terms = res.terms;
        u = std::move(res.solution.values);
    }
    std::vector<Vector> out;
    out.reserve(count + 1);
    Vector free = x.coords, next(sys.state_dim());
    Vector b = Vector::Zero(sys.state_dim()), scratch(sys.state_dim());
    double dropped = 0.0;
    out.push_back(free);
    for (int k = 1; k <= count; ++k) {
        dropped += op.dropped_mass(out.back());
        op.apply(free, next);
        free.swap(next);
        sys.control_step(b, u.col(k - 1), u.col(k), scratch);
        out.push_back(free + b);
    }
    run.orbit = OrbitSeries::from_states(time_grid, std::move(out), sys.state_norm());
    run.orbit.dropped_mass = dropped;
    run.feedback = InputSignal(time_grid, std::move(u), sys.layout());
    return run;
}

OrbitSeries perturbed_orbit(const PerturbationTriple& triple, const StateVector& x, const Grid& time_grid,
                            const InversionMethod& method) {
    return perturbed_run(triple, x, time_grid, method).orbit;
}

StateVector perturbed_apply(const PerturbationTriple& triple, double t, const StateVector& x, double step,
                            const InversionMethod& method) {
    if (!(t >= 0.0)) throw Error(ErrorCode::Domain, "negative time");
    if (t == 0.0 || triple.is_unperturbed()) return apply(triple.base, t, x);
    const auto run = perturbed_run(triple, x, Grid::over(0.0, t, step), method);
    return run.orbit.state(run.orbit.size() - 1);
}

}  // namespace semipert
