#include "semipert/neutral.hpp"

#include <cmath>
#include <limits>

namespace semipert {

namespace {

constexpr double kTol = 1e-9;

// int_{[-1,0]} x(t + s) dmu(s) where column col0 of xs holds x(t) and columns are h apart.
Vector eval_kernel(const MeasureSpec& mu, const Matrix& xs, int col0, double h, int cells) {
    const int n = static_cast<int>(xs.rows());
    Vector out = Vector::Zero(n);
    for (const auto& at : mu.atoms()) {
        const double pos = at.location / h;
        const double m = std::round(pos);
        if (std::abs(pos - m) > kTol) throw Error(ErrorCode::Alignment, "kernel atom is not on a history node");
        out += at.weight * xs.col(col0 + static_cast<int>(m));
    }
    for (const auto& seg : mu.segments()) {
        for (int i = 0; i < cells; ++i) {
            const double si = -1.0 + i * h;
            const double lo = std::max(seg.from, si), hi = std::min(seg.to, si + h);
            if (hi <= lo) continue;
            const int c = col0 - cells + i;
            const Vector a = xs.col(c), b = xs.col(c + 1);
            const Vector integral = (hi - lo) * a + (b - a) * ((hi - si) * (hi - si) - (lo - si) * (lo - si)) / (2 * h);
            out += seg.value * integral;
        }
    }
    return out;
}

// Whether the kernel reads x(t) itself, i.e. has density on the last history cell.
bool reads_present(const MeasureSpec& mu, double h) {
    for (const auto& seg : mu.segments())
        if (seg.to > -h + kTol * h && seg.value.cwiseAbs().maxCoeff() > 0.0) return true;
    return false;
}

void check_history(const NeutralSystem& sys, const HistorySegment& f) {
    const Grid& g = sys.history_grid;
    if (f.dim() != sys.dim() || f.values.cols() != g.size())
        throw Error(ErrorCode::Dimension, "history segment does not match the system");
    if (std::abs(f.grid.step() - g.step()) > kTol * g.step() || std::abs(f.grid.start() - g.start()) > kTol)
        throw Error(ErrorCode::GridAlignment, "history segment lives on a different grid");
}

}  // namespace

void NeutralSystem::validate() const {
    const int n = dim();
    if (A.rows() != A.cols() || n == 0) throw Error(ErrorCode::Dimension, "A must be square and nonempty");
    if (C.rows() != n || C.cols() != n) throw Error(ErrorCode::Dimension, "C must have the dimension of A");
    if (P_kernel.value_dim() != n || K_kernel.value_dim() != n)
        throw Error(ErrorCode::Dimension, "kernel values must have the dimension of A");
    if (std::abs(history_grid.start() + 1.0) > kTol || std::abs(history_grid.end()) > kTol)
        throw Error(ErrorCode::Domain, "history grid must cover [-1, 0]");
    if (!(alpha > 0.0)) throw Error(ErrorCode::Domain, "alpha must be positive");
    for (const auto* mu : {&P_kernel, &K_kernel}) {
        if (mu->has_atom_at_zero()) throw Error(ErrorCode::Construction, "kernels must not have mass at 0");
        for (const auto& at : mu->atoms())
            if (at.location < -1.0 - kTol) throw Error(ErrorCode::Domain, "kernel atom outside [-1, 0]");
        for (const auto& seg : mu->segments())
            if (seg.from < -1.0 - kTol || seg.to > kTol) throw Error(ErrorCode::Domain, "kernel density outside [-1, 0]");
    }
}

NeutralSystem NeutralSystem::delay_atoms(Matrix A, Matrix p, Matrix k, Matrix C, int cells, double alpha,
                                         ValueNorm norm) {
    NeutralSystem s;
    s.A = std::move(A);
    s.P_kernel = MeasureSpec::atom(-1.0, std::move(p));
    s.K_kernel = MeasureSpec::atom(-1.0, std::move(k));
    s.C = std::move(C);
    s.history_grid = Grid(-1.0, 1.0 / cells, cells);
    s.alpha = alpha;
    s.norm = norm;
    s.validate();
    return s;
}

HistorySegment HistorySegment::sample(const Grid& grid, int dim, const std::function<Vector(double)>& f) {
    HistorySegment h{grid, Matrix(dim, grid.size())};
    for (int i = 0; i < grid.size(); ++i) {
        Vector v = f(grid.point(i));
        if (v.size() != dim) throw Error(ErrorCode::Dimension, "history sample has the wrong dimension");
        h.values.col(i) = v;
    }
    return h;
}

Vector HistorySegment::cells() const {
    const int n = dim(), N = grid.count();
    Vector c(n * N);
    for (int i = 0; i < N; ++i) c.segment(i * n, n) = values.col(i);
    return c;
}

Vector kernel_apply(const MeasureSpec& mu, const HistorySegment& f) {
    return eval_kernel(mu, f.values, f.grid.count(), f.grid.step(), f.grid.count());
}

double compatibility_residual(const NeutralSystem& sys, const Vector& y, const HistorySegment& f) {
    check_history(sys, f);
    const Vector r = sys.C * y - (f.values.col(f.grid.count()) - kernel_apply(sys.K_kernel, f));
    return value_norm(sys.norm, r.data(), static_cast<int>(r.size()));
}

HistorySegment make_compatible(const NeutralSystem& sys, const Vector& y, const HistorySegment& g) {
    check_history(sys, g);
    const int n = sys.dim();
    Matrix k_phi(n, n);
    for (int j = 0; j < n; ++j) {
        const auto phi = HistorySegment::sample(g.grid, n, [&](double s) { return Vector((1.0 + s) * Vector::Unit(n, j)); });
        k_phi.col(j) = kernel_apply(sys.K_kernel, phi);
    }
    const Vector rhs = sys.C * y - g.values.col(g.grid.count()) + kernel_apply(sys.K_kernel, g);
    const Vector c = (Matrix::Identity(n, n) - k_phi).lu().solve(rhs);
    HistorySegment f = g;
    for (int i = 0; i < f.grid.size(); ++i) f.values.col(i) += (1.0 + f.grid.point(i)) * c;
    return f;
}

SemigroupSpec build_A0(const NeutralSystem& sys) {
    sys.validate();
    return SemigroupSpec::block_diag(
        {SemigroupSpec::matrix(sys.A, sys.norm), SemigroupSpec::nilpotent_shift(sys.history_grid, sys.dim(), sys.norm)});
}

PerturbationTriple build_perturbation(const NeutralSystem& sys) {
    const auto base = build_A0(sys);
    const int n = sys.dim();
    const int hist = n * sys.history_grid.count();
    Matrix c = Matrix::Zero(2 * n, n + hist);
    c.block(0, n, n, hist) = sys.effective_P().cell_functional(sys.history_grid);
    c.block(n, 0, n, n) = sys.C;
    c.block(n, n, n, hist) = sys.K_kernel.cell_functional(sys.history_grid);
    PerturbationTriple tri{base, ControlSpec::neutral_boundary(), std::move(c)};
    tri.validate();
    return tri;
}

StateVector neutral_state(const NeutralSystem& sys, const Vector& y, const HistorySegment& f) {
    check_history(sys, f);
    if (y.size() != sys.dim()) throw Error(ErrorCode::Dimension, "y must have the dimension of A");
    Vector coords(sys.dim() + f.dim() * f.grid.count());
    coords << y, f.cells();
    return build_A0(sys).state(std::move(coords));
}

NeutralRun neutral_orbit(const NeutralSystem& sys, const Vector& y, const HistorySegment& f, const Grid& time_grid,
                         const InversionMethod& method) {
    const auto tri = build_perturbation(sys);
    const auto x0 = neutral_state(sys, y, f);
    NeutralRun run;
    run.initial_residual = compatibility_residual(sys, y, f);
    const double scale = 1.0 + y.cwiseAbs().maxCoeff() + f.values.cwiseAbs().maxCoeff();
    run.compatible = run.initial_residual <= kTol * scale;
    if (!run.compatible)
        run.warning = "initial data violate C y = f(0) - K f (residual " + std::to_string(run.initial_residual) +
                      "); orbit is a mild solution";

    auto pr = perturbed_run(tri, x0, time_grid, method);
    const int n = sys.dim();
    const Matrix krow = tri.C.block(n, n, n, tri.C.cols() - n);
    if (pr.feedback.values.size() > 0) {
        run.solution = pr.feedback.values.bottomRows(n);
    } else {
        // Unperturbed: x(t) = C y(t) + K x_t with K = 0.
        run.solution = Matrix(n, pr.orbit.size());
        for (int k = 0; k < pr.orbit.size(); ++k) run.solution.col(k) = sys.C * pr.orbit.states[k].head(n);
    }
    run.residuals.resize(pr.orbit.size());
    for (int k = 0; k < pr.orbit.size(); ++k) {
        const Vector& s = pr.orbit.states[k];
        const Vector r = sys.C * s.head(n) - (run.solution.col(k) - krow * s.tail(s.size() - n));
        run.residuals[k] = value_norm(sys.norm, r.data(), n);
    }
    run.orbit = std::move(pr.orbit);
    return run;
}

StepsRun method_of_steps(const NeutralSystem& sys, const Vector& y, const HistorySegment& f, const Grid& time_grid) {
    sys.validate();
    check_history(sys, f);
    const int n = sys.dim();
    const int N = sys.history_grid.count();
    const double h = sys.history_grid.step();
    if (std::abs(time_grid.start()) > kTol) throw Error(ErrorCode::Domain, "time grid must start at 0");
    if (std::abs(time_grid.step() - h) > kTol * h)
        throw Error(ErrorCode::GridAlignment, "time step must equal the history step");
    if (y.size() != n) throw Error(ErrorCode::Dimension, "y must have the dimension of A");

    const int K = time_grid.count();
    const MeasureSpec P = sys.effective_P();
    const bool implicit = reads_present(P, h) || reads_present(sys.K_kernel, h);
    const Matrix E = matexp(sys.A, h);

    Matrix xs(n, N + K + 1);
    xs.leftCols(N + 1) = f.values;
    std::vector<Vector> z(K + 1);
    z[0] = y;
    Vector g = eval_kernel(P, xs, N, h, N);
    StepsRun out;
    for (int j = 0; j < K; ++j) {
        const int col = N + j + 1;
        const Vector base = E * z[j] + 0.5 * h * (E * g);
        xs.col(col) = xs.col(col - 1);  // initial guess for implicit kernels
        Vector g_next, z_next;
        int sweeps = 0;
        for (;;) {
            g_next = eval_kernel(P, xs, col, h, N);
            z_next = base + 0.5 * h * g_next;
            const Vector x_next = sys.C * z_next + eval_kernel(sys.K_kernel, xs, col, h, N);
            const double change = (x_next - xs.col(col)).cwiseAbs().maxCoeff();
            xs.col(col) = x_next;
            ++sweeps;
            if (!implicit) break;
            if (change <= 1e-15 * (1.0 + x_next.cwiseAbs().maxCoeff())) break;
            if (sweeps >= 200) throw NoConvergence({change}, change, "method of steps: fixed-point recovery did not converge");
        }
        out.max_sweeps = std::max(out.max_sweeps, sweeps);
        z[j + 1] = z_next;
        g = g_next;
    }

    std::vector<Vector> states(K + 1);
    for (int j = 0; j <= K; ++j) {
        Vector s(n + n * N);
        s.head(n) = z[j];
        for (int i = 0; i < N; ++i) s.segment(n + i * n, n) = xs.col(j + i);
        states[j] = std::move(s);
    }
    out.orbit = OrbitSeries::from_states(time_grid, std::move(states), build_A0(sys).norm());
    out.solution = xs.rightCols(K + 1);
    return out;
}

NeutralSystem scaling_conjugation(const NeutralSystem& sys, double a) {
    if (!(a > 0.0)) throw Error(ErrorCode::Domain, "scaling factor must be positive");
    NeutralSystem t = sys;
    t.alpha = sys.alpha / a;
    t.C = a * sys.C;
    return t;
}

StateVector scale_history(const NeutralSystem& sys, const StateVector& x, double a) {
    const int n = sys.dim();
    StateVector out = x;
    out.coords.tail(x.dim() - n) *= a;
    return out;
}

ObservationBoundReport check_observation_bound(const NeutralSystem& sys, std::span<const StateVector> probes,
                                               double horizon) {
    const auto tri = build_perturbation(sys);
    const int n = sys.dim();
    const double h = sys.history_grid.step();
    const Grid tg = Grid::over(0.0, horizon, h);
    ObservationBoundReport rep;
    const Matrix E = matexp(sys.A, h);
    Matrix Ek = Matrix::Identity(n, n);
    for (int k = 0; k <= tg.count(); ++k) {
        rep.M = std::max(rep.M, operator_norm(Ek, sys.norm));
        Ek = E * Ek;
    }
    const double kernels = sys.effective_P().total_variation(sys.norm) + sys.K_kernel.total_variation(sys.norm);
    const double c_norm = operator_norm(sys.C, sys.norm);
    const Norm cells = Norm::l1_grid(h, n, sys.norm);
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const auto& x : probes) {
        if (x.dim() != tri.base.dim()) throw Error(ErrorCode::Dimension, "probe does not live on the neutral state");
        ObservationBoundProbe p;
        p.measured = observation_map(tri, tg, x).l1_norm();
        const Vector yv = x.coords.head(n);
        const Vector fv = x.coords.tail(x.dim() - n);
        p.bound = kernels * cells(fv) + horizon * c_norm * rep.M * value_norm(sys.norm, yv.data(), n);
        p.margin = p.bound - p.measured;
        if (p.measured > p.bound * (1 + 1e-12) + 1e-14) ++rep.violations;
        const double scale = x.norm();
        if (scale > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, p.measured / std::max(p.bound, 1e-300));
        rep.min_margin = std::min(rep.min_margin, p.margin);
        rep.probes.push_back(p);
    }
    if (probes.empty()) rep.min_margin = 0.0;
    return rep;
}

}  // namespace semipert
