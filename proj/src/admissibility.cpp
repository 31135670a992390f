#include "semipert/admissibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace semipert {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "PASS";
        case Outcome::Fail: return "FAIL";
        case Outcome::Inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

std::vector<StateVector> default_probes(const SemigroupSpec& spec, int random_count, unsigned seed, int max_basis) {
    const int n = spec.dim();
    std::vector<StateVector> out;
    const int stride = n > max_basis ? (n + max_basis - 1) / max_basis : 1;
    for (int i = 0; i < n; i += stride) out.push_back(spec.state(Vector::Unit(n, i)));
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    for (int r = 0; r < random_count; ++r) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = nd(rng);
        out.push_back(spec.state(std::move(v)));
    }
    return out;
}

namespace {

Verdict threshold_verdict(double statistic, double threshold, bool strict, std::string note = {}) {
    Verdict v;
    v.statistic = statistic;
    v.threshold = threshold;
    v.margin = threshold - statistic;
    const bool ok = strict ? statistic < threshold : statistic <= threshold;
    v.outcome = ok ? Outcome::Pass : Outcome::Fail;
    v.note = std::move(note);
    return v;
}

}  // namespace

AdmissibilityReport estimate_constants(const PerturbationTriple& triple, std::span<const StateVector> probes,
                                       std::span<const InputSignal> signals, double horizon,
                                       const EstimateOptions& options) {
    triple.validate();
    if (probes.empty()) throw Error(ErrorCode::Configuration, "estimate_constants needs at least one probe");
    if (signals.empty()) throw Error(ErrorCode::Configuration, "estimate_constants needs at least one signal");
    const double h = signals.front().grid.step();
    const Grid grid = Grid::over(0.0, horizon, h);
    const int K = grid.count();
    const DiscreteSystem sys(triple, h);

    AdmissibilityReport rep;
    rep.horizon = horizon;
    rep.step = h;
    rep.probe_count = static_cast<int>(probes.size());
    rep.signal_count = static_cast<int>(signals.size());
    rep.time_samples = grid.size();

    for (const auto& sig : signals) {
        if (std::abs(sig.grid.step() - h) > 1e-12 * h || sig.grid.start() != 0.0)
            throw Error(ErrorCode::GridAlignment, "all signals must share one grid starting at 0");
        if (sig.grid.count() < K) throw Error(ErrorCode::Domain, "signal shorter than the horizon");
        const InputSignal u = sig.prefix(K);
        const auto cum = u.cumulative_l1();
        const auto states = sys.control_states(u.values);
        const InputSignal fu(u.grid, sys.apply_io(u.values), u.layout);
        const auto cum_out = fu.cumulative_l1();
        for (int k = 1; k <= K; ++k) {
            if (cum[k] <= 0.0) continue;
            rep.M_B_est = std::max(rep.M_B_est, sys.state_norm()(states[k]) / cum[k]);
            rep.M_BC_est = std::max(rep.M_BC_est, cum_out[k] / cum[k]);
        }
    }

    // One solve on [0, 2H] gives both horizons: (I - F_t)^{-1} C_t x is the restriction of the long solution.
    const Grid doubled = Grid::over(0.0, 2 * horizon, h);
    for (const auto& x : probes) {
        const double xn = x.norm();
        if (xn == 0.0) continue;
        const Matrix v = sys.observe(x.coords, doubled.count());
        rep.M_C_est = std::max(rep.M_C_est, sys.layout().l1(v, h, K) / xn);
        const Matrix w = sys.solve(v);
        rep.sup_inv_obs_est = std::max(rep.sup_inv_obs_est, sys.layout().l1(w, h, K) / xn);
        rep.sup_inv_obs_doubled = std::max(rep.sup_inv_obs_doubled, sys.layout().l1(w, h, doubled.count()) / xn);
        const auto run = perturbed_run(triple, x, grid);
        rep.perturbed_contraction_est = std::max(rep.perturbed_contraction_est, run.orbit.norms.back() / xn);
    }
    rep.io_norm_est = sys.io_norm(K, options.seed);
    if (triple.control.kind() == ControlSpec::Kind::Identity) rep.q_est = rep.M_C_est;

    const double change = rep.sup_inv_obs_est > 0.0
                              ? (rep.sup_inv_obs_doubled - rep.sup_inv_obs_est) / rep.sup_inv_obs_est
                              : (rep.sup_inv_obs_doubled > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.verdicts["infinite_time"] =
        threshold_verdict(change, options.stability_tol, true,
                          "relative growth of sup_t ||(I-F_t)^-1 C_t x|| from horizon H to 2H");
    if (!std::isfinite(rep.sup_inv_obs_doubled)) rep.verdicts["infinite_time"].outcome = Outcome::Fail;
    rep.verdicts["contraction"] = threshold_verdict(rep.io_norm_est, 1.0, true, "discrete ||F_H|| < 1 (Neumann branch)");
    if (rep.q_est)
        rep.verdicts["miyadera_voigt"] = threshold_verdict(*rep.q_est, 1.0, true, "sampled q < 1");
    return rep;
}

MiyaderaVoigtResult check_miyadera_voigt(const PerturbationTriple& triple, std::span<const StateVector> probes,
                                         double horizon, double q_threshold, double step) {
    triple.validate();
    if (triple.control.kind() != ControlSpec::Kind::Identity)
        throw Error(ErrorCode::Configuration, "Miyadera-Voigt check needs B = identity");
    if (!(q_threshold < 1.0) || q_threshold < 0.0)
        throw Error(ErrorCode::Configuration, "Miyadera-Voigt threshold must lie in [0, 1)");
    if (probes.empty()) throw Error(ErrorCode::Configuration, "Miyadera-Voigt check needs at least one probe");
    const Grid grid = Grid::over(0.0, horizon, step);
    const DiscreteSystem sys(triple, step);
    MiyaderaVoigtResult res;
    for (const auto& x : probes) {
        const double xn = x.norm();
        if (xn == 0.0) continue;
        const Matrix v = sys.observe(x.coords, grid.count());
        res.ratio = std::max(res.ratio, sys.layout().l1(v, step, grid.count()) / xn);
    }
    res.verdict = threshold_verdict(res.ratio, q_threshold, false, "max_x int_0^H ||C T(s)x|| ds / ||x||");
    return res;
}

FavardEstimate favard_norm(const SemigroupSpec& spec, const StateVector& x, const Grid& probe_grid) {
    if (!(probe_grid.start() > 0.0)) throw Error(ErrorCode::Domain, "Favard probes must be at t > 0");
    FavardEstimate est;
    est.probe_grid = probe_grid;
    est.argmax_t = probe_grid.start();
    for (int k = 0; k < probe_grid.size(); ++k) {
        const double t = probe_grid.point(k);
        const Vector dq = (apply(spec, t, x).coords - x.coords) / t;
        const double n = x.norm_tag(dq);
        if (n > est.favard_norm) {
            est.favard_norm = n;
            est.argmax_t = t;
        }
    }
    return est;
}

DeschSchappacherReport check_desch_schappacher(const PerturbationTriple& triple, std::span<const StateVector> probes,
                                               double omega, double m, const DeschSchappacherOptions& options) {
    triple.validate();
    if (triple.control.kind() != ControlSpec::Kind::Bounded)
        throw Error(ErrorCode::Configuration, "Desch-Schappacher check needs a bounded B");
    const int n = triple.base.dim();
    if (triple.C.rows() != n || !triple.C.isApprox(Matrix::Identity(n, n), 0.0))
        throw Error(ErrorCode::Configuration, "Desch-Schappacher check is for the pair (B, Id); C must be the identity");
    if (!(omega > 0.0)) throw Error(ErrorCode::Domain, "omega must be positive");
    if (!(m > 0.0)) throw Error(ErrorCode::Domain, "m must be positive");
    if (probes.empty()) throw Error(ErrorCode::Configuration, "Desch-Schappacher check needs at least one probe");

    DeschSchappacherReport rep;
    rep.omega = omega;
    rep.m = m;
    rep.B_norm = operator_norm(triple.control.matrix(), triple.base.value_norm());
    rep.rho = m * rep.B_norm / omega;

    const double h = options.step;
    const Grid grid = Grid::over(0.0, options.horizon, h);
    const int K = grid.count();
    const DiscreteSystem sys(triple, h);

    // Base orbits T(.)x (C = Id), used for the stability precondition and as the n = 0 term.
    std::vector<Matrix> base_orbits;
    rep.measured_rate = -std::numeric_limits<double>::infinity();
    const int stride = std::max(1, K / 400);
    for (const auto& x : probes) {
        base_orbits.push_back(sys.observe(x.coords, K));
        if (x.norm() == 0.0) continue;
        std::vector<double> ts, logs;
        for (int k = 0; k <= K; k += stride) {
            const Vector col = base_orbits.back().col(k);
            const double nk = triple.base.norm()(col);
            if (nk <= 0.0) break;
            ts.push_back(grid.point(k));
            logs.push_back(std::log(nk));
        }
        if (ts.size() < 2) continue;
        const auto fit = fit_line(ts, logs);
        rep.measured_rate = std::max(rep.measured_rate, fit.slope);
        rep.r_squared = std::min(rep.r_squared, fit.r_squared);
    }
    if (rep.r_squared < options.min_r_squared || rep.measured_rate > -omega * (1.0 - options.rate_slack))
        throw PreconditionFailure(rep.measured_rate, "base orbits are not exponentially stable at rate " +
                                                         std::to_string(omega) + ": fitted log-slope " +
                                                         std::to_string(rep.measured_rate) + ", R^2 " +
                                                         std::to_string(rep.r_squared));

    const Matrix& a = triple.base.generator();
    for (int i = 0; i <= 200; ++i) {
        const double t = options.horizon * i / 200.0;
        rep.M_est = std::max(rep.M_est, operator_norm(matexp(a, t), triple.base.value_norm()) * std::exp(omega * t));
    }
    if (m < rep.M_est * (1.0 - 1e-9))
        rep.warnings.push_back("m = " + std::to_string(m) + " is below the measured semigroup constant M = " +
                               std::to_string(rep.M_est) + "; the bounded-range surrogate of the Favard estimate needs m >= M");

    rep.tightest_margin = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const double xn = probes[p].norm();
        NeumannTrace tr;
        tr.total_bound = rep.rho < 1.0 ? rep.M_est / (omega - m * rep.B_norm) * xn : std::numeric_limits<double>::infinity();
        tr.margin = std::numeric_limits<double>::infinity();
        Matrix term = base_orbits[p];
        double sum = 0.0;
        for (int j = 0; j <= options.max_terms; ++j) {
            if (j > 0) term = sys.apply_io(term);
            const double a_j = sys.layout().l1(term, h, K);
            const double bound = std::pow(rep.rho, j) * rep.M_est / omega * xn;
            sum += a_j;
            tr.terms.push_back(a_j);
            tr.bounds.push_back(bound);
            tr.partial_sums.push_back(sum);
            tr.margin = std::min(tr.margin, bound - a_j);
            if (a_j > bound + options.term_tol * xn) rep.terms_dominated = false;
        }
        if (std::isfinite(tr.total_bound)) {
            tr.margin = std::min(tr.margin, tr.total_bound - sum);
            if (sum > tr.total_bound + options.term_tol * xn) rep.total_dominated = false;
        } else {
            rep.total_dominated = false;
        }
        rep.tightest_margin = std::min(rep.tightest_margin, tr.margin);
        rep.probes.push_back(std::move(tr));
    }

    rep.verdict = threshold_verdict(rep.rho, 1.0, true, "rho = m ||B|| / omega");
    if (rep.verdict.outcome == Outcome::Pass && !(rep.terms_dominated && rep.total_dominated)) {
        rep.verdict.outcome = Outcome::Fail;
        rep.verdict.note = "rho < 1 but a Neumann term exceeded its geometric bound";
    } else if (rep.verdict.outcome == Outcome::Fail) {
        rep.verdict.note = "rho >= 1: geometric bound unavailable; see partial sums";
    }
    return rep;
}

}  // namespace semipert
