#include "semipert/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace semipert {

const char* to_string(Property p) {
    switch (p) {
        case Property::Bounded: return "BOUNDED";
        case Property::StronglyStable: return "STRONGLY_STABLE";
        case Property::WeaklyStable: return "WEAKLY_STABLE";
        case Property::MeanErgodic: return "MEAN_ERGODIC";
        case Property::UniformlyErgodic: return "UNIFORMLY_ERGODIC";
    }
    return "BOUNDED";
}

Property property_from_string(const std::string& name) {
    for (auto p : {Property::Bounded, Property::StronglyStable, Property::WeaklyStable, Property::MeanErgodic,
                   Property::UniformlyErgodic})
        if (name == to_string(p)) return p;
    throw Error(ErrorCode::Configuration, "unknown asymptotic property '" + name + "'");
}

Outcome decide(double statistic, double threshold, double band) {
    const double lo = threshold >= 0 ? threshold * (1 - band) : threshold * (1 + band);
    const double hi = threshold >= 0 ? threshold * (1 + band) : threshold * (1 - band);
    if (statistic <= lo) return Outcome::Pass;
    if (statistic >= hi) return Outcome::Fail;
    return Outcome::Inconclusive;
}

namespace {

void require_nonempty(const OrbitSeries& orbit) {
    if (orbit.states.empty() || orbit.norms.empty()) throw Error(ErrorCode::Domain, "empty orbit");
}

double orbit_sup(const OrbitSeries& o) { return *std::max_element(o.norms.begin(), o.norms.end()); }

// First node of the terminal window of length fraction * T.
int tail_start(const OrbitSeries& o, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::Configuration, "tail_fraction must lie in (0, 1]");
    const int K = o.size() - 1;
    const int n = static_cast<int>(std::floor(fraction * K + 1e-9));
    return std::max(0, K - std::max(n, 1));
}

double window_mean(const std::vector<double>& v, int a, int b) {
    if (b <= a) return v[a];
    double acc = 0.5 * (v[a] + v[b]);
    for (int k = a + 1; k < b; ++k) acc += v[k];
    return acc / (b - a);
}

Outcome combine(Outcome a, Outcome b) {
    if (a == Outcome::Fail || b == Outcome::Fail) return Outcome::Fail;
    if (a == Outcome::Pass && b == Outcome::Pass) return Outcome::Pass;
    return Outcome::Inconclusive;
}

// Cumulative trapezoid integrals I_j = int_{t_a}^{t_{a+j}} x, kept only at the requested offsets.
std::vector<Vector> cumulative_at(const OrbitSeries& o, int a, const std::vector<int>& offsets) {
    const int dim = static_cast<int>(o.states[a].size());
    const int last = *std::max_element(offsets.begin(), offsets.end());
    std::vector<int> slot(last + 1, -1);
    for (std::size_t i = 0; i < offsets.size(); ++i) slot[offsets[i]] = static_cast<int>(i);
    std::vector<Vector> out(offsets.size(), Vector::Zero(dim));
    Vector acc = Vector::Zero(dim);
    const double h = o.grid.step();
    for (int j = 0; j <= last; ++j) {
        if (j > 0) acc += 0.5 * h * (o.states[a + j - 1] + o.states[a + j]);
        if (slot[j] >= 0)
            for (std::size_t i = 0; i < offsets.size(); ++i)
                if (offsets[i] == j) out[i] = acc;
    }
    return out;
}

}  // namespace

AsymptoticVerdict check_bounded(const OrbitSeries& orbit, double bound_hint, const CheckerConfig& config) {
    require_nonempty(orbit);
    AsymptoticVerdict v;
    v.property = Property::Bounded;
    v.threshold = bound_hint;
    const int a = tail_start(orbit, config.tail_fraction);
    const int K = orbit.size() - 1;
    double sup_head = 0.0, sup_tail = 0.0;
    for (int k = 0; k < std::max(a, 1); ++k) sup_head = std::max(sup_head, orbit.norms[k]);
    for (int k = a; k <= K; ++k) sup_tail = std::max(sup_tail, orbit.norms[k]);
    const double growth = sup_head > 0.0 ? sup_tail / sup_head : (sup_tail > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

    std::vector<double> ts, logs;
    for (int k = a; k <= K; ++k)
        if (orbit.norms[k] > 0.0) {
            ts.push_back(orbit.grid.point(k));
            logs.push_back(std::log(orbit.norms[k]));
        }
    const double slope = ts.size() >= 2 ? fit_line(ts, logs).slope : -std::numeric_limits<double>::infinity();

    v.statistic = growth;
    v.verdict = combine(decide(growth, bound_hint, config.band), decide(slope, config.slope_tol, config.band));
    v.witness.attained_sup = orbit_sup(orbit);
    v.witness.reference = v.witness.attained_sup;
    v.witness.fitted_rate = slope;
    v.witness.tail_mean = window_mean(orbit.norms, a, K);
    v.witness.note = "statistic: sup over the tail window / sup before it";
    return v;
}

AsymptoticVerdict check_strongly_stable(const OrbitSeries& orbit, double tail_fraction, double tol,
                                        const CheckerConfig& config) {
    require_nonempty(orbit);
    AsymptoticVerdict v;
    v.property = Property::StronglyStable;
    v.threshold = tol;
    const int a = tail_start(orbit, tail_fraction);
    const int K = orbit.size() - 1;
    const double ref = orbit_sup(orbit);
    const double mean = window_mean(orbit.norms, a, K);
    v.statistic = ref > 0.0 ? mean / ref : 0.0;
    v.verdict = decide(v.statistic, tol, config.band);

    // Sub-window means must not increase.
    bool monotone = true;
    if (K - a >= 4) {
        double prev = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 4; ++j) {
            const int lo = a + (K - a) * j / 4, hi = a + (K - a) * (j + 1) / 4;
            const double m = window_mean(orbit.norms, lo, hi);
            if (m > prev * (1 + config.band) + 1e-12 * ref) monotone = false;
            prev = m;
        }
    }
    if (!monotone && v.verdict == Outcome::Pass) v.verdict = Outcome::Inconclusive;
    v.witness.attained_sup = ref;
    v.witness.reference = ref;
    v.witness.tail_mean = mean;
    std::vector<double> ts, logs;
    for (int k = a; k <= K; ++k)
        if (orbit.norms[k] > 0.0) {
            ts.push_back(orbit.grid.point(k));
            logs.push_back(std::log(orbit.norms[k]));
        }
    v.witness.fitted_rate = ts.size() >= 2 ? fit_line(ts, logs).slope : -std::numeric_limits<double>::infinity();
    v.witness.note = monotone ? "tail window means nonincreasing" : "tail window means increase";
    return v;
}

AsymptoticVerdict check_weakly_stable(const OrbitSeries& orbit, const std::vector<Vector>& functionals, double tol,
                                      const CheckerConfig& config) {
    require_nonempty(orbit);
    const int dim = static_cast<int>(orbit.states.front().size());
    std::vector<Vector> phis = functionals;
    if (phis.empty()) {
        const int stride = dim > 64 ? (dim + 63) / 64 : 1;
        for (int i = 0; i < dim; i += stride) phis.push_back(Vector::Unit(dim, i));
        std::mt19937 rng(config.seed);
        std::normal_distribution<double> nd;
        for (int r = 0; r < 3; ++r) {
            Vector p(dim);
            for (int i = 0; i < dim; ++i) p(i) = nd(rng);
            phis.push_back(p);
        }
    }
    AsymptoticVerdict v;
    v.property = Property::WeaklyStable;
    v.threshold = tol;
    const int a = tail_start(orbit, config.tail_fraction);
    const int K = orbit.size() - 1;
    const double ref = orbit_sup(orbit);
    double worst = 0.0;
    for (const auto& phi : phis) {
        if (phi.size() != dim) throw Error(ErrorCode::Dimension, "functional dimension does not match the orbit");
        const double scale = orbit.norm_tag.dual(phi) * ref;
        if (scale == 0.0) continue;
        std::vector<double> p(orbit.size());
        for (int k = 0; k < orbit.size(); ++k) p[k] = std::abs(phi.dot(orbit.states[k]));
        worst = std::max(worst, window_mean(p, a, K) / scale);
    }
    v.statistic = worst;
    v.verdict = decide(worst, tol, config.band);
    v.witness.attained_sup = ref;
    v.witness.reference = ref;
    v.witness.tail_mean = worst;
    v.witness.functionals = static_cast<int>(phis.size());
    v.witness.note = "sampled surrogate over " + std::to_string(phis.size()) + " functionals";
    return v;
}

AsymptoticVerdict check_mean_ergodic(const OrbitSeries& orbit, double tol, const CheckerConfig& config) {
    require_nonempty(orbit);
    AsymptoticVerdict v;
    v.property = Property::MeanErgodic;
    v.threshold = tol;
    const int a = tail_start(orbit, config.tail_fraction);
    const int n = orbit.size() - 1 - a;
    const double ref = orbit_sup(orbit);
    const double h = orbit.grid.step();
    if (n < 2) throw Error(ErrorCode::Configuration, "mean ergodicity needs a tail window of at least two steps");
    const int half = n / 2;
    const auto cum = cumulative_at(orbit, a, {half, n});
    const Vector m_half = cum[0] / (half * h);
    const Vector m_full = cum[1] / (n * h);
    const double diff = orbit.norm_tag(m_full - m_half);
    v.statistic = ref > 0.0 ? diff / ref : 0.0;
    v.verdict = decide(v.statistic, tol, config.band);
    v.witness.attained_sup = ref;
    v.witness.reference = ref;
    v.witness.cesaro_residual = v.statistic;
    v.witness.limit = m_full;
    v.witness.note = "Cesaro means over the tail window at lengths W/2 and W";
    return v;
}

AsymptoticVerdict check_uniformly_ergodic(const OrbitSeries& orbit, double window, double tol,
                                          const CheckerConfig& config) {
    require_nonempty(orbit);
    AsymptoticVerdict v;
    v.property = Property::UniformlyErgodic;
    v.threshold = tol;
    const int a = tail_start(orbit, config.tail_fraction);
    const int n = orbit.size() - 1 - a;
    const double h = orbit.grid.step();
    const int wn = static_cast<int>(std::round(window / h));
    const int tau = n - wn;
    if (wn < 0 || tau < 2)
        throw Error(ErrorCode::Configuration, "uniform ergodicity window must be shorter than the tail window");
    const int half = tau / 2;
    std::vector<int> offsets;
    for (int s = 0; s <= wn; ++s) {
        offsets.push_back(s);
        offsets.push_back(s + half);
        offsets.push_back(s + tau);
    }
    const auto cum = cumulative_at(orbit, a, offsets);
    const double ref = orbit_sup(orbit);
    double worst = 0.0;
    for (int s = 0; s <= wn; ++s) {
        const Vector& i0 = cum[3 * s];
        const Vector m_half = (cum[3 * s + 1] - i0) / (half * h);
        const Vector m_full = (cum[3 * s + 2] - i0) / (tau * h);
        worst = std::max(worst, orbit.norm_tag(m_full - m_half));
    }
    v.statistic = ref > 0.0 ? worst / ref : 0.0;
    v.verdict = decide(v.statistic, tol, config.band);
    v.witness.attained_sup = ref;
    v.witness.reference = ref;
    v.witness.cesaro_residual = v.statistic;
    v.witness.limit = (cum[2] - cum[0]) / (tau * h);
    v.witness.note = "sup over the shift window of Cesaro mean differences at lengths tau/2 and tau";
    return v;
}

AsymptoticVerdict check(Property property, const OrbitSeries& orbit, const CheckerConfig& config) {
    switch (property) {
        case Property::Bounded: return check_bounded(orbit, config.bound_hint, config);
        case Property::StronglyStable: return check_strongly_stable(orbit, config.tail_fraction, config.stable_tol, config);
        case Property::WeaklyStable: return check_weakly_stable(orbit, config.functionals, config.weak_tol, config);
        case Property::MeanErgodic: return check_mean_ergodic(orbit, config.ergodic_tol, config);
        case Property::UniformlyErgodic: return check_uniformly_ergodic(orbit, config.window, config.ergodic_tol, config);
    }
    return {};
}

std::vector<double> cesaro_residual_track(const OrbitSeries& orbit) {
    require_nonempty(orbit);
    const int K = orbit.size() - 1;
    const double h = orbit.grid.step();
    const double ref = orbit_sup(orbit);
    std::vector<Vector> cum(K + 1);
    cum[0] = Vector::Zero(orbit.states[0].size());
    for (int k = 1; k <= K; ++k) cum[k] = cum[k - 1] + 0.5 * h * (orbit.states[k - 1] + orbit.states[k]);
    std::vector<double> out(K + 1, 0.0);
    for (int k = 2; k <= K; ++k) {
        const int half = k / 2;
        const Vector d = cum[k] / (k * h) - cum[half] / (half * h);
        out[k] = ref > 0.0 ? orbit.norm_tag(d) / ref : 0.0;
    }
    return out;
}

RobustnessReport robustness_experiment(const PerturbationTriple& triple, Property property,
                                       std::span<const StateVector> probes, const RobustnessConfig& config) {
    if (probes.empty()) throw Error(ErrorCode::Configuration, "robustness experiment needs at least one probe");
    RobustnessReport rep;
    rep.property = property;
    for (const auto& x : probes) {
        ProbeRobustness pr;
        pr.base = check(property, orbit(triple.base, x, config.time_grid), config.checker);
        pr.perturbed = check(property, perturbed_orbit(triple, x, config.time_grid, config.method), config.checker);
        if (pr.base.verdict == Outcome::Pass) {
            ++rep.base_pass;
            pr.consistent = config.inconclusive_counts_against ? pr.perturbed.verdict == Outcome::Pass
                                                               : pr.perturbed.verdict != Outcome::Fail;
        }
        if (pr.perturbed.verdict == Outcome::Pass) ++rep.perturbed_pass;
        rep.robust = rep.robust && pr.consistent;
        rep.probes.push_back(std::move(pr));
    }
    rep.hypothesis_met = rep.base_pass == static_cast<int>(rep.probes.size());
    return rep;
}

BiinvarianceReport biinvariance_check(std::span<const OrbitSeries> orbits, std::span<const Property> properties,
                                      std::span<const double> shifts, const CheckerConfig& config) {
    BiinvarianceReport rep;
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        const auto& f = orbits[i];
        const double T = f.grid.length();
        const double W = config.tail_fraction * T;
        for (double b : shifts) {
            const int k0 = f.grid.index_of(b);
            if (k0 == 0 || T - b < W + f.grid.step()) continue;
            const OrbitSeries g = f.shifted(k0);
            CheckerConfig shifted = config;
            shifted.tail_fraction = W / (T - b);
            for (auto p : properties) {
                ++rep.checks;
                const auto vs = check(p, g, shifted);
                if (vs.verdict != Outcome::Pass) continue;
                ++rep.shifted_pass;
                const auto vf = check(p, f, config);
                if (vf.verdict != Outcome::Pass) {
                    ++rep.violations;
                    rep.details.push_back("orbit " + std::to_string(i) + ", shift " + std::to_string(b) + ", " +
                                          to_string(p) + ": shifted PASS, full " + to_string(vf.verdict));
                }
            }
        }
    }
    return rep;
}

}  // namespace semipert
