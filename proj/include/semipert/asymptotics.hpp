#pragma once

#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "semipert/admissibility.hpp"
#include "semipert/maps.hpp"

namespace semipert {

enum class Property { Bounded, StronglyStable, WeaklyStable, MeanErgodic, UniformlyErgodic };
const char* to_string(Property p);
Property property_from_string(const std::string& name);

struct Witness {
    double attained_sup = 0.0;
    double reference = 0.0;  ///< scale all statistics are relative to (sup of the orbit norms)
    double tail_mean = 0.0;
    double cesaro_residual = 0.0;
    double fitted_rate = 0.0;
    Vector limit;
    int functionals = 0;  ///< weak stability: size of the sampled functional set
    std::string note;
};

struct AsymptoticVerdict {
    Property property = Property::Bounded;
    Outcome verdict = Outcome::Inconclusive;
    double statistic = 0.0;
    double threshold = 0.0;
    Witness witness;
};

/// All checkers decide from the terminal window [T - W, T], W = tail_fraction * T.
/// A statistic s against threshold th passes when s <= th (1 - band), fails when
/// s >= th (1 + band), and is inconclusive in between.
struct CheckerConfig {
    double tail_fraction = 0.5;
    double band = 0.1;
    double bound_hint = 10.0;   ///< bounded: allowed growth sup(tail) / sup(head)
    double slope_tol = 0.01;    ///< bounded: allowed log-slope over the tail
    double stable_tol = 1e-3;   ///< strong stability: tail mean / sup
    double weak_tol = 1e-3;     ///< weak stability: tail mean |<phi, x>| / (||phi||_* sup)
    double ergodic_tol = 1e-2;  ///< mean and uniform ergodicity: Cesaro mean difference / sup
    double window = 2 * std::numbers::pi;
    std::vector<Vector> functionals;  ///< empty: canonical basis plus three seeded random functionals
    unsigned seed = 42;
};

Outcome decide(double statistic, double threshold, double band);

AsymptoticVerdict check_bounded(const OrbitSeries& orbit, double bound_hint, const CheckerConfig& config = {});
AsymptoticVerdict check_strongly_stable(const OrbitSeries& orbit, double tail_fraction, double tol,
                                        const CheckerConfig& config = {});
AsymptoticVerdict check_weakly_stable(const OrbitSeries& orbit, const std::vector<Vector>& functionals, double tol,
                                      const CheckerConfig& config = {});
AsymptoticVerdict check_mean_ergodic(const OrbitSeries& orbit, double tol, const CheckerConfig& config = {});
AsymptoticVerdict check_uniformly_ergodic(const OrbitSeries& orbit, double window, double tol,
                                          const CheckerConfig& config = {});

/// Dispatches to the checker with thresholds taken from the config.
AsymptoticVerdict check(Property property, const OrbitSeries& orbit, const CheckerConfig& config = {});

/// ||M(t) - M(t/2)|| / sup norm for the Cesaro means M(t) = (1/t) int_0^t x(s) ds from the start of the orbit.
std::vector<double> cesaro_residual_track(const OrbitSeries& orbit);

struct RobustnessConfig {
    Grid time_grid;
    InversionMethod method = InversionMethod::direct();
    CheckerConfig checker;
    bool inconclusive_counts_against = true;
};

struct ProbeRobustness {
    AsymptoticVerdict base;
    AsymptoticVerdict perturbed;
    bool consistent = true;  ///< base PASS implies perturbed PASS
};

struct RobustnessReport {
    Property property = Property::Bounded;
    std::vector<ProbeRobustness> probes;
    int base_pass = 0;
    int perturbed_pass = 0;
    bool robust = true;
    /// Every probe passes on the base semigroup, the sampled form of "all base orbits lie in E".
    bool hypothesis_met = false;
};

RobustnessReport robustness_experiment(const PerturbationTriple& triple, Property property,
                                       std::span<const StateVector> probes, const RobustnessConfig& config);

struct BiinvarianceReport {
    int checks = 0;
    int shifted_pass = 0;
    int violations = 0;
    std::vector<std::string> details;
};

/// For each orbit f, property and shift b: check(S(b) f) = PASS must imply check(f) = PASS.
/// The shifted orbit is judged on the same absolute terminal window as f.
BiinvarianceReport biinvariance_check(std::span<const OrbitSeries> orbits, std::span<const Property> properties,
                                      std::span<const double> shifts, const CheckerConfig& config = {});

}  // namespace semipert
