#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semipert/maps.hpp"

namespace semipert {

enum class Outcome { Pass, Fail, Inconclusive };
const char* to_string(Outcome o);

struct Verdict {
    Outcome outcome = Outcome::Inconclusive;
    double statistic = 0.0;
    double threshold = 0.0;
    double margin = 0.0;  ///< threshold - statistic
    std::string note;
};

/// Canonical basis vectors (evenly subsampled past max_basis) plus seeded Gaussian probes.
std::vector<StateVector> default_probes(const SemigroupSpec& spec, int random_count, unsigned seed = 42,
                                        int max_basis = 64);

struct EstimateOptions {
    double stability_tol = 0.05;  ///< relative change allowed under horizon doubling
    unsigned seed = 42;
};

/// Sampled admissibility constants. Every estimate is a maximum over finite sets, hence a lower
/// bound of the corresponding supremum.
struct AdmissibilityReport {
    double M_B_est = 0.0;
    double M_C_est = 0.0;
    double M_BC_est = 0.0;
    double io_norm_est = 0.0;
    double sup_inv_obs_est = 0.0;
    double sup_inv_obs_doubled = 0.0;
    std::optional<double> q_est;
    double perturbed_contraction_est = 0.0;
    double horizon = 0.0;
    double step = 0.0;
    int probe_count = 0;
    int signal_count = 0;
    int time_samples = 0;
    std::map<std::string, Verdict> verdicts;
};

AdmissibilityReport estimate_constants(const PerturbationTriple& triple, std::span<const StateVector> probes,
                                       std::span<const InputSignal> signals, double horizon,
                                       const EstimateOptions& options = {});

struct MiyaderaVoigtResult {
    Verdict verdict;
    double ratio = 0.0;  ///< max over probes of int_0^H ||C T(s) x|| ds / ||x||
};

MiyaderaVoigtResult check_miyadera_voigt(const PerturbationTriple& triple, std::span<const StateVector> probes,
                                         double horizon, double q_threshold, double step);

struct FavardEstimate {
    double favard_norm = 0.0;
    Grid probe_grid;
    double argmax_t = 0.0;
};

/// max over the probe times of ||(T(t)x - x)/t||.
FavardEstimate favard_norm(const SemigroupSpec& spec, const StateVector& x, const Grid& probe_grid);

struct DeschSchappacherOptions {
    double step = 1.0 / 4096;
    double horizon = 40.0;
    int max_terms = 20;
    double term_tol = 1e-8;  ///< per unit ||x||
    double min_r_squared = 0.99;
    double rate_slack = 1e-3;  ///< relative slack on the fitted decay rate
};

struct NeumannTrace {
    std::vector<double> terms;         ///< ||F^n [T(.)x]||_1 on [0, horizon]
    std::vector<double> bounds;        ///< rho^n (M/omega) ||x||
    std::vector<double> partial_sums;  ///< sum_{j<=n} terms[j]
    double total_bound = 0.0;          ///< M/(omega - m||B||) ||x||, infinite when rho >= 1
    double margin = 0.0;               ///< smallest slack over the term and total checks
};

struct DeschSchappacherReport {
    Verdict verdict;
    double rho = 0.0;
    double B_norm = 0.0;
    double M_est = 0.0;
    double omega = 0.0;
    double m = 1.0;
    double measured_rate = 0.0;
    double r_squared = 1.0;
    bool terms_dominated = true;
    bool total_dominated = true;
    double tightest_margin = 0.0;
    std::vector<NeumannTrace> probes;
    std::vector<std::string> warnings;
};

/// Neumann bound for the bounded perturbation (B, Id) of an exponentially stable matrix semigroup.
/// Throws PreconditionFailure when the probe orbits do not decay at rate omega.
DeschSchappacherReport check_desch_schappacher(const PerturbationTriple& triple, std::span<const StateVector> probes,
                                               double omega, double m, const DeschSchappacherOptions& options = {});

}  // namespace semipert
