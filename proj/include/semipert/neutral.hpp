#pragma once

#include <string>
#include <vector>

#include "semipert/maps.hpp"
#include "semipert/measure.hpp"

namespace semipert {

/// d/dt [x(t) - K x_t] = A [x(t) - K x_t] + alpha P x_t with the boundary relation C y = f(0) - K f.
///
/// The state is (y, f) in X x L1(-1, 0; X); P_kernel and K_kernel are measures on [-1, 0]
/// with value_dim = dim(A).
struct NeutralSystem {
    Matrix A;
    MeasureSpec P_kernel;
    MeasureSpec K_kernel;
    Matrix C;
    Grid history_grid;
    double alpha = 1.0;
    ValueNorm norm = ValueNorm::Sup;

    int dim() const { return static_cast<int>(A.rows()); }
    MeasureSpec effective_P() const { return P_kernel.scaled(alpha); }
    /// Throws on dimension mismatch, a history grid other than [-1, 0], alpha <= 0, or an atom at 0.
    void validate() const;

    /// Kernels p delta_{-1} and k delta_{-1} on a history grid with `cells` cells.
    static NeutralSystem delay_atoms(Matrix A, Matrix p, Matrix k, Matrix C, int cells, double alpha = 1.0,
                                     ValueNorm norm = ValueNorm::Sup);
};

/// Point values f(s_i), i = 0..N, of an initial history on the history grid; values is n x (N + 1).
struct HistorySegment {
    Grid grid;
    Matrix values;

    static HistorySegment sample(const Grid& grid, int dim, const std::function<Vector(double)>& f);
    int dim() const { return static_cast<int>(values.rows()); }
    /// Left-endpoint cell values (f(0) dropped), flattened cell by cell.
    Vector cells() const;
};

/// int f dmu for a history given by point values, densities against the piecewise-linear interpolant.
Vector kernel_apply(const MeasureSpec& mu, const HistorySegment& f);

/// ||C y - (f(0) - K f)|| in the value norm.
double compatibility_residual(const NeutralSystem& sys, const Vector& y, const HistorySegment& f);

/// g + phi c with phi(s) = 1 + s and c chosen so that (y, g + phi c) is compatible.
HistorySegment make_compatible(const NeutralSystem& sys, const Vector& y, const HistorySegment& g);

SemigroupSpec build_A0(const NeutralSystem& sys);
PerturbationTriple build_perturbation(const NeutralSystem& sys);
StateVector neutral_state(const NeutralSystem& sys, const Vector& y, const HistorySegment& f);

struct NeutralRun {
    OrbitSeries orbit;
    Matrix solution;  ///< x(t_k), one column per node
    double initial_residual = 0.0;
    bool compatible = true;
    std::string warning;
    std::vector<double> residuals;  ///< ||C y(t_k) - (x(t_k) - K x_{t_k})|| along the orbit
};

NeutralRun neutral_orbit(const NeutralSystem& sys, const Vector& y, const HistorySegment& f, const Grid& time_grid,
                         const InversionMethod& method = InversionMethod::direct());

struct StepsRun {
    OrbitSeries orbit;
    Matrix solution;  ///< x(t_k), k = 0..K
    int max_sweeps = 0;  ///< fixed-point sweeps needed when the kernels reach s = 0
};

/// Independent solver: z_{j+1} = e^{hA} z_j + h/2 (e^{hA} g_j + g_{j+1}), g = alpha P x_t, and
/// x(t) = C z(t) + K x_t on the history grid step.
StepsRun method_of_steps(const NeutralSystem& sys, const Vector& y, const HistorySegment& f, const Grid& time_grid);

/// The conjugated system S_a A S_a^{-1}: alpha -> alpha / a, C -> a C.
NeutralSystem scaling_conjugation(const NeutralSystem& sys, double a);
/// S_a (y, f) = (y, a f).
StateVector scale_history(const NeutralSystem& sys, const StateVector& x, double a);

struct ObservationBoundProbe {
    double measured = 0.0;  ///< int_0^H ||C T_0(s)(y, f)|| ds
    double bound = 0.0;     ///< (|mu| + |nu|) ||f||_1 + H ||C|| M ||y||
    double margin = 0.0;
};

struct ObservationBoundReport {
    std::vector<ObservationBoundProbe> probes;
    double M = 0.0;
    double worst_ratio = 0.0;
    double min_margin = 0.0;
    int violations = 0;
};

/// Observation admissibility bound of the neutral pair on [0, horizon] with time step = history step.
ObservationBoundReport check_observation_bound(const NeutralSystem& sys, std::span<const StateVector> probes,
                                               double horizon);

}  // namespace semipert
