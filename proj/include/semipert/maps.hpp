#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "semipert/numerics.hpp"
#include "semipert/semigroups.hpp"

namespace semipert {

/// One block of coordinates of a U-valued signal, with its value norm and time rule.
struct SignalChannel {
    int dim = 1;
    ValueNorm norm = ValueNorm::Sup;
    Quadrature rule = Quadrature::Trapezoid;
};

/// The L1(0,t;U) norm of a signal is the sum over channels of the channel L1 norms.
class SignalLayout {
   public:
    SignalLayout() = default;
    explicit SignalLayout(std::vector<SignalChannel> channels);
    static SignalLayout single(int dim, ValueNorm norm = ValueNorm::Sup, Quadrature rule = Quadrature::Trapezoid);

    int dim() const { return dim_; }
    const std::vector<SignalChannel>& channels() const { return channels_; }
    int offset(int channel) const { return offsets_[channel]; }

    /// L1 norm of columns 0..upto of `values` on spacing h.
    double l1(const Matrix& values, double h, int upto) const;
    /// Weight node k carries in channel c of the discrete L1 norm on [0, t_upto].
    double weight(int channel, int k, int upto, double h) const;

   private:
    std::vector<SignalChannel> channels_;
    std::vector<int> offsets_;
    int dim_ = 0;
};

/// Nodal samples u(t_k) of a U-valued signal; values is dim x (count + 1).
struct InputSignal {
    InputSignal() = default;
    InputSignal(const Grid& grid, Matrix values, SignalLayout layout);

    static InputSignal zeros(const Grid& grid, const SignalLayout& layout);
    static InputSignal sample(const Grid& grid, const SignalLayout& layout, const std::function<Vector(double)>& f);

    Grid grid;
    Matrix values;
    SignalLayout layout;

    int dim() const { return static_cast<int>(values.rows()); }
    double l1_norm() const { return layout.l1(values, grid.step(), grid.count()); }
    double l1_norm(int upto) const { return layout.l1(values, grid.step(), upto); }
    std::vector<double> cumulative_l1() const;
    InputSignal prefix(int count) const;
};

/// The control operator B of a perturbation pair.
class ControlSpec {
   public:
    enum class Kind { Bounded, Identity, BoundaryDirichlet, NeutralBoundary };

    /// B in L(U, X) given as a matrix (Desch-Schappacher type).
    static ControlSpec bounded(Matrix b);
    /// B = Id (Miyadera-Voigt type).
    static ControlSpec identity();
    /// B = (lambda - A_{-1}) D_lambda on the left translation semigroup.
    static ControlSpec boundary_dirichlet(std::complex<double> lambda);
    /// diag(I, -D_{-1} L_0) on X x L1(-1,0;X).
    static ControlSpec neutral_boundary();

    Kind kind() const { return kind_; }
    const Matrix& matrix() const { return b_; }
    std::complex<double> lambda() const { return lambda_; }
    bool is_zero() const { return kind_ == Kind::Bounded && (b_.size() == 0 || b_.cwiseAbs().maxCoeff() == 0.0); }

   private:
    Kind kind_ = Kind::Identity;
    Matrix b_;
    std::complex<double> lambda_{1.0, 0.0};
};

struct PerturbationTriple {
    SemigroupSpec base;
    ControlSpec control;
    Matrix C;

    int signal_dim() const;
    SignalLayout signal_layout() const;
    /// Throws Configuration/Dimension errors for incompatible parts.
    void validate() const;
    StateVector state(Vector coords) const { return base.state(std::move(coords)); }
    bool is_unperturbed() const;
};

struct InversionMethod {
    enum class Kind { Neumann, DirectSolve };
    Kind kind = Kind::DirectSolve;
    double tol = 1e-12;
    int max_terms = 1000;

    static InversionMethod neumann(double tol = 1e-12, int max_terms = 1000) { return {Kind::Neumann, tol, max_terms}; }
    static InversionMethod direct() { return {Kind::DirectSolve, 0.0, 0}; }
};

/// Time discretization of (T, B, C) with step h.
///
/// Control states follow b_{k+1} = T(h) b_k + G0 u_k + G1 u_{k+1}, b_0 = 0. Bounded channels
/// integrate T(h - s) exactly against the linear interpolant of u; shift channels put u_k into
/// the last cell. The input-output map is (F u)_k = C b_k.
class DiscreteSystem {
   public:
    DiscreteSystem(const PerturbationTriple& triple, double h);

    double step() const { return h_; }
    int state_dim() const { return step_op_.dim(); }
    int signal_dim() const { return layout_.dim(); }
    const SignalLayout& layout() const { return layout_; }
    const Norm& state_norm() const { return state_norm_; }
    const StepOperator& propagator() const { return step_op_; }
    const Matrix& observation() const { return c_; }

    /// b <- T(h) b + G0 u_prev + G1 u_next.
    void control_step(Vector& b, const Vector& u_prev, const Vector& u_next, Vector& scratch) const;
    /// b_0, ..., b_K for the signal columns u_0..u_K.
    std::vector<Vector> control_states(const Matrix& u) const;
    /// C T(t_k) x for k = 0..count.
    Matrix observe(const Vector& x, int count) const;
    /// F u on the same nodes.
    Matrix apply_io(const Matrix& u) const;
    /// (I - F)^{-1} v by forward substitution.
    Matrix solve(const Matrix& v) const;
    /// Induced norm of the discrete F on L1(0, t_count; U).
    double io_norm(int count, unsigned seed = 42) const;

   private:
    struct Injection {
        bool cell = false;
        int state_offset = 0;
        int state_size = 0;
        int signal_offset = 0;
        int signal_size = 0;
        Matrix g0, g1;
    };
    void add_dense(int state_offset, const Matrix& a, const Matrix& b, int signal_offset);
    void add_cell(int state_offset, int block_size, int value_dim, int signal_offset);

    double h_;
    StepOperator step_op_;
    Matrix c_;
    SignalLayout layout_;
    Norm state_norm_;
    std::vector<Injection> injections_;
    bool has_g1_ = false;
    Eigen::PartialPivLU<Matrix> diag_lu_;
};

struct InversionResult {
    InputSignal solution;
    int terms = 0;
    double residual = 0.0;
    double contraction_estimate = 0.0;
    std::vector<double> term_norms;
};

StateVector control_map(const PerturbationTriple& triple, double t, const InputSignal& u);
InputSignal observation_map(const PerturbationTriple& triple, const Grid& time_grid, const StateVector& x);
InputSignal io_map(const PerturbationTriple& triple, double t, const InputSignal& u);
InputSignal invert_io(const PerturbationTriple& triple, double t, const InputSignal& v, const InversionMethod& method);
InversionResult invert_io_detailed(const PerturbationTriple& triple, double t, const InputSignal& v,
                                   const InversionMethod& method);
/// Induced norm of the discrete F_t on [0, time_grid.end()].
double io_norm_estimate(const PerturbationTriple& triple, const Grid& time_grid, unsigned seed = 42);

struct PerturbedRun {
    OrbitSeries orbit;
    InputSignal feedback;  ///< (I - F)^{-1} C T(.) x
    int neumann_terms = 0;
};

/// T_BC(t_k) x = T(t_k) x + B_{t_k} (I - F)^{-1} C_{t_k} x on the whole grid.
PerturbedRun perturbed_run(const PerturbationTriple& triple, const StateVector& x, const Grid& time_grid,
                           const InversionMethod& method = InversionMethod::direct());
OrbitSeries perturbed_orbit(const PerturbationTriple& triple, const StateVector& x, const Grid& time_grid,
                            const InversionMethod& method = InversionMethod::direct());
StateVector perturbed_apply(const PerturbationTriple& triple, double t, const StateVector& x, double step,
                            const InversionMethod& method = InversionMethod::direct());

}  // namespace semipert
