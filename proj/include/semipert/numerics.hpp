#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "semipert/error.hpp"

namespace semipert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Uniform grid start + k*step, 0 <= k <= count.
class Grid {
   public:
    Grid() = default;
    Grid(double start, double step, int count);

    /// Grid on [start, end] with the given step; (end - start) must be a multiple of step.
    static Grid over(double start, double end, double step);

    double start() const { return start_; }
    double step() const { return step_; }
    int count() const { return count_; }
    int size() const { return count_ + 1; }
    double end() const { return start_ + count_ * step_; }
    double length() const { return count_ * step_; }
    double point(int k) const { return start_ + k * step_; }

    /// Index of a node; throws GridAlignment when t is not a node, Domain when outside.
    int index_of(double t) const;
    bool is_node(double t) const;

    std::vector<double> trapezoid_weights() const;

    /// First `count` steps of this grid.
    Grid prefix(int count) const { return Grid(start_, step_, count); }

   private:
    double start_ = 0.0;
    double step_ = 1.0;
    int count_ = 1;
};

enum class ValueNorm { Sup, Euclidean };

double value_norm(ValueNorm kind, const double* v, int n);
double dual_value_norm(ValueNorm kind, const double* v, int n);

/// Norm tag attached to a coordinate vector.
///
/// L1Grid treats the coordinates as `value_dim`-blocks on left-endpoint cells of width `step`.
/// Product is the sum of the norms of consecutive coordinate blocks.
class Norm {
   public:
    enum class Kind { Sup, Euclidean, L1Grid, Product };

    Norm() = default;
    static Norm sup() { return Norm(Kind::Sup); }
    static Norm euclidean() { return Norm(Kind::Euclidean); }
    static Norm of(ValueNorm v) { return v == ValueNorm::Sup ? sup() : euclidean(); }
    static Norm l1_grid(double step, int value_dim = 1, ValueNorm inner = ValueNorm::Sup);
    static Norm product(std::vector<Norm> parts, std::vector<int> sizes);

    double operator()(const Vector& x) const { return evaluate(x.data(), static_cast<int>(x.size())); }
    double evaluate(const double* x, int n) const;
    /// Dual norm of a linear functional phi, so that |phi . x| <= dual(phi) * norm(x).
    double dual(const Vector& phi) const { return dual_evaluate(phi.data(), static_cast<int>(phi.size())); }
    double dual_evaluate(const double* phi, int n) const;

    Kind kind() const { return kind_; }
    double step() const { return step_; }
    int value_dim() const { return value_dim_; }
    ValueNorm inner() const { return inner_; }
    const std::vector<Norm>& parts() const { return parts_; }
    const std::vector<int>& sizes() const { return sizes_; }

   private:
    explicit Norm(Kind k) : kind_(k) {}
    Kind kind_ = Kind::Sup;
    double step_ = 1.0;
    int value_dim_ = 1;
    ValueNorm inner_ = ValueNorm::Sup;
    std::vector<Norm> parts_;
    std::vector<int> sizes_;
};

struct StateVector {
    StateVector() = default;
    StateVector(Vector c, Norm n) : coords(std::move(c)), norm_tag(std::move(n)) {}

    Vector coords;
    Norm norm_tag;

    int dim() const { return static_cast<int>(coords.size()); }
    double norm() const { return norm_tag(coords); }
};

/// Operator norm induced by the vector norm on both sides.
double operator_norm(const Matrix& m, ValueNorm kind);

/// e^{tA} by scaling and squaring around a Taylor core.
Matrix matexp(const Matrix& a, double t = 1.0);

/// Weights of the exponential integrator over one step of length h for input
/// interpolated linearly between u_k and u_{k+1}:
///   x_{k+1} = E x_k + W0 u_k + W1 u_{k+1}
/// with E = e^{hA}, W0 = h(phi1 - phi2), W1 = h phi2 evaluated at hA.
struct ExponentialWeights {
    Matrix E, W0, W1;
};
ExponentialWeights exponential_weights(const Matrix& a, double h);

/// Composite trapezoid of samples on the grid; result carries the samples' norm tag.
StateVector quad(const Grid& grid, std::span<const StateVector> samples);

enum class Quadrature { Trapezoid, LeftEndpoint };

/// Integral of nodal values f_0..f_K with spacing h.
double integrate(std::span<const double> f, double h, Quadrature rule = Quadrature::Trapezoid);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace semipert
