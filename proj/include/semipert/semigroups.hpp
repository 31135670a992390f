#pragma once

#include <optional>
#include <vector>

#include "semipert/numerics.hpp"

namespace semipert {

/// Declarative description of a semigroup T(t).
///
/// Shift variants act on left-endpoint cells s_i = start + i*step, i < count, each carrying
/// a value_dim block. T(t) moves cell i+m to cell i (m = t/step); what leaves past the left
/// end is dropped.
class SemigroupSpec {
   public:
    enum class Kind { Matrix, NilpotentShift, LeftTranslation, BlockDiag };

    /// T(t) = e^{tA} on R^n with the given vector norm.
    static SemigroupSpec matrix(Matrix a, ValueNorm norm = ValueNorm::Sup);
    /// Nilpotent left shift on L1(-1,0); the grid must be [-1, 0].
    static SemigroupSpec nilpotent_shift(const Grid& grid, int value_dim = 1, ValueNorm inner = ValueNorm::Sup);
    /// Left translation on L1(-L,0), L >= 1; the grid must end at 0.
    static SemigroupSpec left_translation(const Grid& grid, int value_dim = 1, ValueNorm inner = ValueNorm::Sup);
    /// diag(T_1(t), T_2(t), ...) with the sum of the block norms.
    static SemigroupSpec block_diag(std::vector<SemigroupSpec> blocks);

    Kind kind() const { return kind_; }
    int dim() const;
    Norm norm() const;

    const Matrix& generator() const;
    const Grid& space_grid() const;
    int cells() const { return space_grid().count(); }
    int value_dim() const { return value_dim_; }
    ValueNorm value_norm() const { return norm_; }
    const std::vector<SemigroupSpec>& blocks() const { return blocks_; }
    bool is_shift() const { return kind_ == Kind::NilpotentShift || kind_ == Kind::LeftTranslation; }

    /// Spatial step every admissible time must be a multiple of (smallest over shift blocks).
    std::optional<double> shift_step() const;

    StateVector state(Vector coords) const;

   private:
    SemigroupSpec() = default;
    Kind kind_ = Kind::Matrix;
    Matrix a_;
    Grid grid_;
    int value_dim_ = 1;
    ValueNorm norm_ = ValueNorm::Sup;
    std::vector<SemigroupSpec> blocks_;
};

/// T(h) for a fixed h, applicable repeatedly without allocation.
class StepOperator {
   public:
    StepOperator(const SemigroupSpec& spec, double h);

    void apply(const Vector& x, Vector& out) const;
    Vector operator()(const Vector& x) const;
    /// L1 mass of x that T(h) pushes past the left end of translation blocks.
    double dropped_mass(const Vector& x) const;
    double step() const { return h_; }
    int dim() const { return dim_; }

   private:
    struct Piece {
        int offset = 0;
        int size = 0;
        bool shift = false;
        bool truncating = false;
        int shift_coords = 0;
        int value_dim = 1;
        double cell_step = 1.0;
        ValueNorm inner = ValueNorm::Sup;
        Matrix e;
    };
    void collect(const SemigroupSpec& spec, int& offset);

    double h_;
    int dim_ = 0;
    std::vector<Piece> pieces_;
};

struct OrbitSeries {
    Grid grid;
    std::vector<Vector> states;
    std::vector<double> norms;
    Norm norm_tag;
    /// Total L1 mass pushed past the truncation end of translation blocks.
    double dropped_mass = 0.0;

    static OrbitSeries from_states(const Grid& grid, std::vector<Vector> states, const Norm& norm);

    int size() const { return static_cast<int>(states.size()); }
    StateVector state(int k) const { return StateVector(states[k], norm_tag); }
    /// Orbit restarted at node k0: t -> f(t + t_{k0}).
    OrbitSeries shifted(int k0) const;
    OrbitSeries scaled(double c) const;
};

/// T(t)x; t must be a multiple of the shift step for shift variants.
StateVector apply(const SemigroupSpec& spec, double t, const StateVector& x);

/// L1 mass dropped past -L by translation blocks when computing T(t)x.
double truncated_mass(const SemigroupSpec& spec, double t, const StateVector& x);

/// Orbit on a time grid starting at 0, by repeated one-step application.
OrbitSeries orbit(const SemigroupSpec& spec, const StateVector& x, const Grid& time_grid);

}  // namespace semipert
