#pragma once

#include <vector>

#include "semipert/numerics.hpp"

namespace semipert {

/// Operator-valued measure on [-L, 0]: atoms plus a piecewise-constant density.
class MeasureSpec {
   public:
    struct Atom {
        double location;
        Matrix weight;
    };
    struct Segment {
        double from;
        double to;
        Matrix value;
    };

    explicit MeasureSpec(int value_dim = 1) : value_dim_(value_dim) {}

    static MeasureSpec atom(double location, double weight);
    static MeasureSpec atom(double location, Matrix weight);
    static MeasureSpec density(double from, double to, double value);

    MeasureSpec& add_atom(double location, Matrix weight);
    MeasureSpec& add_density(double from, double to, Matrix value);

    int value_dim() const { return value_dim_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<Segment>& segments() const { return segments_; }
    bool empty() const { return atoms_.empty() && segments_.empty(); }

    /// |mu|([a, 0]) with operator norms of the weights taken in `norm`.
    double total_variation(double a, ValueNorm norm = ValueNorm::Sup) const;
    double total_variation(ValueNorm norm = ValueNorm::Sup) const;

    bool has_atom_at_zero() const;

    /// Matrix of the functional f -> int f dmu on left-endpoint cells of `grid`
    /// (value_dim rows, cells * value_dim columns). Atoms must sit on grid nodes.
    Matrix cell_functional(const Grid& grid) const;

    /// Copy with every weight multiplied by c.
    MeasureSpec scaled(double c) const;

   private:
    int value_dim_;
    std::vector<Atom> atoms_;
    std::vector<Segment> segments_;
};

}  // namespace semipert
