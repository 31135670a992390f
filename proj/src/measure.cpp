#include "semipert/measure.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace semipert {

MeasureSpec MeasureSpec::atom(double location, double weight) {
    return atom(location, Matrix::Constant(1, 1, weight));
}

MeasureSpec MeasureSpec::atom(double location, Matrix weight) {
    MeasureSpec m(static_cast<int>(weight.rows()));
    m.add_atom(location, std::move(weight));
    return m;
}

MeasureSpec MeasureSpec::density(double from, double to, double value) {
    MeasureSpec m(1);
    m.add_density(from, to, Matrix::Constant(1, 1, value));
    return m;
}

MeasureSpec& MeasureSpec::add_atom(double location, Matrix weight) {
    if (weight.rows() != value_dim_ || weight.cols() != value_dim_)
        throw Error(ErrorCode::Dimension, "atom weight must be value_dim x value_dim");
    if (location > 0.0) throw Error(ErrorCode::Domain, "atom location must be <= 0");
    atoms_.push_back({location, std::move(weight)});
    return *this;
}

MeasureSpec& MeasureSpec::add_density(double from, double to, Matrix value) {
    if (value.rows() != value_dim_ || value.cols() != value_dim_)
        throw Error(ErrorCode::Dimension, "density value must be value_dim x value_dim");
    if (!(from < to) || to > 0.0) throw Error(ErrorCode::Domain, "density segment must satisfy from < to <= 0");
    segments_.push_back({from, to, std::move(value)});
    return *this;
}

double MeasureSpec::total_variation(double a, ValueNorm norm) const {
    double tv = 0.0;
    for (const auto& at : atoms_)
        if (at.location >= a) tv += operator_norm(at.weight, norm);
    for (const auto& seg : segments_) {
        const double lo = std::max(a, seg.from);
        if (seg.to > lo) tv += (seg.to - lo) * operator_norm(seg.value, norm);
    }
    return tv;
}

double MeasureSpec::total_variation(ValueNorm norm) const {
    return total_variation(-std::numeric_limits<double>::infinity(), norm);
}

bool MeasureSpec::has_atom_at_zero() const {
    for (const auto& at : atoms_)
        if (at.location == 0.0 && at.weight.cwiseAbs().maxCoeff() > 0.0) return true;
    return false;
}

Matrix MeasureSpec::cell_functional(const Grid& grid) const {
    const int d = value_dim_;
    const int n = grid.count();
    const double h = grid.step();
    Matrix row = Matrix::Zero(d, n * d);
    for (const auto& at : atoms_) {
        const double pos = (at.location - grid.start()) / h;
        const double k = std::round(pos);
        if (std::abs(pos - k) > 1e-9)
            throw Error(ErrorCode::Alignment, "atom at " + std::to_string(at.location) + " is not on a grid node");
        if (k < 0 || k > n) throw Error(ErrorCode::Domain, "atom at " + std::to_string(at.location) + " outside the grid");
        if (k == n) throw Error(ErrorCode::Construction, "atom at 0 cannot be read from left-endpoint cells");
        row.block(0, static_cast<int>(k) * d, d, d) += at.weight;
    }
    for (const auto& seg : segments_) {
        for (int i = 0; i < n; ++i) {
            const double lo = std::max(seg.from, grid.point(i));
            const double hi = std::min(seg.to, grid.point(i + 1));
            if (hi > lo) row.block(0, i * d, d, d) += (hi - lo) * seg.value;
        }
    }
    return row;
}

MeasureSpec MeasureSpec::scaled(double c) const {
    MeasureSpec m = *this;
    for (auto& at : m.atoms_) at.weight *= c;
    for (auto& seg : m.segments_) seg.value *= c;
    return m;
}

}  // namespace semipert
