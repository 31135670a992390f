#include "semipert/semigroups.hpp"

#include <cmath>
#include <string>

namespace semipert {

namespace {

void check_shift_grid(const Grid& grid, int value_dim) {
    if (value_dim < 1) throw Error(ErrorCode::Dimension, "value_dim must be positive");
    if (std::abs(grid.end()) > 1e-12 * grid.length())
        throw Error(ErrorCode::Domain, "shift grids must end at 0");
}

int cells_for(double t, double cell_step) {
    const double n = t / cell_step;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * std::max(1.0, r))
        throw Error(ErrorCode::GridAlignment, "time " + std::to_string(t) + " is not a multiple of the shift step " +
                                                  std::to_string(cell_step));
    return static_cast<int>(r);
}

}  // namespace

SemigroupSpec SemigroupSpec::matrix(Matrix a, ValueNorm norm) {
    if (a.rows() != a.cols() || a.rows() == 0) throw Error(ErrorCode::Dimension, "generator must be square and nonempty");
    SemigroupSpec s;
    s.kind_ = Kind::Matrix;
    s.a_ = std::move(a);
    s.norm_ = norm;
    return s;
}

SemigroupSpec SemigroupSpec::nilpotent_shift(const Grid& grid, int value_dim, ValueNorm inner) {
    check_shift_grid(grid, value_dim);
    if (std::abs(grid.start() + 1.0) > 1e-12) throw Error(ErrorCode::Domain, "nilpotent shift grid must cover [-1, 0]");
    SemigroupSpec s;
    s.kind_ = Kind::NilpotentShift;
    s.grid_ = grid;
    s.value_dim_ = value_dim;
    s.norm_ = inner;
    return s;
}

SemigroupSpec SemigroupSpec::left_translation(const Grid& grid, int value_dim, ValueNorm inner) {
    check_shift_grid(grid, value_dim);
    if (grid.length() < 1.0 - 1e-12) throw Error(ErrorCode::Domain, "translation length L must be at least 1");
    SemigroupSpec s;
    s.kind_ = Kind::LeftTranslation;
    s.grid_ = grid;
    s.value_dim_ = value_dim;
    s.norm_ = inner;
    return s;
}

SemigroupSpec SemigroupSpec::block_diag(std::vector<SemigroupSpec> blocks) {
    if (blocks.empty()) throw Error(ErrorCode::Dimension, "block_diag needs at least one block");
    SemigroupSpec s;
    s.kind_ = Kind::BlockDiag;
    s.blocks_ = std::move(blocks);
    return s;
}

int SemigroupSpec::dim() const {
    switch (kind_) {
        case Kind::Matrix: return static_cast<int>(a_.rows());
        case Kind::NilpotentShift:
        case Kind::LeftTranslation: return grid_.count() * value_dim_;
        case Kind::BlockDiag: {
            int d = 0;
            for (const auto& b : blocks_) d += b.dim();
            return d;
        }
    }
    return 0;
}

Norm SemigroupSpec::norm() const {
    switch (kind_) {
        case Kind::Matrix: return Norm::of(norm_);
        case Kind::NilpotentShift:
        case Kind::LeftTranslation: return Norm::l1_grid(grid_.step(), value_dim_, norm_);
        case Kind::BlockDiag: {
            std::vector<Norm> parts;
            std::vector<int> sizes;
            for (const auto& b : blocks_) {
                parts.push_back(b.norm());
                sizes.push_back(b.dim());
            }
            return Norm::product(std::move(parts), std::move(sizes));
        }
    }
    return Norm::sup();
}

const Matrix& SemigroupSpec::generator() const {
    if (kind_ != Kind::Matrix) throw Error(ErrorCode::Configuration, "semigroup has no matrix generator");
    return a_;
}

const Grid& SemigroupSpec::space_grid() const {
    if (!is_shift()) throw Error(ErrorCode::Configuration, "semigroup has no space grid");
    return grid_;
}

std::optional<double> SemigroupSpec::shift_step() const {
    if (is_shift()) return grid_.step();
    std::optional<double> out;
    for (const auto& b : blocks_) {
        auto s = b.shift_step();
        if (s && (!out || *s < *out)) out = s;
    }
    return out;
}

StateVector SemigroupSpec::state(Vector coords) const {
    if (coords.size() != dim())
        throw Error(ErrorCode::Dimension, "state has " + std::to_string(coords.size()) + " coordinates, expected " +
                                              std::to_string(dim()));
    return StateVector(std::move(coords), norm());
}

StepOperator::StepOperator(const SemigroupSpec& spec, double h) : h_(h) {
    if (!(h >= 0.0)) throw Error(ErrorCode::Domain, "negative time");
    int offset = 0;
    collect(spec, offset);
    dim_ = offset;
}

void StepOperator::collect(const SemigroupSpec& spec, int& offset) {
    if (spec.kind() == SemigroupSpec::Kind::BlockDiag) {
        for (const auto& b : spec.blocks()) collect(b, offset);
        return;
    }
    Piece p;
    p.offset = offset;
    p.size = spec.dim();
    if (spec.kind() == SemigroupSpec::Kind::Matrix) {
        p.e = matexp(spec.generator(), h_);
    } else {
        p.shift = true;
        p.truncating = spec.kind() == SemigroupSpec::Kind::LeftTranslation;
        p.value_dim = spec.value_dim();
        p.cell_step = spec.space_grid().step();
        p.inner = spec.value_norm();
        p.shift_coords = cells_for(h_, p.cell_step) * p.value_dim;
    }
    offset += p.size;
    pieces_.push_back(std::move(p));
}

void StepOperator::apply(const Vector& x, Vector& out) const {
    if (x.size() != dim_) throw Error(ErrorCode::Dimension, "state dimension mismatch");
    out.resize(dim_);
    for (const auto& p : pieces_) {
        if (!p.shift) {
            out.segment(p.offset, p.size).noalias() = p.e * x.segment(p.offset, p.size);
            continue;
        }
        const int m = std::min(p.shift_coords, p.size);
        const int keep = p.size - m;
        if (keep > 0) out.segment(p.offset, keep) = x.segment(p.offset + m, keep);
        out.segment(p.offset + keep, m).setZero();
    }
}

Vector StepOperator::operator()(const Vector& x) const {
    Vector out;
    apply(x, out);
    return out;
}

double StepOperator::dropped_mass(const Vector& x) const {
    double mass = 0.0;
    for (const auto& p : pieces_) {
        if (!p.truncating) continue;
        const int m = std::min(p.shift_coords, p.size);
        mass += Norm::l1_grid(p.cell_step, p.value_dim, p.inner).evaluate(x.data() + p.offset, m);
    }
    return mass;
}

OrbitSeries OrbitSeries::from_states(const Grid& grid, std::vector<Vector> states, const Norm& norm) {
    if (static_cast<int>(states.size()) != grid.size()) throw Error(ErrorCode::Dimension, "orbit length does not match grid");
    OrbitSeries o;
    o.grid = grid;
    o.norm_tag = norm;
    o.norms.reserve(states.size());
    for (const auto& s : states) o.norms.push_back(norm(s));
    o.states = std::move(states);
    return o;
}

OrbitSeries OrbitSeries::shifted(int k0) const {
    if (k0 < 0 || k0 >= grid.count()) throw Error(ErrorCode::Domain, "orbit shift outside the grid");
    OrbitSeries o;
    o.grid = Grid(0.0, grid.step(), grid.count() - k0);
    o.norm_tag = norm_tag;
    o.states.assign(states.begin() + k0, states.end());
    o.norms.assign(norms.begin() + k0, norms.end());
    return o;
}

OrbitSeries OrbitSeries::scaled(double c) const {
    OrbitSeries o = *this;
    for (auto& s : o.states) s *= c;
    for (auto& n : o.norms) n *= std::abs(c);
    return o;
}

StateVector apply(const SemigroupSpec& spec, double t, const StateVector& x) {
    if (!(t >= 0.0)) throw Error(ErrorCode::Domain, "negative time " + std::to_string(t));
    if (x.dim() != spec.dim()) throw Error(ErrorCode::Dimension, "state dimension mismatch");
    if (t == 0.0) return x;
    StepOperator op(spec, t);
    return StateVector(op(x.coords), x.norm_tag);
}

double truncated_mass(const SemigroupSpec& spec, double t, const StateVector& x) {
    if (!(t >= 0.0)) throw Error(ErrorCode::Domain, "negative time");
    if (t == 0.0) return 0.0;
    return StepOperator(spec, t).dropped_mass(x.coords);
}

OrbitSeries orbit(const SemigroupSpec& spec, const StateVector& x, const Grid& time_grid) {
    if (time_grid.start() != 0.0) throw Error(ErrorCode::Domain, "orbit time grid must start at 0");
    if (x.dim() != spec.dim()) throw Error(ErrorCode::Dimension, "state dimension mismatch");
    StepOperator op(spec, time_grid.step());
    std::vector<Vector> states;
    states.reserve(time_grid.size());
    states.push_back(x.coords);
    double dropped = 0.0;
    for (int k = 0; k < time_grid.count(); ++k) {
        dropped += op.dropped_mass(states.back());
        Vector next;
        op.apply(states.back(), next);
        states.push_back(std::move(next));
    }
    auto o = OrbitSeries::from_states(time_grid, std::move(states), spec.norm());
    o.dropped_mass = dropped;
    return o;
}

}  // namespace semipert
