#include "semipert/numerics.hpp"

#include <cmath>
#include <string>

namespace semipert {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Dimension: return "dimension";
        case ErrorCode::Domain: return "domain";
        case ErrorCode::GridAlignment: return "grid_alignment";
        case ErrorCode::ContractionViolation: return "contraction_violation";
        case ErrorCode::NoConvergence: return "no_convergence";
        case ErrorCode::Configuration: return "configuration";
        case ErrorCode::Precondition: return "precondition";
        case ErrorCode::Alignment: return "alignment";
        case ErrorCode::Construction: return "construction";
    }
    return "unknown";
}

namespace {
constexpr double kNodeTol = 1e-9;
}

Grid::Grid(double start, double step, int count) : start_(start), step_(step), count_(count) {
    if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::Domain, "grid step must be positive");
    if (count < 1) throw Error(ErrorCode::Domain, "grid count must be at least 1");
    if (!std::isfinite(start)) throw Error(ErrorCode::Domain, "grid start must be finite");
}

Grid Grid::over(double start, double end, double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::Domain, "grid step must be positive");
    const double n = (end - start) / step;
    const double r = std::round(n);
    if (std::abs(n - r) > kNodeTol * std::max(1.0, r))
        throw Error(ErrorCode::GridAlignment, "interval length " + std::to_string(end - start) +
                                                  " is not a multiple of step " + std::to_string(step));
    return Grid(start, step, static_cast<int>(r));
}

int Grid::index_of(double t) const {
    const double n = (t - start_) / step_;
    const double r = std::round(n);
    if (std::abs(n - r) > kNodeTol * std::max(1.0, std::abs(r)))
        throw Error(ErrorCode::GridAlignment, "time " + std::to_string(t) + " is not a grid node (step " +
                                                  std::to_string(step_) + ")");
    if (r < 0 || r > count_) throw Error(ErrorCode::Domain, "time " + std::to_string(t) + " outside grid");
    return static_cast<int>(r);
}

bool Grid::is_node(double t) const {
    const double n = (t - start_) / step_;
    const double r = std::round(n);
    return std::abs(n - r) <= kNodeTol * std::max(1.0, std::abs(r)) && r >= 0 && r <= count_;
}

std::vector<double> Grid::trapezoid_weights() const {
    std::vector<double> w(size(), step_);
    w.front() = 0.5 * step_;
    w.back() = 0.5 * step_;
    return w;
}

double value_norm(ValueNorm kind, const double* v, int n) {
    double acc = 0.0;
    if (kind == ValueNorm::Sup) {
        for (int i = 0; i < n; ++i) acc = std::max(acc, std::abs(v[i]));
        return acc;
    }
    for (int i = 0; i < n; ++i) acc += v[i] * v[i];
    return std::sqrt(acc);
}

double dual_value_norm(ValueNorm kind, const double* v, int n) {
    if (kind == ValueNorm::Euclidean) return value_norm(ValueNorm::Euclidean, v, n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::abs(v[i]);
    return acc;
}

Norm Norm::l1_grid(double step, int value_dim, ValueNorm inner) {
    if (!(step > 0.0)) throw Error(ErrorCode::Domain, "L1 grid norm needs a positive step");
    if (value_dim < 1) throw Error(ErrorCode::Dimension, "value_dim must be positive");
    Norm n(Kind::L1Grid);
    n.step_ = step;
    n.value_dim_ = value_dim;
    n.inner_ = inner;
    return n;
}

Norm Norm::product(std::vector<Norm> parts, std::vector<int> sizes) {
    if (parts.size() != sizes.size() || parts.empty())
        throw Error(ErrorCode::Dimension, "product norm needs one size per part");
    Norm n(Kind::Product);
    n.parts_ = std::move(parts);
    n.sizes_ = std::move(sizes);
    return n;
}

double Norm::evaluate(const double* x, int n) const {
    switch (kind_) {
        case Kind::Sup: return value_norm(ValueNorm::Sup, x, n);
        case Kind::Euclidean: return value_norm(ValueNorm::Euclidean, x, n);
        case Kind::L1Grid: {
            if (n % value_dim_ != 0) throw Error(ErrorCode::Dimension, "L1 grid vector length not a multiple of value_dim");
            double acc = 0.0;
            for (int i = 0; i < n; i += value_dim_) acc += value_norm(inner_, x + i, value_dim_);
            return step_ * acc;
        }
        case Kind::Product: {
            double acc = 0.0;
            int offset = 0;
            for (std::size_t p = 0; p < parts_.size(); ++p) {
                acc += parts_[p].evaluate(x + offset, sizes_[p]);
                offset += sizes_[p];
            }
            if (offset != n) throw Error(ErrorCode::Dimension, "vector length does not match product norm");
            return acc;
        }
    }
    return 0.0;
}

double Norm::dual_evaluate(const double* phi, int n) const {
    switch (kind_) {
        case Kind::Sup: return dual_value_norm(ValueNorm::Sup, phi, n);
        case Kind::Euclidean: return dual_value_norm(ValueNorm::Euclidean, phi, n);
        case Kind::L1Grid: {
            if (n % value_dim_ != 0) throw Error(ErrorCode::Dimension, "L1 grid functional length not a multiple of value_dim");
            double acc = 0.0;
            for (int i = 0; i < n; i += value_dim_) acc = std::max(acc, dual_value_norm(inner_, phi + i, value_dim_));
            return acc / step_;
        }
        case Kind::Product: {
            double acc = 0.0;
            int offset = 0;
            for (std::size_t p = 0; p < parts_.size(); ++p) {
                acc = std::max(acc, parts_[p].dual_evaluate(phi + offset, sizes_[p]));
                offset += sizes_[p];
            }
            if (offset != n) throw Error(ErrorCode::Dimension, "functional length does not match product norm");
            return acc;
        }
    }
    return 0.0;
}

double operator_norm(const Matrix& m, ValueNorm kind) {
    if (m.size() == 0) return 0.0;
    if (kind == ValueNorm::Sup) return m.cwiseAbs().rowwise().sum().maxCoeff();
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

Matrix matexp(const Matrix& a, double t) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::Dimension, "matexp needs a square matrix");
    if (!(t >= 0.0)) throw Error(ErrorCode::Domain, "matexp needs t >= 0");
    const Eigen::Index n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    if (t == 0.0 || n == 0) return id;

    Matrix b = a * t;
    const double nrm = b.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (nrm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.25)));
    b /= std::ldexp(1.0, squarings);

    Matrix result = id;
    Matrix term = id;
    for (int k = 1; k <= 30; ++k) {
        term = term * b / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-18 * result.cwiseAbs().maxCoeff()) break;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

ExponentialWeights exponential_weights(const Matrix& a, double h) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::Dimension, "exponential weights need a square matrix");
    if (!(h > 0.0)) throw Error(ErrorCode::Domain, "step must be positive");
    const Eigen::Index n = a.rows();
    Matrix aug = Matrix::Zero(3 * n, 3 * n);
    aug.block(0, 0, n, n) = h * a;
    aug.block(0, n, n, n).setIdentity();
    aug.block(n, 2 * n, n, n).setIdentity();
    const Matrix e = matexp(aug, 1.0);
    ExponentialWeights w;
    w.E = e.block(0, 0, n, n);
    const Matrix phi1 = e.block(0, n, n, n);
    const Matrix phi2 = e.block(0, 2 * n, n, n);
    w.W0 = h * (phi1 - phi2);
    w.W1 = h * phi2;
    return w;
}

StateVector quad(const Grid& grid, std::span<const StateVector> samples) {
    if (static_cast<int>(samples.size()) != grid.size())
        throw Error(ErrorCode::Dimension, "quad needs count + 1 samples, got " + std::to_string(samples.size()));
    const auto w = grid.trapezoid_weights();
    Vector acc = Vector::Zero(samples.front().dim());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].dim() != acc.size()) throw Error(ErrorCode::Dimension, "quad samples differ in dimension");
        acc += w[k] * samples[k].coords;
    }
    return StateVector(std::move(acc), samples.front().norm_tag);
}

double integrate(std::span<const double> f, double h, Quadrature rule) {
    if (f.size() < 2) return 0.0;
    double acc = 0.0;
    const std::size_t last = f.size() - 1;
    for (std::size_t k = 0; k < last; ++k) acc += f[k];
    if (rule == Quadrature::Trapezoid) acc += 0.5 * (f[last] - f[0]);
    return h * acc;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::Dimension, "line fit needs two or more paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    const double ssres = syy - fit.slope * sxy;
    fit.r_squared = syy > 0.0 ? 1.0 - std::max(0.0, ssres) / syy : 1.0;
    return fit;
}

}  // namespace semipert
