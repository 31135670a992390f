#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "semipert/cli.hpp"
#include "semipert/translation.hpp"

namespace semipert::cli {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::Configuration, msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) invalid(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) invalid("unknown key '" + key + "' in " + where);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) invalid(where + " must be a number");
    return j.get<double>();
}

const json& required(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) invalid("missing key '" + key + "' in " + where);
    return j.at(key);
}

Matrix matrix(const json& j, const std::string& where) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty() || !j.front().is_array()) invalid(where + " must be a number or a list of rows");
    const int rows = static_cast<int>(j.size()), cols = static_cast<int>(j.front().size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) invalid(where + " has ragged rows");
        for (int c = 0; c < cols; ++c) m(r, c) = number(j[r][c], where);
    }
    return m;
}

Vector vector(const json& j, const std::string& where) {
    if (j.is_number()) return Vector::Constant(1, j.get<double>());
    if (!j.is_array()) invalid(where + " must be a list of numbers");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = number(j[i], where);
    return v;
}

Matrix weight(const json& j, int dim, const std::string& where) {
    if (j.is_number()) return j.get<double>() * Matrix::Identity(dim, dim);
    Matrix m = matrix(j, where);
    if (m.rows() != dim || m.cols() != dim) invalid(where + " must be " + std::to_string(dim) + " x " + std::to_string(dim));
    return m;
}

MeasureSpec measure(const json& j, int dim, const std::string& where) {
    check_keys(j, {"atoms", "densities"}, where);
    MeasureSpec mu(dim);
    if (j.contains("atoms"))
        for (const auto& a : j.at("atoms")) {
            check_keys(a, {"at", "weight"}, where + ".atoms");
            mu.add_atom(number(required(a, "at", where), where + ".at"), weight(required(a, "weight", where), dim, where));
        }
    if (j.contains("densities"))
        for (const auto& d : j.at("densities")) {
            check_keys(d, {"from", "to", "value"}, where + ".densities");
            const double from = number(required(d, "from", where), where), to = number(required(d, "to", where), where);
            if (!(from < to)) invalid(where + ": density needs from < to");
            mu.add_density(from, to, weight(required(d, "value", where), dim, where));
        }
    return mu;
}

ValueNorm value_norm_of(const json& j) {
    const auto s = j.get<std::string>();
    if (s == "sup") return ValueNorm::Sup;
    if (s == "euclidean") return ValueNorm::Euclidean;
    invalid("norm must be 'sup' or 'euclidean'");
}

InversionMethod method_of(const std::string& kind) {
    if (kind == "direct") return InversionMethod::direct();
    if (kind == "neumann") return InversionMethod::neumann();
    invalid("method must be 'direct' or 'neumann'");
}

SystemConfig parse_system(const json& j) {
    SystemConfig s;
    const auto kind = required(j, "kind", "system").get<std::string>();
    if (j.contains("norm")) s.norm = value_norm_of(j.at("norm"));
    if (kind == "matrix") {
        check_keys(j, {"kind", "norm", "A", "control", "B", "C"}, "system");
        s.kind = SystemConfig::Kind::Matrix;
        s.A = matrix(required(j, "A", "system"), "system.A");
        const auto control = j.value("control", std::string("bounded"));
        if (control == "bounded") {
            s.control = ControlSpec::Kind::Bounded;
            s.B = matrix(required(j, "B", "system"), "system.B");
        } else if (control == "identity") {
            s.control = ControlSpec::Kind::Identity;
            if (j.contains("B")) invalid("system.B is not used with identity control");
        } else {
            invalid("system.control must be 'bounded' or 'identity'");
        }
        s.C = matrix(required(j, "C", "system"), "system.C");
    } else if (kind == "translation") {
        check_keys(j, {"kind", "lambda", "length", "measure"}, "system");
        s.kind = SystemConfig::Kind::Translation;
        if (j.contains("lambda")) {
            const auto& l = j.at("lambda");
            if (l.is_number()) s.lambda = l.get<double>();
            else if (l.is_array() && l.size() == 2) s.lambda = {number(l[0], "system.lambda"), number(l[1], "system.lambda")};
            else invalid("system.lambda must be a number or [re, im]");
        }
        if (j.contains("length")) s.length = number(j.at("length"), "system.length");
        if (!(s.length > 0.0)) invalid("system.length must be positive");
        s.measure = measure(required(j, "measure", "system"), 1, "system.measure");
    } else if (kind == "neutral") {
        check_keys(j, {"kind", "norm", "A", "C", "p_kernel", "k_kernel", "alpha"}, "system");
        s.kind = SystemConfig::Kind::Neutral;
        s.A = matrix(required(j, "A", "system"), "system.A");
        s.C = matrix(required(j, "C", "system"), "system.C");
        const int n = static_cast<int>(s.A.rows());
        s.p_kernel = j.contains("p_kernel") ? measure(j.at("p_kernel"), n, "system.p_kernel") : MeasureSpec(n);
        s.k_kernel = j.contains("k_kernel") ? measure(j.at("k_kernel"), n, "system.k_kernel") : MeasureSpec(n);
        if (j.contains("alpha")) s.alpha = number(j.at("alpha"), "system.alpha");
    } else {
        invalid("system.kind must be 'matrix', 'translation' or 'neutral'");
    }
    return s;
}

FunctionProbe parse_function(const json& j) {
    check_keys(j, {"poly", "cos", "y"}, "probes.functions");
    FunctionProbe f;
    if (j.contains("poly"))
        for (const auto& c : j.at("poly")) f.poly.push_back(number(c, "probes.functions.poly"));
    if (j.contains("cos")) {
        const auto& c = j.at("cos");
        if (!c.is_array() || c.size() != 3) invalid("probes.functions.cos must be [amplitude, frequency, phase]");
        f.cos_amp = number(c[0], "cos");
        f.cos_freq = number(c[1], "cos");
        f.cos_phase = number(c[2], "cos");
    }
    if (j.contains("y")) f.y = vector(j.at("y"), "probes.functions.y");
    return f;
}

}  // namespace

double FunctionProbe::operator()(double s) const {
    double v = 0.0, p = 1.0;
    for (double c : poly) {
        v += c * p;
        p *= s;
    }
    return v + cos_amp * std::cos(cos_freq * s + cos_phase);
}

RunConfig parse_config(const json& doc) {
    check_keys(doc, {"schema_version", "name", "system", "grid", "method", "seed", "probes", "admissibility", "asymptotics"},
               "config");
    RunConfig cfg;
    cfg.source = doc;
    if (doc.contains("schema_version") && doc.at("schema_version") != kSchemaVersion)
        invalid("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    cfg.name = doc.value("name", std::string("run"));
    cfg.system = parse_system(required(doc, "system", "config"));

    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        check_keys(g, {"horizon", "step"}, "grid");
        if (g.contains("horizon")) cfg.horizon = number(g.at("horizon"), "grid.horizon");
        if (g.contains("step")) cfg.step = number(g.at("step"), "grid.step");
    }
    if (doc.contains("method")) {
        const auto& m = doc.at("method");
        if (m.is_string()) {
            cfg.method = method_of(m.get<std::string>());
        } else {
            check_keys(m, {"kind", "tol", "max_terms"}, "method");
            cfg.method = method_of(required(m, "kind", "method").get<std::string>());
            if (m.contains("tol")) cfg.method.tol = number(m.at("tol"), "method.tol");
            if (m.contains("max_terms")) cfg.method.max_terms = m.at("max_terms").get<int>();
        }
    }
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned()) invalid("seed must be a non-negative integer");
        cfg.seed = doc.at("seed").get<unsigned>();
    }
    if (doc.contains("probes")) {
        const auto& p = doc.at("probes");
        check_keys(p, {"vectors", "random", "functions", "compatible"}, "probes");
        if (p.contains("vectors"))
            for (const auto& v : p.at("vectors")) cfg.probes.vectors.push_back(vector(v, "probes.vectors"));
        if (p.contains("random")) cfg.probes.random = p.at("random").get<int>();
        if (p.contains("functions"))
            for (const auto& f : p.at("functions")) cfg.probes.functions.push_back(parse_function(f));
        if (p.contains("compatible")) cfg.probes.compatible = p.at("compatible").get<bool>();
        if (cfg.probes.random < 0) invalid("probes.random must be >= 0");
    }
    if (doc.contains("admissibility")) {
        const auto& a = doc.at("admissibility");
        check_keys(a, {"signals", "miyadera_voigt", "desch_schappacher"}, "admissibility");
        if (a.contains("signals")) cfg.admissibility.signals = a.at("signals").get<int>();
        if (a.contains("miyadera_voigt")) {
            check_keys(a.at("miyadera_voigt"), {"q_threshold"}, "admissibility.miyadera_voigt");
            cfg.admissibility.q_threshold = number(required(a.at("miyadera_voigt"), "q_threshold", "miyadera_voigt"), "q");
        }
        if (a.contains("desch_schappacher")) {
            const auto& d = a.at("desch_schappacher");
            check_keys(d, {"omega", "m", "terms"}, "admissibility.desch_schappacher");
            cfg.admissibility.ds_omega = number(required(d, "omega", "desch_schappacher"), "omega");
            if (d.contains("m")) cfg.admissibility.ds_m = number(d.at("m"), "m");
            if (d.contains("terms")) cfg.admissibility.ds_terms = d.at("terms").get<int>();
        }
        if (cfg.admissibility.signals < 1) invalid("admissibility.signals must be >= 1");
    }
    if (doc.contains("asymptotics")) {
        const auto& a = doc.at("asymptotics");
        check_keys(a, {"properties", "tail_fraction", "band", "bound_hint", "slope_tol", "stable_tol", "weak_tol",
                       "ergodic_tol", "window", "inconclusive_counts_against"},
                   "asymptotics");
        auto& c = cfg.asymptotics.checker;
        if (a.contains("properties"))
            for (const auto& p : a.at("properties")) cfg.asymptotics.properties.push_back(property_from_string(p.get<std::string>()));
        auto opt = [&](const char* key, double& field) {
            if (a.contains(key)) field = number(a.at(key), std::string("asymptotics.") + key);
        };
        opt("tail_fraction", c.tail_fraction);
        opt("band", c.band);
        opt("bound_hint", c.bound_hint);
        opt("slope_tol", c.slope_tol);
        opt("stable_tol", c.stable_tol);
        opt("weak_tol", c.weak_tol);
        opt("ergodic_tol", c.ergodic_tol);
        opt("window", c.window);
        if (a.contains("inconclusive_counts_against"))
            cfg.asymptotics.inconclusive_counts_against = a.at("inconclusive_counts_against").get<bool>();
    }
    if (cfg.asymptotics.properties.empty())
        cfg.asymptotics.properties = {Property::Bounded, Property::StronglyStable, Property::MeanErgodic};
    if (!(cfg.horizon > 0.0) || !(cfg.step > 0.0)) invalid("grid.horizon and grid.step must be positive");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot open config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        invalid("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        return parse_config(doc);
    } catch (const json::exception& e) {
        invalid(std::string("config has a value of the wrong type: ") + e.what());
    }
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.horizon) cfg.horizon = *o.horizon;
    if (o.step) cfg.step = *o.step;
    if (o.method) {
        const double tol = cfg.method.tol;
        const int terms = cfg.method.max_terms;
        cfg.method = method_of(*o.method);
        if (cfg.method.kind == InversionMethod::Kind::Neumann && tol > 0.0) {
            cfg.method.tol = tol;
            cfg.method.max_terms = terms;
        }
    }
    if (!(cfg.horizon > 0.0) || !(cfg.step > 0.0)) invalid("horizon and step must be positive");
}

NeutralSystem build_neutral(const RunConfig& cfg) {
    if (cfg.system.kind != SystemConfig::Kind::Neutral) invalid("this command needs a neutral system");
    const double cells = 1.0 / cfg.step;
    const long n = std::lround(cells);
    if (n < 1 || std::abs(cells - n) > 1e-9 * cells)
        throw Error(ErrorCode::GridAlignment, "neutral systems need step = 1/N for an integer N");
    NeutralSystem s;
    s.A = cfg.system.A;
    s.C = cfg.system.C;
    s.P_kernel = cfg.system.p_kernel;
    s.K_kernel = cfg.system.k_kernel;
    s.history_grid = Grid(-1.0, 1.0 / n, static_cast<int>(n));
    s.alpha = cfg.system.alpha;
    s.norm = cfg.system.norm;
    s.validate();
    return s;
}

PerturbationTriple build_triple(const RunConfig& cfg) {
    const auto& s = cfg.system;
    switch (s.kind) {
        case SystemConfig::Kind::Matrix: {
            if (s.A.rows() != s.A.cols()) throw Error(ErrorCode::Dimension, "system.A must be square");
            const ControlSpec control =
                s.control == ControlSpec::Kind::Identity ? ControlSpec::identity() : ControlSpec::bounded(s.B);
            PerturbationTriple tri{SemigroupSpec::matrix(s.A, s.norm), control, s.C};
            tri.validate();
            return tri;
        }
        case SystemConfig::Kind::Translation:
            return translation_triple(DirichletSpec(s.lambda), s.measure, s.length, cfg.step);
        case SystemConfig::Kind::Neutral: return build_perturbation(build_neutral(cfg));
    }
    invalid("unknown system kind");
}

std::vector<StateVector> build_probes(const RunConfig& cfg, const PerturbationTriple& triple,
                                      std::vector<NeutralProbe>* neutral) {
    std::vector<StateVector> out;
    const auto& p = cfg.probes;
    const int dim = triple.base.dim();
    for (const auto& v : p.vectors) {
        if (v.size() != dim) throw Error(ErrorCode::Dimension, "probe vector has dimension " + std::to_string(v.size()) +
                                                                   ", state dimension is " + std::to_string(dim));
        out.push_back(triple.state(v));
    }
    switch (cfg.system.kind) {
        case SystemConfig::Kind::Matrix: break;
        case SystemConfig::Kind::Translation: {
            const Grid space = triple.base.space_grid();
            const int d = triple.base.value_dim();
            for (const auto& f : p.functions) {
                Vector c = Vector::Zero(dim);
                for (int i = 0; i < space.count(); ++i) c(i * d) = f(space.point(i));
                out.push_back(triple.state(std::move(c)));
            }
            break;
        }
        case SystemConfig::Kind::Neutral: {
            const auto sys = build_neutral(cfg);
            const int n = sys.dim();
            for (const auto& fp : p.functions) {
                Vector y = fp.y.size() == 0 ? Vector::Zero(n) : fp.y;
                if (y.size() != n) throw Error(ErrorCode::Dimension, "probes.functions.y must have the dimension of A");
                auto f = HistorySegment::sample(sys.history_grid, n, [&](double s) { return Vector::Constant(n, fp(s)); });
                if (p.compatible) f = make_compatible(sys, y, f);
                out.push_back(neutral_state(sys, y, f));
                if (neutral) neutral->push_back({y, f});
            }
            if (neutral && !p.vectors.empty())
                throw Error(ErrorCode::Configuration, "neutral runs take probes.functions, not raw vectors");
            break;
        }
    }
    if (p.random > 0) {
        if (neutral && cfg.system.kind == SystemConfig::Kind::Neutral)
            throw Error(ErrorCode::Configuration, "neutral runs take probes.functions, not random probes");
        std::mt19937 rng(cfg.seed);
        std::normal_distribution<double> nd;
        for (int r = 0; r < p.random; ++r) {
            Vector v(dim);
            for (int i = 0; i < dim; ++i) v(i) = nd(rng);
            out.push_back(triple.state(std::move(v)));
        }
    }
    return out;
}

}  // namespace semipert::cli
