#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "semipert/admissibility.hpp"
#include "semipert/cli.hpp"

namespace semipert::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kMaxCsvRows = 2001;

json num(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan")); }

json vec_json(const Vector& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Configuration, "cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

class CsvWriter {
   public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : f_(std::fopen(path.string().c_str(), "wb")) {
        if (!f_) throw Error(ErrorCode::Configuration, "cannot write '" + path.string() + "'");
        for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", header[i].c_str());
        std::fputc('\n', f_);
    }
    ~CsvWriter() { std::fclose(f_); }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) std::fprintf(f_, "%s%.17g", i ? "," : "", values[i]);
        std::fputc('\n', f_);
    }

   private:
    std::FILE* f_;
};

int csv_stride(int size) { return size <= kMaxCsvRows ? 1 : (size - 1 + kMaxCsvRows - 2) / (kMaxCsvRows - 1); }

/// Every stride-th node plus the final one.
std::vector<int> csv_rows(int size) {
    const int stride = csv_stride(size);
    std::vector<int> rows;
    for (int k = 0; k < size; k += stride) rows.push_back(k);
    if (size > 0 && rows.back() != size - 1) rows.push_back(size - 1);
    return rows;
}

void write_orbit_csv(const fs::path& path, const OrbitSeries& o) {
    const int d = o.size() ? static_cast<int>(o.states[0].size()) : 0;
    std::vector<std::string> header = {"t", "norm"};
    for (int i = 0; i < d; ++i) header.push_back("x" + std::to_string(i));
    CsvWriter w(path, header);
    for (int k : csv_rows(o.size())) {
        std::vector<double> r = {o.grid.point(k), o.norms[k]};
        for (int i = 0; i < d; ++i) r.push_back(o.states[k](i));
        w.row(r);
    }
}

json verdict_json(const Verdict& v) {
    return {{"outcome", to_string(v.outcome)},
            {"statistic", num(v.statistic)},
            {"threshold", num(v.threshold)},
            {"margin", num(v.margin)},
            {"note", v.note}};
}

json asymptotic_json(const AsymptoticVerdict& v) {
    const auto& w = v.witness;
    json witness = {{"attained_sup", num(w.attained_sup)},     {"reference", num(w.reference)},
                    {"tail_mean", num(w.tail_mean)},           {"cesaro_residual", num(w.cesaro_residual)},
                    {"fitted_rate", num(w.fitted_rate)},       {"note", w.note}};
    if (w.limit.size() > 0 && w.limit.size() <= 64) witness["limit"] = vec_json(w.limit);
    if (w.functionals > 0) witness["functionals"] = w.functionals;
    return {{"property", to_string(v.property)},
            {"verdict", to_string(v.verdict)},
            {"statistic", num(v.statistic)},
            {"threshold", num(v.threshold)},
            {"witness", witness}};
}

json header_json(const std::string& command, const RunConfig& cfg) {
    return {{"schema_version", kSchemaVersion},
            {"command", command},
            {"name", cfg.name},
            {"config", cfg.source},
            {"seed", cfg.seed},
            {"grid", {{"horizon", num(cfg.horizon)}, {"step", num(cfg.step)}}},
            {"method",
             {{"kind", cfg.method.kind == InversionMethod::Kind::Neumann ? "neumann" : "direct"},
              {"tol", num(cfg.method.tol)},
              {"max_terms", cfg.method.max_terms}}}};
}

std::vector<StateVector> require_probes(const RunConfig& cfg, const PerturbationTriple& tri,
                                        std::vector<NeutralProbe>* neutral = nullptr) {
    auto probes = build_probes(cfg, tri, neutral);
    if (probes.empty()) throw Error(ErrorCode::Configuration, "the probe list is empty");
    return probes;
}

double max_deviation(const OrbitSeries& a, const OrbitSeries& b) {
    double d = 0.0;
    for (int k = 0; k < a.size(); ++k) d = std::max(d, a.norm_tag(a.states[k] - b.states[k]));
    return d;
}

std::vector<InputSignal> random_signals(const RunConfig& cfg, const PerturbationTriple& tri) {
    const Grid g = Grid::over(0.0, cfg.horizon, cfg.step);
    const auto layout = tri.signal_layout();
    std::mt19937 rng(cfg.seed + 1);
    std::normal_distribution<double> nd;
    std::vector<InputSignal> out;
    for (int s = 0; s < cfg.admissibility.signals; ++s) {
        Matrix v = Matrix::Zero(layout.dim(), g.size());
        for (int k = 1; k < g.size(); ++k)
            for (int i = 0; i < layout.dim(); ++i) v(i, k) = nd(rng);
        out.emplace_back(g, std::move(v), layout);
    }
    return out;
}

json simulate(const RunConfig& cfg, const fs::path& out) {
    const auto tri = build_triple(cfg);
    const bool is_neutral = cfg.system.kind == SystemConfig::Kind::Neutral;
    std::vector<NeutralProbe> np;
    const auto probes = require_probes(cfg, tri, is_neutral ? &np : nullptr);
    const Grid tg = Grid::over(0.0, cfg.horizon, cfg.step);
    json m = header_json("simulate", cfg);
    m["csv_row_stride"] = csv_stride(tg.size());
    json items = json::array();
    for (std::size_t i = 0; i < probes.size(); ++i) {
        json item = {{"index", i}};
        OrbitSeries orb;
        if (is_neutral) {
            const auto sys = build_neutral(cfg);
            const auto run = neutral_orbit(sys, np[i].y, np[i].f, tg, cfg.method);
            const auto oracle = method_of_steps(sys, np[i].y, np[i].f, tg);
            const std::string oname = "oracle_" + std::to_string(i) + ".csv";
            write_orbit_csv(out / oname, oracle.orbit);
            item["oracle_csv"] = oname;
            item["deviation"] = num(max_deviation(run.orbit, oracle.orbit));
            item["compatible"] = run.compatible;
            item["initial_residual"] = num(run.initial_residual);
            if (!run.warning.empty()) item["warning"] = run.warning;
            orb = run.orbit;
        } else {
            const auto run = perturbed_run(tri, probes[i], tg, cfg.method);
            item["neumann_terms"] = run.neumann_terms;
            orb = run.orbit;
        }
        const std::string name = (is_neutral ? "formula_" : "orbit_") + std::to_string(i) + ".csv";
        write_orbit_csv(out / name, orb);
        item["csv"] = name;
        item["initial_norm"] = num(orb.norms.front());
        item["final_norm"] = num(orb.norms.back());
        item["max_norm"] = num(*std::max_element(orb.norms.begin(), orb.norms.end()));
        item["dropped_mass"] = num(orb.dropped_mass);
        items.push_back(item);
    }
    m["probes"] = items;
    m["status"] = "ok";
    write_json(out / "manifest.json", m);
    return m;
}

json admissibility(const RunConfig& cfg, const fs::path& out) {
    const auto tri = build_triple(cfg);
    const auto probes = require_probes(cfg, tri);
    const auto signals = random_signals(cfg, tri);
    const auto rep = estimate_constants(tri, probes, signals, cfg.horizon, EstimateOptions{0.05, cfg.seed});
    json r = header_json("admissibility", cfg);
    json c = {{"M_B_est", num(rep.M_B_est)},
              {"M_C_est", num(rep.M_C_est)},
              {"M_BC_est", num(rep.M_BC_est)},
              {"io_norm_est", num(rep.io_norm_est)},
              {"sup_inv_obs_est", num(rep.sup_inv_obs_est)},
              {"sup_inv_obs_doubled", num(rep.sup_inv_obs_doubled)},
              {"perturbed_contraction_est", num(rep.perturbed_contraction_est)},
              {"probe_count", rep.probe_count},
              {"signal_count", rep.signal_count},
              {"time_samples", rep.time_samples}};
    if (rep.q_est) c["q_est"] = num(*rep.q_est);
    json verdicts = json::object();
    for (const auto& [k, v] : rep.verdicts) verdicts[k] = verdict_json(v);
    c["verdicts"] = verdicts;
    r["constants"] = c;
    if (cfg.admissibility.q_threshold) {
        const auto mv = check_miyadera_voigt(tri, probes, cfg.horizon, *cfg.admissibility.q_threshold, cfg.step);
        r["miyadera_voigt"] = {{"ratio", num(mv.ratio)}, {"verdict", verdict_json(mv.verdict)}};
    }
    if (cfg.admissibility.ds_omega) {
        DeschSchappacherOptions o;
        o.step = cfg.step;
        o.horizon = cfg.horizon;
        o.max_terms = cfg.admissibility.ds_terms;
        const auto ds = check_desch_schappacher(tri, probes, *cfg.admissibility.ds_omega, cfg.admissibility.ds_m, o);
        json traces = json::array();
        for (const auto& t : ds.probes)
            traces.push_back({{"terms", t.terms}, {"bounds", t.bounds}, {"total_bound", num(t.total_bound)}, {"margin", num(t.margin)}});
        r["desch_schappacher"] = {{"verdict", verdict_json(ds.verdict)},
                                  {"rho", num(ds.rho)},
                                  {"B_norm", num(ds.B_norm)},
                                  {"M_est", num(ds.M_est)},
                                  {"omega", num(ds.omega)},
                                  {"m", num(ds.m)},
                                  {"measured_rate", num(ds.measured_rate)},
                                  {"r_squared", num(ds.r_squared)},
                                  {"terms_dominated", ds.terms_dominated},
                                  {"total_dominated", ds.total_dominated},
                                  {"tightest_margin", num(ds.tightest_margin)},
                                  {"warnings", ds.warnings},
                                  {"probes", traces}};
    }
    if (cfg.system.kind == SystemConfig::Kind::Neutral) {
        const auto ob = check_observation_bound(build_neutral(cfg), probes, cfg.horizon);
        json items = json::array();
        for (const auto& p : ob.probes)
            items.push_back({{"measured", num(p.measured)}, {"bound", num(p.bound)}, {"margin", num(p.margin)}});
        r["observation_bound"] = {{"M", num(ob.M)},
                                  {"worst_ratio", num(ob.worst_ratio)},
                                  {"min_margin", num(ob.min_margin)},
                                  {"violations", ob.violations},
                                  {"probes", items}};
    }
    r["status"] = "ok";
    write_json(out / "admissibility.json", r);
    return r;
}

json asymptotics(const RunConfig& cfg, const fs::path& out) {
    const auto tri = build_triple(cfg);
    const auto probes = require_probes(cfg, tri);
    const Grid tg = Grid::over(0.0, cfg.horizon, cfg.step);
    RobustnessConfig rc{tg, cfg.method, cfg.asymptotics.checker, cfg.asymptotics.inconclusive_counts_against};
    json r = header_json("asymptotics", cfg);
    json props = json::object();
    for (auto p : cfg.asymptotics.properties) {
        const auto rep = robustness_experiment(tri, p, probes, rc);
        json items = json::array();
        for (const auto& pr : rep.probes)
            items.push_back({{"base", asymptotic_json(pr.base)},
                             {"perturbed", asymptotic_json(pr.perturbed)},
                             {"consistent", pr.consistent}});
        props[to_string(p)] = {{"robust", rep.robust},
                               {"hypothesis_met", rep.hypothesis_met},
                               {"base_pass", rep.base_pass},
                               {"perturbed_pass", rep.perturbed_pass},
                               {"probes", items}};
    }
    r["properties"] = props;

    json plots = json::array();
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto base = orbit(tri.base, probes[i], tg);
        const auto pert = perturbed_orbit(tri, probes[i], tg, cfg.method);
        const auto cb = cesaro_residual_track(base), cp = cesaro_residual_track(pert);
        const std::string name = "plot_" + std::to_string(i) + ".csv";
        CsvWriter w(out / name, {"t", "base_norm", "perturbed_norm", "base_cesaro_residual", "perturbed_cesaro_residual"});
        for (int k : csv_rows(tg.size())) w.row({tg.point(k), base.norms[k], pert.norms[k], cb[k], cp[k]});
        plots.push_back(name);
    }
    r["plots"] = plots;
    r["csv_row_stride"] = csv_stride(tg.size());
    r["status"] = "ok";
    write_json(out / "asymptotics.json", r);
    return r;
}

json neutral_compare(const RunConfig& cfg, const fs::path& out) {
    const auto sys = build_neutral(cfg);
    const auto tri = build_perturbation(sys);
    std::vector<NeutralProbe> np;
    require_probes(cfg, tri, &np);
    const Grid tg = Grid::over(0.0, cfg.horizon, cfg.step);

    RunConfig fine = cfg;
    fine.step = cfg.step / 2;
    const auto fine_sys = build_neutral(fine);
    const auto fine_tri = build_perturbation(fine_sys);
    std::vector<NeutralProbe> fine_np;
    build_probes(fine, fine_tri, &fine_np);
    const Grid fine_tg = Grid::over(0.0, cfg.horizon, fine.step);

    json r = header_json("neutral-compare", cfg);
    json items = json::array();
    for (std::size_t i = 0; i < np.size(); ++i) {
        const auto run = neutral_orbit(sys, np[i].y, np[i].f, tg, cfg.method);
        const auto oracle = method_of_steps(sys, np[i].y, np[i].f, tg);
        const double dev = max_deviation(run.orbit, oracle.orbit);
        const auto run2 = neutral_orbit(fine_sys, fine_np[i].y, fine_np[i].f, fine_tg, cfg.method);
        const auto oracle2 = method_of_steps(fine_sys, fine_np[i].y, fine_np[i].f, fine_tg);
        const double dev2 = max_deviation(run2.orbit, oracle2.orbit);
        const std::string a = "formula_" + std::to_string(i) + ".csv", b = "oracle_" + std::to_string(i) + ".csv";
        write_orbit_csv(out / a, run.orbit);
        write_orbit_csv(out / b, oracle.orbit);
        double max_res = 0.0;
        for (double x : run.residuals) max_res = std::max(max_res, x);
        items.push_back({{"index", i},
                         {"formula_csv", a},
                         {"oracle_csv", b},
                         {"deviation", num(dev)},
                         {"deviation_half_step", num(dev2)},
                         {"halving_ratio", num(dev2 > 0.0 ? dev / dev2 : INFINITY)},
                         {"compatible", run.compatible},
                         {"initial_residual", num(run.initial_residual)},
                         {"max_residual", num(max_res)},
                         {"oracle_sweeps", oracle.max_sweeps}});
    }
    r["probes"] = items;
    r["csv_row_stride"] = csv_stride(tg.size());
    r["status"] = "ok";
    write_json(out / "compare.json", r);
    return r;
}

bool is_numerical(ErrorCode c) {
    return c == ErrorCode::NoConvergence || c == ErrorCode::ContractionViolation || c == ErrorCode::Precondition;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg, const fs::path& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    try {
        fs::create_directories(out);
        if (command == "simulate") simulate(cfg, out);
        else if (command == "admissibility") admissibility(cfg, out);
        else if (command == "asymptotics") asymptotics(cfg, out);
        else if (command == "neutral-compare") neutral_compare(cfg, out);
        else throw Error(ErrorCode::Configuration, "unknown command '" + command + "'");
    } catch (const Error& e) {
        err << "semipert " << command << ": " << e.what() << "\n";
        if (!is_numerical(e.code())) return kValidationFailure;
        json m = header_json(command, cfg);
        m["status"] = "failed";
        m["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
        m["note"] = "artifacts in this directory may be partial";
        write_json(out / "failure.json", m);
        return kNumericalFailure;
    } catch (const fs::filesystem_error& e) {
        err << "semipert " << command << ": " << e.what() << "\n";
        return kValidationFailure;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(out / "timing.json", {{"command", command}, {"elapsed_seconds", secs}});
    return kSuccess;
}

int main_entry(int argc, char** argv, std::ostream& err) {
    CLI::App app{"Simulation and verification of boundary-perturbed semigroups"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    Overrides ov;
    unsigned seed = 0;
    double horizon = 0.0, step = 0.0;
    std::string method;
    std::vector<CLI::App*> subs;
    for (const char* name : {"simulate", "admissibility", "asymptotics", "neutral-compare"}) {
        auto* s = app.add_subcommand(name);
        s->add_option("--config", config_path, "JSON run configuration")->required();
        s->add_option("--out", out_dir, "output directory");
        s->add_option("--seed", seed, "probe seed (default 42 or the config's)");
        s->add_option("--horizon", horizon, "time horizon");
        s->add_option("--step", step, "time step");
        s->add_option("--method", method, "inversion method")->check(CLI::IsMember({"neumann", "direct"}));
        subs.push_back(s);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, std::cout, err);
        return code == 0 ? kSuccess : kValidationFailure;
    }
    std::string command;
    for (auto* s : subs)
        if (s->parsed()) {
            command = s->get_name();
            if (s->count("--seed")) ov.seed = seed;
            if (s->count("--horizon")) ov.horizon = horizon;
            if (s->count("--step")) ov.step = step;
            if (s->count("--method")) ov.method = method;
        }
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        apply_overrides(cfg, ov);
    } catch (const Error& e) {
        err << "semipert " << command << ": " << e.what() << "\n";
        return kValidationFailure;
    }
    return run_command(command, cfg, out_dir, err);
}

}  // namespace semipert::cli
