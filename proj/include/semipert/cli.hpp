#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "semipert/asymptotics.hpp"
#include "semipert/maps.hpp"
#include "semipert/measure.hpp"
#include "semipert/neutral.hpp"

namespace semipert::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode { kSuccess = 0, kNumericalFailure = 1, kValidationFailure = 2 };

/// Initial function for translation and neutral systems:
/// f(s) = sum_i poly[i] s^i + cos_amp cos(cos_freq s + cos_phase), same in every coordinate.
struct FunctionProbe {
    std::vector<double> poly;
    double cos_amp = 0.0, cos_freq = 0.0, cos_phase = 0.0;
    Vector y;  ///< neutral: first component

    double operator()(double s) const;
};

struct SystemConfig {
    enum class Kind { Matrix, Translation, Neutral };
    Kind kind = Kind::Matrix;
    ValueNorm norm = ValueNorm::Sup;
    // matrix
    Matrix A, B, C;
    ControlSpec::Kind control = ControlSpec::Kind::Bounded;
    // translation
    std::complex<double> lambda{1.0, 0.0};
    double length = 10.0;
    MeasureSpec measure;
    // neutral (A, C above)
    MeasureSpec p_kernel, k_kernel;
    double alpha = 1.0;
};

struct ProbeConfig {
    std::vector<Vector> vectors;
    int random = 0;
    std::vector<FunctionProbe> functions;
    bool compatible = true;  ///< neutral: correct histories to satisfy the boundary relation
};

struct AdmissibilityConfig {
    int signals = 8;
    std::optional<double> q_threshold;  ///< Miyadera-Voigt check
    std::optional<double> ds_omega;     ///< Desch-Schappacher check
    double ds_m = 1.0;
    int ds_terms = 20;
};

struct AsymptoticsConfig {
    std::vector<Property> properties;
    CheckerConfig checker;
    bool inconclusive_counts_against = true;
};

struct RunConfig {
    std::string name;
    SystemConfig system;
    double horizon = 10.0;
    double step = 1e-2;
    InversionMethod method = InversionMethod::direct();
    unsigned seed = 42;
    ProbeConfig probes;
    AdmissibilityConfig admissibility;
    AsymptoticsConfig asymptotics;
    nlohmann::json source;  ///< config as read, echoed into manifests
};

/// Parses and validates a config document; unknown keys are rejected with a Configuration error.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

struct Overrides {
    std::optional<unsigned> seed;
    std::optional<double> horizon;
    std::optional<double> step;
    std::optional<std::string> method;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);

/// Perturbation triple of the configured system (neutral systems via build_perturbation).
PerturbationTriple build_triple(const RunConfig& cfg);
NeutralSystem build_neutral(const RunConfig& cfg);

struct NeutralProbe {
    Vector y;
    HistorySegment f;
};

/// Probes on the state space of the triple; for neutral systems also the point-value data.
std::vector<StateVector> build_probes(const RunConfig& cfg, const PerturbationTriple& triple,
                                      std::vector<NeutralProbe>* neutral = nullptr);

/// Runs one subcommand; artifacts go to `out`, diagnostics to `err`.
int run_command(const std::string& command, const RunConfig& cfg, const std::filesystem::path& out,
                std::ostream& err);

/// Full entry point used by the executable: parses argv, loads the config and maps errors to exit codes.
int main_entry(int argc, char** argv, std::ostream& err);

}  // namespace semipert::cli
