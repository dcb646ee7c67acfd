#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fpdecay/decay_fit.hpp"
#include "fpdecay/linalg.hpp"
#include "fpdecay/mixture.hpp"
#include "fpdecay/propagation.hpp"
#include "fpdecay/quadrature.hpp"
#include "fpdecay/spectral.hpp"

namespace fpdecay {

/// Invalid configuration; `path()` names the offending field, e.g.
/// "initial.components[1].cov".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class ScenarioKind { Validate, Decay, Subspace, Hyper, Fisher };

const char* to_string(ScenarioKind k);
ScenarioKind parse_kind(const std::string& s);

struct HermiteEntry {
  MultiIndex alpha;
  double value = 0.0;
};

struct SdeConfig {
  std::size_t paths = 100000;
  double dt = 1e-3;
  std::vector<double> times;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Decay;
  Matrix d;
  Matrix c;
  /// Mixture in the original coordinates.
  std::optional<GaussianMixture> mixture;
  /// Hermite coefficients in normalized coordinates; `hermite_mass` is the
  /// level-0 coefficient.
  std::vector<HermiteEntry> hermite;
  double hermite_mass = 1.0;
  double t_max = 15.0;
  int t_steps = 301;
  double p = 2.0;
  std::optional<std::pair<double, double>> fit_window;
  /// Tolerances for the rate / polynomial-order flags (defaults depend on kind).
  std::optional<double> rate_tol;
  std::optional<double> poly_tol;
  QuadratureSpec quad;
  bool quad_given = false;
  std::uint64_t seed = 1;
  /// Fisher weight in normalized coordinates: "D", "I" or an explicit matrix.
  std::variant<std::string, Matrix> fisher_p = std::string("D");
  std::optional<SdeConfig> sde;
};

/// Parses the JSON config text. Throws ConfigError with a field path.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

struct SeriesRow {
  double t = 0.0;
  double e2 = 0.0;
  double ep = 0.0;
  double fisher = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
};

struct DecayReport {
  ScenarioKind kind = ScenarioKind::Decay;
  std::vector<SeriesRow> series;
  double mu = 0.0;
  int n = 0;
  /// Envelope shape (1 + t^{2n}) e^{-2 mu t} in `series.envelope`; its
  /// empirical constant is the max of `series.ratio`.
  double c_fit = 0.0;
  std::optional<DecayFit> fit;
  std::vector<std::pair<std::string, bool>> flags;
  bool pass = false;
  /// Full structured report (JSON, stable key order).
  std::string report_text;
};

/// Exit codes used by the CLI.
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitInvalidSystem = 3 };

struct ScenarioResult {
  DecayReport report;
  std::string csv;
  int exit_code = kExitFail;
};

/// Runs one scenario. Deterministic for a fixed config (including seed).
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Header `t,e2,ep,fisher,envelope,ratio`, values with 17 significant digits.
std::string series_csv(const std::vector<SeriesRow>& rows);

/// Writes <dir>/<kind>.csv and <dir>/<kind>_report.json; returns the two paths.
std::pair<std::string, std::string> write_outputs(const ScenarioResult& result,
                                                  const std::string& dir);

}  // namespace fpdecay
