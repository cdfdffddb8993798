// Batch verification harness: named check suites over every identity the
// library implements, run at randomly sampled guarded-generic parameters and
// collected into a machine-readable report.
//
// Each check draws its own parameters from a seed derived off the configured
// master seed and the check name, so reports are reproducible per
// configuration and independent of execution order. The JSON encoding is
// byte-identical across runs with equal configuration; wall-clock time is
// reported only in the text rendering for that reason.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ellqg {

// Knobs shared by all suites. tol = 0 keeps the per-check defaults (theta
// kernel checks 1e-10, direct single-formula identities 1e-9, composed
// multi-operator identities 1e-7); a positive value overrides every check.
struct SuiteConfig {
  std::string suite = "all";
  int n = 3;       // evaluation points; capped at 8
  int k_max = 3;   // subset-size sweep limit; capped at 4
  int trials = 20; // sampled points per check where the check loops
  std::uint64_t seed = 1;
  double tol = 0.0;
  double guard = 1e-3;  // minimum distance to resonance loci when sampling
};

// One verified identity: the measured deviation, the tolerance it was held
// to, and enough provenance (seed, digest of the sampled parameters) to
// replay it in isolation.
struct CheckRecord {
  std::string suite;
  std::string name;
  std::string statement;  // the identity in plain words
  double deviation = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  std::string params_digest;  // hex fold of every sampled parameter
};

struct SuiteReport {
  std::string suite;
  SuiteConfig config;
  std::vector<CheckRecord> checks;
  bool pass = false;      // conjunction over checks
  double wall_ms = 0.0;   // excluded from the JSON encoding
};

// Known suite names in report order: theta, ybe, shuffle, weightfn,
// orthogonality, envelope, gz, rll, consistency. "all" concatenates them.
const std::vector<std::string>& suite_names();

// Runs the configured suite. Throws std::invalid_argument for an unknown
// suite name or a configuration beyond the caps (n > 8, k_max > 4, trials
// < 1), and std::runtime_error if some check cannot find usable generic
// parameters after repeated resampling.
SuiteReport run_suite(const SuiteConfig& cfg);

// format is "json" (schema "ellqg-report/1") or "text" (one line per check
// plus a summary footer). Anything else throws std::invalid_argument.
std::string emit_report(const SuiteReport& report, const std::string& format);

}  // namespace ellqg
