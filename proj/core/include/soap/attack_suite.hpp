#pragma once

// One simulation per threat, each judged against the verdict marks of the
// protocol's threat table: secure, vulnerable, or defeated by a mitigation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "soap/simnet.hpp"

namespace soap::attack {

enum class Mark {
  kSecure,      // the attack fails with no extra mechanism
  kVulnerable,  // the attack succeeds (mitigations off)
  kSolution,    // the attack fails once the named mitigation is on
};
std::string_view to_string(Mark mark);
/// ✓, ✗ or s.
std::string_view symbol(Mark mark);

struct SuiteOptions {
  std::uint64_t seed = 0;
  bool blacklist = true;
  bool mgmt_signing = true;
  /// Applied to every scenario; used for mutation testing.
  sim::DebugFlags debug;
  /// Loads `<name>.json` from here instead of the built-in scenarios.
  std::optional<std::filesystem::path> scenario_dir;
};

struct CaseResult {
  std::string threat;
  std::string scenario;
  Mark expected = Mark::kSecure;
  /// Observed mark; absent when the case was skipped.
  std::optional<Mark> observed;
  bool matches = false;
  std::string evidence;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  std::vector<CaseResult> cases;
  bool all_match = true;
};

/// The built-in scenario for every case, in report order. Mitigation cases
/// are included regardless of the options.
std::vector<sim::ScenarioScript> suite_scenarios();

SuiteReport run_attack_suite(const SuiteOptions& options);

std::string to_text(const SuiteReport& report);
std::string to_json(const SuiteReport& report);

}  // namespace soap::attack
