#pragma once

// Scenario files (JSON) and transcript serialization.

#include <filesystem>
#include <string>
#include <string_view>

#include "soap/simnet.hpp"

namespace soap::sim {

/// Parses and validates a scenario document. Errors carry a location: either
/// line:column for syntax errors or a field path such as `stations[1].mac`.
ScenarioScript parse_scenario(std::string_view text);
ScenarioScript load_scenario(const std::filesystem::path& path);

/// Canonical JSON form of a script; parsing it back and re-serializing yields
/// the same text.
std::string scenario_to_json(const ScenarioScript& script);

struct TranscriptFormat {
  /// Include every frame's octets (hex string in JSON, hex dump in text).
  bool hex = false;
};

/// `report` may be null when expectations were not evaluated.
std::string transcript_to_json(const Transcript& transcript, const ExpectationReport* report,
                               TranscriptFormat format = {});
std::string transcript_to_text(const Transcript& transcript, const ExpectationReport* report,
                               TranscriptFormat format = {});

}  // namespace soap::sim
