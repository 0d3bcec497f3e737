#pragma once

// Deterministic discrete-event Wi-Fi medium. Stations run the SOAP and 4-Way
// state machines over a shared broadcast channel; an optional adversary
// eavesdrops, replays, injects, masquerades, substitutes or deletes frames.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soap/bytes.hpp"
#include "soap/crypto.hpp"
#include "soap/frames.hpp"
#include "soap/identity.hpp"

namespace soap::sim {

struct StationSpec {
  std::string name;
  Role role = Role::kClient;
  MacAddress mac;
  std::string ssid;
  std::vector<crypto::GroupId> groups{crypto::kGroupP224};
  crypto::GroupId ecdsa_group = crypto::kGroupP224;
  /// Understands the SOAP IE and SOAP Messages.
  bool soap_aware = true;
  /// SOAP-aware but scripted to use WPA-PSK.
  bool force_legacy = false;
  /// Out-of-band PMK for WPA-PSK associations.
  std::optional<crypto::SharedPsk> legacy_pmk;
  // Access point only.
  std::uint64_t beacon_interval = 100;
  std::uint64_t beacon_start = 0;
  // Client only.
  std::uint64_t start_tick = 0;
  /// Watchdog for one connection attempt, from scan start to Established.
  std::uint64_t attempt_timeout = 600;
  int max_attempts = 5;
};

enum class Capability {
  kEavesdrop,
  kReplay,
  kInject,
  kMasquerade,
  kMitmSubstitute,
  kDisassocInject,
  kDeleteIntercept,
};
std::string_view to_string(Capability capability);
std::optional<Capability> capability_from_string(std::string_view name);

struct AdversarySpec {
  std::set<Capability> capabilities;
  MacAddress mac{{0x02, 0xad, 0x00, 0x00, 0x00, 0x01}};
  crypto::GroupId ecdsa_group = crypto::kGroupP224;
  /// Station name of the AP being impersonated; defaults to the first AP.
  std::string target_ap;
  /// Capabilities that emit frames on their own stay dormant until this tick.
  std::uint64_t active_from = 0;
  /// Period of forged beacons (Inject) and rogue beacons (Masquerade).
  std::uint64_t inject_interval = 10;
  /// Per-frame loss probability for DeleteIntercept.
  double drop_probability = 0.0;
  /// Inject a spoofed disassociation whenever an Association Request is heard.
  bool disassoc_on_assoc = false;
};

struct MitigationConfig {
  /// Verification failures from one (address, key) binding before it is
  /// blacklisted; absent disables blacklisting.
  std::optional<unsigned> blacklist_threshold;
  bool sign_management_frames = false;
};

enum class ScheduledAction { kDisassoc, kReplay, kReconnect };
std::string_view to_string(ScheduledAction action);

struct ScheduleEntry {
  std::uint64_t tick = 0;
  ScheduledAction action = ScheduledAction::kReconnect;
  /// Target client for kReconnect and kDisassoc; defaults to the first client.
  std::string station;
};

struct Expectations {
  std::map<std::string, std::string> verdicts;
  /// Client name to the name of the AP it ends up connected to, or
  /// "adversary".
  std::map<std::string, std::string> peer;
  std::optional<bool> psk_secret;
  std::optional<bool> distinct_psks;
  std::map<std::string, unsigned> min_established_sessions;
  /// Station name to discard reason to minimum count.
  std::map<std::string, std::map<std::string, unsigned>> min_discards;
  std::map<std::string, unsigned> min_blocked;
  std::optional<unsigned> soap_frames;
};

struct DebugFlags {
  /// Places each session's PMK in 4-Way message 1 (detector self-test).
  bool leak_psk = false;
  /// Disables ECDSA verification in every station (mutation testing).
  bool skip_signature_check = false;
};

struct ScenarioScript {
  std::string name;
  bool strict = false;
  std::uint64_t max_ticks = 5000;
  std::vector<StationSpec> stations;
  std::optional<AdversarySpec> adversary;
  MitigationConfig mitigations;
  std::vector<ScheduleEntry> schedule;
  Expectations expect;
  DebugFlags debug;

  [[nodiscard]] const StationSpec* find(std::string_view station_name) const;
};

// ---------------------------------------------------------------------------
// Mitigations

/// Blacklist of (address, x-only ECDSA key) bindings that failed
/// verification repeatedly. A spoofed address with a forged key does not
/// block the genuine station behind the same address.
class MitigationState {
 public:
  using Binding = std::pair<MacAddress, Bytes>;

  [[nodiscard]] bool blocked(const MacAddress& mac, ByteView key) const;
  /// Counts one failure; returns true when the binding has just been
  /// blacklisted.
  bool record_failure(const MitigationConfig& config, const MacAddress& mac, ByteView key);
  void record_success(const MacAddress& mac, ByteView key);
  [[nodiscard]] unsigned failures(const MacAddress& mac, ByteView key) const;

 private:
  std::map<Binding, unsigned> failures_;
  std::set<Binding> blacklist_;
};

enum class Gate { kPass, kBlacklisted, kBadSignature, kPinnedKeyMismatch };
std::string_view to_string(Gate gate);

/// Admission check for an inbound management frame. `advertised_key` is the
/// x-only key in the frame's SOAP IE, if any; `known_peer_key` is the key
/// already associated with the sender, if any.
Gate apply_mitigations(const MitigationConfig& config, const MitigationState& state, const frames::ManagementFrame& frame,
                       const std::optional<Bytes>& advertised_key, const std::optional<crypto::CurvePoint>& known_peer_key);

/// Appends a signature element over the frame; no-op for unsigned operation.
void sign_management_frame(frames::ManagementFrame& frame, const crypto::EcdsaKeyPair& key);
bool management_signature_valid(const frames::ManagementFrame& frame, const crypto::CurvePoint& key);

// ---------------------------------------------------------------------------
// Transcript

struct Record {
  std::uint64_t tick = 0;
  /// frame, state, discard, blocked, drop, session, note.
  std::string type;
  std::string station;
  std::string detail;
  /// Frame records only.
  Bytes frame;
  bool injected = false;
};

struct SessionRecord {
  std::string station;
  std::string peer;
  bool peer_is_adversary = false;
  bool soap = false;
  crypto::GroupId group = 0;
  crypto::SharedPsk psk;
  bool established = false;
  std::uint64_t tick = 0;
};

struct StationOutcome {
  std::string verdict;
  std::string peer;
  unsigned established_sessions = 0;
  std::map<std::string, unsigned> discards;
  unsigned blocked = 0;
};

struct Transcript {
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint64_t final_tick = 0;
  std::vector<Record> records;
  /// Kept in memory for the leak detector; never serialized.
  std::vector<SessionRecord> sessions;
  /// Shared secrets the adversary can compute from its own keys and every
  /// public key it observed; never serialized.
  std::vector<crypto::SharedPsk> adversary_secrets;
  std::map<std::string, StationOutcome> outcomes;

  [[nodiscard]] std::vector<const Record*> frames() const;
};

struct EavesdropperView {
  std::size_t frames_captured = 0;
  /// Occurrences of legitimate session PSKs inside captured frames.
  std::size_t psk_occurrences = 0;
  /// Whether any legitimate session PSK is among the adversary's secrets.
  bool adversary_can_derive = false;
};

EavesdropperView eavesdropper_view(const Transcript& transcript);

struct ExpectationReport {
  bool all_met = true;
  std::vector<std::string> failures;
};

ExpectationReport check_expectations(const ScenarioScript& script, const Transcript& transcript);

/// Validates the script; throws ScriptError on inconsistencies.
void validate(const ScenarioScript& script);

struct ScriptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Transcript run_scenario(const ScenarioScript& script, std::uint64_t seed);

}  // namespace soap::sim
