#include "soap/simnet.hpp"

#include <algorithm>
#include <queue>
#include <tuple>

#include "soap/fourway.hpp"
#include "soap/negotiation.hpp"
#include "soap/soap_handshake.hpp"

namespace soap::sim {

std::string_view to_string(Capability capability) {
  switch (capability) {
    case Capability::kEavesdrop: return "eavesdrop";
    case Capability::kReplay: return "replay";
    case Capability::kInject: return "inject";
    case Capability::kMasquerade: return "masquerade";
    case Capability::kMitmSubstitute: return "mitm-substitute";
    case Capability::kDisassocInject: return "disassoc-inject";
    case Capability::kDeleteIntercept: return "delete-intercept";
  }
  return "?";
}

std::optional<Capability> capability_from_string(std::string_view name) {
  for (auto c : {Capability::kEavesdrop, Capability::kReplay, Capability::kInject, Capability::kMasquerade,
                 Capability::kMitmSubstitute, Capability::kDisassocInject, Capability::kDeleteIntercept}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(ScheduledAction action) {
  switch (action) {
    case ScheduledAction::kDisassoc: return "disassoc";
    case ScheduledAction::kReplay: return "replay";
    case ScheduledAction::kReconnect: return "reconnect";
  }
  return "?";
}

std::string_view to_string(Gate gate) {
  switch (gate) {
    case Gate::kPass: return "pass";
    case Gate::kBlacklisted: return "blacklisted";
    case Gate::kBadSignature: return "mgmt-signature-invalid";
    case Gate::kPinnedKeyMismatch: return "pinned-key-mismatch";
  }
  return "?";
}

const StationSpec* ScenarioScript::find(std::string_view station_name) const {
  for (const auto& s : stations) {
    if (s.name == station_name) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Mitigations

bool MitigationState::blocked(const MacAddress& mac, ByteView key) const {
  return blacklist_.contains({mac, Bytes(key.begin(), key.end())});
}

bool MitigationState::record_failure(const MitigationConfig& config, const MacAddress& mac, ByteView key) {
  Binding b{mac, Bytes(key.begin(), key.end())};
  auto count = ++failures_[b];
  if (!config.blacklist_threshold || blacklist_.contains(b)) return false;
  if (count >= *config.blacklist_threshold) {
    blacklist_.insert(std::move(b));
    return true;
  }
  return false;
}

void MitigationState::record_success(const MacAddress& mac, ByteView key) {
  failures_.erase({mac, Bytes(key.begin(), key.end())});
}

unsigned MitigationState::failures(const MacAddress& mac, ByteView key) const {
  auto it = failures_.find({mac, Bytes(key.begin(), key.end())});
  return it == failures_.end() ? 0 : it->second;
}

void sign_management_frame(frames::ManagementFrame& frame, const crypto::EcdsaKeyPair& key) {
  frame.signature.reset();
  auto input = frames::management_signing_input(frame);
  if (input) frame.signature = crypto::ecdsa_sign(key, *input);
}

bool management_signature_valid(const frames::ManagementFrame& frame, const crypto::CurvePoint& key) {
  if (!frame.signature) return false;
  auto input = frames::management_signing_input(frame);
  auto group = crypto::registry_lookup(key.group);
  if (!input || !group) return false;
  return crypto::ecdsa_verify(key, *group, *input, *frame.signature) == crypto::VerifyStatus::kAccept;
}

Gate apply_mitigations(const MitigationConfig& config, const MitigationState& state, const frames::ManagementFrame& frame,
                       const std::optional<Bytes>& advertised_key,
                       const std::optional<crypto::CurvePoint>& known_peer_key) {
  if (advertised_key && state.blocked(frame.source, *advertised_key)) return Gate::kBlacklisted;
  if (known_peer_key && known_peer_key->x != advertised_key.value_or(known_peer_key->x)) {
    return Gate::kPinnedKeyMismatch;
  }
  if (config.sign_management_frames && known_peer_key && !management_signature_valid(frame, *known_peer_key)) {
    return Gate::kBadSignature;
  }
  return Gate::kPass;
}

// ---------------------------------------------------------------------------

std::vector<const Record*> Transcript::frames() const {
  std::vector<const Record*> out;
  for (const auto& r : records) {
    if (r.type == "frame") out.push_back(&r);
  }
  return out;
}

EavesdropperView eavesdropper_view(const Transcript& transcript) {
  EavesdropperView view_out;
  auto captured = transcript.frames();
  view_out.frames_captured = captured.size();
  for (const auto& s : transcript.sessions) {
    if (s.peer_is_adversary) continue;
    for (const auto* f : captured) view_out.psk_occurrences += count_occurrences(f->frame, view(s.psk.bytes));
    if (std::find(transcript.adversary_secrets.begin(), transcript.adversary_secrets.end(), s.psk) !=
        transcript.adversary_secrets.end()) {
      view_out.adversary_can_derive = true;
    }
  }
  return view_out;
}

// ---------------------------------------------------------------------------
// Validation

void validate(const ScenarioScript& script) {
  if (script.stations.empty()) throw ScriptError("stations: at least one station is required");
  std::set<MacAddress> macs;
  std::set<std::string> names;
  bool have_ap = false;
  for (std::size_t i = 0; i < script.stations.size(); ++i) {
    const auto& s = script.stations[i];
    const auto where = "stations[" + std::to_string(i) + "]";
    if (s.name.empty() || s.name == "adversary") throw ScriptError(where + ".name: empty or reserved");
    if (!names.insert(s.name).second) throw ScriptError(where + ".name: duplicate '" + s.name + "'");
    if (!macs.insert(s.mac).second) throw ScriptError(where + ".mac: duplicate address");
    if (s.ssid.empty() || s.ssid.size() > 32) throw ScriptError(where + ".ssid: must be 1 to 32 octets");
    for (auto g : s.groups) {
      if (!crypto::registry_lookup(g)) throw ScriptError(where + ".groups: unknown group " + std::to_string(g));
    }
    if (!crypto::registry_lookup(s.ecdsa_group)) throw ScriptError(where + ".ecdsa_group: unknown group");
    if (s.max_attempts < 1) throw ScriptError(where + ".max_attempts: must be at least 1");
    if (s.role == Role::kAp) {
      have_ap = true;
      if (s.beacon_interval == 0) throw ScriptError(where + ".beacon_interval: must be positive");
    }
  }
  if (!have_ap) throw ScriptError("stations: at least one access point is required");
  if (script.mitigations.blacklist_threshold && *script.mitigations.blacklist_threshold < 1) {
    throw ScriptError("mitigations.blacklist_threshold: must be at least 1");
  }
  if (script.adversary) {
    const auto& a = *script.adversary;
    if (macs.contains(a.mac)) throw ScriptError("adversary.mac: collides with a station");
    if (!crypto::registry_lookup(a.ecdsa_group)) throw ScriptError("adversary.ecdsa_group: unknown group");
    if (!a.target_ap.empty()) {
      const auto* t = script.find(a.target_ap);
      if (!t || t->role != Role::kAp) throw ScriptError("adversary.target_ap: no such access point");
    }
    if (a.drop_probability < 0.0 || a.drop_probability > 1.0) {
      throw ScriptError("adversary.drop_probability: must lie in [0, 1]");
    }
    if (a.inject_interval == 0) throw ScriptError("adversary.inject_interval: must be positive");
  }
  for (std::size_t i = 0; i < script.schedule.size(); ++i) {
    const auto& e = script.schedule[i];
    const auto where = "schedule[" + std::to_string(i) + "]";
    if (!e.station.empty()) {
      const auto* s = script.find(e.station);
      if (!s || s->role != Role::kClient) throw ScriptError(where + ".station: no such client");
    }
    auto needs = [&](Capability c) {
      if (!script.adversary || !script.adversary->capabilities.contains(c)) {
        throw ScriptError(where + ".action: requires adversary capability " + std::string(to_string(c)));
      }
    };
    if (e.action == ScheduledAction::kDisassoc) needs(Capability::kDisassocInject);
    if (e.action == ScheduledAction::kReplay) needs(Capability::kReplay);
  }
  for (const auto& [name, _] : script.expect.verdicts) {
    if (!script.find(name)) throw ScriptError("expect.verdicts: unknown station '" + name + "'");
  }
}

// ---------------------------------------------------------------------------
// Engine

namespace {

using frames::ManagementFrame;
using frames::MgmtSubtype;

constexpr std::uint16_t kStatusSuccess = 0;
constexpr std::uint16_t kStatusRefused = 1;
constexpr std::uint16_t kReasonLeaving = 8;
const std::set<std::uint8_t> kLegacyElementIds = {frames::kSsidElementId, frames::kSupportedRatesElementId,
                                                 frames::kDsParameterElementId, frames::kTimElementId,
                                                 frames::kRsnElementId};
// Body of the RSN element advertised in beacons and association requests.
Bytes rsn_payload() {
  auto element = fourway::supplicant_rsn_element();
  return Bytes(element.begin() + 2, element.end());
}

enum class ClientPhase { kIdle, kScanning, kAssociating, kSoap, kFourWay, kEstablished, kDisconnected, kAborted, kFailed };

std::string_view label(ClientPhase p) {
  switch (p) {
    case ClientPhase::kIdle: return "idle";
    case ClientPhase::kScanning: return "scanning";
    case ClientPhase::kAssociating: return "associating";
    case ClientPhase::kSoap: return "soap-handshake";
    case ClientPhase::kFourWay: return "fourway";
    case ClientPhase::kEstablished: return "established";
    case ClientPhase::kDisconnected: return "disconnected";
    case ClientPhase::kAborted: return "aborted";
    case ClientPhase::kFailed: return "failed";
  }
  return "?";
}

bool settled(ClientPhase p) {
  return p == ClientPhase::kEstablished || p == ClientPhase::kDisconnected || p == ClientPhase::kAborted ||
         p == ClientPhase::kFailed;
}

enum class TimerKind { kClientStart, kClientWatchdog, kApSendMsg1, kApSendM1, kApSoapTimeout, kApFourwayTimeout };

enum class EventKind { kDeliver, kTimer, kAction, kBeacon, kAdversaryTick };

struct Event {
  std::uint64_t tick = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kDeliver;
  Bytes frame;
  int sender = -1;
  int station = -1;
  TimerKind timer = TimerKind::kClientStart;
  std::uint64_t generation = 0;
  MacAddress peer;
  std::size_t action = 0;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.tick, a.seq) > std::tie(b.tick, b.seq);
  }
};

// Events that can still change a station's state. Watchdogs only matter while
// a client is unsettled, which already keeps the loop running.
bool significant(const Event& ev) {
  if (ev.kind == EventKind::kTimer) return ev.timer != TimerKind::kClientWatchdog;
  return ev.kind == EventKind::kDeliver || ev.kind == EventKind::kAction;
}

struct ApSession {
  std::uint64_t generation = 0;
  std::string phase;
  bool soap = false;
  std::optional<handshake::ApHandshake> handshake;
  std::optional<fourway::Authenticator> authenticator;
  std::optional<crypto::CurvePoint> client_key;
  std::size_t session_index = 0;
};

struct Station {
  int index = 0;
  StationSpec spec;
  StationIdentity identity;
  RandomSource rng{0};
  bool rogue = false;
  handshake::ReplayCache cache;
  MitigationState mitigation;
  StationOutcome outcome;

  // Access point.
  std::map<MacAddress, ApSession> sessions;
  std::uint64_t session_counter = 0;

  // Client.
  ClientPhase phase = ClientPhase::kIdle;
  int attempts = 0;
  std::uint64_t generation = 0;
  std::optional<MacAddress> ap_mac;
  std::optional<crypto::CurvePoint> ap_key;
  bool soap_mode = false;
  std::optional<handshake::ClientHandshake> handshake;
  std::optional<fourway::Supplicant> supplicant;
  std::map<std::string, crypto::CurvePoint> pinned;
  std::optional<std::size_t> session_index;
};

struct Adversary {
  AdversarySpec spec;
  StationIdentity identity;
  RandomSource rng{0};
  RandomSource drop_rng{0};
  int target = -1;
  int rogue = -1;
  std::optional<ManagementFrame> target_beacon;
  std::map<MacAddress, std::size_t> ecdsa_sizes;
  std::map<MacAddress, crypto::GroupId> negotiated;
  /// SOAP frames from an AP, keyed by destination client.
  std::map<MacAddress, std::vector<Bytes>> captured_msg1;
  std::vector<Bytes> captured_eapol;
  std::vector<crypto::CurvePoint> observed_keys;
  std::vector<crypto::EcdhKeyPair> own_ecdh;

  [[nodiscard]] bool has(Capability c) const { return spec.capabilities.contains(c); }
};

class Engine {
 public:
  Engine(const ScenarioScript& script, std::uint64_t seed) : script_(script), seed_(seed) {
    RandomSource root(seed);
    for (std::size_t i = 0; i < script.stations.size(); ++i) {
      Station s;
      s.index = static_cast<int>(i);
      s.spec = script.stations[i];
      auto key_rng = root.fork(1000 + i);
      s.identity = StationIdentity{s.spec.mac, crypto::ecdsa_generate(*crypto::registry_lookup(s.spec.ecdsa_group), key_rng),
                                   s.spec.role};
      s.rng = root.fork(2000 + i);
      stations_.push_back(std::move(s));
    }
    if (script.adversary) {
      Adversary a;
      a.spec = *script.adversary;
      auto key_rng = root.fork(3001);
      a.identity = StationIdentity{a.spec.mac, crypto::ecdsa_generate(*crypto::registry_lookup(a.spec.ecdsa_group), key_rng),
                                   Role::kAp};
      a.rng = root.fork(3000);
      a.drop_rng = root.fork(3002);
      for (const auto& st : stations_) {
        if (st.spec.role == Role::kAp && (a.spec.target_ap.empty() || a.spec.target_ap == st.spec.name)) {
          a.target = st.index;
          break;
        }
      }
      for (const auto& g : crypto::registered_groups()) a.own_ecdh.push_back(crypto::ecdh_generate(g, a.rng));
      if (a.has(Capability::kMasquerade)) {
        const auto& target = stations_[a.target].spec;
        Station r;
        r.index = static_cast<int>(stations_.size());
        r.rogue = true;
        r.spec = target;
        r.spec.name = "adversary";
        r.spec.mac = a.spec.mac;
        r.spec.ecdsa_group = a.spec.ecdsa_group;
        r.spec.legacy_pmk.reset();
        r.spec.beacon_interval = a.spec.inject_interval;
        r.spec.beacon_start = a.spec.active_from;
        r.identity = StationIdentity{a.spec.mac, a.identity.ecdsa, Role::kAp};
        r.rng = root.fork(3003);
        a.rogue = r.index;
        stations_.push_back(std::move(r));
      }
      adversary_ = std::move(a);
    }
    handshake_config_.strict = script.strict;
    handshake_config_.verify_signatures = !script.debug.skip_signature_check;
    fourway_config_.leak_pmk_in_m1 = script.debug.leak_psk;
  }

  Transcript run() {
    transcript_.scenario = script_.name;
    transcript_.seed = seed_;
    for (auto& s : stations_) {
      if (s.spec.role == Role::kAp) {
        auto ev = make(s.spec.beacon_start, EventKind::kBeacon);
        ev.station = s.index;
        push(std::move(ev));
      } else {
        auto ev = make(s.spec.start_tick, EventKind::kTimer);
        ev.station = s.index;
        ev.timer = TimerKind::kClientStart;
        push(std::move(ev));
      }
    }
    for (std::size_t i = 0; i < script_.schedule.size(); ++i) {
      auto ev = make(script_.schedule[i].tick, EventKind::kAction);
      ev.action = i;
      push(std::move(ev));
    }
    if (adversary_ && adversary_->has(Capability::kInject)) {
      push(make(adversary_->spec.active_from, EventKind::kAdversaryTick));
    }

    while (!queue_.empty()) {
      auto ev = queue_.top();
      if (ev.tick > script_.max_ticks) break;
      queue_.pop();
      if (significant(ev)) --pending_;
      now_ = ev.tick;
      dispatch(ev);
      if (pending_ == 0 && all_clients_settled()) break;
    }
    finish();
    return std::move(transcript_);
  }

 private:
  // --- plumbing -------------------------------------------------------------

  static Event make(std::uint64_t tick, EventKind kind) {
    Event ev;
    ev.tick = tick;
    ev.kind = kind;
    return ev;
  }

  void push(Event ev) {
    ev.seq = seq_++;
    if (significant(ev)) ++pending_;
    queue_.push(std::move(ev));
  }

  void timer(int station, TimerKind kind, std::uint64_t delay, std::uint64_t generation, MacAddress peer = {}) {
    auto ev = make(now_ + delay, EventKind::kTimer);
    ev.station = station;
    ev.timer = kind;
    ev.generation = generation;
    ev.peer = peer;
    push(std::move(ev));
  }

  void log(std::string type, const std::string& station, std::string detail) {
    transcript_.records.push_back(Record{now_, std::move(type), station, std::move(detail), {}, false});
  }

  std::string name_of(int sender) const {
    if (sender < 0) return "adversary";
    return stations_[sender].spec.name;
  }

  static std::string describe(const Bytes& frame, int sender_role_ap) {
    auto any = frames::parse_frame(frame);
    if (!any) return "malformed";
    if (const auto* m = std::get_if<ManagementFrame>(&*any)) {
      switch (m->subtype) {
        case MgmtSubtype::kBeacon: return "beacon";
        case MgmtSubtype::kProbeResponse: return "probe-response";
        case MgmtSubtype::kAssociationRequest: return "assoc-request";
        case MgmtSubtype::kAssociationResponse: return "assoc-response";
        case MgmtSubtype::kDisassociation: return "disassoc";
      }
    }
    const auto& d = std::get<frames::DataFrame>(*any);
    if (frames::is_soap_eapol(d.eapol)) return sender_role_ap ? "soap-message-1" : "soap-message-2";
    auto key = frames::parse_eapol_key(d.eapol);
    if (key) return "eapol-key-" + std::to_string(fourway::message_number(*key));
    return "eapol";
  }

  bool sender_is_ap(int sender, const Bytes& frame) const {
    if (sender >= 0) return stations_[sender].spec.role == Role::kAp;
    // Adversary frames: classify by the spoofed source address.
    auto d = frames::parse_data_frame(frame);
    if (!d) return false;
    return std::any_of(stations_.begin(), stations_.end(),
                       [&](const Station& s) { return s.spec.role == Role::kAp && s.spec.mac == d->source; });
  }

  /// Puts a frame on the medium. Frames from legitimate stations may be
  /// intercepted by the adversary.
  void transmit(int sender, Bytes frame, bool injected) {
    const bool legit = sender >= 0 && !stations_[sender].rogue;
    const auto kind = describe(frame, sender_is_ap(sender, frame));
    if (legit && adversary_ && active(Capability::kMitmSubstitute) && kind.starts_with("soap-message")) {
      log("drop", name_of(sender), kind + " intercepted");
      observe(frame, sender, true);
      mitm_substitute(frame, sender);
      return;
    }
    Record rec{now_, "frame", name_of(sender), kind, frame, injected || !legit};
    transcript_.records.push_back(std::move(rec));
    if (legit && adversary_ && active(Capability::kDeleteIntercept) &&
        adversary_->drop_rng.uniform() < adversary_->spec.drop_probability) {
      log("drop", name_of(sender), kind + " deleted");
      observe(frame, sender, false);
      return;
    }
    auto ev = make(now_ + 1, EventKind::kDeliver);
    ev.frame = std::move(frame);
    ev.sender = sender;
    push(std::move(ev));
  }

  bool active(Capability c) const {
    return adversary_ && adversary_->has(c) && now_ >= adversary_->spec.active_from;
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::kDeliver:
        for (auto& s : stations_) {
          if (s.index == ev.sender) continue;
          if (s.spec.role == Role::kAp) {
            ap_receive(s, ev.frame);
          } else {
            client_receive(s, ev.frame);
          }
        }
        if (adversary_) observe(ev.frame, ev.sender, false);
        break;
      case EventKind::kBeacon: {
        auto& s = stations_[ev.station];
        transmit(s.index, build_beacon(s), false);
        auto next = make(now_ + s.spec.beacon_interval, EventKind::kBeacon);
        next.station = s.index;
        push(std::move(next));
        break;
      }
      case EventKind::kTimer:
        on_timer(ev);
        break;
      case EventKind::kAction:
        on_action(script_.schedule[ev.action]);
        break;
      case EventKind::kAdversaryTick:
        inject_forged_beacon();
        push(make(now_ + adversary_->spec.inject_interval, EventKind::kAdversaryTick));
        break;
    }
  }

  bool all_clients_settled() const {
    return std::all_of(stations_.begin(), stations_.end(),
                       [](const Station& s) { return s.spec.role == Role::kAp || settled(s.phase); });
  }

  // --- frame construction ---------------------------------------------------

  ManagementFrame mgmt(MgmtSubtype subtype, const MacAddress& dest, const MacAddress& source, const MacAddress& bssid) {
    ManagementFrame f;
    f.subtype = subtype;
    f.dest = dest;
    f.source = source;
    f.bssid = bssid;
    f.fixed_body = Bytes(frames::fixed_body_octets(subtype), 0);
    return f;
  }

  Bytes finish_mgmt(ManagementFrame f, const Station& s) {
    if (script_.mitigations.sign_management_frames && s.spec.soap_aware) sign_management_frame(f, s.identity.ecdsa);
    return *frames::encode_management_frame(f);
  }

  Bytes build_beacon(const Station& ap) {
    auto f = mgmt(MgmtSubtype::kBeacon, MacAddress::broadcast(), ap.spec.mac, ap.spec.mac);
    f.fixed_body[9] = 100;  // beacon interval, time units
    f.elements.push_back({frames::kSsidElementId, Bytes(ap.spec.ssid.begin(), ap.spec.ssid.end())});
    f.elements.push_back({frames::kSupportedRatesElementId, {0x82, 0x84, 0x8b, 0x96}});
    f.elements.push_back({frames::kDsParameterElementId, {6}});
    f.elements.push_back({frames::kTimElementId, {0, 1, 0, 0}});
    f.elements.push_back({frames::kRsnElementId, rsn_payload()});
    if (ap.spec.soap_aware) {
      auto ie = negotiation::build_ap_advertisement(ap.identity, negotiation::GroupSet(ap.spec.groups));
      auto encoded = *frames::encode_soap_ie(*ie);
      f.elements.push_back({frames::kSoapElementId, Bytes(encoded.begin() + 2, encoded.end())});
    }
    return finish_mgmt(std::move(f), ap);
  }

  Bytes data_frame(const MacAddress& dest, const MacAddress& source, const MacAddress& bssid, Bytes eapol) {
    return frames::encode_data_frame(frames::DataFrame{dest, source, bssid, std::move(eapol)});
  }

  // --- client ---------------------------------------------------------------

  void client_set_phase(Station& c, ClientPhase p, const std::string& why = {}) {
    if (c.phase == p) return;
    std::string detail = std::string(label(c.phase)) + " -> " + std::string(label(p));
    if (!why.empty()) detail += " (" + why + ")";
    log("state", c.spec.name, detail);
    c.phase = p;
  }

  void client_discard(Station& c, std::string_view reason, const std::string& what) {
    ++c.outcome.discards[std::string(reason)];
    log("discard", c.spec.name, std::string(reason) + " " + what);
  }

  void client_blocked(Station& c, Gate gate, const std::string& what) {
    ++c.outcome.blocked;
    log("blocked", c.spec.name, std::string(to_string(gate)) + " " + what);
  }

  void client_start_attempt(Station& c) {
    ++c.attempts;
    ++c.generation;
    c.ap_mac.reset();
    c.ap_key.reset();
    c.handshake.reset();
    c.supplicant.reset();
    c.session_index.reset();
    c.soap_mode = false;
    client_set_phase(c, ClientPhase::kScanning, "attempt " + std::to_string(c.attempts));
    timer(c.index, TimerKind::kClientWatchdog, c.spec.attempt_timeout, c.generation);
  }

  void client_end_attempt(Station& c, const std::string& reason) {
    const bool in_fourway = c.phase == ClientPhase::kFourWay;
    if (c.attempts < c.spec.max_attempts) {
      log("note", c.spec.name, "attempt " + std::to_string(c.attempts) + " ended: " + reason);
      client_start_attempt(c);
      return;
    }
    ++c.generation;
    c.handshake.reset();
    c.supplicant.reset();
    client_set_phase(c, in_fourway ? ClientPhase::kFailed : ClientPhase::kAborted, reason);
  }

  void client_receive(Station& c, const Bytes& bytes) {
    if (c.phase == ClientPhase::kIdle || (settled(c.phase) && c.phase != ClientPhase::kEstablished)) return;
    if (!c.spec.soap_aware) {
      legacy_client_receive(c, bytes);
      return;
    }
    auto any = frames::parse_frame(bytes);
    if (!any) return;
    if (auto* m = std::get_if<ManagementFrame>(&*any)) {
      if (m->dest != c.spec.mac && m->dest != MacAddress::broadcast()) return;
      switch (m->subtype) {
        case MgmtSubtype::kBeacon:
        case MgmtSubtype::kProbeResponse: client_on_beacon(c, *m); break;
        case MgmtSubtype::kAssociationResponse: client_on_assoc_response(c, *m); break;
        case MgmtSubtype::kDisassociation: client_on_disassoc(c, *m); break;
        default: break;
      }
      return;
    }
    const auto& d = std::get<frames::DataFrame>(*any);
    if (d.dest != c.spec.mac || !c.ap_mac || d.source != *c.ap_mac) return;
    client_on_eapol(c, d.eapol);
  }

  /// A station that predates SOAP: it only knows the legacy element ids and
  /// never looks at SOAP Messages.
  void legacy_client_receive(Station& c, const Bytes& bytes) {
    if (bytes.empty()) return;
    const auto type = (bytes[0] >> 2) & 0x3;
    if (type == 0) {
      auto scan = frames::extract_elements(bytes, kLegacyElementIds);
      auto m = frames::parse_management_frame(bytes);
      if (!scan || !m) {
        client_discard(c, "malformed", "management frame");
        return;
      }
      if (m->dest != c.spec.mac && m->dest != MacAddress::broadcast()) return;
      if (m->subtype == MgmtSubtype::kBeacon || m->subtype == MgmtSubtype::kProbeResponse) {
        if (c.phase != ClientPhase::kScanning) return;
        auto ssid = std::find_if(scan->recognized.begin(), scan->recognized.end(),
                                 [](const frames::Element& e) { return e.id == frames::kSsidElementId; });
        if (ssid == scan->recognized.end() || std::string(ssid->payload.begin(), ssid->payload.end()) != c.spec.ssid) {
          return;
        }
        client_associate(c, *m, std::nullopt);
      } else if (m->subtype == MgmtSubtype::kAssociationResponse) {
        client_on_assoc_response(c, *m);
      } else if (m->subtype == MgmtSubtype::kDisassociation) {
        client_on_disassoc(c, *m);
      }
      return;
    }
    auto d = frames::parse_data_frame(bytes);
    if (!d || d->dest != c.spec.mac || !c.ap_mac || d->source != *c.ap_mac) return;
    if (frames::is_soap_eapol(d->eapol)) {
      // Unknown EAPOL packet type: dropped as any legacy supplicant would.
      client_discard(c, "unexpected", "unknown eapol packet");
      return;
    }
    client_on_eapol(c, d->eapol);
  }

  void client_on_beacon(Station& c, const ManagementFrame& m) {
    if (c.phase != ClientPhase::kScanning) return;
    const auto* ssid = m.find(frames::kSsidElementId);
    if (!ssid || std::string(ssid->payload.begin(), ssid->payload.end()) != c.spec.ssid) return;

    std::optional<frames::SoapIe> ie;
    if (const auto* e = m.find(frames::kSoapElementId)) {
      auto parsed = frames::parse_soap_ie_payload(e->payload);
      if (!parsed) {
        client_discard(c, "malformed", "soap element");
        return;
      }
      ie = std::move(*parsed);
    }
    std::optional<crypto::CurvePoint> pinned;
    if (auto it = c.pinned.find(c.spec.ssid); it != c.pinned.end()) pinned = it->second;
    std::optional<Bytes> advertised;
    if (ie) advertised = ie->ecdsa_public_key;
    auto gate = apply_mitigations(script_.mitigations, c.mitigation, m, advertised, pinned);
    if (gate != Gate::kPass) {
      client_blocked(c, gate, "beacon from " + m.source.to_string());
      return;
    }
    client_associate(c, m, c.spec.force_legacy ? std::nullopt : ie);
  }

  void client_associate(Station& c, const ManagementFrame& beacon, const std::optional<frames::SoapIe>& ie) {
    std::optional<frames::SoapIe> response;
    if (ie) {
      c.handshake.emplace(c.identity, negotiation::GroupSet(c.spec.groups), handshake_config_, &c.cache);
      auto adv = c.handshake->on_advertisement(*ie, beacon.source);
      if (!adv) {
        client_discard(c, handshake::to_string(adv.error()), "soap element");
        c.handshake.reset();
        return;
      }
      c.ap_key = handshake::peer_key_from_ie(*ie);
      response = adv->response;
      if (!response) {
        log("note", c.spec.name, "no common group, falling back to WPA-PSK");
        c.handshake.reset();
      }
    }
    c.soap_mode = response.has_value();
    if (!c.soap_mode && !c.spec.legacy_pmk) {
      log("note", c.spec.name, "WPA-PSK needs a pre-shared key and none is configured");
      ++c.generation;
      client_set_phase(c, ClientPhase::kFailed, "no-legacy-psk");
      return;
    }
    c.ap_mac = beacon.source;
    auto f = mgmt(MgmtSubtype::kAssociationRequest, beacon.source, c.spec.mac, beacon.bssid);
    f.fixed_body[3] = 10;  // listen interval
    f.elements.push_back({frames::kSsidElementId, Bytes(c.spec.ssid.begin(), c.spec.ssid.end())});
    f.elements.push_back({frames::kSupportedRatesElementId, {0x82, 0x84, 0x8b, 0x96}});
    f.elements.push_back({frames::kRsnElementId, rsn_payload()});
    if (response) {
      auto encoded = *frames::encode_soap_ie(*response);
      f.elements.push_back({frames::kSoapElementId, Bytes(encoded.begin() + 2, encoded.end())});
    }
    client_set_phase(c, ClientPhase::kAssociating, c.soap_mode ? "soap" : "wpa-psk");
    transmit(c.index, finish_mgmt(std::move(f), c), false);
  }

  bool client_frame_admitted(Station& c, const ManagementFrame& m) {
    if (!c.ap_mac || m.source != *c.ap_mac) return false;
    if (script_.mitigations.sign_management_frames && c.ap_key && c.spec.soap_aware &&
        !management_signature_valid(m, *c.ap_key)) {
      client_blocked(c, Gate::kBadSignature, frames::to_string(m.subtype).data());
      return false;
    }
    return true;
  }

  void client_on_assoc_response(Station& c, const ManagementFrame& m) {
    if (c.phase != ClientPhase::kAssociating || !client_frame_admitted(c, m)) return;
    const std::uint16_t status = static_cast<std::uint16_t>((m.fixed_body[2] << 8) | m.fixed_body[3]);
    if (status != kStatusSuccess) {
      client_end_attempt(c, "association refused");
      return;
    }
    if (c.soap_mode) {
      c.handshake->on_associated();
      client_set_phase(c, ClientPhase::kSoap);
    } else {
      c.supplicant.emplace(*c.ap_mac, c.spec.mac, *c.spec.legacy_pmk, fourway_config_);
      c.session_index = add_session(c, *c.ap_mac, false, 0, *c.spec.legacy_pmk);
      client_set_phase(c, ClientPhase::kFourWay);
    }
  }

  void client_on_disassoc(Station& c, const ManagementFrame& m) {
    if (c.phase == ClientPhase::kScanning || !client_frame_admitted(c, m)) return;
    ++c.generation;
    c.handshake.reset();
    c.supplicant.reset();
    client_set_phase(c, ClientPhase::kDisconnected, "disassociated by " + m.source.to_string());
  }

  void client_on_eapol(Station& c, const Bytes& eapol) {
    if (frames::is_soap_eapol(eapol)) {
      if (c.supplicant) {
        client_discard(c, "replay", "soap-message-1 after 4-way start");
        return;
      }
      if (c.phase != ClientPhase::kSoap || !c.handshake) {
        client_discard(c, "unexpected", "soap-message-1");
        return;
      }
      auto step = c.handshake->on_message1(eapol, c.rng);
      if (step.discard) {
        client_discard(c, handshake::to_string(*step.discard), "soap-message-1");
        const auto d = *step.discard;
        if (d != handshake::DiscardReason::kReplay && d != handshake::DiscardReason::kUnexpected &&
            c.mitigation.record_failure(script_.mitigations, *c.ap_mac, c.ap_key->x)) {
          log("blocked", c.spec.name, "blacklisted " + c.ap_mac->to_string() + " key " + to_hex(c.ap_key->x).substr(0, 16));
          client_end_attempt(c, "peer blacklisted");
        }
        return;
      }
      if (step.reply) transmit(c.index, data_frame(*c.ap_mac, c.spec.mac, *c.ap_mac, *step.reply), false);
      if (step.psk_agreed) {
        const auto& st = c.handshake->state();
        c.mitigation.record_success(*c.ap_mac, c.ap_key->x);
        c.session_index = add_session(c, *c.ap_mac, true, st.negotiated_group->id, *st.psk);
        c.supplicant.emplace(*c.ap_mac, c.spec.mac, *st.psk, fourway_config_);
        client_set_phase(c, ClientPhase::kFourWay, "psk agreed");
      }
      return;
    }
    if (!c.supplicant) {
      client_discard(c, "unexpected", "eapol-key");
      return;
    }
    auto step = c.supplicant->on_frame(eapol, c.rng);
    if (step.discard) client_discard(c, fourway::to_string(*step.discard), "eapol-key");
    if (step.reply) transmit(c.index, data_frame(*c.ap_mac, c.spec.mac, *c.ap_mac, *step.reply), false);
    if (c.supplicant->state().phase == fourway::Phase::kEstablished && c.phase != ClientPhase::kEstablished) {
      ++c.outcome.established_sessions;
      transcript_.sessions[*c.session_index].established = true;
      c.outcome.peer = transcript_.sessions[*c.session_index].peer;
      if (c.soap_mode) c.pinned.insert_or_assign(c.spec.ssid, *c.ap_key);
      client_set_phase(c, ClientPhase::kEstablished);
    }
  }

  std::size_t add_session(const Station& s, const MacAddress& peer_mac, bool soap, crypto::GroupId group,
                          const crypto::SharedPsk& psk) {
    SessionRecord rec;
    rec.station = s.spec.name;
    rec.soap = soap;
    rec.group = group;
    rec.psk = psk;
    rec.tick = now_;
    for (const auto& other : stations_) {
      if (other.spec.mac == peer_mac) {
        rec.peer = other.spec.name;
        rec.peer_is_adversary = other.rogue;
      }
    }
    if (rec.peer.empty()) rec.peer = peer_mac.to_string();
    if (s.rogue) {
      rec.peer_is_adversary = true;
      transcript_.adversary_secrets.push_back(psk);
    }
    auto fp = crypto::sha256(view(psk.bytes));
    log("session", s.spec.name,
        std::string(soap ? "soap" : "wpa-psk") + " with " + rec.peer + (soap ? " group " + std::to_string(group) : "") +
            " psk-fingerprint " + to_hex(ByteView(fp.data(), 8)));
    transcript_.sessions.push_back(std::move(rec));
    return transcript_.sessions.size() - 1;
  }

  // --- access point ---------------------------------------------------------

  void ap_set_phase(Station& ap, const MacAddress& client, ApSession& s, const std::string& phase,
                    const std::string& why = {}) {
    if (s.phase == phase) return;
    std::string detail = client.to_string() + " " + (s.phase.empty() ? "none" : s.phase) + " -> " + phase;
    if (!why.empty()) detail += " (" + why + ")";
    log("state", ap.spec.name, detail);
    s.phase = phase;
    ap.outcome.verdict = phase;
    ap.outcome.peer = client.to_string();
    for (const auto& st : stations_) {
      if (st.spec.mac == client) ap.outcome.peer = st.spec.name;
    }
  }

  void ap_discard(Station& ap, std::string_view reason, const std::string& what) {
    ++ap.outcome.discards[std::string(reason)];
    log("discard", ap.spec.name, std::string(reason) + " " + what);
  }

  void ap_receive(Station& ap, const Bytes& bytes) {
    auto any = frames::parse_frame(bytes);
    if (!any) return;
    if (auto* m = std::get_if<ManagementFrame>(&*any)) {
      if (m->dest != ap.spec.mac) return;
      if (m->subtype == MgmtSubtype::kAssociationRequest) ap_on_assoc_request(ap, *m);
      if (m->subtype == MgmtSubtype::kDisassociation) ap_on_disassoc(ap, *m);
      return;
    }
    const auto& d = std::get<frames::DataFrame>(*any);
    if (d.dest != ap.spec.mac) return;
    auto it = ap.sessions.find(d.source);
    if (it == ap.sessions.end()) return;
    ap_on_eapol(ap, d.source, it->second, d.eapol);
  }

  void ap_on_assoc_request(Station& ap, const ManagementFrame& m) {
    const auto* ssid = m.find(frames::kSsidElementId);
    if (!ssid || std::string(ssid->payload.begin(), ssid->payload.end()) != ap.spec.ssid) return;
    std::optional<frames::SoapIe> ie;
    if (const auto* e = m.find(frames::kSoapElementId); e && ap.spec.soap_aware) {
      auto parsed = frames::parse_soap_ie_payload(e->payload);
      if (!parsed) {
        ap_discard(ap, "malformed", "assoc-request soap element");
        return;
      }
      ie = std::move(*parsed);
    }
    std::optional<crypto::CurvePoint> client_key;
    if (ie) client_key = handshake::peer_key_from_ie(*ie);
    if (client_key) {
      auto gate = apply_mitigations(script_.mitigations, ap.mitigation, m, client_key->x, client_key);
      if (gate != Gate::kPass) {
        ++ap.outcome.blocked;
        log("blocked", ap.spec.name, std::string(to_string(gate)) + " assoc-request from " + m.source.to_string());
        return;
      }
    }

    auto& s = ap.sessions[m.source];
    s = ApSession{};
    s.generation = ++ap.session_counter;
    s.client_key = client_key;
    bool accept = false;
    std::string why;
    if (ie) {
      s.soap = true;
      s.handshake.emplace(ap.identity, negotiation::GroupSet(ap.spec.groups), handshake_config_, &ap.cache);
      auto r = s.handshake->on_association(m.source, *ie);
      accept = r.has_value();
      if (!accept) why = std::string(handshake::to_string(r.error()));
    } else {
      accept = ap.spec.legacy_pmk.has_value();
      if (!accept) why = "no-legacy-psk";
    }

    auto resp = mgmt(MgmtSubtype::kAssociationResponse, m.source, ap.spec.mac, ap.spec.mac);
    resp.fixed_body[3] = accept ? kStatusSuccess : kStatusRefused;
    resp.fixed_body[5] = 1;  // association id
    resp.elements.push_back({frames::kSupportedRatesElementId, {0x82, 0x84, 0x8b, 0x96}});
    transmit(ap.index, finish_mgmt(std::move(resp), ap), false);

    if (!accept) {
      ap_set_phase(ap, m.source, s, "refused", why);
      return;
    }
    ap_set_phase(ap, m.source, s, s.soap ? "soap-handshake" : "fourway", s.soap ? "soap" : "wpa-psk");
    timer(ap.index, s.soap ? TimerKind::kApSendMsg1 : TimerKind::kApSendM1, 1, s.generation, m.source);
  }

  void ap_on_disassoc(Station& ap, const ManagementFrame& m) {
    auto it = ap.sessions.find(m.source);
    if (it == ap.sessions.end()) return;
    auto& s = it->second;
    if (script_.mitigations.sign_management_frames && s.client_key && !management_signature_valid(m, *s.client_key)) {
      ++ap.outcome.blocked;
      log("blocked", ap.spec.name, "mgmt-signature-invalid disassoc from " + m.source.to_string());
      return;
    }
    ++s.generation;
    ap_set_phase(ap, m.source, s, "disconnected");
  }

  void ap_start_fourway(Station& ap, const MacAddress& client, ApSession& s, const crypto::SharedPsk& pmk) {
    s.authenticator.emplace(ap.spec.mac, client, pmk, fourway_config_);
    ap_set_phase(ap, client, s, "fourway", s.soap ? "psk agreed" : "");
    transmit(ap.index, data_frame(client, ap.spec.mac, ap.spec.mac, s.authenticator->start(ap.rng)), false);
    timer(ap.index, TimerKind::kApFourwayTimeout, fourway_config_.timeout_ticks, s.generation, client);
  }

  void ap_on_eapol(Station& ap, const MacAddress& client, ApSession& s, const Bytes& eapol) {
    if (frames::is_soap_eapol(eapol)) {
      if (!s.handshake) {
        ap_discard(ap, "unexpected", "soap-message-2");
        return;
      }
      auto step = s.handshake->on_message2(eapol);
      if (step.discard) {
        ap_discard(ap, handshake::to_string(*step.discard), "soap-message-2");
        const auto d = *step.discard;
        if (d != handshake::DiscardReason::kReplay && d != handshake::DiscardReason::kUnexpected &&
            ap.mitigation.record_failure(script_.mitigations, client, s.client_key->x)) {
          ++ap.outcome.blocked;
          log("blocked", ap.spec.name, "blacklisted " + client.to_string());
          s.handshake->abort(handshake::AbortReason::kExternal);
          ++s.generation;
          ap_set_phase(ap, client, s, "aborted", "peer blacklisted");
        }
        return;
      }
      if (step.psk_agreed) {
        const auto& st = s.handshake->state();
        ap.mitigation.record_success(client, s.client_key->x);
        s.session_index = add_session(ap, client, true, st.negotiated_group->id, *st.psk);
        ap_start_fourway(ap, client, s, *st.psk);
      }
      return;
    }
    if (!s.authenticator) {
      ap_discard(ap, "unexpected", "eapol-key");
      return;
    }
    auto step = s.authenticator->on_frame(eapol);
    if (step.discard) ap_discard(ap, fourway::to_string(*step.discard), "eapol-key");
    if (step.reply) {
      transmit(ap.index, data_frame(client, ap.spec.mac, ap.spec.mac, *step.reply), false);
      timer(ap.index, TimerKind::kApFourwayTimeout, fourway_config_.timeout_ticks, s.generation, client);
    }
    const auto phase = s.authenticator->state().phase;
    if (phase == fourway::Phase::kEstablished && s.phase != "established") {
      ++ap.outcome.established_sessions;
      if (s.soap) transcript_.sessions[s.session_index].established = true;
      ap_set_phase(ap, client, s, "established");
    } else if (phase == fourway::Phase::kFailed && s.phase != "failed") {
      ap_set_phase(ap, client, s, "failed", std::string(fourway::to_string(s.authenticator->state().fail_reason)));
    }
  }

  // --- timers and scheduled actions -----------------------------------------

  void on_timer(const Event& ev) {
    auto& st = stations_[ev.station];
    switch (ev.timer) {
      case TimerKind::kClientStart:
        client_start_attempt(st);
        return;
      case TimerKind::kClientWatchdog:
        if (ev.generation == st.generation && !settled(st.phase)) client_end_attempt(st, "timeout");
        return;
      default: break;
    }
    auto it = st.sessions.find(ev.peer);
    if (it == st.sessions.end() || it->second.generation != ev.generation) return;
    auto& s = it->second;
    const auto& client = ev.peer;
    switch (ev.timer) {
      case TimerKind::kApSendMsg1:
        transmit(st.index, data_frame(client, st.spec.mac, st.spec.mac, s.handshake->send_message1(st.rng)), false);
        timer(st.index, TimerKind::kApSoapTimeout, handshake_config_.timeout_ticks, s.generation, client);
        break;
      case TimerKind::kApSendM1:
        ap_start_fourway(st, client, s, *st.spec.legacy_pmk);
        break;
      case TimerKind::kApSoapTimeout:
        if (s.handshake->state().phase != handshake::Phase::kAwaitMsg2) break;
        if (auto again = s.handshake->on_timeout()) {
          transmit(st.index, data_frame(client, st.spec.mac, st.spec.mac, *again), false);
          timer(st.index, TimerKind::kApSoapTimeout, handshake_config_.timeout_ticks, s.generation, client);
        } else {
          ap_set_phase(st, client, s, "aborted", "timeout");
        }
        break;
      case TimerKind::kApFourwayTimeout: {
        auto phase = s.authenticator->state().phase;
        if (phase != fourway::Phase::kSentM1 && phase != fourway::Phase::kSentM3) break;
        if (auto again = s.authenticator->on_timeout()) {
          transmit(st.index, data_frame(client, st.spec.mac, st.spec.mac, *again), false);
          timer(st.index, TimerKind::kApFourwayTimeout, fourway_config_.timeout_ticks, s.generation, client);
        } else {
          ap_set_phase(st, client, s, "failed", "timeout");
        }
        break;
      }
      default: break;
    }
  }

  int client_index(const std::string& name) const {
    for (const auto& s : stations_) {
      if (s.spec.role == Role::kClient && (name.empty() || s.spec.name == name)) return s.index;
    }
    return -1;
  }

  void on_action(const ScheduleEntry& e) {
    switch (e.action) {
      case ScheduledAction::kReconnect: {
        auto idx = client_index(e.station);
        if (idx < 0) return;
        auto& c = stations_[idx];
        if (c.phase != ClientPhase::kEstablished) {
          log("note", c.spec.name, "reconnect skipped: not established");
          return;
        }
        auto f = mgmt(MgmtSubtype::kDisassociation, *c.ap_mac, c.spec.mac, *c.ap_mac);
        f.fixed_body[1] = kReasonLeaving;
        transmit(c.index, finish_mgmt(std::move(f), c), false);
        log("note", c.spec.name, "reconnecting");
        c.attempts = 0;
        client_start_attempt(c);
        return;
      }
      case ScheduledAction::kDisassoc: {
        auto idx = client_index(e.station);
        if (idx < 0 || adversary_->target < 0) return;
        inject_disassoc(stations_[adversary_->target].spec.mac, stations_[idx].spec.mac);
        return;
      }
      case ScheduledAction::kReplay:
        log("note", "adversary", "replaying " + std::to_string(adversary_->captured_eapol.size()) + " eapol frames");
        for (auto frame : adversary_->captured_eapol) transmit(-1, std::move(frame), true);
        return;
    }
  }

  // --- adversary ------------------------------------------------------------

  void observe(const Bytes& bytes, int sender, bool intercepted) {
    auto& a = *adversary_;
    auto any = frames::parse_frame(bytes);
    if (!any) return;
    if (auto* m = std::get_if<ManagementFrame>(&*any)) {
      if (const auto* e = m->find(frames::kSoapElementId)) {
        if (auto ie = frames::parse_soap_ie_payload(e->payload)) {
          if (sender >= 0) a.ecdsa_sizes[m->source] = ie->key_size();
          if (m->subtype == MgmtSubtype::kAssociationRequest && ie->group_count() == 1) {
            a.negotiated[m->source] = ie->group_list.front();
          }
        }
      }
      if (sender >= 0 && sender == a.target && m->subtype == MgmtSubtype::kBeacon) a.target_beacon = *m;
      if (sender >= 0 && m->subtype == MgmtSubtype::kAssociationRequest) {
        if (active(Capability::kDisassocInject) && a.spec.disassoc_on_assoc) inject_disassoc(m->dest, m->source);
        if (active(Capability::kReplay)) {
          auto it = a.captured_msg1.find(m->source);
          if (it != a.captured_msg1.end()) {
            for (auto frame : it->second) transmit(-1, std::move(frame), true);
          }
        }
      }
      return;
    }
    if (sender < 0 && !intercepted) return;
    const auto& d = std::get<frames::DataFrame>(*any);
    if (frames::is_soap_eapol(d.eapol)) {
      if (auto key = soap_key(d)) a.observed_keys.push_back(*key);
      if (a.has(Capability::kReplay) && sender_is_ap(sender, bytes)) {
        auto& list = a.captured_msg1[d.dest];
        if (std::find(list.begin(), list.end(), bytes) == list.end()) list.push_back(bytes);
      }
    }
    if (a.has(Capability::kReplay) && sender >= 0) a.captured_eapol.push_back(bytes);
  }

  std::optional<frames::SoapMessageLayout> infer_layout(const frames::DataFrame& d) const {
    const auto& a = *adversary_;
    // Only clients announce a single chosen group, so whichever end has one
    // on record is the client.
    auto g = a.negotiated.find(d.source);
    if (g == a.negotiated.end()) g = a.negotiated.find(d.dest);
    auto s = a.ecdsa_sizes.find(d.source);
    if (g == a.negotiated.end() || s == a.ecdsa_sizes.end()) return std::nullopt;
    auto group = crypto::registry_lookup(g->second);
    return frames::SoapMessageLayout{2 * group->key_size_octets, 2 * s->second, !script_.strict};
  }

  std::optional<crypto::CurvePoint> soap_key(const frames::DataFrame& d) const {
    auto layout = infer_layout(d);
    if (!layout) return std::nullopt;
    auto msg = frames::parse_soap_message(d.eapol, *layout);
    if (!msg) return std::nullopt;
    auto group = crypto::registry_lookup_by_key_size(layout->ecdh_key_octets / 2);
    if (!group) return std::nullopt;
    return crypto::CurvePoint::decode(*group, msg->ecdh_public_key);
  }

  void mitm_substitute(const Bytes& original, int sender) {
    auto& a = *adversary_;
    auto d = frames::parse_data_frame(original);
    auto layout = infer_layout(*d);
    std::optional<frames::SoapMessage> msg;
    if (layout) {
      if (auto parsed = frames::parse_soap_message(d->eapol, *layout)) msg = std::move(*parsed);
    }
    if (!msg) {
      transmit(-1, original, true);
      return;
    }
    auto group = crypto::registry_lookup_by_key_size(layout->ecdh_key_octets / 2);
    auto eph = crypto::ecdh_generate(*group, a.rng);
    msg->ecdh_public_key = eph.public_point.encode();
    const auto tag = stations_[sender].spec.role == Role::kAp ? handshake::kMessage1Tag : handshake::kMessage2Tag;
    msg->ecdsa_signature = crypto::ecdsa_sign(
        a.identity.ecdsa, handshake::signature_input(script_.strict, tag, d->source, d->dest, group->id,
                                                     msg->session_nonce.value_or(frames::SessionNonce{}),
                                                     msg->ecdh_public_key));
    a.own_ecdh.push_back(std::move(eph));
    d->eapol = frames::encode_soap_message(*msg);
    transmit(-1, frames::encode_data_frame(*d), true);
  }

  void inject_disassoc(const MacAddress& ap, const MacAddress& client) {
    auto& a = *adversary_;
    auto f = mgmt(MgmtSubtype::kDisassociation, client, ap, ap);
    f.fixed_body[1] = 7;  // class 3 frame from nonassociated station
    // Well-formed: signed whenever the network expects signatures, but with
    // the only key the adversary holds.
    if (script_.mitigations.sign_management_frames) sign_management_frame(f, a.identity.ecdsa);
    transmit(-1, *frames::encode_management_frame(f), true);
  }

  void inject_forged_beacon() {
    auto& a = *adversary_;
    if (!a.target_beacon) return;
    auto f = *a.target_beacon;
    auto e = std::find_if(f.elements.begin(), f.elements.end(),
                           [](const frames::Element& el) { return el.id == frames::kSoapElementId; });
    if (e == f.elements.end()) return;
    auto ie = *frames::parse_soap_ie_payload(e->payload);
    ie.ecdsa_public_key = a.identity.ecdsa.public_key_x_only();
    auto encoded = *frames::encode_soap_ie(ie);
    e->payload.assign(encoded.begin() + 2, encoded.end());
    f.signature.reset();
    if (script_.mitigations.sign_management_frames) sign_management_frame(f, a.identity.ecdsa);
    transmit(-1, *frames::encode_management_frame(f), true);
  }

  // --- wrap-up --------------------------------------------------------------

  void finish() {
    transcript_.final_tick = now_;
    if (adversary_) {
      // Everything computable from the adversary's scalars and the keys it saw.
      for (const auto& pub : adversary_->observed_keys) {
        for (const auto& own : adversary_->own_ecdh) {
          if (own.group != pub.group) continue;
          if (auto psk = crypto::ecdh_agree(own, pub)) transcript_.adversary_secrets.push_back(*psk);
        }
      }
    }
    for (auto& s : stations_) {
      if (s.rogue) continue;
      auto& o = s.outcome;
      if (s.spec.role == Role::kClient) {
        o.verdict = std::string(label(s.phase));
        if (s.phase != ClientPhase::kEstablished) o.peer.clear();
      } else if (o.verdict.empty()) {
        o.verdict = "idle";
      }
      transcript_.outcomes[s.spec.name] = o;
      log("verdict", s.spec.name, o.verdict + (o.peer.empty() ? "" : " peer " + o.peer));
    }
  }

  const ScenarioScript& script_;
  std::uint64_t seed_;
  std::vector<Station> stations_;
  std::optional<Adversary> adversary_;
  handshake::HandshakeConfig handshake_config_;
  fourway::FourWayConfig fourway_config_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t now_ = 0;
  std::size_t pending_ = 0;
  Transcript transcript_;
};

}  // namespace

Transcript run_scenario(const ScenarioScript& script, std::uint64_t seed) {
  validate(script);
  return Engine(script, seed).run();
}

// ---------------------------------------------------------------------------

ExpectationReport check_expectations(const ScenarioScript& script, const Transcript& transcript) {
  ExpectationReport report;
  auto miss = [&](std::string what) {
    report.all_met = false;
    report.failures.push_back(std::move(what));
  };
  const auto& e = script.expect;
  auto outcome = [&](const std::string& name) -> const StationOutcome* {
    auto it = transcript.outcomes.find(name);
    return it == transcript.outcomes.end() ? nullptr : &it->second;
  };
  for (const auto& [name, want] : e.verdicts) {
    const auto* o = outcome(name);
    if (!o || o->verdict != want) miss(name + ": verdict " + (o ? o->verdict : "?") + ", expected " + want);
  }
  for (const auto& [name, want] : e.peer) {
    const auto* o = outcome(name);
    if (!o || o->peer != want) miss(name + ": peer '" + (o ? o->peer : "?") + "', expected '" + want + "'");
  }
  for (const auto& [name, want] : e.min_established_sessions) {
    const auto* o = outcome(name);
    if (!o || o->established_sessions < want) {
      miss(name + ": " + std::to_string(o ? o->established_sessions : 0) + " established sessions, expected at least " +
           std::to_string(want));
    }
  }
  for (const auto& [name, reasons] : e.min_discards) {
    const auto* o = outcome(name);
    for (const auto& [reason, want] : reasons) {
      unsigned got = 0;
      if (o) {
        if (auto it = o->discards.find(reason); it != o->discards.end()) got = it->second;
      }
      if (got < want) {
        miss(name + ": " + std::to_string(got) + " '" + reason + "' discards, expected at least " + std::to_string(want));
      }
    }
  }
  for (const auto& [name, want] : e.min_blocked) {
    const auto* o = outcome(name);
    if (!o || o->blocked < want) {
      miss(name + ": " + std::to_string(o ? o->blocked : 0) + " blocked frames, expected at least " + std::to_string(want));
    }
  }
  if (e.psk_secret) {
    auto v = eavesdropper_view(transcript);
    const bool secret = v.psk_occurrences == 0 && !v.adversary_can_derive;
    if (secret != *e.psk_secret) {
      miss("psk_secret is " + std::string(secret ? "true" : "false") + " (" + std::to_string(v.psk_occurrences) +
           " occurrences on air, derivable: " + (v.adversary_can_derive ? "yes" : "no") + ")");
    }
  }
  if (e.distinct_psks) {
    std::set<std::array<std::uint8_t, 32>> seen;
    std::size_t n = 0;
    for (const auto& s : transcript.sessions) {
      const auto* spec = script.find(s.station);
      if (!spec || spec->role != Role::kClient) continue;
      seen.insert(s.psk.bytes);
      ++n;
    }
    const bool distinct = seen.size() == n;
    if (distinct != *e.distinct_psks) miss("distinct_psks is " + std::string(distinct ? "true" : "false"));
  }
  if (e.soap_frames) {
    unsigned n = 0;
    for (const auto* f : transcript.frames()) {
      if (f->detail.starts_with("soap-message")) ++n;
    }
    if (n != *e.soap_frames) miss(std::to_string(n) + " SOAP frames on air, expected " + std::to_string(*e.soap_frames));
  }
  return report;
}

}  // namespace soap::sim
