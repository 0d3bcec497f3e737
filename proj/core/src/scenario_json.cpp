#include "soap/scenario_json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace soap::sim {

namespace {

using Json = nlohmann::ordered_json;

// Typed access to one JSON object with path-qualified errors and rejection of
// unknown keys.
class Fields {
 public:
  Fields(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ScriptError(where() + ": expected an object");
  }

  [[nodiscard]] std::string where(std::string_view key = {}) const {
    if (key.empty()) return path_.empty() ? "$" : path_;
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const Json* get(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = node_.find(std::string(key));
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const Json& require(std::string_view key) {
    const auto* v = get(key);
    if (!v) throw ScriptError(where(key) + ": required field is missing");
    return *v;
  }

  template <class T>
  void read(std::string_view key, T& out) {
    if (const auto* v = get(key)) out = convert<T>(*v, where(key));
  }

  template <class T>
  void read(std::string_view key, std::optional<T>& out) {
    if (const auto* v = get(key)) out = convert<T>(*v, where(key));
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.contains(key)) throw ScriptError(where(key) + ": unknown field");
    }
  }

  template <class T>
  static T convert(const Json& v, const std::string& at) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ScriptError(at + ": expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ScriptError(at + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ScriptError(at + ": expected a number");
      return v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ScriptError(at + ": expected an integer");
      if (v.is_number_unsigned()) {
        auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) throw ScriptError(at + ": out of range");
        return static_cast<T>(u);
      }
      auto i = v.get<std::int64_t>();
      if (i < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
          (i > 0 && static_cast<std::uint64_t>(i) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))) {
        throw ScriptError(at + ": out of range");
      }
      return static_cast<T>(i);
    } else if constexpr (std::is_same_v<T, MacAddress>) {
      auto mac = MacAddress::parse(convert<std::string>(v, at));
      if (!mac) throw ScriptError(at + ": expected a MAC address like 02:00:00:00:00:01");
      return *mac;
    } else if constexpr (std::is_same_v<T, crypto::SharedPsk>) {
      auto bytes = from_hex(convert<std::string>(v, at));
      if (!bytes || bytes->size() != 32) throw ScriptError(at + ": expected 64 hex digits");
      crypto::SharedPsk psk;
      std::copy(bytes->begin(), bytes->end(), psk.bytes.begin());
      return psk;
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

 private:
  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

const Json& array_at(Fields& f, std::string_view key) {
  const auto& v = f.require(key);
  if (!v.is_array()) throw ScriptError(f.where(key) + ": expected an array");
  return v;
}

std::vector<crypto::GroupId> read_groups(const Json& v, const std::string& at) {
  if (!v.is_array()) throw ScriptError(at + ": expected an array of group ids");
  std::vector<crypto::GroupId> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Fields::convert<crypto::GroupId>(v[i], index_path(at, i)));
  return out;
}

Role read_role(const Json& v, const std::string& at) {
  auto s = Fields::convert<std::string>(v, at);
  if (s == "ap") return Role::kAp;
  if (s == "client") return Role::kClient;
  throw ScriptError(at + ": expected \"ap\" or \"client\"");
}

StationSpec read_station(const Json& node, const std::string& path) {
  Fields f(node, path);
  StationSpec s;
  f.read("name", s.name);
  s.role = read_role(f.require("role"), f.where("role"));
  s.mac = Fields::convert<MacAddress>(f.require("mac"), f.where("mac"));
  f.read("ssid", s.ssid);
  if (const auto* g = f.get("groups")) s.groups = read_groups(*g, f.where("groups"));
  f.read("ecdsa_group", s.ecdsa_group);
  f.read("soap_aware", s.soap_aware);
  f.read("force_legacy", s.force_legacy);
  f.read("legacy_pmk", s.legacy_pmk);
  f.read("beacon_interval", s.beacon_interval);
  f.read("beacon_start", s.beacon_start);
  f.read("start_tick", s.start_tick);
  f.read("attempt_timeout", s.attempt_timeout);
  f.read("max_attempts", s.max_attempts);
  f.finish();
  return s;
}

AdversarySpec read_adversary(const Json& node) {
  Fields f(node, "adversary");
  AdversarySpec a;
  const auto& caps = array_at(f, "capabilities");
  for (std::size_t i = 0; i < caps.size(); ++i) {
    const auto at = index_path(f.where("capabilities"), i);
    auto c = capability_from_string(Fields::convert<std::string>(caps[i], at));
    if (!c) throw ScriptError(at + ": unknown capability");
    a.capabilities.insert(*c);
  }
  f.read("mac", a.mac);
  f.read("ecdsa_group", a.ecdsa_group);
  f.read("target_ap", a.target_ap);
  f.read("active_from", a.active_from);
  f.read("inject_interval", a.inject_interval);
  f.read("drop_probability", a.drop_probability);
  f.read("disassoc_on_assoc", a.disassoc_on_assoc);
  f.finish();
  return a;
}

template <class V>
std::map<std::string, V> read_map(const Json& v, const std::string& at) {
  if (!v.is_object()) throw ScriptError(at + ": expected an object");
  std::map<std::string, V> out;
  for (const auto& [key, value] : v.items()) {
    if constexpr (std::is_same_v<V, std::map<std::string, unsigned>>) {
      out[key] = read_map<unsigned>(value, at + "." + key);
    } else {
      out[key] = Fields::convert<V>(value, at + "." + key);
    }
  }
  return out;
}

Expectations read_expectations(const Json& node) {
  Fields f(node, "expect");
  Expectations e;
  if (const auto* v = f.get("verdicts")) e.verdicts = read_map<std::string>(*v, f.where("verdicts"));
  if (const auto* v = f.get("peer")) e.peer = read_map<std::string>(*v, f.where("peer"));
  f.read("psk_secret", e.psk_secret);
  f.read("distinct_psks", e.distinct_psks);
  if (const auto* v = f.get("min_established_sessions")) {
    e.min_established_sessions = read_map<unsigned>(*v, f.where("min_established_sessions"));
  }
  if (const auto* v = f.get("min_discards")) {
    e.min_discards = read_map<std::map<std::string, unsigned>>(*v, f.where("min_discards"));
  }
  if (const auto* v = f.get("min_blocked")) e.min_blocked = read_map<unsigned>(*v, f.where("min_blocked"));
  f.read("soap_frames", e.soap_frames);
  f.finish();
  return e;
}

ScheduledAction read_action(const Json& v, const std::string& at) {
  auto s = Fields::convert<std::string>(v, at);
  for (auto a : {ScheduledAction::kDisassoc, ScheduledAction::kReplay, ScheduledAction::kReconnect}) {
    if (to_string(a) == s) return a;
  }
  throw ScriptError(at + ": expected \"disassoc\", \"replay\" or \"reconnect\"");
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ScenarioScript parse_scenario(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte);
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ScriptError(std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
  Fields f(doc, "");
  ScenarioScript s;
  f.read("name", s.name);
  f.read("strict", s.strict);
  f.read("max_ticks", s.max_ticks);
  const auto& stations = array_at(f, "stations");
  for (std::size_t i = 0; i < stations.size(); ++i) s.stations.push_back(read_station(stations[i], index_path("stations", i)));
  if (const auto* a = f.get("adversary")) s.adversary = read_adversary(*a);
  if (const auto* m = f.get("mitigations")) {
    Fields mf(*m, "mitigations");
    mf.read("blacklist_threshold", s.mitigations.blacklist_threshold);
    mf.read("sign_management_frames", s.mitigations.sign_management_frames);
    mf.finish();
  }
  if (const auto* sched = f.get("schedule")) {
    if (!sched->is_array()) throw ScriptError("schedule: expected an array");
    for (std::size_t i = 0; i < sched->size(); ++i) {
      Fields ef((*sched)[i], index_path("schedule", i));
      ScheduleEntry e;
      e.tick = Fields::convert<std::uint64_t>(ef.require("tick"), ef.where("tick"));
      e.action = read_action(ef.require("action"), ef.where("action"));
      ef.read("station", e.station);
      ef.finish();
      s.schedule.push_back(std::move(e));
    }
  }
  if (const auto* e = f.get("expect")) s.expect = read_expectations(*e);
  if (const auto* d = f.get("debug")) {
    Fields df(*d, "debug");
    df.read("leak_psk", s.debug.leak_psk);
    df.read("skip_signature_check", s.debug.skip_signature_check);
    df.finish();
  }
  f.finish();
  validate(s);
  return s;
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScriptError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ScriptError& e) {
    throw ScriptError(path.string() + ":" + e.what());
  }
}

std::string scenario_to_json(const ScenarioScript& script) {
  Json doc;
  doc["name"] = script.name;
  doc["strict"] = script.strict;
  doc["max_ticks"] = script.max_ticks;
  doc["stations"] = Json::array();
  for (const auto& s : script.stations) {
    Json j;
    j["name"] = s.name;
    j["role"] = std::string(to_string(s.role));
    j["mac"] = s.mac.to_string();
    j["ssid"] = s.ssid;
    j["groups"] = s.groups;
    j["ecdsa_group"] = s.ecdsa_group;
    j["soap_aware"] = s.soap_aware;
    j["force_legacy"] = s.force_legacy;
    if (s.legacy_pmk) j["legacy_pmk"] = to_hex(view(s.legacy_pmk->bytes));
    if (s.role == Role::kAp) {
      j["beacon_interval"] = s.beacon_interval;
      j["beacon_start"] = s.beacon_start;
    } else {
      j["start_tick"] = s.start_tick;
      j["attempt_timeout"] = s.attempt_timeout;
      j["max_attempts"] = s.max_attempts;
    }
    doc["stations"].push_back(std::move(j));
  }
  if (script.adversary) {
    const auto& a = *script.adversary;
    Json j;
    j["capabilities"] = Json::array();
    for (auto c : a.capabilities) j["capabilities"].push_back(std::string(to_string(c)));
    j["mac"] = a.mac.to_string();
    j["ecdsa_group"] = a.ecdsa_group;
    j["target_ap"] = a.target_ap;
    j["active_from"] = a.active_from;
    j["inject_interval"] = a.inject_interval;
    j["drop_probability"] = a.drop_probability;
    j["disassoc_on_assoc"] = a.disassoc_on_assoc;
    doc["adversary"] = std::move(j);
  }
  Json m;
  m["blacklist_threshold"] = script.mitigations.blacklist_threshold ? Json(*script.mitigations.blacklist_threshold) : Json();
  m["sign_management_frames"] = script.mitigations.sign_management_frames;
  doc["mitigations"] = std::move(m);
  doc["schedule"] = Json::array();
  for (const auto& e : script.schedule) {
    Json j;
    j["tick"] = e.tick;
    j["action"] = std::string(to_string(e.action));
    if (!e.station.empty()) j["station"] = e.station;
    doc["schedule"].push_back(std::move(j));
  }
  const auto& e = script.expect;
  Json x = Json::object();
  if (!e.verdicts.empty()) x["verdicts"] = e.verdicts;
  if (!e.peer.empty()) x["peer"] = e.peer;
  if (e.psk_secret) x["psk_secret"] = *e.psk_secret;
  if (e.distinct_psks) x["distinct_psks"] = *e.distinct_psks;
  if (!e.min_established_sessions.empty()) x["min_established_sessions"] = e.min_established_sessions;
  if (!e.min_discards.empty()) x["min_discards"] = e.min_discards;
  if (!e.min_blocked.empty()) x["min_blocked"] = e.min_blocked;
  if (e.soap_frames) x["soap_frames"] = *e.soap_frames;
  doc["expect"] = std::move(x);
  if (script.debug.leak_psk || script.debug.skip_signature_check) {
    doc["debug"] = {{"leak_psk", script.debug.leak_psk}, {"skip_signature_check", script.debug.skip_signature_check}};
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::string transcript_to_json(const Transcript& transcript, const ExpectationReport* report, TranscriptFormat format) {
  Json doc;
  doc["scenario"] = transcript.scenario;
  doc["seed"] = transcript.seed;
  doc["final_tick"] = transcript.final_tick;
  doc["records"] = Json::array();
  for (const auto& r : transcript.records) {
    Json j;
    j["tick"] = r.tick;
    j["type"] = r.type;
    j["station"] = r.station;
    j["detail"] = r.detail;
    if (r.type == "frame") {
      j["octets"] = r.frame.size();
      j["injected"] = r.injected;
      if (format.hex) j["hex"] = to_hex(r.frame);
    }
    doc["records"].push_back(std::move(j));
  }
  doc["outcomes"] = Json::object();
  for (const auto& [name, o] : transcript.outcomes) {
    Json j;
    j["verdict"] = o.verdict;
    j["peer"] = o.peer;
    j["established_sessions"] = o.established_sessions;
    j["discards"] = o.discards;
    j["blocked"] = o.blocked;
    doc["outcomes"][name] = std::move(j);
  }
  auto eve = eavesdropper_view(transcript);
  doc["eavesdropper"] = {{"frames_captured", eve.frames_captured},
                         {"psk_occurrences", eve.psk_occurrences},
                         {"adversary_can_derive", eve.adversary_can_derive}};
  if (report) doc["expectations"] = {{"met", report->all_met}, {"failures", report->failures}};
  return doc.dump(2) + "\n";
}

std::string transcript_to_text(const Transcript& transcript, const ExpectationReport* report, TranscriptFormat format) {
  std::ostringstream out;
  out << "scenario " << transcript.scenario << "  seed " << transcript.seed << "  final tick " << transcript.final_tick
      << "\n\n";
  char line[256];
  for (const auto& r : transcript.records) {
    std::string detail = r.detail;
    if (r.type == "frame") {
      detail += " (" + std::to_string(r.frame.size()) + " octets)";
      if (r.injected) detail += " [injected]";
    }
    std::snprintf(line, sizeof line, "%6llu  %-8s %-10s ", static_cast<unsigned long long>(r.tick), r.type.c_str(),
                  r.station.c_str());
    out << line << detail << "\n";
    if (format.hex && r.type == "frame") out << hex_dump(r.frame);
  }
  out << "\noutcomes\n";
  for (const auto& [name, o] : transcript.outcomes) {
    std::snprintf(line, sizeof line, "  %-10s %-14s peer %-10s sessions %u  blocked %u", name.c_str(), o.verdict.c_str(),
                  o.peer.empty() ? "-" : o.peer.c_str(), o.established_sessions, o.blocked);
    out << line;
    for (const auto& [reason, n] : o.discards) out << "  " << reason << " " << n;
    out << "\n";
  }
  auto eve = eavesdropper_view(transcript);
  out << "\neavesdropper: " << eve.frames_captured << " frames captured, " << eve.psk_occurrences
      << " psk occurrences, derivable " << (eve.adversary_can_derive ? "yes" : "no") << "\n";
  if (report) {
    out << "expectations: " << (report->all_met ? "met" : "NOT met") << "\n";
    for (const auto& f : report->failures) out << "  - " << f << "\n";
  }
  return out.str();
}

}  // namespace soap::sim
