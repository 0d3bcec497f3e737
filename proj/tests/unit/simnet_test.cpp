#include "soap/simnet.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "soap/scenario_json.hpp"

namespace {

using namespace soap;
using namespace soap::sim;

const MacAddress kApMac({0x02, 0, 0, 0, 0, 0x01});
const MacAddress kClientMac({0x02, 0, 0, 0, 0, 0x02});

StationSpec ap_spec() {
  StationSpec s;
  s.name = "ap";
  s.role = Role::kAp;
  s.mac = kApMac;
  s.ssid = "net";
  s.groups = {26, 19};
  return s;
}

StationSpec client_spec(std::string name = "client", MacAddress mac = kClientMac) {
  StationSpec s;
  s.name = std::move(name);
  s.mac = mac;
  s.ssid = "net";
  return s;
}

ScenarioScript pair_script() {
  ScenarioScript s;
  s.name = "pair";
  s.stations = {ap_spec(), client_spec()};
  return s;
}

unsigned soap_frames(const Transcript& t) {
  unsigned n = 0;
  for (const auto* r : t.frames()) {
    if (r->detail.rfind("soap-message", 0) == 0) ++n;
  }
  return n;
}

unsigned discards(const Transcript& t, const std::string& station, const std::string& reason) {
  auto o = t.outcomes.find(station);
  if (o == t.outcomes.end()) return 0;
  auto d = o->second.discards.find(reason);
  return d == o->second.discards.end() ? 0 : d->second;
}

crypto::SharedPsk fixed_pmk(std::uint8_t fill) {
  crypto::SharedPsk pmk;
  pmk.bytes.fill(fill);
  return pmk;
}

TEST(Simnet, BenignPairEstablishesOverSoap) {
  auto t = run_scenario(pair_script(), 0);
  EXPECT_EQ(t.outcomes.at("ap").verdict, "established");
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  EXPECT_EQ(t.outcomes.at("client").peer, "ap");
  EXPECT_EQ(soap_frames(t), 2u);
  auto view = eavesdropper_view(t);
  EXPECT_GT(view.frames_captured, 0u);
  EXPECT_EQ(view.psk_occurrences, 0u);
  EXPECT_FALSE(view.adversary_can_derive);

  std::vector<crypto::SharedPsk> psks;
  for (const auto& s : t.sessions) {
    if (s.established) psks.push_back(s.psk);
  }
  ASSERT_EQ(psks.size(), 2u);
  EXPECT_EQ(psks[0], psks[1]);
}

TEST(Simnet, FrameSizesOnAir) {
  auto t = run_scenario(pair_script(), 3);
  std::map<std::string, std::size_t> size;
  for (const auto* r : t.frames()) {
    auto name = r->detail.substr(0, r->detail.find(' '));
    size.emplace(name, r->frame.size());
  }
  // A 3-octet SSID beacon is 78 octets; two advertised groups make a 34-octet IE.
  EXPECT_EQ(size.at("beacon"), 78u + 34u);
  EXPECT_EQ(size.at("eapol-key-3"), 195u);
  EXPECT_EQ(size.at("soap-message-1"), 156u);
  EXPECT_EQ(size.at("soap-message-2"), 156u);
}

TEST(Simnet, StrictModeUsesShorterMessages) {
  auto s = pair_script();
  s.strict = true;
  auto t = run_scenario(s, 0);
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  for (const auto* r : t.frames()) {
    if (r->detail.rfind("soap-message", 0) == 0) EXPECT_EQ(r->frame.size(), 148u);
  }
}

TEST(Simnet, SameSeedSameTranscript) {
  auto s = pair_script();
  s.adversary = AdversarySpec{};
  s.adversary->capabilities = {Capability::kEavesdrop, Capability::kDeleteIntercept};
  s.adversary->drop_probability = 0.2;
  auto a = transcript_to_json(run_scenario(s, 42), nullptr, {true});
  auto b = transcript_to_json(run_scenario(s, 42), nullptr, {true});
  auto c = transcript_to_json(run_scenario(s, 43), nullptr, {true});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Simnet, KeySizeNegotiationPicksLargestCommonGroup) {
  auto s = pair_script();
  s.stations[0].groups = {26, 19, 20};
  s.stations[1].groups = {26, 19};
  auto t = run_scenario(s, 0);
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  bool saw = false;
  for (const auto& session : t.sessions) {
    if (session.station == "client" && session.established) {
      EXPECT_EQ(session.group, 19);
      saw = true;
    }
  }
  EXPECT_TRUE(saw);
}

TEST(Simnet, DisjointGroupsWithoutLegacyPmkFail) {
  auto s = pair_script();
  s.stations[0].groups = {26};
  s.stations[1].groups = {19};
  s.stations[1].max_attempts = 1;
  auto t = run_scenario(s, 0);
  EXPECT_NE(t.outcomes.at("client").verdict, "established");
  EXPECT_EQ(soap_frames(t), 0u);
}

TEST(Simnet, DisjointGroupsFallBackToLegacyPmk) {
  auto s = pair_script();
  s.stations[0].groups = {26};
  s.stations[1].groups = {19};
  s.stations[0].legacy_pmk = s.stations[1].legacy_pmk = fixed_pmk(0x11);
  auto t = run_scenario(s, 0);
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  EXPECT_EQ(soap_frames(t), 0u);
}

TEST(Simnet, LegacyClientCoexistsWithSoapAp) {
  auto s = pair_script();
  s.stations[1].soap_aware = false;
  s.stations[0].legacy_pmk = s.stations[1].legacy_pmk = fixed_pmk(0x22);
  auto t = run_scenario(s, 0);
  EXPECT_EQ(t.outcomes.at("ap").verdict, "established");
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  EXPECT_EQ(soap_frames(t), 0u);
  EXPECT_TRUE(t.outcomes.at("client").discards.empty());
  for (const auto& r : t.records) EXPECT_NE(r.type, "discard") << r.detail;
}

TEST(Simnet, SoapAwarePairScriptedToLegacyMode) {
  auto s = pair_script();
  s.stations[1].force_legacy = true;
  s.stations[0].legacy_pmk = s.stations[1].legacy_pmk = fixed_pmk(0x33);
  auto t = run_scenario(s, 0);
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  EXPECT_EQ(soap_frames(t), 0u);
}

TEST(Simnet, TwoClientsGetDistinctPsks) {
  ScenarioScript s;
  s.name = "two";
  s.stations = {ap_spec(), client_spec("c1", MacAddress({0x02, 0, 0, 0, 0, 0x02})),
                client_spec("c2", MacAddress({0x02, 0, 0, 0, 0, 0x03}))};
  s.expect.distinct_psks = true;
  auto t = run_scenario(s, 0);
  EXPECT_EQ(t.outcomes.at("c1").verdict, "established");
  EXPECT_EQ(t.outcomes.at("c2").verdict, "established");
  EXPECT_EQ(t.outcomes.at("ap").established_sessions, 2u);
  EXPECT_TRUE(check_expectations(s, t).all_met);
}

TEST(Simnet, ReconnectsProduceFreshPsks) {
  auto s = pair_script();
  s.schedule = {{800, ScheduledAction::kReconnect, "client"}, {1600, ScheduledAction::kReconnect, "client"}};
  s.expect.distinct_psks = true;
  auto t = run_scenario(s, 0);
  EXPECT_EQ(t.outcomes.at("client").established_sessions, 3u);
  std::set<std::string> psks;
  for (const auto& session : t.sessions) {
    if (session.station == "client" && session.established) psks.insert(to_hex(session.psk.bytes));
  }
  EXPECT_EQ(psks.size(), 3u);
  EXPECT_TRUE(check_expectations(s, t).all_met);
}

TEST(Simnet, LeakDetectorFindsPlantedPsk) {
  auto s = pair_script();
  s.debug.leak_psk = true;
  auto t = run_scenario(s, 0);
  EXPECT_GE(eavesdropper_view(t).psk_occurrences, 1u);
  s.expect.psk_secret = true;
  EXPECT_FALSE(check_expectations(s, t).all_met);
}

TEST(Simnet, LeakDetectorIsQuietOnLegacyTranscript) {
  auto s = pair_script();
  s.stations[1].force_legacy = true;
  s.stations[0].legacy_pmk = s.stations[1].legacy_pmk = fixed_pmk(0x44);
  auto t = run_scenario(s, 0);
  EXPECT_EQ(eavesdropper_view(t).psk_occurrences, 0u);
}

TEST(Simnet, MitmSubstitutionNeverYieldsMutualAgreement) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    auto s = pair_script();
    s.stations[1].max_attempts = 2;
    s.adversary = AdversarySpec{};
    s.adversary->capabilities = {Capability::kEavesdrop, Capability::kMitmSubstitute};
    auto t = run_scenario(s, seed);
    EXPECT_NE(t.outcomes.at("client").verdict, "established");
    EXPECT_GE(discards(t, "client", "signature-invalid"), 1u);
    auto view = eavesdropper_view(t);
    EXPECT_FALSE(view.adversary_can_derive);
    EXPECT_EQ(view.psk_occurrences, 0u);
  }
}

TEST(Simnet, MitmSucceedsWhenSignaturesAreNotChecked) {
  auto s = pair_script();
  s.adversary = AdversarySpec{};
  s.adversary->capabilities = {Capability::kEavesdrop, Capability::kMitmSubstitute};
  s.debug.skip_signature_check = true;
  auto t = run_scenario(s, 0);
  EXPECT_TRUE(eavesdropper_view(t).adversary_can_derive);
}

ScenarioScript disassoc_script(bool signing) {
  auto s = pair_script();
  s.adversary = AdversarySpec{};
  s.adversary->capabilities = {Capability::kEavesdrop, Capability::kDisassocInject};
  s.mitigations.sign_management_frames = signing;
  s.schedule = {{300, ScheduledAction::kDisassoc, "client"}};
  return s;
}

TEST(Simnet, SpoofedDisassociationSucceedsWithoutSigning) {
  auto t = run_scenario(disassoc_script(false), 0);
  bool disconnected = false;
  for (const auto& r : t.records) {
    if (r.type == "state" && r.station == "client" && r.tick >= 300 && r.detail.find("established ->") == 0) {
      disconnected = true;
    }
  }
  EXPECT_TRUE(disconnected);
}

TEST(Simnet, SpoofedDisassociationIsBlockedWithSigning) {
  auto t = run_scenario(disassoc_script(true), 0);
  for (const auto& r : t.records) {
    if (r.type == "state" && r.station == "client" && r.tick >= 300) {
      EXPECT_NE(r.detail.find("established ->"), 0u) << r.detail;
    }
  }
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  EXPECT_EQ(t.outcomes.at("client").established_sessions, 1u);
  EXPECT_GE(t.outcomes.at("client").blocked, 1u);
}

ScenarioScript injection_script(std::optional<unsigned> threshold) {
  auto s = pair_script();
  s.stations[1].start_tick = 50;
  s.adversary = AdversarySpec{};
  s.adversary->capabilities = {Capability::kEavesdrop, Capability::kInject};
  s.mitigations.blacklist_threshold = threshold;
  return s;
}

TEST(Simnet, BlacklistEngagesAtThreshold) {
  auto t = run_scenario(injection_script(3u), 0);
  EXPECT_EQ(t.outcomes.at("client").verdict, "established");
  EXPECT_EQ(t.outcomes.at("client").peer, "ap");
  EXPECT_GE(t.outcomes.at("client").blocked, 1u);
  unsigned failures_before = 0;
  bool blacklisted = false;
  for (const auto& r : t.records) {
    if (r.station != "client") continue;
    if (r.type == "blocked" && r.detail.starts_with("blacklisted")) {
      blacklisted = true;
      break;
    }
    if (r.type == "discard" && r.detail.find("signature-invalid") != std::string::npos) ++failures_before;
  }
  EXPECT_TRUE(blacklisted);
  EXPECT_EQ(failures_before, 3u);
}

TEST(Simnet, NoBlacklistWithoutThreshold) {
  auto t = run_scenario(injection_script(std::nullopt), 0);
  EXPECT_EQ(t.outcomes.at("client").blocked, 0u);
  EXPECT_GE(discards(t, "client", "signature-invalid"), 1u);
}

TEST(Simnet, TotalLossNeverEstablishes) {
  auto s = pair_script();
  s.stations[1].max_attempts = 1;
  s.max_ticks = 2000;
  s.adversary = AdversarySpec{};
  s.adversary->capabilities = {Capability::kDeleteIntercept};
  s.adversary->drop_probability = 1.0;
  auto t = run_scenario(s, 0);
  EXPECT_NE(t.outcomes.at("client").verdict, "established");
  EXPECT_LE(t.final_tick, 2000u);
}

TEST(Mitigations, BlacklistIsPerAddressAndKey) {
  MitigationConfig config;
  config.blacklist_threshold = 3;
  MitigationState state;
  const Bytes forged(28, 0xaa);
  const Bytes genuine(28, 0xbb);
  EXPECT_FALSE(state.record_failure(config, kApMac, forged));
  EXPECT_FALSE(state.record_failure(config, kApMac, forged));
  EXPECT_FALSE(state.blocked(kApMac, forged));
  EXPECT_TRUE(state.record_failure(config, kApMac, forged));
  EXPECT_TRUE(state.blocked(kApMac, forged));
  EXPECT_FALSE(state.blocked(kApMac, genuine));
  EXPECT_FALSE(state.blocked(kClientMac, forged));
}

TEST(Mitigations, SuccessResetsFailureCount) {
  MitigationConfig config;
  config.blacklist_threshold = 2;
  MitigationState state;
  const Bytes key(28, 0x01);
  state.record_failure(config, kApMac, key);
  state.record_success(kApMac, key);
  EXPECT_EQ(state.failures(kApMac, key), 0u);
  EXPECT_FALSE(state.record_failure(config, kApMac, key));
}

TEST(Mitigations, DisabledThresholdNeverBlocks) {
  MitigationConfig config;
  MitigationState state;
  const Bytes key(28, 0x02);
  for (int i = 0; i < 50; ++i) EXPECT_FALSE(state.record_failure(config, kApMac, key));
  EXPECT_FALSE(state.blocked(kApMac, key));
}

TEST(Mitigations, ManagementFrameSignatureRoundTrip) {
  RandomSource rng(5);
  auto g = *crypto::registry_lookup(26);
  auto key = crypto::ecdsa_generate(g, rng);
  auto other = crypto::ecdsa_generate(g, rng);
  frames::ManagementFrame f;
  f.subtype = frames::MgmtSubtype::kDisassociation;
  f.source = f.bssid = kApMac;
  f.dest = kClientMac;
  f.fixed_body = Bytes(frames::fixed_body_octets(f.subtype), 0);
  sign_management_frame(f, key);
  EXPECT_TRUE(management_signature_valid(f, key.public_key));
  EXPECT_FALSE(management_signature_valid(f, other.public_key));
  f.dest = kApMac;
  EXPECT_FALSE(management_signature_valid(f, key.public_key));
}

TEST(Validation, RejectsInconsistentScripts) {
  auto dup = pair_script();
  dup.stations[1].mac = kApMac;
  EXPECT_THROW(validate(dup), ScriptError);

  auto no_ap = pair_script();
  no_ap.stations.erase(no_ap.stations.begin());
  EXPECT_THROW(validate(no_ap), ScriptError);

  auto replay_without_capability = pair_script();
  replay_without_capability.schedule = {{10, ScheduledAction::kReplay, ""}};
  EXPECT_THROW(validate(replay_without_capability), ScriptError);

  auto unknown_station = pair_script();
  unknown_station.schedule = {{10, ScheduledAction::kReconnect, "nobody"}};
  EXPECT_THROW(validate(unknown_station), ScriptError);

  auto bad_group = pair_script();
  bad_group.stations[1].groups = {7};
  EXPECT_THROW(validate(bad_group), ScriptError);

  EXPECT_NO_THROW(validate(pair_script()));
}

}  // namespace
