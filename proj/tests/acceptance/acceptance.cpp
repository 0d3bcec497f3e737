// Acceptance checks. Prints one PASS or FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "oracles/ec_oracle.hpp"
#include "soap/attack_suite.hpp"
#include "soap/fourway.hpp"
#include "soap/frames.hpp"
#include "soap/metrics.hpp"
#include "soap/negotiation.hpp"
#include "soap/scenario_json.hpp"
#include "soap/soap_handshake.hpp"

namespace {

using namespace soap;
using Clock = std::chrono::steady_clock;

const MacAddress kApMac({0x02, 0, 0, 0, 0, 0x01});
const MacAddress kClientMac({0x02, 0, 0, 0, 0, 0x02});

struct Check {
  bool ok = true;
  std::ostringstream why;

  void require(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      why << message;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

crypto::EcGroup group(crypto::GroupId id) { return *crypto::registry_lookup(id); }

StationIdentity identity(MacAddress mac, crypto::GroupId g, std::uint64_t seed, Role role) {
  RandomSource rng(seed);
  return StationIdentity{mac, crypto::ecdsa_generate(group(g), rng), role};
}

// One SOAP exchange between fresh state machines; returns both PSKs.
std::optional<std::pair<crypto::SharedPsk, crypto::SharedPsk>> soap_exchange(
    const StationIdentity& ap_id, const StationIdentity& client_id, crypto::GroupId g, handshake::ReplayCache& ap_cache,
    handshake::ReplayCache& client_cache, RandomSource& rng) {
  handshake::HandshakeConfig config;
  handshake::ApHandshake ap(ap_id, {g}, config, &ap_cache);
  handshake::ClientHandshake client(client_id, {g}, config, &client_cache);
  auto adv = negotiation::build_ap_advertisement(ap_id, {g});
  if (!adv) return std::nullopt;
  auto seen = client.on_advertisement(*adv, kApMac);
  if (!seen || !seen->response) return std::nullopt;
  if (!ap.on_association(kClientMac, *seen->response)) return std::nullopt;
  client.on_associated();
  auto msg1 = ap.send_message1(rng);
  auto step = client.on_message1(msg1, rng);
  if (!step.reply || !step.psk_agreed) return std::nullopt;
  if (!ap.on_message2(*step.reply).psk_agreed) return std::nullopt;
  if (ap.state().phase != handshake::Phase::kPskAgreed || client.state().phase != handshake::Phase::kPskAgreed) {
    return std::nullopt;
  }
  return std::pair{*ap.state().psk, *client.state().psk};
}

std::size_t soap_message_octets(crypto::GroupId g, bool strict) {
  RandomSource rng(1);
  auto ecdsa = crypto::ecdsa_generate(group(g), rng);
  auto eph = crypto::ecdh_generate(group(g), rng);
  frames::SoapMessage msg;
  msg.ecdh_public_key = eph.public_point.encode();
  msg.ecdsa_signature = crypto::ecdsa_sign(ecdsa, msg.ecdh_public_key);
  if (!strict) msg.session_nonce = frames::SessionNonce{};
  return frames::frame_wire_size(frames::DataFrame{kApMac, kClientMac, kApMac, frames::encode_soap_message(msg)});
}

// 1. Frame-size constants.
Check frame_sizes() {
  Check c;
  const auto start = Clock::now();
  RandomSource rng(0);
  auto key = crypto::ecdsa_generate(group(26), rng);
  frames::SoapIe ie{{26}, key.public_key_x_only()};
  auto one = frames::encode_soap_ie(ie);
  c.require(one && one->size() == 33, "IE with one group is not 33 octets");
  ie.group_list = {26, 19};
  auto two = frames::encode_soap_ie(ie);
  c.require(two && two->size() == 34, "IE with two groups is not 34 octets");
  const auto msg = soap_message_octets(26, true);
  c.require(msg == 148, "strict SOAP Message is " + std::to_string(msg) + " octets");

  crypto::SharedPsk pmk;
  fourway::Authenticator auth(kApMac, kClientMac, pmk);
  fourway::Supplicant supp(kApMac, kClientMac, pmk);
  std::vector<std::size_t> sizes;
  fourway::run_fourway(auth, supp, rng, [&](fourway::Direction, Bytes eapol) -> std::optional<Bytes> {
    sizes.push_back(frames::frame_wire_size(frames::DataFrame{kApMac, kClientMac, kApMac, eapol}));
    return eapol;
  });
  c.require(sizes.size() == 4 && sizes[2] == 195, "4-Way message 3 is not 195 octets");
  const double elapsed = seconds_since(start);
  c.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  if (c.ok) c.why << "IE 33, second group 34, SOAP Message 148, message 3 195, " << elapsed * 1000 << " ms";
  return c;
}

// 2. SOAP Handshake then 4-Way Handshake, 100 seeds per group.
Check end_to_end() {
  Check c;
  const auto start = Clock::now();
  int runs = 0;
  for (const auto& g : crypto::registered_groups()) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RandomSource rng(seed * 7919 + g.id);
      auto ap_id = identity(kApMac, g.id, 10'000 + seed, Role::kAp);
      auto client_id = identity(kClientMac, g.id, 20'000 + seed, Role::kClient);
      handshake::ReplayCache ap_cache;
      handshake::ReplayCache client_cache;
      auto psks = soap_exchange(ap_id, client_id, g.id, ap_cache, client_cache, rng);
      if (!psks || psks->first != psks->second) continue;
      fourway::Authenticator auth(kApMac, kClientMac, psks->first);
      fourway::Supplicant supp(kApMac, kClientMac, psks->second);
      auto r = fourway::run_fourway(auth, supp, rng);
      if (r.authenticator != fourway::Phase::kEstablished || r.supplicant != fourway::Phase::kEstablished) continue;
      if (!auth.state().ptk || !supp.state().ptk) continue;
      if (auth.state().ptk->concatenated() != supp.state().ptk->concatenated()) continue;
      ++ok;
    }
    c.require(ok == 100, "group " + std::to_string(g.id) + ": " + std::to_string(ok) + "/100");
    runs += ok;
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 30.0, "took " + std::to_string(elapsed) + " s");
  if (c.ok) c.why << runs << " runs over 4 groups, identical PTKs, " << elapsed << " s";
  return c;
}

// 3. Ephemeral PSKs between fixed identities.
Check ephemerality() {
  Check c;
  auto ap_id = identity(kApMac, 26, 1, Role::kAp);
  auto client_id = identity(kClientMac, 26, 2, Role::kClient);
  handshake::ReplayCache ap_cache;
  handshake::ReplayCache client_cache;
  std::set<std::string> psks;
  for (std::uint64_t session = 0; session < 100; ++session) {
    RandomSource rng(session);
    auto psk = soap_exchange(ap_id, client_id, 26, ap_cache, client_cache, rng);
    c.require(psk && psk->first == psk->second, "session " + std::to_string(session) + " did not agree");
    if (psk) psks.insert(to_hex(psk->first.bytes));
  }
  c.require(psks.size() == 100, std::to_string(psks.size()) + " distinct PSKs");
  if (c.ok) c.why << "100 sessions, 100 distinct PSKs";
  return c;
}

// 4. Attack suite under three seeds.
Check security_table() {
  Check c;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    attack::SuiteOptions options;
    options.seed = seed;
    auto report = attack::run_attack_suite(options);
    for (const auto& row : report.cases) {
      c.require(row.matches, "seed " + std::to_string(seed) + " " + row.scenario + ": " + row.evidence);
    }
    std::set<std::string> names;
    for (const auto& row : report.cases) names.insert(row.scenario);
    for (const char* needed : {"eavesdrop", "replay", "hijack-mitm", "hijack-disassoc", "hijack-signed",
                               "injection-blacklist"}) {
      c.require(names.contains(needed), std::string("missing case ") + needed);
    }
  }
  if (c.ok) c.why << "every case matches under seeds 0, 1, 2";
  return c;
}

// 5. Legacy coexistence.
Check legacy_coexistence() {
  Check c;
  const std::set<std::uint8_t> legacy_ids = {frames::kSsidElementId, frames::kSupportedRatesElementId,
                                             frames::kDsParameterElementId};
  const std::vector<frames::Element> base = {{frames::kSsidElementId, Bytes{'c', 'a', 'f', 'e'}},
                                             {frames::kSupportedRatesElementId, Bytes{0x82, 0x84, 0x8b, 0x96}},
                                             {frames::kDsParameterElementId, Bytes{6}}};
  int beacons = 0;
  for (const auto& g : crypto::registered_groups()) {
    RandomSource rng(g.id);
    StationIdentity ap{kApMac, crypto::ecdsa_generate(g, rng), Role::kAp};
    for (std::size_t m = 1; m <= 4; ++m) {
      std::vector<crypto::GroupId> ids;
      for (std::size_t i = 0; i < m; ++i) ids.push_back(crypto::registered_groups()[i].id);
      auto ie = negotiation::build_ap_advertisement(ap, negotiation::GroupSet(ids));
      auto encoded = frames::encode_soap_ie(*ie);
      for (std::size_t pos = 0; pos <= base.size(); ++pos) {
        frames::ManagementFrame stripped;
        stripped.source = stripped.bssid = kApMac;
        stripped.dest = MacAddress::broadcast();
        stripped.fixed_body = Bytes(frames::fixed_body_octets(stripped.subtype), 0);
        stripped.elements = base;
        auto with = stripped;
        with.elements.insert(with.elements.begin() + static_cast<std::ptrdiff_t>(pos),
                             frames::Element{frames::kSoapElementId, Bytes(encoded->begin() + 2, encoded->end())});
        auto scan_with = frames::extract_elements(*frames::encode_management_frame(with), legacy_ids);
        auto scan_without = frames::extract_elements(*frames::encode_management_frame(stripped), legacy_ids);
        c.require(scan_with.has_value() && scan_without.has_value(), "legacy parser reported an error");
        if (scan_with && scan_without) {
          c.require(scan_with->recognized == scan_without->recognized, "recognized elements differ");
          c.require(scan_with->skipped == 1, "SOAP IE not skipped");
        }
        ++beacons;
      }
    }
  }
  for (const char* name : {"legacy.json", "dual-mode.json"}) {
    auto script = sim::load_scenario(std::string(SOAP_SCENARIO_DIR) + "/" + name);
    auto t = sim::run_scenario(script, 0);
    for (const auto& [station, outcome] : t.outcomes) {
      c.require(outcome.verdict == "established", std::string(name) + ": " + station + " " + outcome.verdict);
      c.require(outcome.discards.empty(), std::string(name) + ": " + station + " discarded frames");
    }
  }
  if (c.ok) c.why << beacons << " SOAP-bearing beacons parse like their stripped frames; legacy and dual-mode pairs established";
  return c;
}

// Brute force: enumerate the intersection, keep the largest key size and the
// smallest id among equals.
negotiation::NegotiationOutcome brute_force(const std::vector<crypto::GroupId>& a,
                                            const std::vector<crypto::GroupId>& b) {
  std::optional<crypto::EcGroup> best;
  for (auto x : a) {
    for (auto y : b) {
      if (x != y) continue;
      auto g = group(x);
      if (!best || g.key_size_octets > best->key_size_octets ||
          (g.key_size_octets == best->key_size_octets && g.id < best->id)) {
        best = g;
      }
    }
  }
  if (!best) return negotiation::WpaPskFallback{};
  return negotiation::SoapSelected{best->id};
}

// 6. Negotiation over all subset pairs.
Check negotiation_algebra() {
  Check c;
  auto reg = crypto::registered_groups();
  c.require(reg.size() == 4, "registry does not hold 4 groups");
  auto subset = [&](unsigned mask) {
    std::vector<crypto::GroupId> out;
    for (unsigned i = 0; i < reg.size(); ++i) {
      if (mask & (1u << i)) out.push_back(reg[i].id);
    }
    return out;
  };
  int pairs = 0;
  int fallbacks = 0;
  for (unsigned ma = 0; ma < 16; ++ma) {
    for (unsigned mb = 0; mb < 16; ++mb) {
      auto a = subset(ma);
      auto b = subset(mb);
      auto got = negotiation::select_group(negotiation::GroupSet(a), negotiation::GroupSet(b));
      c.require(got == brute_force(a, b), "mismatch at " + std::to_string(ma) + "," + std::to_string(mb));
      c.require(((ma & mb) == 0) == negotiation::is_fallback(got), "fallback rule violated");
      fallbacks += negotiation::is_fallback(got) ? 1 : 0;
      ++pairs;
    }
  }
  if (c.ok) c.why << pairs << " ordered pairs, " << fallbacks << " fallbacks, all equal to brute force";
  return c;
}

// 7. Crypto against independent oracles.
Check crypto_correctness() {
  Check c;
  int ecdh_cases = 0;
  RandomSource rng(777);
  for (const auto& g : crypto::registered_groups()) {
    const auto& curve = oracle::curve_for(g.id);
    const oracle::Point generator = std::make_pair(curve.gx, curve.gy);
    for (int i = 0; i < 10; ++i) {
      auto a = crypto::ecdh_generate(g, rng);
      auto b = crypto::ecdh_generate(g, rng);
      auto b_public = oracle::multiply(curve, oracle::from_bytes(b.private_scalar), generator);
      c.require(b_public && oracle::to_bytes(b_public->first, g.key_size_octets) == b.public_point.x &&
                    oracle::to_bytes(b_public->second, g.key_size_octets) == b.public_point.y,
                "public key differs from oracle");
      auto shared = oracle::multiply(curve, oracle::from_bytes(a.private_scalar), b_public);
      auto ours = crypto::ecdh_agree(a, b.public_point);
      c.require(shared && ours && ours->bytes == crypto::sha256(oracle::to_bytes(shared->first, g.key_size_octets)),
                "shared secret differs from oracle");
      ++ecdh_cases;
    }
  }

  int rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& g = crypto::registered_groups()[static_cast<std::size_t>(i) % 4];
    auto key = crypto::ecdsa_generate(g, rng);
    Bytes msg(1 + rng.next_u64() % 64);
    rng.fill(msg);
    auto sig = crypto::ecdsa_sign(key, msg);
    if (i % 2 == 0) {
      auto bit = rng.next_u64() % (msg.size() * 8);
      msg[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    } else {
      auto bit = rng.next_u64() % (sig.size() * 8);
      sig[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    }
    if (crypto::ecdsa_verify(key.public_key, g, msg, sig) != crypto::VerifyStatus::kAccept) ++rejected;
  }
  c.require(rejected == 1000, std::to_string(rejected) + "/1000 perturbations rejected");

  // Reference PTK computed with Python's hmac module.
  crypto::SharedPsk pmk;
  for (std::size_t i = 0; i < 32; ++i) pmk.bytes[i] = static_cast<std::uint8_t>(i);
  auto nonce = [](std::uint8_t base) {
    fourway::Nonce n{};
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = static_cast<std::uint8_t>(base + i % 16);
    return n;
  };
  auto keys = fourway::derive_ptk(pmk, kApMac, kClientMac, nonce(0xa0), nonce(0x50));
  c.require(to_hex(keys.concatenated()) ==
                "b9a8a57f768c1bbf89fab5b30465e02de4d2832f8c209bb86568127a6ab4cc741483d66f06f35089264cd61b0a4080e6",
            "PTK differs from reference vector");
  if (c.ok) c.why << ecdh_cases << " ECDH cases match the oracle, 1000/1000 perturbations rejected, PTK vector matches";
  return c;
}

// 8. Message-count overhead and timing report shape.
Check delay_substitute() {
  Check c;
  const auto delta = metrics::message_count_delta();
  c.require(delta == 2, "message-count delta is " + std::to_string(delta));
  auto report = metrics::bench_crypto(26, 100);
  c.require(report.rows.size() == 5, "timing report has " + std::to_string(report.rows.size()) + " operations");
  for (const auto& row : report.rows) {
    c.require(row.samples >= 100, row.operation + " has " + std::to_string(row.samples) + " samples");
  }
  if (c.ok) c.why << "2 extra frames; 5 operations with at least 100 samples each";
  return c;
}

std::optional<std::string> capture(const std::string& command, int& status) {
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return std::nullopt;
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  status = pclose(pipe);
  return out;
}

// 9. Byte-identical CLI output across consecutive invocations.
Check determinism() {
  Check c;
  const std::string bin = SOAP_SIM_BIN;
  const std::string dir = SOAP_SCENARIO_DIR;
  const std::vector<std::string> commands = {
      bin + " run " + dir + "/benign.json --seed 7 --hex",
      bin + " run " + dir + "/mitm-expect-abort.json --seed 7 --format text",
      bin + " attack-suite --seed 7",
      bin + " attack-suite --seed 7 --format json",
  };
  for (const auto& cmd : commands) {
    int s1 = -1;
    int s2 = -1;
    auto first = capture(cmd + " 2>/dev/null", s1);
    auto second = capture(cmd + " 2>/dev/null", s2);
    c.require(first && second && !first->empty(), "could not run " + cmd);
    c.require(s1 == 0 && s2 == 0, cmd + " exited non-zero");
    c.require(first == second, cmd + " output differs between invocations");
  }
  if (c.ok) c.why << commands.size() << " commands produce identical output twice";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"frame-size constants", frame_sizes},
      {"end-to-end key agreement", end_to_end},
      {"ephemeral PSKs", ephemerality},
      {"security table", security_table},
      {"legacy coexistence", legacy_coexistence},
      {"negotiation algebra", negotiation_algebra},
      {"crypto correctness", crypto_correctness},
      {"message-count and timing report", delay_substitute},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.why << "exception: " << e.what();
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << c.why.str() << "\n";
    failed += c.ok ? 0 : 1;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
