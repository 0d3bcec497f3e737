#include "soap/metrics.hpp"

#include <sys/utsname.h>

#include <openssl/crypto.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "soap/fourway.hpp"
#include "soap/frames.hpp"
#include "soap/negotiation.hpp"
#include "soap/simnet.hpp"
#include "soap/soap_handshake.hpp"

namespace soap::metrics {

namespace {

using frames::ManagementFrame;
using frames::MgmtSubtype;

const MacAddress kAp{{0x02, 0x00, 0x00, 0x00, 0x00, 0x01}};
const MacAddress kClient{{0x02, 0x00, 0x00, 0x00, 0x00, 0x02}};
const std::string kSsid = "soapnet";

crypto::EcGroup lookup(crypto::GroupId id) {
  auto g = crypto::registry_lookup(id);
  if (!g) throw std::invalid_argument("unregistered group " + std::to_string(id));
  return *g;
}

// The element set every frame carries without SOAP.
ManagementFrame baseline(MgmtSubtype subtype) {
  ManagementFrame f;
  f.subtype = subtype;
  f.dest = subtype == MgmtSubtype::kBeacon ? MacAddress::broadcast() : kClient;
  f.source = kAp;
  f.bssid = kAp;
  if (subtype == MgmtSubtype::kAssociationRequest) std::swap(f.dest, f.source);
  f.elements.push_back({frames::kSsidElementId, Bytes(kSsid.begin(), kSsid.end())});
  f.elements.push_back({frames::kSupportedRatesElementId, {0x82, 0x84, 0x8b, 0x96}});
  if (subtype != MgmtSubtype::kAssociationRequest) f.elements.push_back({frames::kDsParameterElementId, {6}});
  if (subtype == MgmtSubtype::kBeacon) f.elements.push_back({frames::kTimElementId, {0, 1, 0, 0}});
  auto rsn = fourway::supplicant_rsn_element();
  f.elements.push_back({frames::kRsnElementId, Bytes(rsn.begin() + 2, rsn.end())});
  return f;
}

ManagementFrame with_ie(ManagementFrame f, const frames::SoapIe& ie) {
  auto encoded = *frames::encode_soap_ie(ie);
  f.elements.push_back({frames::kSoapElementId, Bytes(encoded.begin() + 2, encoded.end())});
  return f;
}

// m group ids: the selected group first, then the other registered ids, then
// filler ids beyond the registry.
frames::SoapIe advertised_ie(const crypto::EcdsaKeyPair& ecdsa, const crypto::EcGroup& group, std::size_t m) {
  frames::SoapIe ie;
  ie.ecdsa_public_key = ecdsa.public_key_x_only();
  std::vector<crypto::GroupId> pool{group.id};
  for (const auto& g : crypto::registered_groups()) {
    if (g.id != group.id) pool.push_back(g.id);
  }
  for (crypto::GroupId filler = 1; pool.size() < m; ++filler) {
    if (!crypto::registry_lookup(filler)) pool.push_back(filler);
  }
  ie.group_list.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
  return ie;
}

std::size_t wire(const ManagementFrame& f) {
  auto bytes = frames::encode_management_frame(f);
  return bytes->size();
}

}  // namespace

SizeReport size_report(crypto::GroupId group_id, std::size_t m, bool strict) {
  const auto group = lookup(group_id);
  SizeReport r;
  r.group = group.id;
  r.group_name = std::string(group.name);
  r.m = m;
  r.strict = strict;

  RandomSource rng(0);
  const auto ecdsa = crypto::ecdsa_generate(group, rng);
  const auto ie = advertised_ie(ecdsa, group, m);
  r.ie_octets = frames::encode_soap_ie(ie)->size();
  r.ie_key_octets = ie.key_size();
  r.ie_key_fraction = static_cast<double>(r.ie_key_octets) / static_cast<double>(r.ie_octets);

  const auto eph = crypto::ecdh_generate(group, rng);
  frames::SoapMessage msg;
  msg.ecdh_public_key = eph.public_point.encode();
  msg.ecdsa_signature = crypto::ecdsa_sign(ecdsa, msg.ecdh_public_key);
  if (!strict) msg.session_nonce = frames::SessionNonce{};
  const auto msg_bytes = frames::encode_data_frame({kAp, kClient, kAp, frames::encode_soap_message(msg)});
  r.soap_message_octets = msg_bytes.size();

  // The client's association request carries a single chosen group.
  frames::SoapIe response = ie;
  response.group_list = {group.id};
  for (auto subtype : {MgmtSubtype::kBeacon, MgmtSubtype::kProbeResponse, MgmtSubtype::kAssociationRequest}) {
    auto base = baseline(subtype);
    const auto& carried = subtype == MgmtSubtype::kAssociationRequest ? response : ie;
    r.rows.push_back({std::string(frames::to_string(subtype)), wire(base), wire(with_ie(base, carried))});
  }

  crypto::SharedPsk pmk;
  fourway::Authenticator auth(kAp, kClient, pmk);
  fourway::Supplicant supp(kAp, kClient, pmk);
  fourway::run_fourway(auth, supp, rng, [&](fourway::Direction, Bytes eapol) -> std::optional<Bytes> {
    r.eapol_key_octets.push_back(frames::encode_data_frame({kAp, kClient, kAp, eapol}).size());
    return eapol;
  });
  for (std::size_t i = 0; i < r.eapol_key_octets.size(); ++i) {
    const auto n = r.eapol_key_octets[i];
    r.rows.push_back({"eapol-key-" + std::to_string(i + 1), n, n});
  }
  r.added_frames = message_count_delta();
  return r;
}

std::vector<GoldenFrame> golden_frames(crypto::GroupId group_id, std::size_t m, bool strict, std::uint64_t seed) {
  const auto group = lookup(group_id);
  RandomSource rng(seed);
  const StationIdentity ap{kAp, crypto::ecdsa_generate(group, rng), Role::kAp};
  const StationIdentity client{kClient, crypto::ecdsa_generate(group, rng), Role::kClient};

  const auto advert = advertised_ie(ap.ecdsa, group, m);
  std::vector<GoldenFrame> out;
  out.push_back({"soap-ie", *frames::encode_soap_ie(advert)});

  handshake::HandshakeConfig config;
  config.strict = strict;
  const negotiation::GroupSet own{group.id};
  handshake::ClientHandshake c(client, own, config);
  handshake::ApHandshake a(ap, own, config);
  // With m = 0 the IE offers nothing; the handshake frames still use the group.
  auto offered = advert;
  offered.group_list = {group.id};
  auto adv = c.on_advertisement(offered, kAp);
  (void)a.on_association(kClient, *adv->response);
  c.on_associated();
  auto msg1 = a.send_message1(rng);
  auto step = c.on_message1(msg1, rng);
  a.on_message2(*step.reply);
  out.push_back({"soap-message-1", frames::encode_data_frame({kClient, kAp, kAp, msg1})});
  out.push_back({"soap-message-2", frames::encode_data_frame({kAp, kClient, kAp, *step.reply})});

  fourway::Authenticator auth(kAp, kClient, *a.state().psk);
  fourway::Supplicant supp(kAp, kClient, *c.state().psk);
  int n = 0;
  fourway::run_fourway(auth, supp, rng, [&](fourway::Direction d, Bytes eapol) -> std::optional<Bytes> {
    const bool down = d == fourway::Direction::kToSupplicant;
    out.push_back({"eapol-key-" + std::to_string(++n),
                   frames::encode_data_frame({down ? kClient : kAp, down ? kAp : kClient, kAp, eapol})});
    return eapol;
  });
  return out;
}

std::string to_json(const SizeReport& r) {
  nlohmann::ordered_json doc;
  doc["group"] = r.group;
  doc["group_name"] = r.group_name;
  doc["m"] = r.m;
  doc["strict"] = r.strict;
  doc["soap_ie_octets"] = r.ie_octets;
  doc["soap_ie_key_octets"] = r.ie_key_octets;
  doc["soap_ie_key_fraction"] = r.ie_key_fraction;
  doc["soap_message_octets"] = r.soap_message_octets;
  doc["eapol_key_octets"] = r.eapol_key_octets;
  doc["added_frames"] = r.added_frames;
  doc["frames"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    doc["frames"].push_back({{"frame", row.frame},
                             {"baseline_octets", row.baseline_octets},
                             {"with_soap_octets", row.with_soap_octets},
                             {"overhead", row.overhead()}});
  }
  return doc.dump(2) + "\n";
}

std::string to_text(const SizeReport& r) {
  std::ostringstream out;
  char line[160];
  out << "group " << int(r.group) << " (" << r.group_name << "), m=" << r.m << ", " << (r.strict ? "strict" : "nonce extension")
      << "\n\n";
  std::snprintf(line, sizeof line, "SOAP IE            %4zu octets (ECDSA key %zu octets, %.1f%%)\n", r.ie_octets,
                r.ie_key_octets, 100.0 * r.ie_key_fraction);
  out << line;
  std::snprintf(line, sizeof line, "SOAP Message 1/2   %4zu octets each, %zu frames added before the 4-Way Handshake\n\n",
                r.soap_message_octets, r.added_frames);
  out << line;
  std::snprintf(line, sizeof line, "%-22s %10s %10s %9s\n", "frame", "baseline", "with SOAP", "overhead");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-22s %10zu %10zu %8.1f%%\n", row.frame.c_str(), row.baseline_octets,
                  row.with_soap_octets, 100.0 * row.overhead());
    out << line;
  }
  out << "\nManagement-frame overhead depends on the baseline element set. The baseline frames above carry\n"
         "SSID, supported rates and RSN elements, plus DS parameter and TIM where the subtype has them.\n";
  return out.str();
}

std::string to_csv(const SizeReport& r) {
  std::ostringstream out;
  out << "frame,baseline_octets,with_soap_octets,overhead\n";
  char line[128];
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%s,%zu,%zu,%.6f\n", row.frame.c_str(), row.baseline_octets, row.with_soap_octets,
                  row.overhead());
    out << line;
  }
  return out.str();
}

// ---------------------------------------------------------------------------

MachineInfo machine_info() {
  MachineInfo m;
  utsname u{};
  if (uname(&u) == 0) m.system = std::string(u.sysname) + " " + u.release + " " + u.machine;
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.starts_with("model name")) {
      auto colon = line.find(':');
      if (colon != std::string::npos) m.cpu = line.substr(colon + 2);
      break;
    }
  }
  if (m.cpu.empty()) m.cpu = "unknown";
  m.hardware_threads = std::thread::hardware_concurrency();
#if defined(__clang__)
  m.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  m.compiler = "gcc " __VERSION__;
#else
  m.compiler = "unknown";
#endif
  m.crypto_library = OpenSSL_version(OPENSSL_VERSION);
  return m;
}

namespace {

template <class Setup, class Op>
BenchRow time_op(std::string name, std::size_t iterations, Setup setup, Op op) {
  using Clock = std::chrono::steady_clock;
  std::vector<double> samples;
  samples.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    auto input = setup(i);
    const auto start = Clock::now();
    op(input);
    const auto stop = Clock::now();
    samples.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
  }
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size() > 1 ? samples.size() - 1 : 1);
  return {std::move(name), mean, std::sqrt(var), samples.size()};
}

// Keeps results observable so the timed calls are not optimized out.
template <class T>
void keep(const T& value) {
  asm volatile("" : : "g"(&value) : "memory");
}

}  // namespace

std::size_t message_count_delta() {
  auto count = [](bool soap) {
    sim::ScenarioScript s;
    s.name = soap ? "soap" : "wpa-psk";
    crypto::SharedPsk pmk;
    pmk.bytes.fill(0x5a);
    sim::StationSpec ap;
    ap.name = "ap";
    ap.role = Role::kAp;
    ap.mac = kAp;
    ap.ssid = kSsid;
    ap.legacy_pmk = pmk;
    sim::StationSpec client = ap;
    client.name = "client";
    client.role = Role::kClient;
    client.mac = kClient;
    client.force_legacy = !soap;
    s.stations = {ap, client};
    auto t = sim::run_scenario(s, 0);
    std::size_t n = 0;
    bool counting = false;
    for (const auto* f : t.frames()) {
      if (f->detail == "eapol-key-1") break;
      if (counting) ++n;
      if (f->detail == "assoc-response") counting = true;
    }
    return n;
  };
  return count(true) - count(false);
}

BenchReport bench_crypto(crypto::GroupId group_id, std::size_t iterations) {
  if (iterations < 100) throw std::invalid_argument("at least 100 iterations are required");
  const auto group = lookup(group_id);
  BenchReport r;
  r.group = group.id;
  r.group_name = std::string(group.name);
  r.iterations = iterations;

  RandomSource rng(1);
  const auto ecdsa = crypto::ecdsa_generate(group, rng);
  const auto peer = crypto::ecdh_generate(group, rng);
  const Bytes message = peer.public_point.encode();
  const auto signature = crypto::ecdsa_sign(ecdsa, message);

  r.rows.push_back(time_op("ecdh_generate", iterations, [](std::size_t) { return 0; },
                           [&](int) { keep(crypto::ecdh_generate(group, rng)); }));
  r.rows.push_back(time_op("ecdh_agree", iterations, [&](std::size_t) { return crypto::ecdh_generate(group, rng); },
                           [&](const crypto::EcdhKeyPair& own) { keep(crypto::ecdh_agree(own, peer.public_point)); }));
  r.rows.push_back(time_op("ecdsa_sign", iterations,
                           [&](std::size_t i) {
                             Bytes m = message;
                             m[0] ^= static_cast<std::uint8_t>(i);
                             m[1] ^= static_cast<std::uint8_t>(i >> 8);
                             return m;
                           },
                           [&](const Bytes& m) { keep(crypto::ecdsa_sign(ecdsa, m)); }));
  r.rows.push_back(time_op("ecdsa_verify", iterations, [](std::size_t) { return 0; },
                           [&](int) { keep(crypto::ecdsa_verify(ecdsa.public_key, group, message, signature)); }));
  r.rows.push_back(time_op("derive_ptk", iterations,
                           [&](std::size_t) {
                             fourway::Nonce a{};
                             rng.fill(a);
                             return a;
                           },
                           [&](const fourway::Nonce& anonce) {
                             keep(fourway::derive_ptk(crypto::SharedPsk{}, kAp, kClient, anonce, anonce));
                           }));
  r.derived_total_us = r.rows[0].mean_us + r.rows[1].mean_us + r.rows[2].mean_us + 2 * r.rows[3].mean_us;

  // One full exchange through both state machines, signature checks on.
  const StationIdentity ap_id{kAp, ecdsa, Role::kAp};
  const StationIdentity client_id{kClient, crypto::ecdsa_generate(group, rng), Role::kClient};
  const negotiation::GroupSet groups{group.id};
  const auto advert = *negotiation::build_ap_advertisement(ap_id, groups);
  r.end_to_end = time_op("soap_handshake", iterations, [](std::size_t) { return 0; }, [&](int) {
    handshake::ClientHandshake c(client_id, groups, {});
    handshake::ApHandshake a(ap_id, groups, {});
    auto adv = c.on_advertisement(advert, kAp);
    (void)a.on_association(kClient, *adv->response);
    c.on_associated();
    auto m2 = c.on_message1(a.send_message1(rng), rng);
    auto done = a.on_message2(*m2.reply);
    if (!done.psk_agreed) throw std::logic_error("benchmark handshake did not complete");
  });
  r.message_count_delta = message_count_delta();
  r.machine = machine_info();
  return r;
}

std::string to_json(const BenchReport& r) {
  nlohmann::ordered_json doc;
  doc["group"] = r.group;
  doc["group_name"] = r.group_name;
  doc["iterations"] = r.iterations;
  doc["operations"] = nlohmann::ordered_json::array();
  auto row = [](const BenchRow& b) {
    return nlohmann::ordered_json{
        {"operation", b.operation}, {"mean_us", b.mean_us}, {"stddev_us", b.stddev_us}, {"samples", b.samples}};
  };
  for (const auto& b : r.rows) doc["operations"].push_back(row(b));
  doc["derived_total_us"] = r.derived_total_us;
  doc["end_to_end"] = row(r.end_to_end);
  doc["message_count_delta"] = r.message_count_delta;
  doc["machine"] = {{"system", r.machine.system},
                    {"cpu", r.machine.cpu},
                    {"hardware_threads", r.machine.hardware_threads},
                    {"compiler", r.machine.compiler},
                    {"crypto_library", r.machine.crypto_library}};
  return doc.dump(2) + "\n";
}

std::string to_text(const BenchReport& r) {
  std::ostringstream out;
  char line[160];
  out << "group " << int(r.group) << " (" << r.group_name << "), " << r.iterations << " iterations\n";
  out << r.machine.cpu << ", " << r.machine.hardware_threads << " threads, " << r.machine.system << "\n";
  out << r.machine.compiler << ", " << r.machine.crypto_library << "\n\n";
  std::snprintf(line, sizeof line, "%-32s %12s %12s %8s\n", "operation", "mean (us)", "stddev (us)", "samples");
  out << line;
  auto print = [&](const BenchRow& b) {
    std::snprintf(line, sizeof line, "%-32s %12.2f %12.2f %8zu\n", b.operation.c_str(), b.mean_us, b.stddev_us, b.samples);
    out << line;
  };
  for (const auto& b : r.rows) print(b);
  std::snprintf(line, sizeof line, "%-32s %12.2f\n", "generate+agree+sign+2*verify", r.derived_total_us);
  out << line;
  print(r.end_to_end);
  out << "\nextra frames before the 4-Way Handshake: " << r.message_count_delta << "\n";
  return out.str();
}

}  // namespace soap::metrics
