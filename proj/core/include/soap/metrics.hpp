#pragma once

// Frame-size accounting and crypto timing.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "soap/crypto.hpp"

namespace soap::metrics {

struct SizeRow {
  std::string frame;
  std::size_t baseline_octets = 0;
  std::size_t with_soap_octets = 0;
  /// (with - baseline) / with.
  [[nodiscard]] double overhead() const noexcept {
    return with_soap_octets == 0 ? 0.0
                                 : static_cast<double>(with_soap_octets - baseline_octets) / static_cast<double>(with_soap_octets);
  }
};

struct SizeReport {
  crypto::GroupId group = 0;
  std::string group_name;
  std::size_t m = 0;
  bool strict = true;
  std::size_t ie_octets = 0;
  std::size_t ie_key_octets = 0;
  /// Share of the IE taken by the ECDSA public key.
  double ie_key_fraction = 0.0;
  std::size_t soap_message_octets = 0;
  /// EAPOL-Key messages 1 to 4, MAC header included.
  std::vector<std::size_t> eapol_key_octets;
  /// Management frames without and with the SOAP IE, plus the 4-Way frames,
  /// which SOAP leaves untouched.
  std::vector<SizeRow> rows;
  /// Frames SOAP adds in front of the 4-Way Handshake.
  std::size_t added_frames = 0;
};

/// All sizes come from frames built and measured through the codec.
/// Throws std::invalid_argument for an unregistered group.
SizeReport size_report(crypto::GroupId group, std::size_t m, bool strict);

struct GoldenFrame {
  std::string name;
  Bytes octets;
};

/// Deterministic sample frames: SOAP IE, SOAP Messages 1 and 2, and EAPOL-Key
/// messages 1 to 4, as transmitted (MAC header included, IE as an element).
std::vector<GoldenFrame> golden_frames(crypto::GroupId group, std::size_t m, bool strict, std::uint64_t seed);

std::string to_json(const SizeReport& report);
std::string to_text(const SizeReport& report);
std::string to_csv(const SizeReport& report);

struct BenchRow {
  std::string operation;
  double mean_us = 0.0;
  double stddev_us = 0.0;
  std::size_t samples = 0;
};

struct MachineInfo {
  std::string system;
  std::string cpu;
  unsigned hardware_threads = 0;
  std::string compiler;
  std::string crypto_library;
};

MachineInfo machine_info();

struct BenchReport {
  crypto::GroupId group = 0;
  std::string group_name;
  std::size_t iterations = 0;
  /// ecdh_generate, ecdh_agree, ecdsa_sign, ecdsa_verify, derive_ptk.
  std::vector<BenchRow> rows;
  /// generate + agree + sign + 2 * verify.
  double derived_total_us = 0.0;
  /// Both state machines driven through one complete SOAP exchange.
  BenchRow end_to_end;
  /// Frames on air before the first EAPOL-Key message, SOAP minus legacy.
  std::size_t message_count_delta = 0;
  MachineInfo machine;
};

/// Throws std::invalid_argument when iterations < 100 or the group is unknown.
BenchReport bench_crypto(crypto::GroupId group, std::size_t iterations);

/// Counts frames exchanged between the Association Response and the first
/// EAPOL-Key message in simulated SOAP and WPA-PSK associations.
std::size_t message_count_delta();

std::string to_json(const BenchReport& report);
std::string to_text(const BenchReport& report);

}  // namespace soap::metrics
