#pragma once

// The 4-Way Handshake (PSK AKM, HMAC-SHA-1 MIC, 384-bit PTK) keyed by either
// the SOAP PSK or a pre-shared legacy PMK.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "soap/crypto.hpp"
#include "soap/frames.hpp"
#include "soap/random.hpp"

namespace soap::fourway {

using Nonce = std::array<std::uint8_t, 32>;
using Mic = std::array<std::uint8_t, 16>;
using Key128 = std::array<std::uint8_t, 16>;

struct PairwiseKeys {
  Key128 kck{};
  Key128 kek{};
  Key128 tk{};

  [[nodiscard]] Bytes concatenated() const;
  friend bool operator==(const PairwiseKeys&, const PairwiseKeys&) = default;
};

/// IEEE 802.11 PRF: HMAC-SHA-1(key, label || 0x00 || data || i) for i = 0, 1,
/// ... concatenated and truncated to `octets`.
Bytes prf_sha1(ByteView key, std::string_view label, ByteView data, std::size_t octets);

PairwiseKeys derive_ptk(const crypto::SharedPsk& pmk, const MacAddress& aa, const MacAddress& spa, const Nonce& anonce,
                        const Nonce& snonce);

/// HMAC-SHA-1 over the serialized EAPOL frame with a zeroed MIC field,
/// truncated to 16 octets.
Mic compute_mic(const Key128& kck, const frames::EapolKeyFrame& frame);
bool verify_mic(const Key128& kck, const frames::EapolKeyFrame& frame);

/// Key information words of messages 1 to 4.
inline constexpr std::uint16_t kKeyInfoM1 = 0x008a;
inline constexpr std::uint16_t kKeyInfoM2 = 0x010a;
inline constexpr std::uint16_t kKeyInfoM3 = 0x13ca;
inline constexpr std::uint16_t kKeyInfoM4 = 0x030a;

inline constexpr std::size_t kM3KeyDataOctets = 64;
/// RSN element sent by the supplicant in message 2: version 1, CCMP group and
/// pairwise suites, PSK AKM, zero capabilities.
Bytes supplicant_rsn_element();

/// 1..4, or 0 when the key information word matches no message.
int message_number(const frames::EapolKeyFrame& frame);

enum class Phase { kIdle, kSentM1, kSentM2, kSentM3, kEstablished, kFailed };
std::string_view to_string(Phase phase);

enum class FailReason { kNone, kMicMismatch, kTimeout };
std::string_view to_string(FailReason reason);

enum class DiscardReason { kMalformed, kReplay, kMicMismatch, kUnexpected };
std::string_view to_string(DiscardReason reason);

struct FourWayConfig {
  int max_retransmissions = 3;
  std::uint64_t timeout_ticks = 100;
  /// Detector self-test: places the PMK in message 1's key data.
  bool leak_pmk_in_m1 = false;
};

struct FourWayState {
  Phase phase = Phase::kIdle;
  FailReason fail_reason = FailReason::kNone;
  crypto::SharedPsk pmk;
  std::optional<Nonce> anonce;
  std::optional<Nonce> snonce;
  std::optional<PairwiseKeys> ptk;
  /// Authenticator: counter of the last transmitted frame. Supplicant: counter
  /// of the last accepted frame.
  std::uint64_t replay_counter = 0;
};

struct StepResult {
  std::optional<Bytes> reply;
  std::optional<DiscardReason> discard;
};

class Authenticator {
 public:
  Authenticator(MacAddress aa, MacAddress spa, crypto::SharedPsk pmk, FourWayConfig config = {});

  /// Message 1.
  Bytes start(RandomSource& rng);
  StepResult on_frame(ByteView eapol);
  /// Retransmits the last message with a fresh replay counter, or fails once
  /// the retry budget is spent.
  std::optional<Bytes> on_timeout();

  [[nodiscard]] const FourWayState& state() const noexcept { return state_; }

 private:
  Bytes emit(frames::EapolKeyFrame frame);

  MacAddress aa_;
  MacAddress spa_;
  FourWayConfig config_;
  FourWayState state_;
  std::optional<frames::EapolKeyFrame> last_sent_;
  int retransmissions_ = 0;
};

class Supplicant {
 public:
  Supplicant(MacAddress aa, MacAddress spa, crypto::SharedPsk pmk, FourWayConfig config = {});

  StepResult on_frame(ByteView eapol, RandomSource& rng);

  [[nodiscard]] const FourWayState& state() const noexcept { return state_; }
  /// Replay counters of every accepted frame, in order.
  [[nodiscard]] const std::vector<std::uint64_t>& accepted_counters() const noexcept { return accepted_; }

 private:
  MacAddress aa_;
  MacAddress spa_;
  FourWayConfig config_;
  FourWayState state_;
  std::vector<std::uint64_t> accepted_;
};

enum class Direction { kToSupplicant, kToAuthenticator };

/// Channel hook: returns the frame to deliver (possibly modified) or nothing
/// to drop it.
using Channel = std::function<std::optional<Bytes>(Direction, Bytes)>;

struct RunResult {
  Phase authenticator;
  Phase supplicant;
  int frames_sent = 0;
};

/// Drives both sides to completion over a lossless channel or through `channel`.
RunResult run_fourway(Authenticator& auth, Supplicant& supp, RandomSource& rng, const Channel& channel = {});

}  // namespace soap::fourway
