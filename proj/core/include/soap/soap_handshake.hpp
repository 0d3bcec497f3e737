#pragma once

// Client and AP state machines for the SOAP Handshake: exchange of signed
// ephemeral ECDH keys (Messages 1 and 2) ending in a shared PSK.

#include <cstdint>
#include <optional>
#include <set>
#include <string_view>

#include "soap/crypto.hpp"
#include "soap/frames.hpp"
#include "soap/identity.hpp"
#include "soap/negotiation.hpp"
#include "soap/random.hpp"

namespace soap::handshake {

enum class Phase {
  kIdle,
  kAdvertisementSeen,
  kAssociated,
  kAwaitMsg1,
  kAwaitMsg2,
  kPskAgreed,
  kAborted,
};
std::string_view to_string(Phase phase);

enum class AbortReason {
  kNone,
  kGroupNotOffered,
  kMalformedAssociation,
  kTimeout,
  kExternal,
};
std::string_view to_string(AbortReason reason);

enum class DiscardReason {
  kMalformed,
  kSignatureInvalid,
  kInvalidPoint,
  kReplay,
  kUnexpected,
};
std::string_view to_string(DiscardReason reason);

struct HandshakeConfig {
  /// Sign the ECDH public key alone and omit the session nonce extension.
  bool strict = false;
  /// Test-only switch that disables signature checks.
  bool verify_signatures = true;
  int max_retransmissions = 3;
  std::uint64_t timeout_ticks = 100;
};

/// Digests of peer ephemeral keys already used in a completed exchange. Owned
/// by a station and shared by all of its sessions.
class ReplayCache {
 public:
  [[nodiscard]] bool contains(ByteView ecdh_public_key) const;
  void insert(ByteView ecdh_public_key);
  [[nodiscard]] std::size_t size() const noexcept { return seen_.size(); }

 private:
  std::set<crypto::Digest> seen_;
};

struct SoapSessionState {
  Phase phase = Phase::kIdle;
  AbortReason abort_reason = AbortReason::kNone;
  std::optional<crypto::EcGroup> negotiated_group;
  std::optional<crypto::EcdhKeyPair> own_ephemeral;
  std::optional<crypto::CurvePoint> peer_ecdsa_public;
  std::optional<MacAddress> peer_mac;
  std::optional<crypto::SharedPsk> psk;
  std::optional<frames::SessionNonce> session_nonce;
  /// Malformed, invalid-point and bad-signature frames from the peer.
  unsigned verification_failures = 0;
};

struct StepResult {
  /// EAPOL body to transmit to the peer.
  std::optional<Bytes> reply;
  std::optional<DiscardReason> discard;
  bool psk_agreed = false;
};

/// The signed content of a SOAP Message. Strict mode signs the ECDH public key
/// alone; otherwise role tag, both addresses, group id and session nonce are
/// bound in front of it.
Bytes signature_input(bool strict, std::uint8_t role_tag, const MacAddress& sender, const MacAddress& receiver,
                      crypto::GroupId group, const frames::SessionNonce& nonce, ByteView ecdh_public_key);

inline constexpr std::uint8_t kMessage1Tag = 0x01;
inline constexpr std::uint8_t kMessage2Tag = 0x02;

/// Resolves an x-only ECDSA key from an IE; the key size selects the curve.
std::optional<crypto::CurvePoint> peer_key_from_ie(const frames::SoapIe& ie);

class ClientHandshake {
 public:
  ClientHandshake(StationIdentity identity, negotiation::GroupSet groups, HandshakeConfig config,
                  ReplayCache* cache = nullptr);

  struct AdvertisementResult {
    negotiation::NegotiationOutcome outcome;
    std::optional<frames::SoapIe> response;
  };

  /// Requires Idle. A malformed key leaves the state untouched.
  Result<AdvertisementResult, DiscardReason> on_advertisement(const frames::SoapIe& ie, const MacAddress& ap_mac);
  /// Association accepted; Message 1 is now expected.
  void on_associated();
  StepResult on_message1(ByteView eapol, RandomSource& rng);
  void abort(AbortReason reason);

  [[nodiscard]] const SoapSessionState& state() const noexcept { return state_; }
  [[nodiscard]] const StationIdentity& identity() const noexcept { return identity_; }
  [[nodiscard]] frames::SoapMessageLayout inbound_layout() const;

 private:
  StationIdentity identity_;
  negotiation::GroupSet groups_;
  HandshakeConfig config_;
  ReplayCache* cache_;
  SoapSessionState state_;
  Bytes accepted_msg1_;
  Bytes sent_msg2_;
};

class ApHandshake {
 public:
  ApHandshake(StationIdentity identity, negotiation::GroupSet groups, HandshakeConfig config,
              ReplayCache* cache = nullptr);

  /// Validates the Association Request's SOAP IE. An unknown group or key
  /// size aborts the session.
  Result<Ok, AbortReason> on_association(const MacAddress& client, const frames::SoapIe& ie);
  /// Draws the ephemeral key and nonce and returns the Message 1 body.
  Bytes send_message1(RandomSource& rng);
  /// Retransmits Message 1, or aborts once the retry budget is spent.
  std::optional<Bytes> on_timeout();
  StepResult on_message2(ByteView eapol);
  void abort(AbortReason reason);

  [[nodiscard]] const SoapSessionState& state() const noexcept { return state_; }
  [[nodiscard]] int retransmissions() const noexcept { return retransmissions_; }
  [[nodiscard]] frames::SoapMessageLayout inbound_layout() const;

 private:
  StationIdentity identity_;
  negotiation::GroupSet groups_;
  HandshakeConfig config_;
  ReplayCache* cache_;
  SoapSessionState state_;
  Bytes sent_msg1_;
  Bytes accepted_msg2_;
  int retransmissions_ = 0;
};

}  // namespace soap::handshake
