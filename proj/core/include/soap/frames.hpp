#pragma once

// Wire formats: the SOAP information element, SOAP Messages 1/2 (an EAPOL
// frame variant), 802.11 management-frame skeletons, EAPOL-Key frames, and the
// data frames that carry EAPOL bodies. All multi-octet integers are
// big-endian. FCS is never emitted or counted.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string_view>
#include <variant>
#include <vector>

#include "soap/bytes.hpp"
#include "soap/crypto.hpp"
#include "soap/result.hpp"

namespace soap::frames {

inline constexpr std::uint8_t kSoapElementId = 251;
/// Trailing element carrying an ECDSA signature over a management frame.
inline constexpr std::uint8_t kMgmtSignatureElementId = 252;
inline constexpr std::uint8_t kSsidElementId = 0;
inline constexpr std::uint8_t kSupportedRatesElementId = 1;
inline constexpr std::uint8_t kDsParameterElementId = 3;
inline constexpr std::uint8_t kTimElementId = 5;
inline constexpr std::uint8_t kRsnElementId = 48;

inline constexpr std::uint8_t kSoapProtocolVersion = 0xff;
inline constexpr std::uint8_t kSoapPacketType = 0xff;
inline constexpr std::uint8_t kEapolVersion = 0x02;
inline constexpr std::uint8_t kEapolKeyPacketType = 0x03;
inline constexpr std::uint8_t kRsnKeyDescriptor = 0x02;

inline constexpr std::size_t kMacHeaderOctets = 24;
inline constexpr std::size_t kLlcSnapOctets = 8;
inline constexpr std::size_t kEapolHeaderOctets = 4;
inline constexpr std::size_t kEapolKeyFixedOctets = 95;
inline constexpr std::size_t kSessionNonceOctets = 8;
inline constexpr std::size_t kMaxElementPayload = 255;

enum class CodecError {
  kTruncated,
  kLengthMismatch,
  kWrongElementId,
  kWrongVersion,
  kWrongPacketType,
  kOversize,
  kUnknownFrameType,
  kTrailingData,
};
std::string_view to_string(CodecError error);

template <class T>
using Parsed = Result<T, CodecError>;

// ---------------------------------------------------------------------------
// SOAP IE: EID(1) Length(1) | m(1) group list(m) s(1) ECDSA public key(s)

struct SoapIe {
  std::vector<crypto::GroupId> group_list;
  /// x-only ECDSA public key; its length is the advertised key size s.
  Bytes ecdsa_public_key;

  [[nodiscard]] std::size_t group_count() const noexcept { return group_list.size(); }
  [[nodiscard]] std::size_t key_size() const noexcept { return ecdsa_public_key.size(); }

  friend bool operator==(const SoapIe&, const SoapIe&) = default;
};

/// Encoded size: 2-octet element header plus 2 + m + s information octets.
constexpr std::size_t soap_ie_size(std::size_t m, std::size_t s) { return 4 + m + s; }

Parsed<Bytes> encode_soap_ie(const SoapIe& ie);
/// Parses one complete element (header included); trailing octets are an error.
Parsed<SoapIe> parse_soap_ie(ByteView bytes);
/// Parses only the Information field of an element whose id is already known.
Parsed<SoapIe> parse_soap_ie_payload(ByteView payload);

// ---------------------------------------------------------------------------
// SOAP Message: EAPOL header (version 0xff, type 0xff, body length) followed by
// ECDH public key (x || y), ECDSA signature (r || s), and optionally the
// 8-octet session nonce extension.

using SessionNonce = std::array<std::uint8_t, kSessionNonceOctets>;

struct SoapMessage {
  Bytes ecdh_public_key;
  Bytes ecdsa_signature;
  std::optional<SessionNonce> session_nonce;

  friend bool operator==(const SoapMessage&, const SoapMessage&) = default;
};

/// Field widths agreed during negotiation; the body length alone cannot
/// separate the key from the signature.
struct SoapMessageLayout {
  std::size_t ecdh_key_octets = 0;
  std::size_t signature_octets = 0;
  bool nonce_extension = false;

  [[nodiscard]] std::size_t body_octets() const noexcept {
    return ecdh_key_octets + signature_octets + (nonce_extension ? kSessionNonceOctets : 0);
  }
  static SoapMessageLayout for_groups(const crypto::EcGroup& ecdh, const crypto::EcGroup& ecdsa, bool strict) {
    return {2 * ecdh.key_size_octets, 2 * ecdsa.key_size_octets, !strict};
  }
};

Bytes encode_soap_message(const SoapMessage& msg);
Parsed<SoapMessage> parse_soap_message(ByteView bytes, const SoapMessageLayout& layout);
/// True when the EAPOL header carries the SOAP version/type pair.
bool is_soap_eapol(ByteView eapol);

// ---------------------------------------------------------------------------
// EAPOL-Key (RSN descriptor)

struct EapolKeyFrame {
  std::uint8_t protocol_version = kEapolVersion;
  std::uint8_t descriptor_type = kRsnKeyDescriptor;
  std::uint16_t key_info = 0;
  std::uint16_t key_length = 0;
  std::uint64_t replay_counter = 0;
  std::array<std::uint8_t, 32> key_nonce{};
  std::array<std::uint8_t, 16> key_iv{};
  std::array<std::uint8_t, 8> key_rsc{};
  std::array<std::uint8_t, 8> key_id{};
  std::array<std::uint8_t, 16> key_mic{};
  Bytes key_data;

  friend bool operator==(const EapolKeyFrame&, const EapolKeyFrame&) = default;
};

namespace key_info {
inline constexpr std::uint16_t kVersionHmacSha1Aes = 0x0002;
inline constexpr std::uint16_t kPairwise = 0x0008;
inline constexpr std::uint16_t kInstall = 0x0040;
inline constexpr std::uint16_t kAck = 0x0080;
inline constexpr std::uint16_t kMic = 0x0100;
inline constexpr std::uint16_t kSecure = 0x0200;
inline constexpr std::uint16_t kEncryptedKeyData = 0x1000;
}  // namespace key_info

/// EAPOL header (version 2, type Key) followed by the descriptor body.
Bytes encode_eapol_key(const EapolKeyFrame& frame);
Parsed<EapolKeyFrame> parse_eapol_key(ByteView bytes);

// ---------------------------------------------------------------------------
// 802.11 frames

enum class MgmtSubtype : std::uint8_t {
  kAssociationRequest = 0,
  kAssociationResponse = 1,
  kProbeResponse = 5,
  kBeacon = 8,
  kDisassociation = 10,
};
std::string_view to_string(MgmtSubtype subtype);

/// Fixed (non-element) body width: Beacon/ProbeResponse 12, AssociationRequest
/// 4, AssociationResponse 6, Disassociation 2.
std::size_t fixed_body_octets(MgmtSubtype subtype);

struct Element {
  std::uint8_t id = 0;
  Bytes payload;

  friend bool operator==(const Element&, const Element&) = default;
};

struct ManagementFrame {
  MgmtSubtype subtype = MgmtSubtype::kBeacon;
  MacAddress dest;
  MacAddress source;
  MacAddress bssid;
  /// Exactly fixed_body_octets(subtype) wide; zero-filled when empty.
  Bytes fixed_body;
  std::vector<Element> elements;
  /// ECDSA r || s over signing_input(), carried as a trailing element.
  std::optional<Bytes> signature;

  [[nodiscard]] const Element* find(std::uint8_t id) const;

  friend bool operator==(const ManagementFrame&, const ManagementFrame&) = default;
};

Parsed<Bytes> encode_management_frame(const ManagementFrame& frame);
/// Serialized frame without the signature element; the signed content.
Parsed<Bytes> management_signing_input(const ManagementFrame& frame);
Parsed<ManagementFrame> parse_management_frame(ByteView bytes);

struct ElementScan {
  std::vector<Element> recognized;
  std::size_t skipped = 0;
};

/// Walks the element list of a serialized management frame. Elements whose id
/// is not in `known_ids` are skipped silently; only structural corruption is an
/// error.
Parsed<ElementScan> extract_elements(ByteView frame, const std::set<std::uint8_t>& known_ids);

/// Data frame carrying an EAPOL body behind an LLC/SNAP header (EtherType
/// 0x888e).
struct DataFrame {
  MacAddress dest;
  MacAddress source;
  MacAddress bssid;
  Bytes eapol;

  friend bool operator==(const DataFrame&, const DataFrame&) = default;
};

Bytes encode_data_frame(const DataFrame& frame);
Parsed<DataFrame> parse_data_frame(ByteView bytes);

using AnyFrame = std::variant<ManagementFrame, DataFrame>;
Parsed<AnyFrame> parse_frame(ByteView bytes);

// ---------------------------------------------------------------------------
// Size accounting (MAC header included, FCS excluded)

std::size_t frame_wire_size(const ManagementFrame& frame);
std::size_t frame_wire_size(const SoapMessage& msg);
std::size_t frame_wire_size(const EapolKeyFrame& frame);
std::size_t frame_wire_size(const DataFrame& frame);

/// 36 + 4s for equal ECDH/ECDSA widths in strict mode; +8 with the nonce.
constexpr std::size_t soap_message_wire_size(std::size_t s, bool nonce_extension) {
  return kMacHeaderOctets + kLlcSnapOctets + kEapolHeaderOctets + 4 * s + (nonce_extension ? kSessionNonceOctets : 0);
}

}  // namespace soap::frames
