#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "soap/bytes.hpp"
#include "soap/random.hpp"
#include "soap/result.hpp"

namespace soap::crypto {

using GroupId = std::uint8_t;
using Digest = std::array<std::uint8_t, 32>;

/// A registered elliptic-curve group. Ids follow the IKEv2 Diffie-Hellman
/// transform numbers so they fit the one-octet group list entries.
struct EcGroup {
  GroupId id = 0;
  std::string_view name;
  std::size_t key_size_octets = 0;
  /// Prime group order n, big-endian, key_size_octets wide. Private scalars
  /// live in [1, n-1].
  Bytes order;

  friend bool operator==(const EcGroup& a, const EcGroup& b) { return a.id == b.id; }
};

inline constexpr GroupId kGroupP256 = 19;
inline constexpr GroupId kGroupP384 = 20;
inline constexpr GroupId kGroupP521 = 21;
inline constexpr GroupId kGroupP224 = 26;

std::optional<EcGroup> registry_lookup(GroupId id);
/// The unique registered group whose field width is `octets`.
std::optional<EcGroup> registry_lookup_by_key_size(std::size_t octets);
/// Every registered group, ordered by id.
std::span<const EcGroup> registered_groups();

/// Affine point with fixed-width big-endian coordinates. Not validated on
/// construction: points decoded from the wire may be off-curve.
struct CurvePoint {
  GroupId group = 0;
  Bytes x;
  Bytes y;

  /// x || y, 2s octets.
  [[nodiscard]] Bytes encode() const;
  static std::optional<CurvePoint> decode(const EcGroup& group, ByteView xy);

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// On the curve, coordinates reduced, and not the identity.
bool is_valid_public_point(const CurvePoint& point);

/// Recovers the even-y point with the given x coordinate.
std::optional<CurvePoint> decode_x_only(const EcGroup& group, ByteView x);

struct EcdhKeyPair {
  GroupId group = 0;
  Bytes private_scalar;
  CurvePoint public_point;

  /// Zeroes the private scalar in place.
  void wipe();
};

struct EcdsaKeyPair {
  GroupId group = 0;
  Bytes private_key;
  CurvePoint public_key;

  /// s-octet x coordinate; the key pair is generated with even y so this is
  /// a complete encoding.
  [[nodiscard]] Bytes public_key_x_only() const { return public_key.x; }
};

/// PSK_SOAP: 32 octets of SHA-256 output.
struct SharedPsk {
  std::array<std::uint8_t, 32> bytes{};

  friend bool operator==(const SharedPsk&, const SharedPsk&) = default;
};

enum class CryptoError {
  kInvalidPoint,
  kUnknownGroup,
  kScalarOutOfRange,
};
std::string_view to_string(CryptoError error);

EcdhKeyPair ecdh_generate(const EcGroup& group, RandomSource& rng);
/// Builds a key pair from an explicit scalar; used for known-answer tests.
Result<EcdhKeyPair, CryptoError> ecdh_from_private(const EcGroup& group, ByteView scalar);
/// Re-derives generator * scalar and compares with the stored public point.
bool keypair_consistent(GroupId group, ByteView scalar, const CurvePoint& point);

/// SHA-256 over the s-octet big-endian x coordinate of peer * own scalar.
Result<SharedPsk, CryptoError> ecdh_agree(const EcdhKeyPair& own, const CurvePoint& peer_public);

/// Long-term signing key with even y (d is replaced by n - d when needed).
EcdsaKeyPair ecdsa_generate(const EcGroup& group, RandomSource& rng);
/// Uses the scalar as given, without even-y canonicalization.
Result<EcdsaKeyPair, CryptoError> ecdsa_from_private(const EcGroup& group, ByteView scalar);

/// r || s, each key_size_octets wide. The nonce is derived from the key and
/// the SHA-256 digest of `message` (RFC 6979), so signing is deterministic.
/// Throws std::invalid_argument on an empty message.
Bytes ecdsa_sign(const EcdsaKeyPair& key, ByteView message);

enum class VerifyStatus {
  kAccept,
  kReject,
  kMalformedSignature,
  kInvalidKey,
};
std::string_view to_string(VerifyStatus status);

VerifyStatus ecdsa_verify(const CurvePoint& public_key, const EcGroup& group, ByteView message,
                          ByteView signature);

Digest sha256(ByteView data);
std::array<std::uint8_t, 20> hmac_sha1(ByteView key, ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

}  // namespace soap::crypto
