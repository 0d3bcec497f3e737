#include "soap/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/sha.h>

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace soap::crypto {
namespace {

struct BnDeleter {
  void operator()(BIGNUM* bn) const { BN_clear_free(bn); }
};
struct BnCtxDeleter {
  void operator()(BN_CTX* ctx) const { BN_CTX_free(ctx); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_clear_free(p); }
};
struct GroupDeleter {
  void operator()(EC_GROUP* g) const { EC_GROUP_free(g); }
};

using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;
using GroupPtr = std::unique_ptr<EC_GROUP, GroupDeleter>;

[[noreturn]] void openssl_failure(const char* what) {
  throw std::runtime_error(std::string("libcrypto failure: ") + what);
}

BnPtr new_bn() {
  BnPtr bn(BN_new());
  if (!bn) openssl_failure("BN_new");
  return bn;
}

BnPtr bn_from(ByteView bytes) {
  BnPtr bn(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!bn) openssl_failure("BN_bin2bn");
  return bn;
}

Bytes bn_to(const BIGNUM* bn, std::size_t width) {
  Bytes out(width);
  if (BN_bn2binpad(bn, out.data(), static_cast<int>(width)) < 0) openssl_failure("BN_bn2binpad");
  return out;
}

BnCtxPtr new_ctx() {
  BnCtxPtr ctx(BN_CTX_new());
  if (!ctx) openssl_failure("BN_CTX_new");
  return ctx;
}

struct CurveEntry {
  EcGroup info;
  int nid;
  GroupPtr group;
  BnPtr order;
  BnPtr field;
  int order_bits;
};

std::vector<CurveEntry> build_registry() {
  struct Def {
    GroupId id;
    std::string_view name;
    int nid;
  };
  static constexpr Def kDefs[] = {
      {kGroupP256, "256-bit random ECP (P-256)", NID_X9_62_prime256v1},
      {kGroupP384, "384-bit random ECP (P-384)", NID_secp384r1},
      {kGroupP521, "521-bit random ECP (P-521)", NID_secp521r1},
      {kGroupP224, "224-bit random ECP (P-224)", NID_secp224r1},
  };
  std::vector<CurveEntry> entries;
  auto ctx = new_ctx();
  for (const auto& def : kDefs) {
    CurveEntry e;
    e.nid = def.nid;
    e.group.reset(EC_GROUP_new_by_curve_name(def.nid));
    if (!e.group) openssl_failure("EC_GROUP_new_by_curve_name");
    e.order = new_bn();
    e.field = new_bn();
    if (!EC_GROUP_get_order(e.group.get(), e.order.get(), ctx.get())) openssl_failure("EC_GROUP_get_order");
    if (!EC_GROUP_get_curve(e.group.get(), e.field.get(), nullptr, nullptr, ctx.get())) {
      openssl_failure("EC_GROUP_get_curve");
    }
    e.order_bits = BN_num_bits(e.order.get());
    e.info.id = def.id;
    e.info.name = def.name;
    e.info.key_size_octets = static_cast<std::size_t>((EC_GROUP_get_degree(e.group.get()) + 7) / 8);
    e.info.order = bn_to(e.order.get(), e.info.key_size_octets);
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const CurveEntry& a, const CurveEntry& b) { return a.info.id < b.info.id; });
  return entries;
}

const std::vector<CurveEntry>& registry() {
  static const std::vector<CurveEntry> entries = build_registry();
  return entries;
}

const std::vector<EcGroup>& registry_infos() {
  static const std::vector<EcGroup> infos = [] {
    std::vector<EcGroup> out;
    for (const auto& e : registry()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

const CurveEntry* find_entry(GroupId id) {
  for (const auto& e : registry()) {
    if (e.info.id == id) return &e;
  }
  return nullptr;
}

const CurveEntry& require_entry(GroupId id) {
  const auto* e = find_entry(id);
  if (!e) throw std::invalid_argument("unregistered elliptic-curve group " + std::to_string(id));
  return *e;
}

// Converts a wire point into an OpenSSL point. Returns null when the
// coordinates are out of range or off the curve, or the point is the identity.
PointPtr to_ec_point(const CurveEntry& curve, const CurvePoint& point, BN_CTX* ctx) {
  const auto width = curve.info.key_size_octets;
  if (point.group != curve.info.id || point.x.size() != width || point.y.size() != width) return nullptr;
  auto x = bn_from(point.x);
  auto y = bn_from(point.y);
  if (BN_cmp(x.get(), curve.field.get()) >= 0 || BN_cmp(y.get(), curve.field.get()) >= 0) return nullptr;
  PointPtr p(EC_POINT_new(curve.group.get()));
  if (!p) openssl_failure("EC_POINT_new");
  if (!EC_POINT_set_affine_coordinates(curve.group.get(), p.get(), x.get(), y.get(), ctx)) return nullptr;
  if (EC_POINT_is_at_infinity(curve.group.get(), p.get())) return nullptr;
  if (EC_POINT_is_on_curve(curve.group.get(), p.get(), ctx) != 1) return nullptr;
  return p;
}

CurvePoint from_ec_point(const CurveEntry& curve, const EC_POINT* p, BN_CTX* ctx) {
  auto x = new_bn();
  auto y = new_bn();
  if (!EC_POINT_get_affine_coordinates(curve.group.get(), p, x.get(), y.get(), ctx)) {
    openssl_failure("EC_POINT_get_affine_coordinates");
  }
  const auto width = curve.info.key_size_octets;
  return CurvePoint{curve.info.id, bn_to(x.get(), width), bn_to(y.get(), width)};
}

CurvePoint multiply_generator(const CurveEntry& curve, const BIGNUM* scalar, BN_CTX* ctx) {
  PointPtr p(EC_POINT_new(curve.group.get()));
  if (!p) openssl_failure("EC_POINT_new");
  if (!EC_POINT_mul(curve.group.get(), p.get(), scalar, nullptr, nullptr, ctx)) openssl_failure("EC_POINT_mul");
  return from_ec_point(curve, p.get(), ctx);
}

bool scalar_in_range(const CurveEntry& curve, const BIGNUM* k) {
  return !BN_is_zero(k) && !BN_is_negative(k) && BN_cmp(k, curve.order.get()) < 0;
}

// Rejection sampling over order_bits-wide candidates.
BnPtr random_scalar(const CurveEntry& curve, RandomSource& rng) {
  const auto width = curve.info.key_size_octets;
  const int excess_bits = static_cast<int>(width * 8) - curve.order_bits;
  Bytes buf(width);
  while (true) {
    rng.fill(buf);
    if (excess_bits > 0) buf[0] &= static_cast<std::uint8_t>(0xff >> excess_bits);
    auto k = bn_from(buf);
    secure_zero(buf);
    if (scalar_in_range(curve, k.get())) return k;
  }
}

// Leftmost order_bits bits of the input, as an integer (RFC 6979 bits2int).
BnPtr bits_to_int(const CurveEntry& curve, ByteView bits) {
  auto v = bn_from(bits);
  const int blen = static_cast<int>(bits.size() * 8);
  if (blen > curve.order_bits) {
    if (!BN_rshift(v.get(), v.get(), blen - curve.order_bits)) openssl_failure("BN_rshift");
  }
  return v;
}

bool is_odd(ByteView big_endian) { return !big_endian.empty() && (big_endian.back() & 1); }

}  // namespace

std::string_view to_string(CryptoError error) {
  switch (error) {
    case CryptoError::kInvalidPoint: return "invalid-point";
    case CryptoError::kUnknownGroup: return "unknown-group";
    case CryptoError::kScalarOutOfRange: return "scalar-out-of-range";
  }
  return "unknown";
}

std::string_view to_string(VerifyStatus status) {
  switch (status) {
    case VerifyStatus::kAccept: return "accept";
    case VerifyStatus::kReject: return "reject";
    case VerifyStatus::kMalformedSignature: return "malformed-signature";
    case VerifyStatus::kInvalidKey: return "invalid-key";
  }
  return "unknown";
}

std::optional<EcGroup> registry_lookup(GroupId id) {
  if (const auto* e = find_entry(id)) return e->info;
  return std::nullopt;
}

std::optional<EcGroup> registry_lookup_by_key_size(std::size_t octets) {
  for (const auto& e : registry()) {
    if (e.info.key_size_octets == octets) return e.info;
  }
  return std::nullopt;
}

std::span<const EcGroup> registered_groups() { return registry_infos(); }

Bytes CurvePoint::encode() const {
  Bytes out = x;
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

std::optional<CurvePoint> CurvePoint::decode(const EcGroup& group, ByteView xy) {
  const auto s = group.key_size_octets;
  if (xy.size() != 2 * s) return std::nullopt;
  return CurvePoint{group.id, Bytes(xy.begin(), xy.begin() + s), Bytes(xy.begin() + s, xy.end())};
}

bool is_valid_public_point(const CurvePoint& point) {
  const auto* curve = find_entry(point.group);
  if (!curve) return false;
  auto ctx = new_ctx();
  return to_ec_point(*curve, point, ctx.get()) != nullptr;
}

std::optional<CurvePoint> decode_x_only(const EcGroup& group, ByteView x) {
  const auto* curve = find_entry(group.id);
  if (!curve || x.size() != group.key_size_octets) return std::nullopt;
  auto ctx = new_ctx();
  auto xb = bn_from(x);
  if (BN_cmp(xb.get(), curve->field.get()) >= 0) return std::nullopt;
  PointPtr p(EC_POINT_new(curve->group.get()));
  if (!p) openssl_failure("EC_POINT_new");
  if (!EC_POINT_set_compressed_coordinates(curve->group.get(), p.get(), xb.get(), 0, ctx.get())) {
    return std::nullopt;
  }
  if (EC_POINT_is_at_infinity(curve->group.get(), p.get())) return std::nullopt;
  return from_ec_point(*curve, p.get(), ctx.get());
}

void EcdhKeyPair::wipe() { secure_zero(private_scalar); }

EcdhKeyPair ecdh_generate(const EcGroup& group, RandomSource& rng) {
  const auto& curve = require_entry(group.id);
  auto ctx = new_ctx();
  auto k = random_scalar(curve, rng);
  return EcdhKeyPair{group.id, bn_to(k.get(), curve.info.key_size_octets),
                     multiply_generator(curve, k.get(), ctx.get())};
}

Result<EcdhKeyPair, CryptoError> ecdh_from_private(const EcGroup& group, ByteView scalar) {
  const auto* curve = find_entry(group.id);
  if (!curve) return fail(CryptoError::kUnknownGroup);
  auto k = bn_from(scalar);
  if (!scalar_in_range(*curve, k.get())) return fail(CryptoError::kScalarOutOfRange);
  auto ctx = new_ctx();
  return EcdhKeyPair{group.id, bn_to(k.get(), curve->info.key_size_octets),
                     multiply_generator(*curve, k.get(), ctx.get())};
}

bool keypair_consistent(GroupId group, ByteView scalar, const CurvePoint& point) {
  const auto* curve = find_entry(group);
  if (!curve) return false;
  auto k = bn_from(scalar);
  if (!scalar_in_range(*curve, k.get())) return false;
  auto ctx = new_ctx();
  return multiply_generator(*curve, k.get(), ctx.get()) == point;
}

Result<SharedPsk, CryptoError> ecdh_agree(const EcdhKeyPair& own, const CurvePoint& peer_public) {
  const auto* curve = find_entry(own.group);
  if (!curve) return fail(CryptoError::kUnknownGroup);
  auto ctx = new_ctx();
  auto peer = to_ec_point(*curve, peer_public, ctx.get());
  if (!peer) return fail(CryptoError::kInvalidPoint);
  auto k = bn_from(own.private_scalar);
  if (!scalar_in_range(*curve, k.get())) return fail(CryptoError::kScalarOutOfRange);

  PointPtr shared(EC_POINT_new(curve->group.get()));
  if (!shared) openssl_failure("EC_POINT_new");
  if (!EC_POINT_mul(curve->group.get(), shared.get(), nullptr, peer.get(), k.get(), ctx.get())) {
    openssl_failure("EC_POINT_mul");
  }
  // Prime-order curves: a valid peer point times an in-range scalar is never
  // the identity.
  if (EC_POINT_is_at_infinity(curve->group.get(), shared.get())) return fail(CryptoError::kInvalidPoint);

  auto point = from_ec_point(*curve, shared.get(), ctx.get());
  SharedPsk psk;
  psk.bytes = sha256(point.x);
  secure_zero(point.x);
  secure_zero(point.y);
  return psk;
}

EcdsaKeyPair ecdsa_generate(const EcGroup& group, RandomSource& rng) {
  const auto& curve = require_entry(group.id);
  auto ctx = new_ctx();
  auto d = random_scalar(curve, rng);
  auto q = multiply_generator(curve, d.get(), ctx.get());
  if (is_odd(q.y)) {
    // -Q has the same x and even y.
    if (!BN_sub(d.get(), curve.order.get(), d.get())) openssl_failure("BN_sub");
    q = multiply_generator(curve, d.get(), ctx.get());
  }
  return EcdsaKeyPair{group.id, bn_to(d.get(), curve.info.key_size_octets), std::move(q)};
}

Result<EcdsaKeyPair, CryptoError> ecdsa_from_private(const EcGroup& group, ByteView scalar) {
  const auto* curve = find_entry(group.id);
  if (!curve) return fail(CryptoError::kUnknownGroup);
  auto d = bn_from(scalar);
  if (!scalar_in_range(*curve, d.get())) return fail(CryptoError::kScalarOutOfRange);
  auto ctx = new_ctx();
  return EcdsaKeyPair{group.id, bn_to(d.get(), curve->info.key_size_octets),
                      multiply_generator(*curve, d.get(), ctx.get())};
}

Bytes ecdsa_sign(const EcdsaKeyPair& key, ByteView message) {
  if (message.empty()) throw std::invalid_argument("ecdsa_sign: empty message");
  const auto& curve = require_entry(key.group);
  const auto width = curve.info.key_size_octets;
  const BIGNUM* n = curve.order.get();
  auto ctx = new_ctx();

  const Digest h1 = sha256(message);
  auto d = bn_from(key.private_key);
  auto e = bits_to_int(curve, h1);

  // RFC 6979 section 3.2, HMAC-SHA-256.
  auto h1_reduced = new_bn();
  if (!BN_nnmod(h1_reduced.get(), e.get(), n, ctx.get())) openssl_failure("BN_nnmod");
  Bytes x_octets = bn_to(d.get(), width);
  Bytes h1_octets = bn_to(h1_reduced.get(), width);

  Bytes v(32, 0x01);
  Bytes k_mac(32, 0x00);
  auto update = [&](std::uint8_t separator, bool with_inputs) {
    Bytes in = v;
    in.push_back(separator);
    if (with_inputs) {
      in.insert(in.end(), x_octets.begin(), x_octets.end());
      in.insert(in.end(), h1_octets.begin(), h1_octets.end());
    }
    auto next = hmac_sha256(k_mac, in);
    k_mac.assign(next.begin(), next.end());
    auto nv = hmac_sha256(k_mac, v);
    v.assign(nv.begin(), nv.end());
    secure_zero(in);
  };
  update(0x00, true);
  update(0x01, true);

  auto r = new_bn();
  auto s = new_bn();
  auto k_inv = new_bn();
  auto tmp = new_bn();
  while (true) {
    Bytes t;
    while (t.size() < width) {
      auto nv = hmac_sha256(k_mac, v);
      v.assign(nv.begin(), nv.end());
      t.insert(t.end(), v.begin(), v.end());
    }
    t.resize(width);
    auto k = bits_to_int(curve, t);
    secure_zero(t);
    if (scalar_in_range(curve, k.get())) {
      PointPtr kg(EC_POINT_new(curve.group.get()));
      if (!kg) openssl_failure("EC_POINT_new");
      if (!EC_POINT_mul(curve.group.get(), kg.get(), k.get(), nullptr, nullptr, ctx.get())) {
        openssl_failure("EC_POINT_mul");
      }
      if (!EC_POINT_get_affine_coordinates(curve.group.get(), kg.get(), r.get(), nullptr, ctx.get())) {
        openssl_failure("EC_POINT_get_affine_coordinates");
      }
      if (!BN_nnmod(r.get(), r.get(), n, ctx.get())) openssl_failure("BN_nnmod");
      if (!BN_is_zero(r.get())) {
        // s = k^-1 (e + r d) mod n
        if (!BN_mod_inverse(k_inv.get(), k.get(), n, ctx.get())) openssl_failure("BN_mod_inverse");
        if (!BN_mod_mul(tmp.get(), r.get(), d.get(), n, ctx.get())) openssl_failure("BN_mod_mul");
        if (!BN_mod_add(tmp.get(), tmp.get(), e.get(), n, ctx.get())) openssl_failure("BN_mod_add");
        if (!BN_mod_mul(s.get(), k_inv.get(), tmp.get(), n, ctx.get())) openssl_failure("BN_mod_mul");
        if (!BN_is_zero(s.get())) break;
      }
    }
    update(0x00, false);
  }
  secure_zero(x_octets);

  Bytes signature = bn_to(r.get(), width);
  Bytes s_octets = bn_to(s.get(), width);
  signature.insert(signature.end(), s_octets.begin(), s_octets.end());
  return signature;
}

VerifyStatus ecdsa_verify(const CurvePoint& public_key, const EcGroup& group, ByteView message,
                          ByteView signature) {
  const auto* curve = find_entry(group.id);
  if (!curve) return VerifyStatus::kInvalidKey;
  const auto width = curve->info.key_size_octets;
  if (signature.size() != 2 * width) return VerifyStatus::kMalformedSignature;

  auto ctx = new_ctx();
  auto q = to_ec_point(*curve, public_key, ctx.get());
  if (!q) return VerifyStatus::kInvalidKey;

  auto r = bn_from(signature.first(width));
  auto s = bn_from(signature.subspan(width));
  if (!scalar_in_range(*curve, r.get()) || !scalar_in_range(*curve, s.get())) {
    return VerifyStatus::kMalformedSignature;
  }
  const BIGNUM* n = curve->order.get();
  auto e = bits_to_int(*curve, sha256(message));
  auto w = new_bn();
  auto u1 = new_bn();
  auto u2 = new_bn();
  if (!BN_mod_inverse(w.get(), s.get(), n, ctx.get())) openssl_failure("BN_mod_inverse");
  if (!BN_mod_mul(u1.get(), e.get(), w.get(), n, ctx.get())) openssl_failure("BN_mod_mul");
  if (!BN_mod_mul(u2.get(), r.get(), w.get(), n, ctx.get())) openssl_failure("BN_mod_mul");

  PointPtr rp(EC_POINT_new(curve->group.get()));
  if (!rp) openssl_failure("EC_POINT_new");
  if (!EC_POINT_mul(curve->group.get(), rp.get(), u1.get(), q.get(), u2.get(), ctx.get())) {
    openssl_failure("EC_POINT_mul");
  }
  if (EC_POINT_is_at_infinity(curve->group.get(), rp.get())) return VerifyStatus::kReject;
  auto x = new_bn();
  if (!EC_POINT_get_affine_coordinates(curve->group.get(), rp.get(), x.get(), nullptr, ctx.get())) {
    openssl_failure("EC_POINT_get_affine_coordinates");
  }
  if (!BN_nnmod(x.get(), x.get(), n, ctx.get())) openssl_failure("BN_nnmod");
  return BN_cmp(x.get(), r.get()) == 0 ? VerifyStatus::kAccept : VerifyStatus::kReject;
}

Digest sha256(ByteView data) {
  Digest out{};
  if (!SHA256(data.data(), data.size(), out.data())) openssl_failure("SHA256");
  return out;
}

std::array<std::uint8_t, 20> hmac_sha1(ByteView key, ByteView data) {
  std::array<std::uint8_t, 20> out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha1(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len)) {
    openssl_failure("HMAC-SHA1");
  }
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len)) {
    openssl_failure("HMAC-SHA256");
  }
  return out;
}

}  // namespace soap::crypto
