#include "soap/crypto.hpp"

#include <gtest/gtest.h>

#include <set>

#include "oracles/ec_oracle.hpp"

namespace {

using namespace soap;
using namespace soap::crypto;

Bytes hex(std::string_view text) { return *from_hex(text); }

EcGroup group(GroupId id) { return *registry_lookup(id); }

// Frozen by tests/oracles/gen_vectors.py (pure-Python double-and-add).
struct EcdhVector {
  GroupId group;
  const char* client_scalar;
  const char* ap_scalar;
  const char* ap_public_x;
  const char* ap_public_y;
  const char* psk;
};

constexpr EcdhVector kEcdhVectors[] = {
    {26, "ac5f4dbca7d97935fb841d95ded060c9fb5a4fb51204766a65845bfb",
     "3c8a52a4ec8aaf4dcebb6462d95f0db5a9f68546d7feaa52f9bcec41",
     "a7ad6a58369b1793800deba480a83974f11c1d58934a1b8e1c72d1b1",
     "2895233f69354cd1016b8e91776ba30ac7a9bffa01fd626e016bd676",
     "757b770c217d3c1eb19a96b21845dfb49ad021513e35b7940b6a48ac887da555"},
    {19, "74f11b68c50203feb8172f2d6f0d8a057084ef7ac47e334a840559a8cf492204",
     "3543e8502c00635f68321a205b5a36c6b920e6e0a0d15b84facb53532c1c66f4",
     "7ac9080cfa1c2f97c38862b72859c73e445326855d0933cd7be76eecb3b38a0f",
     "d875fec5c1c271879245dc81e0c55a330caea57739d0f514c137b99fa8eec8db",
     "c7ed8f9ab52a96fe553b1faea0f9e27ee6ab43ce0e3ff256f80041a8e4b74e5d"},
};

TEST(Registry, LookupKnownAndUnknownIds) {
  auto p224 = registry_lookup(26);
  ASSERT_TRUE(p224);
  EXPECT_EQ(p224->key_size_octets, 28u);
  auto p256 = registry_lookup(19);
  ASSERT_TRUE(p256);
  EXPECT_EQ(p256->key_size_octets, 32u);
  EXPECT_EQ(registry_lookup(20)->key_size_octets, 48u);
  EXPECT_EQ(registry_lookup(21)->key_size_octets, 66u);
  EXPECT_FALSE(registry_lookup(0));
  EXPECT_FALSE(registry_lookup(251));
}

TEST(Registry, InvariantsHold) {
  std::set<GroupId> ids;
  for (const auto& g : registered_groups()) {
    EXPECT_TRUE(ids.insert(g.id).second) << "duplicate id " << int(g.id);
    EXPECT_GT(g.key_size_octets, 0u);
    EXPECT_EQ(g.order.size(), g.key_size_octets);
    EXPECT_EQ(registry_lookup_by_key_size(g.key_size_octets)->id, g.id);
    // order_p > 3
    EXPECT_GT(oracle::from_bytes(g.order), 3);
    EXPECT_EQ(oracle::from_bytes(g.order), oracle::curve_for(g.id).n);
  }
  EXPECT_EQ(ids.size(), 4u);
}

TEST(Ecdh, GenerationIsDeterministicUnderSeed) {
  RandomSource a(7), b(7), c(8);
  auto k1 = ecdh_generate(group(26), a);
  auto k2 = ecdh_generate(group(26), b);
  auto k3 = ecdh_generate(group(26), c);
  EXPECT_EQ(k1.private_scalar, k2.private_scalar);
  EXPECT_EQ(k1.public_point, k2.public_point);
  EXPECT_NE(k1.private_scalar, k3.private_scalar);
}

TEST(Ecdh, GeneratedPointsAreOnCurveAndConsistent) {
  RandomSource rng(1);
  for (const auto& g : registered_groups()) {
    for (int i = 0; i < 5; ++i) {
      auto kp = ecdh_generate(g, rng);
      EXPECT_TRUE(is_valid_public_point(kp.public_point));
      EXPECT_TRUE(keypair_consistent(g.id, kp.private_scalar, kp.public_point));
      EXPECT_EQ(kp.private_scalar.size(), g.key_size_octets);
      EXPECT_EQ(kp.public_point.encode().size(), 2 * g.key_size_octets);
      const auto& c = oracle::curve_for(g.id);
      EXPECT_TRUE(oracle::on_curve(c, oracle::from_bytes(kp.public_point.x), oracle::from_bytes(kp.public_point.y)));
    }
  }
}

TEST(Ecdh, AgreementIsSymmetric) {
  RandomSource rng(99);
  for (const auto& g : registered_groups()) {
    for (int i = 0; i < 10; ++i) {
      auto client = ecdh_generate(g, rng);
      auto ap = ecdh_generate(g, rng);
      auto at_client = ecdh_agree(client, ap.public_point);
      auto at_ap = ecdh_agree(ap, client.public_point);
      ASSERT_TRUE(at_client && at_ap);
      EXPECT_EQ(at_client->bytes, at_ap->bytes);
    }
  }
}

TEST(Ecdh, KnownAnswerVectors) {
  for (const auto& v : kEcdhVectors) {
    auto client = ecdh_from_private(group(v.group), hex(v.client_scalar));
    ASSERT_TRUE(client);
    CurvePoint ap_public{v.group, hex(v.ap_public_x), hex(v.ap_public_y)};
    auto psk = ecdh_agree(*client, ap_public);
    ASSERT_TRUE(psk);
    EXPECT_EQ(to_hex(psk->bytes), v.psk);
    auto ap = ecdh_from_private(group(v.group), hex(v.ap_scalar));
    ASSERT_TRUE(ap);
    EXPECT_EQ(ap->public_point, ap_public);
  }
}

TEST(Ecdh, RejectsInvalidPeerPoints) {
  RandomSource rng(3);
  auto own = ecdh_generate(group(26), rng);
  auto peer = ecdh_generate(group(26), rng).public_point;

  auto off_curve = peer;
  off_curve.y.back() ^= 1;
  auto r = ecdh_agree(own, off_curve);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error(), CryptoError::kInvalidPoint);

  CurvePoint zero{26, Bytes(28, 0), Bytes(28, 0)};
  EXPECT_FALSE(ecdh_agree(own, zero));

  CurvePoint short_coords{26, Bytes(27, 1), Bytes(28, 1)};
  EXPECT_FALSE(ecdh_agree(own, short_coords));

  // Same coordinates tagged with another group.
  auto wrong_group = peer;
  wrong_group.group = 19;
  EXPECT_FALSE(ecdh_agree(own, wrong_group));

  // x beyond the field prime.
  CurvePoint huge{26, Bytes(28, 0xff), Bytes(28, 0xff)};
  EXPECT_FALSE(ecdh_agree(own, huge));
}

TEST(Ecdh, FromPrivateRejectsOutOfRangeScalars) {
  auto g = group(26);
  EXPECT_FALSE(ecdh_from_private(g, Bytes(28, 0)));
  EXPECT_FALSE(ecdh_from_private(g, g.order));
  Bytes n_minus_one = g.order;
  n_minus_one.back() -= 1;
  EXPECT_TRUE(ecdh_from_private(g, n_minus_one));
}

TEST(Ecdh, MatchesIndependentOracleOnRandomScalars) {
  RandomSource rng(2024);
  for (const auto& g : registered_groups()) {
    const auto& c = oracle::curve_for(g.id);
    for (int i = 0; i < 3; ++i) {
      auto a = ecdh_generate(g, rng);
      auto b = ecdh_generate(g, rng);
      auto shared = oracle::multiply(c, oracle::from_bytes(a.private_scalar),
                                     oracle::Point(std::make_pair(oracle::from_bytes(b.public_point.x),
                                                                  oracle::from_bytes(b.public_point.y))));
      ASSERT_TRUE(shared);
      auto expected = sha256(oracle::to_bytes(shared->first, g.key_size_octets));
      EXPECT_EQ(ecdh_agree(a, b.public_point)->bytes, expected);
    }
  }
}

// RFC 6979 A.2.4 / A.2.5 (SHA-256, message "sample"), cross-checked with the
// cryptography package's deterministic signer in gen_vectors.py.
TEST(Ecdsa, DeterministicNonceKnownAnswers) {
  const Bytes sample = {'s', 'a', 'm', 'p', 'l', 'e'};
  struct Kat {
    GroupId group;
    const char* d;
    const char* r;
    const char* s;
  };
  const Kat kats[] = {
      {26, "f220266e1105bfe3083e03ec7a3a654651f45e37167e88600bf257c1",
       "61aa3da010e8e8406c656bc477a7a7189895e7e840cdfe8ff42307ba",
       "bc814050dab5d23770879494f9e0a680dc1af7161991bde692b10101"},
      {19, "c9afa9d845ba75166b5c215767b1d6934e50c3db36e89b127b8a622b120f6721",
       "efd48b2aacb6a8fd1140dd9cd45e81d69d2c877b56aaf991c34d0ea84eaf3716",
       "f7cb1c942d657c41d436c7a1b6e29f65f3e900dbb9aff4064dc4ab2f843acda8"},
  };
  for (const auto& kat : kats) {
    auto key = ecdsa_from_private(group(kat.group), hex(kat.d));
    ASSERT_TRUE(key);
    auto sig = ecdsa_sign(*key, sample);
    EXPECT_EQ(to_hex(sig), std::string(kat.r) + kat.s);
    EXPECT_EQ(ecdsa_verify(key->public_key, group(kat.group), sample, sig), VerifyStatus::kAccept);
  }
}

TEST(Ecdsa, SignVerifyRoundTripAllGroups) {
  RandomSource rng(11);
  const Bytes msg = {1, 2, 3, 4, 5};
  for (const auto& g : registered_groups()) {
    auto key = ecdsa_generate(g, rng);
    auto sig = ecdsa_sign(key, msg);
    EXPECT_EQ(sig.size(), 2 * g.key_size_octets);
    EXPECT_EQ(ecdsa_verify(key.public_key, g, msg, sig), VerifyStatus::kAccept);
    EXPECT_EQ(sig, ecdsa_sign(key, msg));
  }
}

TEST(Ecdsa, GeneratedKeysHaveEvenYAndRoundTripXOnly) {
  RandomSource rng(12);
  for (const auto& g : registered_groups()) {
    for (int i = 0; i < 8; ++i) {
      auto key = ecdsa_generate(g, rng);
      EXPECT_EQ(key.public_key.y.back() & 1, 0);
      auto decoded = decode_x_only(g, key.public_key_x_only());
      ASSERT_TRUE(decoded);
      EXPECT_EQ(*decoded, key.public_key);
      EXPECT_TRUE(keypair_consistent(g.id, key.private_key, key.public_key));
    }
  }
}

TEST(Ecdsa, RejectsPerturbations) {
  RandomSource rng(13);
  auto g = group(26);
  auto k1 = ecdsa_generate(g, rng);
  auto k2 = ecdsa_generate(g, rng);
  Bytes msg(40, 0x5a);
  auto sig = ecdsa_sign(k1, msg);

  auto flipped = msg;
  flipped[7] ^= 0x10;
  EXPECT_EQ(ecdsa_verify(k1.public_key, g, flipped, sig), VerifyStatus::kReject);
  EXPECT_EQ(ecdsa_verify(k2.public_key, g, msg, sig), VerifyStatus::kReject);

  Bytes truncated(sig.begin(), sig.end() - 1);
  EXPECT_EQ(ecdsa_verify(k1.public_key, g, msg, truncated), VerifyStatus::kMalformedSignature);
  Bytes zero_r = sig;
  std::fill(zero_r.begin(), zero_r.begin() + 28, 0);
  EXPECT_EQ(ecdsa_verify(k1.public_key, g, msg, zero_r), VerifyStatus::kMalformedSignature);
  Bytes big_s = sig;
  std::copy(g.order.begin(), g.order.end(), big_s.begin() + 28);
  EXPECT_EQ(ecdsa_verify(k1.public_key, g, msg, big_s), VerifyStatus::kMalformedSignature);

  auto bad_key = k1.public_key;
  bad_key.x[0] ^= 1;
  EXPECT_EQ(ecdsa_verify(bad_key, g, msg, sig), VerifyStatus::kInvalidKey);
}

TEST(Ecdsa, EmptyMessageIsAPreconditionViolation) {
  RandomSource rng(14);
  auto key = ecdsa_generate(group(26), rng);
  EXPECT_THROW(ecdsa_sign(key, Bytes{}), std::invalid_argument);
}

// Randomized soundness: every single-bit perturbation of message, signature
// or x-only public key encoding must be rejected.
TEST(Ecdsa, SingleBitPerturbationProperty) {
  RandomSource rng(15);
  auto g = group(26);
  auto key = ecdsa_generate(g, rng);
  int trials = 0;
  for (int i = 0; i < 1000; ++i) {
    Bytes msg(1 + rng.next_u64() % 64);
    rng.fill(msg);
    auto sig = ecdsa_sign(key, msg);
    auto target = rng.next_u64() % 3;
    if (target == 0) {
      auto bit = rng.next_u64() % (msg.size() * 8);
      msg[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      EXPECT_NE(ecdsa_verify(key.public_key, g, msg, sig), VerifyStatus::kAccept);
    } else if (target == 1) {
      auto bit = rng.next_u64() % (sig.size() * 8);
      sig[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      EXPECT_NE(ecdsa_verify(key.public_key, g, msg, sig), VerifyStatus::kAccept);
    } else {
      auto x = key.public_key_x_only();
      auto bit = rng.next_u64() % (x.size() * 8);
      x[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      auto pk = decode_x_only(g, x);
      if (pk) EXPECT_NE(ecdsa_verify(*pk, g, msg, sig), VerifyStatus::kAccept);
    }
    ++trials;
  }
  EXPECT_EQ(trials, 1000);
}

TEST(Hashes, KnownAnswers) {
  // FIPS 180-2 "abc".
  const Bytes abc = {'a', 'b', 'c'};
  EXPECT_EQ(to_hex(sha256(abc)), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  // RFC 2202 test case 2.
  const std::string key = "Jefe";
  const std::string data = "what do ya want for nothing?";
  EXPECT_EQ(to_hex(hmac_sha1(Bytes(key.begin(), key.end()), Bytes(data.begin(), data.end()))),
            "effcdf6ae5eb2fa2d27416d5f184df9c259a7c79");
  // RFC 4231 test case 2.
  EXPECT_EQ(to_hex(hmac_sha256(Bytes(key.begin(), key.end()), Bytes(data.begin(), data.end()))),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

}  // namespace
