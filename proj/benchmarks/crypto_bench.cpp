// Micro benchmarks for the operations a SOAP handshake adds, per group.

#include <benchmark/benchmark.h>

#include "soap/crypto.hpp"
#include "soap/fourway.hpp"
#include "soap/frames.hpp"
#include "soap/negotiation.hpp"
#include "soap/soap_handshake.hpp"

namespace {

using soap::crypto::GroupId;

const soap::MacAddress kAp{{0x02, 0, 0, 0, 0, 0x01}};
const soap::MacAddress kClient{{0x02, 0, 0, 0, 0, 0x02}};

soap::crypto::EcGroup group_of(const benchmark::State& state) {
  return *soap::crypto::registry_lookup(static_cast<GroupId>(state.range(0)));
}

void BM_EcdhGenerate(benchmark::State& state) {
  const auto group = group_of(state);
  soap::RandomSource rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(soap::crypto::ecdh_generate(group, rng));
}

void BM_EcdhAgree(benchmark::State& state) {
  const auto group = group_of(state);
  soap::RandomSource rng(2);
  const auto own = soap::crypto::ecdh_generate(group, rng);
  const auto peer = soap::crypto::ecdh_generate(group, rng);
  for (auto _ : state) benchmark::DoNotOptimize(soap::crypto::ecdh_agree(own, peer.public_point));
}

void BM_EcdsaSign(benchmark::State& state) {
  const auto group = group_of(state);
  soap::RandomSource rng(3);
  const auto key = soap::crypto::ecdsa_generate(group, rng);
  soap::Bytes message(2 * group.key_size_octets, 0x42);
  std::uint64_t i = 0;
  for (auto _ : state) {
    message[0] = static_cast<std::uint8_t>(++i);
    benchmark::DoNotOptimize(soap::crypto::ecdsa_sign(key, message));
  }
}

void BM_EcdsaVerify(benchmark::State& state) {
  const auto group = group_of(state);
  soap::RandomSource rng(4);
  const auto key = soap::crypto::ecdsa_generate(group, rng);
  const soap::Bytes message(2 * group.key_size_octets, 0x42);
  const auto signature = soap::crypto::ecdsa_sign(key, message);
  for (auto _ : state) {
    benchmark::DoNotOptimize(soap::crypto::ecdsa_verify(key.public_key, group, message, signature));
  }
}

void BM_DerivePtk(benchmark::State& state) {
  soap::crypto::SharedPsk pmk;
  soap::fourway::Nonce anonce{};
  soap::fourway::Nonce snonce{};
  snonce[0] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(soap::fourway::derive_ptk(pmk, kAp, kClient, anonce, snonce));
}

// Both state machines through one complete exchange.
void BM_SoapHandshake(benchmark::State& state) {
  const auto group = group_of(state);
  soap::RandomSource rng(5);
  const soap::StationIdentity ap{kAp, soap::crypto::ecdsa_generate(group, rng), soap::Role::kAp};
  const soap::StationIdentity client{kClient, soap::crypto::ecdsa_generate(group, rng), soap::Role::kClient};
  const soap::negotiation::GroupSet groups{group.id};
  const auto advert = *soap::negotiation::build_ap_advertisement(ap, groups);
  for (auto _ : state) {
    soap::handshake::ClientHandshake c(client, groups, {});
    soap::handshake::ApHandshake a(ap, groups, {});
    auto adv = c.on_advertisement(advert, kAp);
    (void)a.on_association(kClient, *adv->response);
    c.on_associated();
    auto m2 = c.on_message1(a.send_message1(rng), rng);
    benchmark::DoNotOptimize(a.on_message2(*m2.reply));
  }
}

void groups(benchmark::internal::Benchmark* b) {
  for (const auto& g : soap::crypto::registered_groups()) b->Arg(g.id);
}

BENCHMARK(BM_EcdhGenerate)->Apply(groups)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EcdhAgree)->Apply(groups)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EcdsaSign)->Apply(groups)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EcdsaVerify)->Apply(groups)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DerivePtk)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SoapHandshake)->Apply(groups)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
