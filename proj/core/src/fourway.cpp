#include "soap/fourway.hpp"

#include <algorithm>
#include <deque>

namespace soap::fourway {

Bytes PairwiseKeys::concatenated() const {
  Bytes out;
  ByteWriter w(out);
  w.raw(view(kck));
  w.raw(view(kek));
  w.raw(view(tk));
  return out;
}

Bytes prf_sha1(ByteView key, std::string_view label, ByteView data, std::size_t octets) {
  Bytes input(label.begin(), label.end());
  input.push_back(0x00);
  input.insert(input.end(), data.begin(), data.end());
  input.push_back(0);
  Bytes out;
  for (std::uint8_t i = 0; out.size() < octets; ++i) {
    input.back() = i;
    auto block = crypto::hmac_sha1(key, input);
    out.insert(out.end(), block.begin(), block.end());
  }
  out.resize(octets);
  return out;
}

PairwiseKeys derive_ptk(const crypto::SharedPsk& pmk, const MacAddress& aa, const MacAddress& spa, const Nonce& anonce,
                        const Nonce& snonce) {
  Bytes data;
  data.reserve(2 * MacAddress::kOctets + 2 * anonce.size());
  ByteWriter w(data);
  w.mac(std::min(aa, spa));
  w.mac(std::max(aa, spa));
  w.raw(view(std::min(anonce, snonce)));
  w.raw(view(std::max(anonce, snonce)));
  auto ptk = prf_sha1(view(pmk.bytes), "Pairwise key expansion", data, 48);
  PairwiseKeys keys;
  std::copy_n(ptk.begin(), 16, keys.kck.begin());
  std::copy_n(ptk.begin() + 16, 16, keys.kek.begin());
  std::copy_n(ptk.begin() + 32, 16, keys.tk.begin());
  secure_zero(ptk);
  return keys;
}

Mic compute_mic(const Key128& kck, const frames::EapolKeyFrame& frame) {
  auto copy = frame;
  copy.key_mic.fill(0);
  auto full = crypto::hmac_sha1(view(kck), frames::encode_eapol_key(copy));
  Mic mic{};
  std::copy_n(full.begin(), mic.size(), mic.begin());
  return mic;
}

bool verify_mic(const Key128& kck, const frames::EapolKeyFrame& frame) {
  auto expected = compute_mic(kck, frame);
  // Constant-time comparison.
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) diff |= expected[i] ^ frame.key_mic[i];
  return diff == 0;
}

Bytes supplicant_rsn_element() {
  return {0x30, 0x14, 0x01, 0x00, 0x00, 0x0f, 0xac, 0x04, 0x01, 0x00, 0x00,
          0x0f, 0xac, 0x04, 0x01, 0x00, 0x00, 0x0f, 0xac, 0x02, 0x00, 0x00};
}

int message_number(const frames::EapolKeyFrame& frame) {
  switch (frame.key_info) {
    case kKeyInfoM1: return 1;
    case kKeyInfoM2: return 2;
    case kKeyInfoM3: return 3;
    case kKeyInfoM4: return 4;
    default: return 0;
  }
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kIdle: return "idle";
    case Phase::kSentM1: return "sent-m1";
    case Phase::kSentM2: return "sent-m2";
    case Phase::kSentM3: return "sent-m3";
    case Phase::kEstablished: return "established";
    case Phase::kFailed: return "failed";
  }
  return "?";
}

std::string_view to_string(FailReason reason) {
  switch (reason) {
    case FailReason::kNone: return "none";
    case FailReason::kMicMismatch: return "mic-mismatch";
    case FailReason::kTimeout: return "timeout";
  }
  return "?";
}

std::string_view to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::kMalformed: return "malformed";
    case DiscardReason::kReplay: return "replay";
    case DiscardReason::kMicMismatch: return "mic-mismatch";
    case DiscardReason::kUnexpected: return "unexpected";
  }
  return "?";
}

namespace {

frames::EapolKeyFrame key_frame(std::uint16_t info, std::uint16_t key_length, std::uint64_t counter) {
  frames::EapolKeyFrame f;
  f.key_info = info;
  f.key_length = key_length;
  f.replay_counter = counter;
  return f;
}

Bytes sealed(const frames::EapolKeyFrame& frame, const Key128& kck) {
  auto copy = frame;
  copy.key_mic = compute_mic(kck, copy);
  return frames::encode_eapol_key(copy);
}

}  // namespace

// ---------------------------------------------------------------------------

Authenticator::Authenticator(MacAddress aa, MacAddress spa, crypto::SharedPsk pmk, FourWayConfig config)
    : aa_(aa), spa_(spa), config_(config) {
  state_.pmk = pmk;
}

Bytes Authenticator::emit(frames::EapolKeyFrame frame) {
  frame.replay_counter = ++state_.replay_counter;
  last_sent_ = frame;
  if (frame.key_info & frames::key_info::kMic) return sealed(frame, state_.ptk->kck);
  return frames::encode_eapol_key(frame);
}

Bytes Authenticator::start(RandomSource& rng) {
  Nonce anonce{};
  rng.fill(anonce);
  state_.anonce = anonce;
  auto m1 = key_frame(kKeyInfoM1, 16, 0);
  m1.key_nonce = anonce;
  if (config_.leak_pmk_in_m1) m1.key_data.assign(state_.pmk.bytes.begin(), state_.pmk.bytes.end());
  state_.phase = Phase::kSentM1;
  retransmissions_ = 0;
  return emit(m1);
}

std::optional<Bytes> Authenticator::on_timeout() {
  if (state_.phase != Phase::kSentM1 && state_.phase != Phase::kSentM3) return std::nullopt;
  if (retransmissions_ >= config_.max_retransmissions) {
    state_.phase = Phase::kFailed;
    state_.fail_reason = FailReason::kTimeout;
    return std::nullopt;
  }
  ++retransmissions_;
  return emit(*last_sent_);
}

StepResult Authenticator::on_frame(ByteView eapol) {
  StepResult r;
  auto frame = frames::parse_eapol_key(eapol);
  if (!frame) {
    r.discard = DiscardReason::kMalformed;
    return r;
  }
  const int n = message_number(*frame);
  if (n != 2 && n != 4) {
    r.discard = DiscardReason::kUnexpected;
    return r;
  }
  if (frame->replay_counter != state_.replay_counter || state_.phase == Phase::kEstablished) {
    r.discard = DiscardReason::kReplay;
    return r;
  }
  if (n == 2 && state_.phase == Phase::kSentM1) {
    auto ptk = derive_ptk(state_.pmk, aa_, spa_, *state_.anonce, frame->key_nonce);
    if (!verify_mic(ptk.kck, *frame)) {
      state_.phase = Phase::kFailed;
      state_.fail_reason = FailReason::kMicMismatch;
      r.discard = DiscardReason::kMicMismatch;
      return r;
    }
    state_.snonce = frame->key_nonce;
    state_.ptk = ptk;
    auto m3 = key_frame(kKeyInfoM3, 16, 0);
    m3.key_nonce = *state_.anonce;
    m3.key_data = Bytes(kM3KeyDataOctets, 0);
    state_.phase = Phase::kSentM3;
    retransmissions_ = 0;
    r.reply = emit(m3);
    return r;
  }
  if (n == 4 && state_.phase == Phase::kSentM3) {
    if (!verify_mic(state_.ptk->kck, *frame)) {
      r.discard = DiscardReason::kMicMismatch;
      return r;
    }
    state_.phase = Phase::kEstablished;
    return r;
  }
  r.discard = DiscardReason::kUnexpected;
  return r;
}

// ---------------------------------------------------------------------------

Supplicant::Supplicant(MacAddress aa, MacAddress spa, crypto::SharedPsk pmk, FourWayConfig config)
    : aa_(aa), spa_(spa), config_(config) {
  state_.pmk = pmk;
}

StepResult Supplicant::on_frame(ByteView eapol, RandomSource& rng) {
  StepResult r;
  auto frame = frames::parse_eapol_key(eapol);
  if (!frame) {
    r.discard = DiscardReason::kMalformed;
    return r;
  }
  const int n = message_number(*frame);
  if (n != 1 && n != 3) {
    r.discard = DiscardReason::kUnexpected;
    return r;
  }
  if (!accepted_.empty() && frame->replay_counter <= state_.replay_counter) {
    r.discard = DiscardReason::kReplay;
    return r;
  }
  if (n == 1) {
    if (state_.phase != Phase::kIdle && state_.phase != Phase::kSentM2) {
      r.discard = DiscardReason::kUnexpected;
      return r;
    }
    // A retransmitted message 1 keeps the ANonce; reuse the SNonce with it.
    if (!state_.snonce || state_.anonce != frame->key_nonce) {
      Nonce snonce{};
      rng.fill(snonce);
      state_.snonce = snonce;
    }
    state_.anonce = frame->key_nonce;
    state_.ptk = derive_ptk(state_.pmk, aa_, spa_, *state_.anonce, *state_.snonce);
    auto m2 = key_frame(kKeyInfoM2, 0, frame->replay_counter);
    m2.key_nonce = *state_.snonce;
    m2.key_data = supplicant_rsn_element();
    state_.replay_counter = frame->replay_counter;
    accepted_.push_back(frame->replay_counter);
    state_.phase = Phase::kSentM2;
    r.reply = sealed(m2, state_.ptk->kck);
    return r;
  }
  // Message 3, possibly retransmitted after we already installed keys.
  if ((state_.phase != Phase::kSentM2 && state_.phase != Phase::kEstablished) || frame->key_nonce != *state_.anonce) {
    r.discard = DiscardReason::kUnexpected;
    return r;
  }
  if (!verify_mic(state_.ptk->kck, *frame)) {
    r.discard = DiscardReason::kMicMismatch;
    return r;
  }
  state_.replay_counter = frame->replay_counter;
  accepted_.push_back(frame->replay_counter);
  state_.phase = Phase::kEstablished;
  r.reply = sealed(key_frame(kKeyInfoM4, 0, frame->replay_counter), state_.ptk->kck);
  return r;
}

// ---------------------------------------------------------------------------

RunResult run_fourway(Authenticator& auth, Supplicant& supp, RandomSource& rng, const Channel& channel) {
  RunResult result{};
  std::deque<std::pair<Direction, Bytes>> in_flight;
  auto send = [&](Direction d, Bytes frame) {
    ++result.frames_sent;
    if (channel) {
      auto passed = channel(d, std::move(frame));
      if (passed) in_flight.emplace_back(d, std::move(*passed));
    } else {
      in_flight.emplace_back(d, std::move(frame));
    }
  };
  send(Direction::kToSupplicant, auth.start(rng));
  // Bounded: each timeout consumes retry budget, each message advances a phase.
  for (int guard = 0; guard < 1000; ++guard) {
    if (auth.state().phase == Phase::kEstablished || auth.state().phase == Phase::kFailed) break;
    if (in_flight.empty()) {
      auto again = auth.on_timeout();
      if (!again) break;
      send(Direction::kToSupplicant, std::move(*again));
      continue;
    }
    auto [dir, frame] = std::move(in_flight.front());
    in_flight.pop_front();
    if (dir == Direction::kToSupplicant) {
      auto step = supp.on_frame(frame, rng);
      if (step.reply) send(Direction::kToAuthenticator, std::move(*step.reply));
    } else {
      auto step = auth.on_frame(frame);
      if (step.reply) send(Direction::kToSupplicant, std::move(*step.reply));
    }
  }
  result.authenticator = auth.state().phase;
  result.supplicant = supp.state().phase;
  return result;
}

}  // namespace soap::fourway
