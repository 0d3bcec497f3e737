#include "soap/soap_handshake.hpp"

#include <algorithm>

namespace soap::handshake {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kIdle: return "idle";
    case Phase::kAdvertisementSeen: return "advertisement-seen";
    case Phase::kAssociated: return "associated";
    case Phase::kAwaitMsg1: return "await-msg1";
    case Phase::kAwaitMsg2: return "await-msg2";
    case Phase::kPskAgreed: return "psk-agreed";
    case Phase::kAborted: return "aborted";
  }
  return "?";
}

std::string_view to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::kNone: return "none";
    case AbortReason::kGroupNotOffered: return "group-not-offered";
    case AbortReason::kMalformedAssociation: return "malformed-association";
    case AbortReason::kTimeout: return "timeout";
    case AbortReason::kExternal: return "external";
  }
  return "?";
}

std::string_view to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::kMalformed: return "malformed";
    case DiscardReason::kSignatureInvalid: return "signature-invalid";
    case DiscardReason::kInvalidPoint: return "invalid-point";
    case DiscardReason::kReplay: return "replay";
    case DiscardReason::kUnexpected: return "unexpected";
  }
  return "?";
}

bool ReplayCache::contains(ByteView ecdh_public_key) const { return seen_.contains(crypto::sha256(ecdh_public_key)); }

void ReplayCache::insert(ByteView ecdh_public_key) { seen_.insert(crypto::sha256(ecdh_public_key)); }

Bytes signature_input(bool strict, std::uint8_t role_tag, const MacAddress& sender, const MacAddress& receiver,
                      crypto::GroupId group, const frames::SessionNonce& nonce, ByteView ecdh_public_key) {
  Bytes out;
  ByteWriter w(out);
  if (!strict) {
    w.u8(role_tag);
    w.mac(sender);
    w.mac(receiver);
    w.u8(group);
    w.raw(view(nonce));
  }
  w.raw(ecdh_public_key);
  return out;
}

std::optional<crypto::CurvePoint> peer_key_from_ie(const frames::SoapIe& ie) {
  auto group = crypto::registry_lookup_by_key_size(ie.key_size());
  if (!group) return std::nullopt;
  return crypto::decode_x_only(*group, ie.ecdsa_public_key);
}

namespace {

frames::SoapMessageLayout layout_for(const SoapSessionState& s, bool strict) {
  auto ecdsa = crypto::registry_lookup(s.peer_ecdsa_public->group);
  return frames::SoapMessageLayout::for_groups(*s.negotiated_group, *ecdsa, strict);
}

struct Checked {
  frames::SoapMessage msg;
  crypto::CurvePoint peer_ephemeral;
};

// Parse, point validation, replay lookup and signature check shared by both
// sides. `nonce` is the value the signature must be bound to; when absent the
// nonce carried in the message is used.
Result<Checked, DiscardReason> check_inbound(ByteView eapol, const SoapSessionState& s, const HandshakeConfig& config,
                                             const ReplayCache* cache, std::uint8_t role_tag,
                                             const MacAddress& self) {
  auto parsed = frames::parse_soap_message(eapol, layout_for(s, config.strict));
  if (!parsed) return fail(DiscardReason::kMalformed);
  auto point = crypto::CurvePoint::decode(*s.negotiated_group, parsed->ecdh_public_key);
  if (!point || !crypto::is_valid_public_point(*point)) return fail(DiscardReason::kInvalidPoint);
  if (cache && cache->contains(parsed->ecdh_public_key)) return fail(DiscardReason::kReplay);
  if (config.verify_signatures) {
    frames::SessionNonce nonce{};
    if (!config.strict) nonce = role_tag == kMessage1Tag ? *parsed->session_nonce : *s.session_nonce;
    auto input = signature_input(config.strict, role_tag, *s.peer_mac, self, s.negotiated_group->id, nonce,
                                 parsed->ecdh_public_key);
    auto ecdsa_group = crypto::registry_lookup(s.peer_ecdsa_public->group);
    if (crypto::ecdsa_verify(*s.peer_ecdsa_public, *ecdsa_group, input, parsed->ecdsa_signature) !=
        crypto::VerifyStatus::kAccept) {
      return fail(DiscardReason::kSignatureInvalid);
    }
  }
  return Checked{std::move(*parsed), std::move(*point)};
}

frames::SoapMessage sign_outbound(const StationIdentity& identity, const SoapSessionState& s, bool strict,
                                  std::uint8_t role_tag) {
  frames::SoapMessage msg;
  msg.ecdh_public_key = s.own_ephemeral->public_point.encode();
  frames::SessionNonce nonce{};
  if (!strict) {
    nonce = *s.session_nonce;
    msg.session_nonce = nonce;
  }
  msg.ecdsa_signature = crypto::ecdsa_sign(
      identity.ecdsa,
      signature_input(strict, role_tag, identity.mac, *s.peer_mac, s.negotiated_group->id, nonce, msg.ecdh_public_key));
  return msg;
}

void wipe_ephemeral(SoapSessionState& s) {
  if (s.own_ephemeral) {
    s.own_ephemeral->wipe();
    s.own_ephemeral.reset();
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ClientHandshake::ClientHandshake(StationIdentity identity, negotiation::GroupSet groups, HandshakeConfig config,
                                 ReplayCache* cache)
    : identity_(std::move(identity)), groups_(std::move(groups)), config_(config), cache_(cache) {}

frames::SoapMessageLayout ClientHandshake::inbound_layout() const { return layout_for(state_, config_.strict); }

Result<ClientHandshake::AdvertisementResult, DiscardReason> ClientHandshake::on_advertisement(
    const frames::SoapIe& ie, const MacAddress& ap_mac) {
  if (state_.phase != Phase::kIdle) return fail(DiscardReason::kUnexpected);
  auto key = peer_key_from_ie(ie);
  if (!key) return fail(DiscardReason::kMalformed);
  auto outcome = negotiation::select_group(negotiation::GroupSet::from_advertised(ie.group_list), groups_);
  AdvertisementResult result{outcome, negotiation::build_client_response(outcome, identity_)};
  if (const auto* sel = std::get_if<negotiation::SoapSelected>(&outcome)) {
    state_.phase = Phase::kAdvertisementSeen;
    state_.negotiated_group = crypto::registry_lookup(sel->group);
    state_.peer_ecdsa_public = std::move(*key);
    state_.peer_mac = ap_mac;
  }
  return result;
}

void ClientHandshake::on_associated() {
  if (state_.phase == Phase::kAdvertisementSeen) state_.phase = Phase::kAwaitMsg1;
}

StepResult ClientHandshake::on_message1(ByteView eapol, RandomSource& rng) {
  StepResult r;
  if (state_.phase == Phase::kPskAgreed && std::ranges::equal(eapol, accepted_msg1_)) {
    // Our Message 2 was lost and the AP retransmitted; answer identically.
    r.reply = sent_msg2_;
    return r;
  }
  if (state_.phase != Phase::kAwaitMsg1) {
    r.discard = DiscardReason::kUnexpected;
    return r;
  }
  auto checked = check_inbound(eapol, state_, config_, cache_, kMessage1Tag, identity_.mac);
  if (!checked) {
    r.discard = checked.error();
    if (checked.error() != DiscardReason::kReplay) ++state_.verification_failures;
    return r;
  }
  state_.session_nonce = checked->msg.session_nonce;
  state_.own_ephemeral = crypto::ecdh_generate(*state_.negotiated_group, rng);
  auto psk = crypto::ecdh_agree(*state_.own_ephemeral, checked->peer_ephemeral);
  if (!psk) {
    wipe_ephemeral(state_);
    ++state_.verification_failures;
    r.discard = DiscardReason::kInvalidPoint;
    return r;
  }
  auto msg2 = frames::encode_soap_message(sign_outbound(identity_, state_, config_.strict, kMessage2Tag));
  if (cache_) cache_->insert(checked->msg.ecdh_public_key);
  accepted_msg1_.assign(eapol.begin(), eapol.end());
  sent_msg2_ = msg2;
  state_.psk = *psk;
  state_.phase = Phase::kPskAgreed;
  wipe_ephemeral(state_);
  r.reply = std::move(msg2);
  r.psk_agreed = true;
  return r;
}

void ClientHandshake::abort(AbortReason reason) {
  state_.phase = Phase::kAborted;
  state_.abort_reason = reason;
  wipe_ephemeral(state_);
}

// ---------------------------------------------------------------------------

ApHandshake::ApHandshake(StationIdentity identity, negotiation::GroupSet groups, HandshakeConfig config,
                         ReplayCache* cache)
    : identity_(std::move(identity)), groups_(std::move(groups)), config_(config), cache_(cache) {}

frames::SoapMessageLayout ApHandshake::inbound_layout() const { return layout_for(state_, config_.strict); }

Result<Ok, AbortReason> ApHandshake::on_association(const MacAddress& client, const frames::SoapIe& ie) {
  state_.peer_mac = client;
  if (ie.group_count() != 1 || !groups_.contains(ie.group_list.front())) {
    abort(AbortReason::kGroupNotOffered);
    return fail(AbortReason::kGroupNotOffered);
  }
  auto key = peer_key_from_ie(ie);
  if (!key) {
    abort(AbortReason::kMalformedAssociation);
    return fail(AbortReason::kMalformedAssociation);
  }
  state_.negotiated_group = crypto::registry_lookup(ie.group_list.front());
  state_.peer_ecdsa_public = std::move(*key);
  state_.phase = Phase::kAssociated;
  return Ok{};
}

Bytes ApHandshake::send_message1(RandomSource& rng) {
  state_.own_ephemeral = crypto::ecdh_generate(*state_.negotiated_group, rng);
  frames::SessionNonce nonce{};
  rng.fill(nonce);
  state_.session_nonce = nonce;
  sent_msg1_ = frames::encode_soap_message(sign_outbound(identity_, state_, config_.strict, kMessage1Tag));
  state_.phase = Phase::kAwaitMsg2;
  retransmissions_ = 0;
  return sent_msg1_;
}

std::optional<Bytes> ApHandshake::on_timeout() {
  if (state_.phase != Phase::kAwaitMsg2) return std::nullopt;
  if (retransmissions_ >= config_.max_retransmissions) {
    abort(AbortReason::kTimeout);
    return std::nullopt;
  }
  ++retransmissions_;
  return sent_msg1_;
}

StepResult ApHandshake::on_message2(ByteView eapol) {
  StepResult r;
  if (state_.phase == Phase::kPskAgreed && std::ranges::equal(eapol, accepted_msg2_)) {
    r.discard = DiscardReason::kReplay;
    return r;
  }
  if (state_.phase != Phase::kAwaitMsg2) {
    r.discard = DiscardReason::kUnexpected;
    return r;
  }
  auto checked = check_inbound(eapol, state_, config_, cache_, kMessage2Tag, identity_.mac);
  if (!checked) {
    r.discard = checked.error();
    if (checked.error() != DiscardReason::kReplay) ++state_.verification_failures;
    return r;
  }
  auto psk = crypto::ecdh_agree(*state_.own_ephemeral, checked->peer_ephemeral);
  if (!psk) {
    ++state_.verification_failures;
    r.discard = DiscardReason::kInvalidPoint;
    return r;
  }
  if (cache_) cache_->insert(checked->msg.ecdh_public_key);
  accepted_msg2_.assign(eapol.begin(), eapol.end());
  state_.psk = *psk;
  state_.phase = Phase::kPskAgreed;
  wipe_ephemeral(state_);
  r.psk_agreed = true;
  return r;
}

void ApHandshake::abort(AbortReason reason) {
  state_.phase = Phase::kAborted;
  state_.abort_reason = reason;
  wipe_ephemeral(state_);
}

}  // namespace soap::handshake
