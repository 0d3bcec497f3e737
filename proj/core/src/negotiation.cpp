#include "soap/negotiation.hpp"

#include <stdexcept>

namespace soap::negotiation {

GroupSet::GroupSet(std::initializer_list<crypto::GroupId> ids) : GroupSet(std::span(ids.begin(), ids.size())) {}

GroupSet::GroupSet(std::span<const crypto::GroupId> ids) {
  for (auto id : ids) insert(id);
}

GroupSet GroupSet::from_advertised(std::span<const crypto::GroupId> ids) {
  GroupSet out;
  for (auto id : ids) {
    if (crypto::registry_lookup(id)) out.ids_.insert(id);
  }
  return out;
}

void GroupSet::insert(crypto::GroupId id) {
  if (!crypto::registry_lookup(id)) {
    throw std::invalid_argument("unregistered group id " + std::to_string(id));
  }
  ids_.insert(id);
}

GroupSet intersect(const GroupSet& a, const GroupSet& b) {
  GroupSet out;
  for (auto id : a.ids()) {
    if (b.contains(id)) out.insert(id);
  }
  return out;
}

std::string to_string(const NegotiationOutcome& outcome) {
  if (const auto* s = std::get_if<SoapSelected>(&outcome)) return "soap(" + std::to_string(s->group) + ")";
  return "wpa-psk-fallback";
}

NegotiationOutcome select_group(const GroupSet& ap_groups, const GroupSet& client_groups) {
  std::optional<crypto::EcGroup> best;
  const auto common = intersect(ap_groups, client_groups);
  // Ascending iteration plus a strict comparison keeps the smallest id on ties.
  for (auto id : common.ids()) {
    auto g = crypto::registry_lookup(id);
    if (!best || g->key_size_octets > best->key_size_octets) best = g;
  }
  if (!best) return WpaPskFallback{};
  return SoapSelected{best->id};
}

frames::Parsed<frames::SoapIe> build_ap_advertisement(const StationIdentity& identity, const GroupSet& ap_groups) {
  frames::SoapIe ie{ap_groups.sorted(), identity.ecdsa.public_key_x_only()};
  if (frames::soap_ie_size(ie.group_count(), ie.key_size()) - 2 > frames::kMaxElementPayload) {
    return fail(frames::CodecError::kOversize);
  }
  return ie;
}

std::optional<frames::SoapIe> build_client_response(const NegotiationOutcome& selection,
                                                    const StationIdentity& identity) {
  const auto* s = std::get_if<SoapSelected>(&selection);
  if (!s) return std::nullopt;
  return frames::SoapIe{{s->group}, identity.ecdsa.public_key_x_only()};
}

}  // namespace soap::negotiation
