#pragma once

// ECDH group advertisement, selection and the WPA-PSK fallback decision.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>

#include "soap/crypto.hpp"
#include "soap/frames.hpp"
#include "soap/identity.hpp"

namespace soap::negotiation {

/// Set of registered group ids. At most 255 members since the IE group count
/// is one octet.
class GroupSet {
 public:
  GroupSet() = default;
  /// Throws std::invalid_argument on an unregistered id.
  GroupSet(std::initializer_list<crypto::GroupId> ids);
  explicit GroupSet(std::span<const crypto::GroupId> ids);

  /// Builds a set from an advertised list, dropping ids that resolve to no
  /// registry entry.
  static GroupSet from_advertised(std::span<const crypto::GroupId> ids);

  [[nodiscard]] bool contains(crypto::GroupId id) const { return ids_.contains(id); }
  [[nodiscard]] bool empty() const noexcept { return ids_.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
  [[nodiscard]] const std::set<crypto::GroupId>& ids() const noexcept { return ids_; }
  /// Ascending.
  [[nodiscard]] std::vector<crypto::GroupId> sorted() const { return {ids_.begin(), ids_.end()}; }

  void insert(crypto::GroupId id);

  friend bool operator==(const GroupSet&, const GroupSet&) = default;

 private:
  std::set<crypto::GroupId> ids_;
};

GroupSet intersect(const GroupSet& a, const GroupSet& b);

struct WpaPskFallback {
  friend bool operator==(const WpaPskFallback&, const WpaPskFallback&) = default;
};

struct SoapSelected {
  crypto::GroupId group = 0;
  friend bool operator==(const SoapSelected&, const SoapSelected&) = default;
};

using NegotiationOutcome = std::variant<SoapSelected, WpaPskFallback>;

inline bool is_fallback(const NegotiationOutcome& o) { return std::holds_alternative<WpaPskFallback>(o); }
std::string to_string(const NegotiationOutcome& outcome);

/// Largest key size over the intersection; ties go to the smallest id.
NegotiationOutcome select_group(const GroupSet& ap_groups, const GroupSet& client_groups);

frames::Parsed<frames::SoapIe> build_ap_advertisement(const StationIdentity& identity, const GroupSet& ap_groups);

/// IE for the Association Request, or nothing when falling back.
std::optional<frames::SoapIe> build_client_response(const NegotiationOutcome& selection,
                                                    const StationIdentity& identity);

}  // namespace soap::negotiation
