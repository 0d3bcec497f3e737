#pragma once

#include <string_view>

#include "soap/bytes.hpp"
#include "soap/crypto.hpp"

namespace soap {

enum class Role { kClient, kAp };

inline std::string_view to_string(Role role) { return role == Role::kAp ? "ap" : "client"; }

/// Long-term identity of a station: its address and ECDSA signing key.
struct StationIdentity {
  MacAddress mac;
  crypto::EcdsaKeyPair ecdsa;
  Role role = Role::kClient;
};

}  // namespace soap
