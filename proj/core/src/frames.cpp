#include "soap/frames.hpp"

#include <algorithm>

namespace soap::frames {
namespace {

constexpr std::uint8_t kTypeManagement = 0;
constexpr std::uint8_t kTypeData = 2;
constexpr std::array<std::uint8_t, kLlcSnapOctets> kLlcSnapEapol = {0xaa, 0xaa, 0x03, 0x00, 0x00, 0x00, 0x88, 0x8e};

void write_mac_header(ByteWriter& w, std::uint8_t type, std::uint8_t subtype, const MacAddress& dest,
                      const MacAddress& source, const MacAddress& bssid) {
  w.u8(static_cast<std::uint8_t>((subtype << 4) | (type << 2)));
  w.u8(0);    // flags
  w.u16(0);   // duration
  w.mac(dest);
  w.mac(source);
  w.mac(bssid);
  w.u16(0);   // sequence control
}

struct MacHeader {
  std::uint8_t type;
  std::uint8_t subtype;
  MacAddress dest;
  MacAddress source;
  MacAddress bssid;
};

std::optional<MacHeader> read_mac_header(ByteReader& r) {
  auto fc0 = r.u8();
  auto fc1 = r.u8();
  auto duration = r.u16();
  auto dest = r.mac();
  auto source = r.mac();
  auto bssid = r.mac();
  auto seq = r.u16();
  if (!fc0 || !fc1 || !duration || !dest || !source || !bssid || !seq) return std::nullopt;
  return MacHeader{static_cast<std::uint8_t>((*fc0 >> 2) & 0x3), static_cast<std::uint8_t>(*fc0 >> 4), *dest,
                   *source, *bssid};
}

std::optional<MgmtSubtype> to_subtype(std::uint8_t raw) {
  switch (raw) {
    case 0: return MgmtSubtype::kAssociationRequest;
    case 1: return MgmtSubtype::kAssociationResponse;
    case 5: return MgmtSubtype::kProbeResponse;
    case 8: return MgmtSubtype::kBeacon;
    case 10: return MgmtSubtype::kDisassociation;
    default: return std::nullopt;
  }
}

Parsed<std::vector<Element>> read_elements(ByteReader& r) {
  std::vector<Element> out;
  while (r.remaining() > 0) {
    auto id = r.u8();
    auto len = r.u8();
    if (!id || !len) return fail(CodecError::kTruncated);
    auto payload = r.take(*len);
    if (!payload) return fail(CodecError::kTruncated);
    out.push_back(Element{*id, Bytes(payload->begin(), payload->end())});
  }
  return out;
}

struct MgmtPrefix {
  MacHeader header;
  MgmtSubtype subtype;
  ByteView fixed_body;
};

Parsed<MgmtPrefix> read_mgmt_prefix(ByteReader& r) {
  auto header = read_mac_header(r);
  if (!header) return fail(CodecError::kTruncated);
  if (header->type != kTypeManagement) return fail(CodecError::kUnknownFrameType);
  auto subtype = to_subtype(header->subtype);
  if (!subtype) return fail(CodecError::kUnknownFrameType);
  auto fixed = r.take(fixed_body_octets(*subtype));
  if (!fixed) return fail(CodecError::kTruncated);
  return MgmtPrefix{*header, *subtype, *fixed};
}

Parsed<Bytes> encode_mgmt(const ManagementFrame& frame, bool with_signature) {
  const auto fixed_width = fixed_body_octets(frame.subtype);
  if (!frame.fixed_body.empty() && frame.fixed_body.size() != fixed_width) return fail(CodecError::kLengthMismatch);
  Bytes out;
  ByteWriter w(out);
  write_mac_header(w, kTypeManagement, static_cast<std::uint8_t>(frame.subtype), frame.dest, frame.source,
                   frame.bssid);
  if (frame.fixed_body.empty()) {
    w.zeros(fixed_width);
  } else {
    w.raw(frame.fixed_body);
  }
  for (const auto& e : frame.elements) {
    if (e.payload.size() > kMaxElementPayload) return fail(CodecError::kOversize);
    w.u8(e.id);
    w.u8(static_cast<std::uint8_t>(e.payload.size()));
    w.raw(e.payload);
  }
  if (with_signature && frame.signature) {
    if (frame.signature->size() > kMaxElementPayload) return fail(CodecError::kOversize);
    w.u8(kMgmtSignatureElementId);
    w.u8(static_cast<std::uint8_t>(frame.signature->size()));
    w.raw(*frame.signature);
  }
  return out;
}

}  // namespace

std::string_view to_string(CodecError error) {
  switch (error) {
    case CodecError::kTruncated: return "truncated";
    case CodecError::kLengthMismatch: return "length-mismatch";
    case CodecError::kWrongElementId: return "wrong-element-id";
    case CodecError::kWrongVersion: return "wrong-version";
    case CodecError::kWrongPacketType: return "wrong-packet-type";
    case CodecError::kOversize: return "oversize";
    case CodecError::kUnknownFrameType: return "unknown-frame-type";
    case CodecError::kTrailingData: return "trailing-data";
  }
  return "unknown";
}

std::string_view to_string(MgmtSubtype subtype) {
  switch (subtype) {
    case MgmtSubtype::kAssociationRequest: return "AssociationRequest";
    case MgmtSubtype::kAssociationResponse: return "AssociationResponse";
    case MgmtSubtype::kProbeResponse: return "ProbeResponse";
    case MgmtSubtype::kBeacon: return "Beacon";
    case MgmtSubtype::kDisassociation: return "Disassociation";
  }
  return "Unknown";
}

std::size_t fixed_body_octets(MgmtSubtype subtype) {
  switch (subtype) {
    case MgmtSubtype::kBeacon:
    case MgmtSubtype::kProbeResponse: return 12;  // timestamp, interval, capability
    case MgmtSubtype::kAssociationRequest: return 4;  // capability, listen interval
    case MgmtSubtype::kAssociationResponse: return 6;  // capability, status, association id
    case MgmtSubtype::kDisassociation: return 2;  // reason code
  }
  return 0;
}

// --- SOAP IE ----------------------------------------------------------------

Parsed<Bytes> encode_soap_ie(const SoapIe& ie) {
  const std::size_t info_len = 2 + ie.group_count() + ie.key_size();
  if (info_len > kMaxElementPayload) return fail(CodecError::kOversize);
  Bytes out;
  out.reserve(2 + info_len);
  ByteWriter w(out);
  w.u8(kSoapElementId);
  w.u8(static_cast<std::uint8_t>(info_len));
  w.u8(static_cast<std::uint8_t>(ie.group_count()));
  w.raw(ie.group_list);
  w.u8(static_cast<std::uint8_t>(ie.key_size()));
  w.raw(ie.ecdsa_public_key);
  return out;
}

Parsed<SoapIe> parse_soap_ie_payload(ByteView payload) {
  ByteReader r(payload);
  auto m = r.u8();
  if (!m) return fail(CodecError::kTruncated);
  auto groups = r.take(*m);
  if (!groups) return fail(CodecError::kTruncated);
  auto s = r.u8();
  if (!s) return fail(CodecError::kTruncated);
  auto key = r.take(*s);
  if (!key) return fail(CodecError::kTruncated);
  if (r.remaining() != 0) return fail(CodecError::kLengthMismatch);
  return SoapIe{std::vector<crypto::GroupId>(groups->begin(), groups->end()), Bytes(key->begin(), key->end())};
}

Parsed<SoapIe> parse_soap_ie(ByteView bytes) {
  ByteReader r(bytes);
  auto id = r.u8();
  auto len = r.u8();
  if (!id || !len) return fail(CodecError::kTruncated);
  if (*id != kSoapElementId) return fail(CodecError::kWrongElementId);
  auto payload = r.take(*len);
  if (!payload) return fail(CodecError::kTruncated);
  if (r.remaining() != 0) return fail(CodecError::kTrailingData);
  return parse_soap_ie_payload(*payload);
}

// --- SOAP Message -------------------------------------------------------------

Bytes encode_soap_message(const SoapMessage& msg) {
  const std::size_t body = msg.ecdh_public_key.size() + msg.ecdsa_signature.size() +
                           (msg.session_nonce ? kSessionNonceOctets : 0);
  Bytes out;
  out.reserve(kEapolHeaderOctets + body);
  ByteWriter w(out);
  w.u8(kSoapProtocolVersion);
  w.u8(kSoapPacketType);
  w.u16(static_cast<std::uint16_t>(body));
  w.raw(msg.ecdh_public_key);
  w.raw(msg.ecdsa_signature);
  if (msg.session_nonce) w.raw(view(*msg.session_nonce));
  return out;
}

bool is_soap_eapol(ByteView eapol) {
  return eapol.size() >= 2 && eapol[0] == kSoapProtocolVersion && eapol[1] == kSoapPacketType;
}

Parsed<SoapMessage> parse_soap_message(ByteView bytes, const SoapMessageLayout& layout) {
  ByteReader r(bytes);
  auto version = r.u8();
  auto type = r.u8();
  auto length = r.u16();
  if (!version || !type || !length) return fail(CodecError::kTruncated);
  if (*version != kSoapProtocolVersion) return fail(CodecError::kWrongVersion);
  if (*type != kSoapPacketType) return fail(CodecError::kWrongPacketType);
  if (*length != layout.body_octets()) return fail(CodecError::kLengthMismatch);
  if (r.remaining() < *length) return fail(CodecError::kTruncated);
  if (r.remaining() > *length) return fail(CodecError::kTrailingData);
  SoapMessage msg;
  auto key = r.take(layout.ecdh_key_octets);
  auto sig = r.take(layout.signature_octets);
  msg.ecdh_public_key.assign(key->begin(), key->end());
  msg.ecdsa_signature.assign(sig->begin(), sig->end());
  if (layout.nonce_extension) {
    SessionNonce nonce{};
    r.into(nonce);
    msg.session_nonce = nonce;
  }
  return msg;
}

// --- EAPOL-Key ----------------------------------------------------------------

Bytes encode_eapol_key(const EapolKeyFrame& f) {
  Bytes out;
  out.reserve(kEapolHeaderOctets + kEapolKeyFixedOctets + f.key_data.size());
  ByteWriter w(out);
  w.u8(f.protocol_version);
  w.u8(kEapolKeyPacketType);
  w.u16(static_cast<std::uint16_t>(kEapolKeyFixedOctets + f.key_data.size()));
  w.u8(f.descriptor_type);
  w.u16(f.key_info);
  w.u16(f.key_length);
  w.u64(f.replay_counter);
  w.raw(view(f.key_nonce));
  w.raw(view(f.key_iv));
  w.raw(view(f.key_rsc));
  w.raw(view(f.key_id));
  w.raw(view(f.key_mic));
  w.u16(static_cast<std::uint16_t>(f.key_data.size()));
  w.raw(f.key_data);
  return out;
}

Parsed<EapolKeyFrame> parse_eapol_key(ByteView bytes) {
  ByteReader r(bytes);
  auto version = r.u8();
  auto type = r.u8();
  auto length = r.u16();
  if (!version || !type || !length) return fail(CodecError::kTruncated);
  if (*type != kEapolKeyPacketType) return fail(CodecError::kWrongPacketType);
  if (*version == kSoapProtocolVersion) return fail(CodecError::kWrongVersion);
  if (r.remaining() < *length) return fail(CodecError::kTruncated);
  if (r.remaining() > *length) return fail(CodecError::kTrailingData);
  if (*length < kEapolKeyFixedOctets) return fail(CodecError::kTruncated);

  EapolKeyFrame f;
  f.protocol_version = *version;
  f.descriptor_type = *r.u8();
  f.key_info = *r.u16();
  f.key_length = *r.u16();
  f.replay_counter = *r.u64();
  r.into(f.key_nonce);
  r.into(f.key_iv);
  r.into(f.key_rsc);
  r.into(f.key_id);
  r.into(f.key_mic);
  auto data_len = *r.u16();
  if (data_len != *length - kEapolKeyFixedOctets) return fail(CodecError::kLengthMismatch);
  auto data = r.take(data_len);
  f.key_data.assign(data->begin(), data->end());
  return f;
}

// --- Management frames ------------------------------------------------------

const Element* ManagementFrame::find(std::uint8_t id) const {
  auto it = std::find_if(elements.begin(), elements.end(), [id](const Element& e) { return e.id == id; });
  return it == elements.end() ? nullptr : &*it;
}

Parsed<Bytes> encode_management_frame(const ManagementFrame& frame) { return encode_mgmt(frame, true); }

Parsed<Bytes> management_signing_input(const ManagementFrame& frame) { return encode_mgmt(frame, false); }

Parsed<ManagementFrame> parse_management_frame(ByteView bytes) {
  ByteReader r(bytes);
  auto prefix = read_mgmt_prefix(r);
  if (!prefix) return fail(prefix.error());
  auto elements = read_elements(r);
  if (!elements) return fail(elements.error());

  ManagementFrame frame;
  frame.subtype = prefix->subtype;
  frame.dest = prefix->header.dest;
  frame.source = prefix->header.source;
  frame.bssid = prefix->header.bssid;
  frame.fixed_body.assign(prefix->fixed_body.begin(), prefix->fixed_body.end());
  frame.elements = std::move(*elements);
  if (!frame.elements.empty() && frame.elements.back().id == kMgmtSignatureElementId) {
    frame.signature = std::move(frame.elements.back().payload);
    frame.elements.pop_back();
  }
  return frame;
}

Parsed<ElementScan> extract_elements(ByteView frame, const std::set<std::uint8_t>& known_ids) {
  ByteReader r(frame);
  auto prefix = read_mgmt_prefix(r);
  if (!prefix) return fail(prefix.error());
  auto elements = read_elements(r);
  if (!elements) return fail(elements.error());
  ElementScan scan;
  for (auto& e : *elements) {
    if (known_ids.count(e.id)) {
      scan.recognized.push_back(std::move(e));
    } else {
      ++scan.skipped;
    }
  }
  return scan;
}

// --- Data frames ------------------------------------------------------------

Bytes encode_data_frame(const DataFrame& frame) {
  Bytes out;
  out.reserve(kMacHeaderOctets + kLlcSnapOctets + frame.eapol.size());
  ByteWriter w(out);
  write_mac_header(w, kTypeData, 0, frame.dest, frame.source, frame.bssid);
  w.raw(view(kLlcSnapEapol));
  w.raw(frame.eapol);
  return out;
}

Parsed<DataFrame> parse_data_frame(ByteView bytes) {
  ByteReader r(bytes);
  auto header = read_mac_header(r);
  if (!header) return fail(CodecError::kTruncated);
  if (header->type != kTypeData) return fail(CodecError::kUnknownFrameType);
  auto llc = r.take(kLlcSnapOctets);
  if (!llc) return fail(CodecError::kTruncated);
  if (!std::equal(llc->begin(), llc->end(), kLlcSnapEapol.begin())) return fail(CodecError::kUnknownFrameType);
  auto rest = r.take(r.remaining());
  return DataFrame{header->dest, header->source, header->bssid, Bytes(rest->begin(), rest->end())};
}

Parsed<AnyFrame> parse_frame(ByteView bytes) {
  if (bytes.empty()) return fail(CodecError::kTruncated);
  const auto type = static_cast<std::uint8_t>((bytes[0] >> 2) & 0x3);
  if (type == kTypeManagement) {
    auto mgmt = parse_management_frame(bytes);
    if (!mgmt) return fail(mgmt.error());
    return AnyFrame(std::move(*mgmt));
  }
  if (type == kTypeData) {
    auto data = parse_data_frame(bytes);
    if (!data) return fail(data.error());
    return AnyFrame(std::move(*data));
  }
  return fail(CodecError::kUnknownFrameType);
}

// --- Sizes ------------------------------------------------------------------

std::size_t frame_wire_size(const ManagementFrame& frame) {
  std::size_t size = kMacHeaderOctets + fixed_body_octets(frame.subtype);
  for (const auto& e : frame.elements) size += 2 + e.payload.size();
  if (frame.signature) size += 2 + frame.signature->size();
  return size;
}

std::size_t frame_wire_size(const SoapMessage& msg) {
  return kMacHeaderOctets + kLlcSnapOctets + kEapolHeaderOctets + msg.ecdh_public_key.size() +
         msg.ecdsa_signature.size() + (msg.session_nonce ? kSessionNonceOctets : 0);
}

std::size_t frame_wire_size(const EapolKeyFrame& frame) {
  return kMacHeaderOctets + kLlcSnapOctets + kEapolHeaderOctets + kEapolKeyFixedOctets + frame.key_data.size();
}

std::size_t frame_wire_size(const DataFrame& frame) {
  return kMacHeaderOctets + kLlcSnapOctets + frame.eapol.size();
}

}  // namespace soap::frames
