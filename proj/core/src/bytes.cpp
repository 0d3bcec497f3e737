#include "soap/bytes.hpp"

#include <algorithm>
#include <cstdio>

namespace soap {
namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view text) {
  if (text.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = nibble(text[i]);
    int lo = nibble(text[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::string hex_dump(ByteView data) {
  std::string out;
  char prefix[16];
  for (std::size_t offset = 0; offset < data.size(); offset += 16) {
    std::snprintf(prefix, sizeof(prefix), "%04zx:", offset);
    out += prefix;
    auto end = std::min(data.size(), offset + 16);
    for (std::size_t i = offset; i < end; ++i) {
      out += ' ';
      out += to_hex(data.subspan(i, 1));
    }
    out += '\n';
  }
  return out;
}

std::size_t count_occurrences(ByteView haystack, ByteView needle) {
  if (needle.empty() || needle.size() > haystack.size()) return 0;
  std::size_t count = 0;
  auto it = haystack.begin();
  while (true) {
    it = std::search(it, haystack.end(), needle.begin(), needle.end());
    if (it == haystack.end()) break;
    ++count;
    ++it;
  }
  return count;
}

void secure_zero(std::span<std::uint8_t> data) {
  volatile std::uint8_t* p = data.data();
  for (std::size_t i = 0; i < data.size(); ++i) p[i] = 0;
}

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
  // aa:bb:cc:dd:ee:ff
  if (text.size() != 17) return std::nullopt;
  std::array<std::uint8_t, kOctets> octets{};
  for (std::size_t i = 0; i < kOctets; ++i) {
    if (i > 0 && text[i * 3 - 1] != ':') return std::nullopt;
    int hi = nibble(text[i * 3]);
    int lo = nibble(text[i * 3 + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    octets[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return MacAddress(octets);
}

std::string MacAddress::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < kOctets; ++i) {
    if (i) out += ':';
    out += to_hex(ByteView(&octets_[i], 1));
  }
  return out;
}

std::optional<std::uint8_t> ByteReader::u8() {
  if (remaining() < 1) return std::nullopt;
  return data_[pos_++];
}

std::optional<std::uint16_t> ByteReader::u16() {
  if (remaining() < 2) return std::nullopt;
  auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::optional<std::uint64_t> ByteReader::u64() {
  if (remaining() < 8) return std::nullopt;
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_ + i];
  pos_ += 8;
  return v;
}

std::optional<ByteView> ByteReader::take(std::size_t n) {
  if (remaining() < n) return std::nullopt;
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::optional<MacAddress> ByteReader::mac() {
  std::array<std::uint8_t, MacAddress::kOctets> octets{};
  if (!into(octets)) return std::nullopt;
  return MacAddress(octets);
}

}  // namespace soap
