#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace soap {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view text);

/// Offset-prefixed dump, 16 octets per line: "0000: 01 02 ...".
std::string hex_dump(ByteView data);

/// Number of (possibly overlapping) occurrences of `needle` in `haystack`.
std::size_t count_occurrences(ByteView haystack, ByteView needle);

/// Overwrites memory in a way the optimizer may not elide.
void secure_zero(std::span<std::uint8_t> data);

template <std::size_t N>
ByteView view(const std::array<std::uint8_t, N>& a) {
  return ByteView(a.data(), a.size());
}

class MacAddress {
 public:
  static constexpr std::size_t kOctets = 6;

  constexpr MacAddress() = default;
  constexpr explicit MacAddress(std::array<std::uint8_t, kOctets> octets) : octets_(octets) {}

  static std::optional<MacAddress> parse(std::string_view text);
  static constexpr MacAddress broadcast() {
    return MacAddress({0xff, 0xff, 0xff, 0xff, 0xff, 0xff});
  }

  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] const std::array<std::uint8_t, kOctets>& octets() const noexcept { return octets_; }
  [[nodiscard]] bool is_broadcast() const noexcept { return *this == broadcast(); }

  friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;

 private:
  std::array<std::uint8_t, kOctets> octets_{};
};

// Big-endian append helpers.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }
  void mac(const MacAddress& m) { raw(ByteView(m.octets())); }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }

 private:
  Bytes& out_;
};

// Bounds-checked big-endian reader. Every accessor returns false/nullopt on
// truncation and leaves the cursor unchanged.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }

  std::optional<std::uint8_t> u8();
  std::optional<std::uint16_t> u16();
  std::optional<std::uint64_t> u64();
  std::optional<ByteView> take(std::size_t n);
  std::optional<MacAddress> mac();

  template <std::size_t N>
  bool into(std::array<std::uint8_t, N>& out) {
    auto bytes = take(N);
    if (!bytes) return false;
    std::copy(bytes->begin(), bytes->end(), out.begin());
    return true;
  }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace soap
