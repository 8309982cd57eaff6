#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace ahn::binary {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Little-endian writer for fixed-width integers and IEEE floats.
class Writer {
public:
  explicit Writer(std::ostream &out) : out_(out) {}

  void magic(const char (&tag)[5]) { out_.write(tag, 4); }

  template <typename T> void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    std::make_unsigned_t<std::conditional_t<
        std::is_floating_point_v<T>,
        std::conditional_t<sizeof(T) == 8, std::int64_t, std::int32_t>, T>>
        bits;
    static_assert(sizeof(bits) == sizeof(T));
    std::memcpy(&bits, &value, sizeof(T));
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out_.write(buf, sizeof(T));
  }

  void string(const std::string &s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void bytes(const void *data, std::size_t n) {
    out_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
  }

private:
  std::ostream &out_;
};

class Reader {
public:
  explicit Reader(std::istream &in) : in_(in) {}

  bool magic(const char (&tag)[5]) {
    char buf[4];
    if (!in_.read(buf, 4)) return false;
    return std::memcmp(buf, tag, 4) == 0;
  }

  template <typename T> T get() {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char buf[sizeof(T)];
    if (!in_.read(reinterpret_cast<char *>(buf), sizeof(T)))
      throw FormatError("unexpected end of file");
    std::make_unsigned_t<std::conditional_t<
        std::is_floating_point_v<T>,
        std::conditional_t<sizeof(T) == 8, std::int64_t, std::int32_t>, T>>
        bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<decltype(bits)>(buf[i]) << (8 * i);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
  }

  std::string string(std::size_t limit = 1u << 30) {
    const auto n = get<std::uint32_t>();
    if (n > limit) throw FormatError("string length out of range");
    std::string s(n, '\0');
    if (n && !in_.read(s.data(), n)) throw FormatError("unexpected end of file");
    return s;
  }

  void bytes(void *data, std::size_t n) {
    if (!in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n)))
      throw FormatError("unexpected end of file");
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
  std::istream &in_;
};

} // namespace ahn::binary
