//------------------------------------------------------------------------------
//
//   Copyright 2026 The ProvHL Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include "provhl/bytes.hpp"
#include "provhl/error.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

// Canonical binary encoding used for every hashed or signed value.
//
//   integers  big-endian, fixed width
//   bool      one byte, 0 or 1
//   string    u32 length prefix followed by UTF-8 bytes
//   bytes     u32 length prefix followed by raw bytes
//   list      u32 element count followed by the elements
//   optional  presence byte (0 or 1) followed by the value when present
//   variant   u8 alternative tag followed by the alternative
//
// Records encode their fields in declaration order. Decoding is strict: any
// deviation from the canonical form (bad presence byte, out-of-range enum,
// invalid UTF-8, trailing bytes) is rejected, so decode(encode(x)) is the only
// byte string that decodes to x.

namespace provhl::codec {

bool isValidUtf8(std::string_view text) noexcept;

class Writer
{
public:
  void u8(std::uint8_t v) { out_.push_back(v); }

  void u32(std::uint32_t v)
  {
    for (int shift = 24; shift >= 0; shift -= 8)
    {
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  void u64(std::uint64_t v)
  {
    for (int shift = 56; shift >= 0; shift -= 8)
    {
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  void boolean(bool v) { u8(v ? 1 : 0); }

  void length(std::size_t n)
  {
    if (n > UINT32_MAX)
    {
      throw Error(Errc::Malformed, "length exceeds 32-bit prefix");
    }
    u32(static_cast<std::uint32_t>(n));
  }

  void str(std::string_view v)
  {
    if (!isValidUtf8(v))
    {
      throw Error(Errc::Malformed, "string is not valid UTF-8");
    }
    length(v.size());
    out_.insert(out_.end(), v.begin(), v.end());
  }

  void bytes(ByteView v)
  {
    length(v.size());
    out_.insert(out_.end(), v.begin(), v.end());
  }

  /// Raw bytes without a length prefix; the reader must know the width.
  void fixed(ByteView v) { out_.insert(out_.end(), v.begin(), v.end()); }

  Bytes const &data() const noexcept { return out_; }
  Bytes        take() { return std::move(out_); }

private:
  Bytes out_;
};

class Reader
{
public:
  explicit Reader(ByteView in)
    : in_{in}
  {}

  std::uint8_t u8()
  {
    need(1);
    return in_[pos_++];
  }

  std::uint32_t u32()
  {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
    {
      v = (v << 8) | in_[pos_++];
    }
    return v;
  }

  std::uint64_t u64()
  {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
    {
      v = (v << 8) | in_[pos_++];
    }
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  bool boolean()
  {
    auto const b = u8();
    if (b > 1)
    {
      throw Error(Errc::Malformed, "boolean byte out of range");
    }
    return b == 1;
  }

  std::string str()
  {
    auto const n = u32();
    need(n);
    std::string v(reinterpret_cast<char const *>(in_.data() + pos_), n);
    pos_ += n;
    if (!isValidUtf8(v))
    {
      throw Error(Errc::Malformed, "string is not valid UTF-8");
    }
    return v;
  }

  Bytes bytes()
  {
    auto const n = u32();
    return fixed(n);
  }

  Bytes fixed(std::size_t n)
  {
    need(n);
    Bytes v(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
            in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return v;
  }

  template <typename E>
  E enumeration(std::uint8_t count)
  {
    auto const v = u8();
    if (v >= count)
    {
      throw Error(Errc::Malformed, "enum value out of range");
    }
    return static_cast<E>(v);
  }

  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  void expectEnd() const
  {
    if (pos_ != in_.size())
    {
      throw Error(Errc::Malformed, "trailing bytes after value");
    }
  }

private:
  void need(std::size_t n) const
  {
    if (in_.size() - pos_ < n)
    {
      throw Error(Errc::Malformed, "truncated input");
    }
  }

  ByteView    in_;
  std::size_t pos_{0};
};

// Primitive overloads. Domain types provide encode/decode in their own
// namespace; the templates below find them through ADL.

inline void encode(Writer &w, std::uint8_t v) { w.u8(v); }
inline void encode(Writer &w, std::uint32_t v) { w.u32(v); }
inline void encode(Writer &w, std::uint64_t v) { w.u64(v); }
inline void encode(Writer &w, bool v) { w.boolean(v); }
inline void encode(Writer &w, std::string const &v) { w.str(v); }
inline void encode(Writer &w, Bytes const &v) { w.bytes(v); }

inline void decode(Reader &r, std::uint8_t &v) { v = r.u8(); }
inline void decode(Reader &r, std::uint32_t &v) { v = r.u32(); }
inline void decode(Reader &r, std::uint64_t &v) { v = r.u64(); }
inline void decode(Reader &r, bool &v) { v = r.boolean(); }
inline void decode(Reader &r, std::string &v) { v = r.str(); }
inline void decode(Reader &r, Bytes &v) { v = r.bytes(); }

template <typename T>
void encode(Writer &w, std::vector<T> const &v)
{
  w.length(v.size());
  for (auto const &item : v)
  {
    encode(w, item);
  }
}

template <typename T>
void decode(Reader &r, std::vector<T> &v)
{
  auto const n = r.u32();
  v.clear();
  // each element takes at least one byte, so a count larger than the rest of
  // the input is malformed; this bounds the reservation below
  if (n > r.remaining())
  {
    throw Error(Errc::Malformed, "list count exceeds input");
  }
  v.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
  {
    T item{};
    decode(r, item);
    v.push_back(std::move(item));
  }
}

template <typename T>
void encode(Writer &w, std::optional<T> const &v)
{
  w.boolean(v.has_value());
  if (v)
  {
    encode(w, *v);
  }
}

template <typename T>
void decode(Reader &r, std::optional<T> &v)
{
  if (r.boolean())
  {
    T item{};
    decode(r, item);
    v = std::move(item);
  }
  else
  {
    v.reset();
  }
}

template <std::size_t N>
void encode(Writer &w, std::array<std::uint8_t, N> const &v)
{
  w.fixed(v);
}

template <std::size_t N>
void decode(Reader &r, std::array<std::uint8_t, N> &v)
{
  auto const raw = r.fixed(N);
  std::copy(raw.begin(), raw.end(), v.begin());
}

template <typename T>
Bytes serialize(T const &value)
{
  Writer w;
  encode(w, value);
  return w.take();
}

/// Strict decode of a complete buffer.
template <typename T>
T deserialize(ByteView bytes)
{
  Reader r{bytes};
  T      value{};
  decode(r, value);
  r.expectEnd();
  return value;
}

}  // namespace provhl::codec
