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
#include "provhl/codec.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <string>

namespace provhl {

/// SHA-256 output.
struct HashDigest
{
  static constexpr std::size_t kSize = 32;

  std::array<std::uint8_t, kSize> bytes{};

  static HashDigest zero() { return {}; }

  bool isZero() const noexcept;
  std::string hex() const;

  auto operator<=>(HashDigest const &) const = default;
};

inline void encode(codec::Writer &w, HashDigest const &d) { w.fixed(d.bytes); }
inline void decode(codec::Reader &r, HashDigest &d) { codec::decode(r, d.bytes); }

HashDigest sha256(ByteView data);

inline HashDigest sha256(std::string_view text)
{
  return sha256(ByteView{reinterpret_cast<std::uint8_t const *>(text.data()), text.size()});
}

template <typename T>
HashDigest hashOf(T const &value)
{
  return sha256(codec::serialize(value));
}

using PublicKey = std::array<std::uint8_t, 32>;
using Signature = Bytes;  // 64 bytes for Ed25519; kept variable so corrupted input still decodes

/// Ed25519 key pair. The secret key never leaves the process that created it.
class KeyPair
{
public:
  static KeyPair generate();
  /// Deterministic key derivation, used for virtual-time runs.
  static KeyPair fromSeed(ByteView seed32);
  static KeyPair fromSeedText(std::string_view label);

  static KeyPair fromSecretHex(std::string_view hex);
  std::string    secretHex() const;

  PublicKey const &publicKey() const noexcept { return public_; }
  Signature        sign(ByteView message) const;

private:
  PublicKey                     public_{};
  std::array<std::uint8_t, 64>  secret_{};
};

bool verify(PublicKey const &key, ByteView message, ByteView signature) noexcept;

/// Fills buf with OS randomness.
void randomBytes(std::span<std::uint8_t> buf);

}  // namespace provhl
