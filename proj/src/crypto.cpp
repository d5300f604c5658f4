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

#include "provhl/crypto.hpp"

#include "provhl/error.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

namespace provhl {
namespace {

void ensureSodium()
{
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0)
    {
      throw Error(Errc::Unavailable, "libsodium initialisation failed");
    }
  });
}

}  // namespace

std::string toHex(ByteView bytes)
{
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes)
  {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes fromHex(std::string_view hex)
{
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0)
  {
    throw Error(Errc::Malformed, "odd-length hex string");
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
  {
    int const hi = nibble(hex[i]);
    int const lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0)
    {
      throw Error(Errc::Malformed, "invalid hex digit");
    }
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::string toBase64(ByteView bytes)
{
  ensureSodium();
  auto const  len = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop terminator
  return out;
}

Bytes fromBase64(std::string_view text)
{
  ensureSodium();
  Bytes       out(text.size());
  std::size_t written = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &written,
                        nullptr, sodium_base64_VARIANT_ORIGINAL) != 0)
  {
    throw Error(Errc::Malformed, "invalid base64");
  }
  out.resize(written);
  return out;
}

bool HashDigest::isZero() const noexcept
{
  return std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
}

std::string HashDigest::hex() const
{
  return toHex(bytes);
}

HashDigest sha256(ByteView data)
{
  ensureSodium();
  HashDigest out;
  crypto_hash_sha256(out.bytes.data(), data.data(), data.size());
  return out;
}

KeyPair KeyPair::generate()
{
  ensureSodium();
  KeyPair kp;
  crypto_sign_keypair(kp.public_.data(), kp.secret_.data());
  return kp;
}

KeyPair KeyPair::fromSeed(ByteView seed32)
{
  ensureSodium();
  if (seed32.size() != crypto_sign_SEEDBYTES)
  {
    throw Error(Errc::Malformed, "Ed25519 seed must be 32 bytes");
  }
  KeyPair kp;
  crypto_sign_seed_keypair(kp.public_.data(), kp.secret_.data(), seed32.data());
  return kp;
}

KeyPair KeyPair::fromSeedText(std::string_view label)
{
  auto const seed = sha256(label);
  return fromSeed(seed.bytes);
}

KeyPair KeyPair::fromSecretHex(std::string_view hex)
{
  auto const raw = fromHex(hex);
  if (raw.size() != 64)
  {
    throw Error(Errc::Malformed, "Ed25519 secret key must be 64 bytes");
  }
  KeyPair kp;
  std::copy(raw.begin(), raw.end(), kp.secret_.begin());
  // the public half is the tail of the libsodium secret key
  std::copy(raw.begin() + 32, raw.end(), kp.public_.begin());
  return kp;
}

std::string KeyPair::secretHex() const
{
  return toHex(secret_);
}

Signature KeyPair::sign(ByteView message) const
{
  ensureSodium();
  Signature sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
  return sig;
}

bool verify(PublicKey const &key, ByteView message, ByteView signature) noexcept
{
  if (signature.size() != crypto_sign_BYTES)
  {
    return false;
  }
  if (sodium_init() < 0)
  {
    return false;
  }
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     key.data()) == 0;
}

void randomBytes(std::span<std::uint8_t> buf)
{
  ensureSodium();
  randombytes_buf(buf.data(), buf.size());
}

}  // namespace provhl
