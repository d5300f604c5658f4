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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace provhl {

using Bytes    = std::vector<std::uint8_t>;
using ByteView = std::span<std::uint8_t const>;

inline Bytes toBytes(std::string_view text)
{
  return Bytes(text.begin(), text.end());
}

inline std::string toString(ByteView bytes)
{
  return std::string(bytes.begin(), bytes.end());
}

std::string toHex(ByteView bytes);
Bytes       fromHex(std::string_view hex);  // throws Error(Malformed)

std::string toBase64(ByteView bytes);
Bytes       fromBase64(std::string_view text);  // throws Error(Malformed)

}  // namespace provhl
