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

#include "provhl/codec.hpp"
#include "provhl/clock.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <thread>

namespace provhl {
namespace codec {

bool isValidUtf8(std::string_view text) noexcept
{
  std::size_t i = 0;
  auto const  n = text.size();
  while (i < n)
  {
    auto const c = static_cast<unsigned char>(text[i]);
    if (c < 0x80)
    {
      ++i;
      continue;
    }
    std::size_t   extra = 0;
    std::uint32_t cp    = 0;
    if ((c & 0xe0) == 0xc0)
    {
      extra = 1;
      cp    = c & 0x1f;
    }
    else if ((c & 0xf0) == 0xe0)
    {
      extra = 2;
      cp    = c & 0x0f;
    }
    else if ((c & 0xf8) == 0xf0)
    {
      extra = 3;
      cp    = c & 0x07;
    }
    else
    {
      return false;
    }
    if (i + extra >= n)
    {
      return false;
    }
    for (std::size_t k = 1; k <= extra; ++k)
    {
      auto const cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xc0) != 0x80)
      {
        return false;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    // reject overlong forms, surrogates and values past U+10FFFF
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff))
    {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

}  // namespace codec

TimeMs SystemClock::now() const
{
  using namespace std::chrono;
  return static_cast<TimeMs>(
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

void SystemClock::sleepUntil(TimeMs deadline)
{
  auto const cur = now();
  if (deadline > cur)
  {
    std::this_thread::sleep_for(std::chrono::milliseconds(deadline - cur));
  }
}

std::string formatDateTime(std::uint64_t epochSeconds)
{
  auto const t = static_cast<std::time_t>(epochSeconds);
  std::tm    tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d.%02d.%02d;%02d.%02d.%02d", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace provhl
