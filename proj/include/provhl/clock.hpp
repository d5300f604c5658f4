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

#include <atomic>
#include <cstdint>
#include <string>

namespace provhl {

/// Milliseconds since the Unix epoch, UTC.
using TimeMs = std::uint64_t;

class Clock
{
public:
  virtual ~Clock() = default;

  virtual TimeMs now() const = 0;
  /// Blocks (or, for virtual time, jumps) until now() >= deadline.
  virtual void sleepUntil(TimeMs deadline) = 0;
  virtual bool isVirtual() const = 0;

  void sleepFor(TimeMs duration) { sleepUntil(now() + duration); }
};

class SystemClock final : public Clock
{
public:
  TimeMs now() const override;
  void   sleepUntil(TimeMs deadline) override;
  bool   isVirtual() const override { return false; }
};

/// Logical clock for deterministic runs: time moves only when asked to.
class VirtualClock final : public Clock
{
public:
  explicit VirtualClock(TimeMs start = 1'700'000'000'000ULL)
    : now_{start}
  {}

  TimeMs now() const override { return now_.load(); }

  void sleepUntil(TimeMs deadline) override { advanceTo(deadline); }
  bool isVirtual() const override { return true; }

  void advanceTo(TimeMs t)
  {
    auto cur = now_.load();
    while (t > cur && !now_.compare_exchange_weak(cur, t))
    {
    }
  }

  void advanceBy(TimeMs delta) { now_.fetch_add(delta); }

private:
  std::atomic<TimeMs> now_;
};

/// Formats whole seconds since the epoch as "yyyy.mm.dd;hh.mm.ss" (UTC).
std::string formatDateTime(std::uint64_t epochSeconds);

}  // namespace provhl
