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

#include "provhl/clock.hpp"
#include "provhl/ledger.hpp"
#include "provhl/wire.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace provhl {

struct OrdererConfig
{
  std::uint32_t maxMessagesPerBlock{10};
  TimeMs        batchTimeoutMs{250};
};

using BlockSink = std::function<void(Block const &)>;

/// Ordering interface: an envelope stream in, a block stream out.
class OrderingService
{
public:
  virtual ~OrderingService() = default;

  /// Queues an envelope. Unknown channels throw; malformed envelopes are
  /// dropped and reported through the acknowledgement.
  virtual BroadcastAck broadcast(std::string const &channelID,
                                 TransactionEnvelope const &envelope) = 0;

  /// Earliest time at which a pending batch must be cut.
  virtual std::optional<TimeMs> nextDeadline() const = 0;

  /// Cuts every batch whose deadline has passed; returns the number of blocks.
  virtual std::size_t tick() = 0;

  virtual void addSink(std::string const &channelID, BlockSink sink) = 0;
};

/// Single trusted orderer: FIFO per channel, cuts at maxMessagesPerBlock or
/// batchTimeout after the first pending envelope.
class SoloOrderer final : public OrderingService, public Node
{
public:
  SoloOrderer(std::string id, KeyPair key, Clock &clock, OrdererConfig config,
              std::filesystem::path dataDir = {}, bool syncWrites = true);
  ~SoloOrderer() override;

  std::string const &id() const noexcept { return id_; }
  PublicKey const   &publicKey() const noexcept { return key_.publicKey(); }
  OrdererConfig const &config() const noexcept { return config_; }

  /// Writes block 0 from a signed configuration envelope.
  Block createChannel(TransactionEnvelope const &configEnvelope);
  bool  hasChannel(std::string const &channelID) const;
  /// Reopens a channel whose block log already exists under dataDir.
  void  restoreChannel(std::string const &channelID);

  std::uint64_t      height(std::string const &channelID) const;
  std::vector<Bytes> rawBlocks(std::string const &channelID) const;
  Block              block(std::string const &channelID, std::uint64_t n) const;

  BroadcastAck          broadcast(std::string const &channelID,
                                  TransactionEnvelope const &envelope) override;
  std::optional<TimeMs> nextDeadline() const override;
  std::size_t           tick() override;
  void addSink(std::string const &channelID, BlockSink sink) override;

  Message handle(Message const &request) override;

private:
  struct Channel
  {
    std::unique_ptr<BlockStore>      store;
    std::deque<TransactionEnvelope>  pending;
    TimeMs                           firstPendingAt{0};
    std::vector<BlockSink>           sinks;
  };

  using Cut = std::pair<Block, std::vector<BlockSink>>;

  Block cutLocked(std::string const &channelID, Channel &ch, std::size_t count);
  void  publish(std::vector<Cut> const &blocks);

  std::string                      id_;
  KeyPair                          key_;
  Clock                           &clock_;
  OrdererConfig                    config_;
  std::filesystem::path            dataDir_;
  bool                             sync_;
  mutable std::mutex               mutex_;
  std::mutex                       publishMutex_;
  std::map<std::string, Channel>   channels_;
};

}  // namespace provhl
