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

#include "provhl/chaincode.hpp"
#include "provhl/identity.hpp"
#include "provhl/ledger.hpp"
#include "provhl/policy.hpp"
#include "provhl/wire.hpp"

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace provhl {

using EventCallback = std::function<void(CommitEvent const &)>;
using CommitObserver =
    std::function<void(std::string const &peerID, Block const &block, HashDigest stateHash)>;

/// Endorsing and committing peer.
///
/// Endorsement runs concurrently over immutable state snapshots; validation
/// and commit of each channel is one serialised pipeline. While stopped the
/// peer answers nothing and holds delivered blocks until restarted.
class Peer final : public Node
{
public:
  /// An empty dataDir keeps ledgers in memory.
  Peer(SigningIdentity identity, Msp const &msp, std::filesystem::path dataDir = {},
       bool syncWrites = true);
  ~Peer() override;

  Peer(Peer const &)            = delete;
  Peer &operator=(Peer const &) = delete;

  std::string const &id() const noexcept { return identity_.id(); }
  std::string const &org() const noexcept { return identity_.org(); }

  /// Joins a channel from its genesis block. When an existing block log for
  /// the channel is found under dataDir it is verified and replayed instead.
  void joinChannel(Block const &genesis);
  bool hasChannel(std::string const &channelID) const;
  std::vector<std::string> channels() const;

  ProposeReply endorse(Proposal const &proposal);

  /// Validation flags for a block extending this peer's tip. Does not commit.
  std::vector<ValidationCode> validateBlock(Block const &block) const;

  /// Validates, signs the flags, commits and emits one event per envelope.
  void deliver(Block const &block);

  /// Registers a callback for commits on a channel, optionally filtered by
  /// transaction type. Callbacks run on the committing thread, in order.
  std::uint64_t subscribe(std::string const &channelID, std::optional<TxType> filter,
                          EventCallback callback);
  void          unsubscribe(std::uint64_t handle);

  /// Events with sequence >= fromSequence; waits up to maxWaitMs of wall
  /// time for the first one.
  EventBatch events(std::string const &channelID, EventsQuery const &query);

  ChannelLedger const &ledger(std::string const &channelID) const;
  ChannelConfig        config(std::string const &channelID) const;
  KeyResolver          keyResolver() const;

  void stop();
  void start();
  bool running() const noexcept;

  /// Test hooks.
  void setEndorsementFault(std::function<void(ReadWriteSet &)> fault);
  void setDecisionObserver(chaincode::DecisionObserver observer);
  void setCommitObserver(CommitObserver observer);

  Message handle(Message const &request) override;

private:
  struct Channel;
  struct Subscription
  {
    std::string           channelID;
    std::optional<TxType> filter;
    EventCallback         callback;
  };

  Channel       &channel(std::string const &channelID) const;
  void           commitLocked(Channel &ch, Block block);
  Message        dispatch(Message const &request);

  SigningIdentity                                    identity_;
  Msp const                                         &msp_;
  std::filesystem::path                              dataDir_;
  bool                                               sync_;
  mutable std::shared_mutex                          channelsMutex_;
  std::map<std::string, std::unique_ptr<Channel>>    channels_;
  mutable std::mutex                                 hooksMutex_;
  std::map<std::uint64_t, Subscription>              subscriptions_;
  std::uint64_t                                      nextSubscription_{1};
  std::function<void(ReadWriteSet &)>                endorsementFault_;
  chaincode::DecisionObserver                        decisionObserver_;
  CommitObserver                                     commitObserver_;
  mutable std::mutex                                 runMutex_;
  bool                                               running_{true};
  std::deque<Block>                                  backlog_;
};

}  // namespace provhl
