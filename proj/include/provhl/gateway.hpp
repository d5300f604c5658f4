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
#include "provhl/identity.hpp"
#include "provhl/ledger.hpp"
#include "provhl/policy.hpp"
#include "provhl/wire.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace provhl {

struct SubmitResult
{
  std::string    txID;
  ValidationCode validity{ValidationCode::Valid};
  std::uint64_t  blockNumber{0};
  std::uint32_t  txIndex{0};

  bool valid() const noexcept { return validity == ValidationCode::Valid; }
};

/// Makes the network progress while a client waits: cuts due blocks under
/// virtual time, or simply sleeps when nodes run on their own.
class Driver
{
public:
  virtual ~Driver()   = default;
  virtual void step() = 0;
};

using NonceSource = std::function<Bytes()>;

Bytes randomNonce();

/// Client-side transaction flow: sign, collect endorsements that satisfy the
/// channel policy, order, await commit.
class Gateway
{
public:
  Gateway(SigningIdentity identity, Clock &clock,
          std::map<std::string, std::shared_ptr<Endpoint>> peers,
          std::shared_ptr<Endpoint> orderer, Driver &driver, NonceSource nonces = randomNonce);

  SigningIdentity const &identity() const noexcept { return identity_; }
  void setCommitTimeout(TimeMs timeout) noexcept { timeout_ = timeout; }

  Proposal            prepare(std::string const &channelID, PmdTransaction tx);
  /// Throws the simulation error, policy-unsatisfiable or endorsement-mismatch.
  TransactionEnvelope endorse(Proposal const &proposal);
  void                broadcast(TransactionEnvelope const &envelope);
  /// Throws Error(Timeout).
  SubmitResult        awaitCommit(std::string const &channelID, std::string const &txID);

  SubmitResult submit(std::string const &channelID, PmdTransaction tx);

  std::optional<StateEntry> getState(std::string const &channelID, std::string const &key);
  std::vector<HistoryEntry> getHistory(std::string const &channelID, std::string const &key);
  std::optional<TxRecord>   getTransaction(std::string const &channelID, std::string const &txID);
  std::optional<Block>      getBlock(std::string const &channelID, std::uint64_t n);
  std::uint64_t             height(std::string const &channelID);
  EventBatch                events(std::string const &channelID, EventsQuery const &query);
  ChannelConfig             channelConfig(std::string const &channelID);

private:
  Message query(std::string const &channelID, Message const &request);

  SigningIdentity                                  identity_;
  Clock                                           &clock_;
  std::map<std::string, std::shared_ptr<Endpoint>> peers_;
  std::shared_ptr<Endpoint>                        orderer_;
  Driver                                          &driver_;
  NonceSource                                      nonces_;
  TimeMs                                           timeout_{30'000};
  std::mutex                                       cacheMutex_;
  std::map<std::string, ChannelConfig>             configs_;
};

}  // namespace provhl
