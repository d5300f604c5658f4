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

#include "provhl/acl.hpp"
#include "provhl/identity.hpp"
#include "provhl/ledger.hpp"
#include "provhl/pmd.hpp"
#include "provhl/transaction.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Transaction processors for provenance metadata.
//
// Every file operation is split into a ClientRequest, recorded before the
// storage acts, and a ServerResponse submitted by the storage's DMS once the
// operation has actually happened (or failed). The request writes a pending
// record keyed by its txID; the response consumes it. Effects that depend on
// the storage operation land in the response:
//
//   Upload     request creates the asset with temporary=true; response clears
//              the flag (or, when cancelled, removes the asset)
//   Download   request only reads the asset; response bumps downloads and
//              appends {requester, request txID} to dUsers
//   Copy*      request creates a temporary replica; response clears it
//   Delete     request locks the asset (temporary=true); response tombstones it
//   Transfer   request locks the asset; response moves it to the destination
//
// GrantAccess / RevokeAccess are single-phase and edit acl/<channel>/<ruleID>.

namespace provhl::chaincode {

std::string assetKey(std::string_view channelID, std::string_view fileID);
std::string assetKeyPrefix(std::string_view channelID);
std::string pendingKey(std::string_view channelID, std::string_view requestTxID);
std::string pendingKeyPrefix(std::string_view channelID);
std::string storageKey(std::string_view channelID, std::string_view storageID);
std::string configKey(std::string_view channelID);
std::string aclSequenceKey(std::string_view channelID);

/// In-flight state of a two-phase operation.
struct PendingRequest
{
  std::string                requestTxID;
  TxType                     txType{TxType::Upload};
  std::string                requesterID;
  std::string                fileID;        // asset the response acts on
  std::string                sourceFileID;  // copies only
  std::string                executingStorageID;
  std::optional<std::string> destinationStorageID;
  TimeMs                     requestedAt{0};
  std::optional<std::string> consumedBy;  // txID of the ServerResponse

  bool operator==(PendingRequest const &) const = default;
};

void encode(codec::Writer &w, PendingRequest const &p);
void decode(codec::Reader &r, PendingRequest &p);

/// Read-only versioned state as seen by simulation.
class StateView
{
public:
  virtual ~StateView()                                                            = default;
  virtual std::optional<StateEntry> get(std::string const &key) const             = 0;
  virtual std::vector<StateEntry>   range(std::string const &prefix) const        = 0;
};

class SnapshotView final : public StateView
{
public:
  explicit SnapshotView(std::shared_ptr<WorldState const> state)
    : state_{std::move(state)}
  {}

  std::optional<StateEntry> get(std::string const &key) const override;
  std::vector<StateEntry>   range(std::string const &prefix) const override;

private:
  std::shared_ptr<WorldState const> state_;
};

using Directory = std::function<std::optional<Participant>(std::string const &)>;

using DecisionObserver =
    std::function<void(std::string const &txID, acl::Operation, acl::Decision const &)>;

struct Invocation
{
  Proposal const   &proposal;
  std::string       txID;
  Participant       requester;
  Directory         directory;
  DecisionObserver  observer;  // optional instrumentation
};

/// Runs the transaction against the view and returns its read/write set.
/// Throws Error with the contract's error code; never returns a write set for
/// a denied request.
ReadWriteSet simulate(StateView const &view, Invocation const &call);

/// Applies a committed valid transaction (its write set, verbatim).
void applyTransaction(WorldState &state, TransactionEnvelope const &envelope, Version version);

/// Storage whose organisation stands in for "$storageOrg" in the endorsement
/// policy. Empty when the transaction touches no storage.
std::string policyStorage(StateView const &committed, Proposal const &proposal);

/// Write set that seeds a channel: configuration, storage registry and
/// bootstrap rules.
ReadWriteSet genesisWrites(ChannelConfig const &config);

std::vector<acl::AclRule>     loadRules(StateView const &view, std::string_view channelID);
std::optional<FileAsset>      loadAsset(StateView const &view, std::string_view channelID,
                                        std::string_view fileID);
std::optional<PendingRequest> loadPending(StateView const &view, std::string_view channelID,
                                          std::string_view requestTxID);
std::optional<ChannelConfig>  loadConfig(StateView const &view, std::string_view channelID);

}  // namespace provhl::chaincode
