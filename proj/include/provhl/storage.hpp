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
#include "provhl/clock.hpp"
#include "provhl/gateway.hpp"
#include "provhl/identity.hpp"
#include "provhl/peer.hpp"
#include "provhl/wire.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace provhl {

/// Directory-backed file store: `<rootPath>/<localFileName>`.
class StorageBackend
{
public:
  /// op is one of "store", "remove"; context is the request txID.
  using MutationObserver =
      std::function<void(std::string const &op, std::string const &localName,
                         std::string const &context)>;

  StorageBackend(std::string storageID, std::filesystem::path rootPath,
                 std::optional<std::uint64_t> capacityBytes = std::nullopt);

  std::string const           &storageID() const noexcept { return storageID_; }
  std::filesystem::path const &rootPath() const noexcept { return root_; }

  /// Returns the hex SHA-256 of the stored content. Throws Io or Capacity.
  std::string store(std::string const &localName, ByteView content,
                    std::string const &context = {});
  Bytes       read(std::string const &localName) const;  // throws Io
  void        remove(std::string const &localName, std::string const &context = {});
  bool        exists(std::string const &localName) const;
  std::string checksum(std::string const &localName) const;
  /// Relative paths of every regular file under rootPath, sorted.
  std::vector<std::string> list() const;
  std::uint64_t            usedBytes() const;

  /// The next `count` mutating operations fail with `code` (Io or Capacity).
  void failNext(Errc code, unsigned count = 1);
  void setMutationObserver(MutationObserver observer);

private:
  std::filesystem::path pathOf(std::string const &localName) const;
  void                  maybeFail();

  std::string                  storageID_;
  std::filesystem::path        root_;
  std::optional<std::uint64_t> capacity_;
  mutable std::mutex           mutex_;
  Errc                         faultCode_{Errc::Io};
  unsigned                     faultsLeft_{0};
  MutationObserver             observer_;
};

std::string contentChecksum(ByteView content);

/// Signs a request so the receiving node can authenticate the caller.
Message signedBy(Message message, SigningIdentity const &who);

struct OperationReceipt
{
  std::string     channelID;
  std::string     requestTxID;
  TxType          txType{TxType::Upload};
  ResponseOutcome outcome{ResponseOutcome::Done};
  std::string     reason;  // failures: no-valid-request, io, capacity, ...
  std::optional<std::string> localFileName;
  std::optional<std::string> checksum;
  TimeMs          completedAt{0};

  bool done() const noexcept { return outcome == ResponseOutcome::Done; }
};

struct ReconcileReport
{
  std::vector<std::string> cancelled;           // request txIDs cancelled
  std::vector<std::string> resubmitted;         // stuck receipts submitted again
  std::vector<std::string> untrackedFiles;      // backend files with no asset
  std::vector<std::string> missingFiles;        // assets with no backend file
  std::vector<std::string> checksumMismatches;  // fileIDs
  TimeMs                   ranAt{0};

  bool clean() const noexcept;
};

std::string reconcileReportJson(ReconcileReport const &r);

/// DMS adapter for one storage.
///
/// Learns of requests from commit events, re-checks each one in the ledger,
/// performs the file operation and confirms (or cancels) it with a linked
/// ServerResponse. A single worker drains the queue.
class Dms final : public Node
{
public:
  struct Options
  {
    unsigned maxAttempts{5};
    TimeMs   retryBaseMs{50};
  };

  Dms(SigningIdentity identity, StorageInfo storage, StorageBackend &backend, Msp const &msp,
      Gateway &gateway, Clock &clock, std::filesystem::path stateDir, Options options);

  std::string const &id() const noexcept { return identity_.id(); }
  std::string const &storageID() const noexcept { return storage_.storageID; }
  StorageBackend    &backend() noexcept { return backend_; }

  /// Subscribes to the peer's events for a channel and catches up on every
  /// event it already holds (dedup makes this idempotent).
  void attach(Peer &peer, std::string const &channelID);

  /// Destination DMS for cross-storage copies and transfers.
  void addRemote(std::string const &storageID, std::shared_ptr<Endpoint> endpoint);

  /// Returns true when the event was queued.
  bool        handleCommitEvent(CommitEvent const &event);
  /// Queues a request named by the user (the txID carried to the DMS).
  bool        enqueue(std::string const &channelID, std::string const &requestTxID);
  std::size_t queueDepth() const;

  /// Executes and confirms the next queued request. False when idle.
  bool        processOne();
  std::size_t drain();

  OperationReceipt executeRequest(std::string const &channelID, std::string const &requestTxID);
  std::optional<SubmitResult> submitServerResponse(OperationReceipt const &receipt);

  ReconcileReport reconcile(TimeMs maxAge);

  /// Staging (no request txID) or cross-storage ingest.
  IngestReply ingest(std::string const &channelID, IngestRequest const &request);
  /// Content read by a confirmed download, for its requester.
  Bytes       fetch(std::string const &channelID, std::string const &requestTxID,
                    std::string const &callerID);

  std::vector<std::string> stuck() const;
  std::string              statusJson() const;
  /// Request txIDs that passed the ledger check (instrumentation).
  std::set<std::string>    verifiedRequests() const;

  Message handle(Message const &request) override;

private:
  struct Item
  {
    std::string channelID;
    std::string txID;
  };

  Peer &peerFor(std::string const &channelID) const;
  std::optional<chaincode::PendingRequest> pendingFor(std::string const &channelID,
                                           std::string const &txID) const;
  bool        seen(std::string const &key) const;
  void        journal(std::string const &key);
  std::string localName(std::string const &channelID, std::string const &fileID) const;
  IngestReply sendToRemote(std::string const &channelID, std::string const &storageID,
                           IngestRequest const &request);
  std::filesystem::path stagingPath(std::string const &channelID,
                                    std::string const &fileID) const;
  std::filesystem::path outboxPath(std::string const &channelID,
                                   std::string const &txID) const;

  SigningIdentity                                  identity_;
  StorageInfo                                      storage_;
  StorageBackend                                  &backend_;
  Msp const                                       &msp_;
  Gateway                                         &gateway_;
  Clock                                           &clock_;
  std::filesystem::path                            stateDir_;
  Options                                          options_;

  mutable std::mutex                               mutex_;
  std::map<std::string, Peer *>                    peers_;
  std::map<std::string, std::shared_ptr<Endpoint>> remotes_;
  std::deque<Item>                                 queue_;
  std::set<std::string>                            queued_;
  std::set<std::string>                            journaled_;
  std::map<std::string, OperationReceipt>          stuck_;
  std::set<std::string>                            verified_;
  std::optional<ReconcileReport>                   lastReconcile_;
  std::mutex                                       workerMutex_;
};

}  // namespace provhl
