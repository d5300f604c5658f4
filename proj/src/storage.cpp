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

#include "provhl/storage.hpp"

#include "provhl/error.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iterator>

namespace fs = std::filesystem;

namespace provhl {

namespace {

Bytes readFile(fs::path const &path)
{
  std::ifstream in{path, std::ios::binary};
  if (!in)
  {
    throw Error(Errc::Io, "cannot read " + path.string());
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void writeFileAtomic(fs::path const &path, ByteView content)
{
  fs::create_directories(path.parent_path());
  auto const tmp = path.parent_path() / (".tmp-" + path.filename().string());
  {
    std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
    out.write(reinterpret_cast<char const *>(content.data()),
              static_cast<std::streamsize>(content.size()));
    if (!out)
    {
      throw Error(Errc::Io, "cannot write " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
  {
    throw Error(Errc::Io, "cannot write " + path.string() + ": " + ec.message());
  }
}

}  // namespace

std::string contentChecksum(ByteView content)
{
  return sha256(content).hex();
}

Message signedBy(Message message, SigningIdentity const &who)
{
  message.sender    = who.id();
  message.signature = who.sign(messageSigningBytes(message));
  return message;
}

StorageBackend::StorageBackend(std::string storageID, fs::path rootPath,
                               std::optional<std::uint64_t> capacityBytes)
  : storageID_{std::move(storageID)}
  , root_{std::move(rootPath)}
  , capacity_{capacityBytes}
{
  fs::create_directories(root_);
}

fs::path StorageBackend::pathOf(std::string const &localName) const
{
  fs::path const rel{localName};
  bool           ok = !localName.empty() && rel.is_relative();
  for (auto const &part : rel)
  {
    ok = ok && isValidId(part.string()) && part != "." && part != "..";
  }
  if (!ok)
  {
    throw Error(Errc::Malformed, "invalid local file name '" + localName + "'");
  }
  return root_ / rel;
}

void StorageBackend::maybeFail()
{
  std::lock_guard lock{mutex_};
  if (faultsLeft_ > 0)
  {
    --faultsLeft_;
    throw Error(faultCode_, "injected fault in storage " + storageID_);
  }
}

std::string StorageBackend::store(std::string const &localName, ByteView content,
                                  std::string const &context)
{
  auto const path = pathOf(localName);
  maybeFail();
  if (capacity_)
  {
    std::uint64_t used = usedBytes();
    if (fs::exists(path))
    {
      used -= fs::file_size(path);
    }
    if (used + content.size() > *capacity_)
    {
      throw Error(Errc::Capacity, "storage " + storageID_ + " is full");
    }
  }
  writeFileAtomic(path, content);
  MutationObserver observer;
  {
    std::lock_guard lock{mutex_};
    observer = observer_;
  }
  if (observer)
  {
    observer("store", localName, context);
  }
  return contentChecksum(content);
}

Bytes StorageBackend::read(std::string const &localName) const
{
  return readFile(pathOf(localName));
}

void StorageBackend::remove(std::string const &localName, std::string const &context)
{
  auto const path = pathOf(localName);
  maybeFail();
  std::error_code ec;
  if (!fs::remove(path, ec) || ec)
  {
    throw Error(Errc::Io, "cannot remove " + localName);
  }
  MutationObserver observer;
  {
    std::lock_guard lock{mutex_};
    observer = observer_;
  }
  if (observer)
  {
    observer("remove", localName, context);
  }
}

bool StorageBackend::exists(std::string const &localName) const
{
  return fs::is_regular_file(pathOf(localName));
}

std::string StorageBackend::checksum(std::string const &localName) const
{
  return contentChecksum(read(localName));
}

std::vector<std::string> StorageBackend::list() const
{
  std::vector<std::string> out;
  for (auto const &entry : fs::recursive_directory_iterator(root_))
  {
    if (entry.is_regular_file() && entry.path().filename().string().rfind(".tmp-", 0) != 0)
    {
      out.push_back(fs::relative(entry.path(), root_).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t StorageBackend::usedBytes() const
{
  std::uint64_t total = 0;
  for (auto const &entry : fs::recursive_directory_iterator(root_))
  {
    if (entry.is_regular_file())
    {
      total += entry.file_size();
    }
  }
  return total;
}

void StorageBackend::failNext(Errc code, unsigned count)
{
  std::lock_guard lock{mutex_};
  faultCode_  = code;
  faultsLeft_ = count;
}

void StorageBackend::setMutationObserver(MutationObserver observer)
{
  std::lock_guard lock{mutex_};
  observer_ = std::move(observer);
}

bool ReconcileReport::clean() const noexcept
{
  return cancelled.empty() && resubmitted.empty() && untrackedFiles.empty() &&
         missingFiles.empty() && checksumMismatches.empty();
}

std::string reconcileReportJson(ReconcileReport const &r)
{
  nlohmann::json j;
  j["cancelled"]          = r.cancelled;
  j["resubmitted"]        = r.resubmitted;
  j["untrackedFiles"]     = r.untrackedFiles;
  j["missingFiles"]       = r.missingFiles;
  j["checksumMismatches"] = r.checksumMismatches;
  j["ranAt"]              = r.ranAt;
  j["clean"]              = r.clean();
  return j.dump();
}

Dms::Dms(SigningIdentity identity, StorageInfo storage, StorageBackend &backend, Msp const &msp,
         Gateway &gateway, Clock &clock, fs::path stateDir, Options options)
  : identity_{std::move(identity)}
  , storage_{std::move(storage)}
  , backend_{backend}
  , msp_{msp}
  , gateway_{gateway}
  , clock_{clock}
  , stateDir_{std::move(stateDir)}
  , options_{options}
{
  fs::create_directories(stateDir_);
  std::ifstream in{stateDir_ / "journal"};
  std::string   channel, txID;
  while (in >> channel >> txID)
  {
    journaled_.insert(channel + "/" + txID);
  }
}

void Dms::attach(Peer &peer, std::string const &channelID)
{
  {
    std::lock_guard lock{mutex_};
    peers_[channelID] = &peer;
  }
  peer.subscribe(channelID, std::nullopt, [this](CommitEvent const &e) { handleCommitEvent(e); });
  EventsQuery q;
  q.maxEvents = std::numeric_limits<std::uint32_t>::max();
  for (auto const &e : peer.events(channelID, q).events)
  {
    handleCommitEvent(e);
  }
}

void Dms::addRemote(std::string const &storageID, std::shared_ptr<Endpoint> endpoint)
{
  std::lock_guard lock{mutex_};
  remotes_[storageID] = std::move(endpoint);
}

Peer &Dms::peerFor(std::string const &channelID) const
{
  std::lock_guard lock{mutex_};
  auto const      it = peers_.find(channelID);
  if (it == peers_.end())
  {
    throw Error(Errc::UnknownChannel, "DMS " + id() + " does not serve " + channelID);
  }
  return *it->second;
}

std::optional<chaincode::PendingRequest> Dms::pendingFor(std::string const &channelID,
                                              std::string const &txID) const
{
  auto const entry = peerFor(channelID).ledger(channelID).getState(
      chaincode::pendingKey(channelID, txID));
  if (!entry)
  {
    return std::nullopt;
  }
  return codec::deserialize<chaincode::PendingRequest>(entry->value);
}

bool Dms::seen(std::string const &key) const
{
  return queued_.count(key) != 0 || journaled_.count(key) != 0;
}

void Dms::journal(std::string const &key)
{
  std::lock_guard lock{mutex_};
  if (!journaled_.insert(key).second)
  {
    return;
  }
  auto const sep = key.find('/');
  if (auto *f = std::fopen((stateDir_ / "journal").c_str(), "a"))
  {
    std::fprintf(f, "%s %s\n", key.substr(0, sep).c_str(), key.substr(sep + 1).c_str());
    std::fflush(f);
    std::fclose(f);
  }
}

bool Dms::handleCommitEvent(CommitEvent const &event)
{
  if (!event.valid() || event.phase != Phase::ClientRequest || !isStorageAffecting(event.txType))
  {
    return false;
  }
  return enqueue(event.channelID, event.txID);
}

bool Dms::enqueue(std::string const &channelID, std::string const &requestTxID)
{
  auto const key = channelID + "/" + requestTxID;
  {
    std::lock_guard lock{mutex_};
    if (seen(key) || peers_.count(channelID) == 0)
    {
      return false;
    }
  }
  auto const pending = pendingFor(channelID, requestTxID);
  if (!pending || pending->executingStorageID != storageID() || pending->consumedBy)
  {
    return false;
  }
  std::lock_guard lock{mutex_};
  if (!queued_.insert(key).second)
  {
    return false;
  }
  queue_.push_back(Item{channelID, requestTxID});
  return true;
}

std::size_t Dms::queueDepth() const
{
  std::lock_guard lock{mutex_};
  return queue_.size();
}

bool Dms::processOne()
{
  std::lock_guard worker{workerMutex_};
  Item            item;
  {
    std::lock_guard lock{mutex_};
    if (queue_.empty())
    {
      return false;
    }
    item = queue_.front();
    queue_.pop_front();
  }
  auto const key     = item.channelID + "/" + item.txID;
  auto const pending = pendingFor(item.channelID, item.txID);
  if (pending && !pending->consumedBy)
  {
    auto const receipt = executeRequest(item.channelID, item.txID);
    journal(key);
    submitServerResponse(receipt);
  }
  else
  {
    journal(key);
  }
  std::lock_guard lock{mutex_};
  queued_.erase(key);
  return true;
}

std::size_t Dms::drain()
{
  std::size_t n = 0;
  while (processOne())
  {
    ++n;
  }
  return n;
}

std::string Dms::localName(std::string const &channelID, std::string const &fileID) const
{
  return channelID + "/" + fileID;
}

fs::path Dms::stagingPath(std::string const &channelID, std::string const &fileID) const
{
  return stateDir_ / "staging" / channelID / fileID;
}

fs::path Dms::outboxPath(std::string const &channelID, std::string const &txID) const
{
  return stateDir_ / "outbox" / channelID / txID;
}

IngestReply Dms::sendToRemote(std::string const &channelID, std::string const &storageID,
                              IngestRequest const &request)
{
  std::shared_ptr<Endpoint> remote;
  {
    std::lock_guard lock{mutex_};
    if (auto const it = remotes_.find(storageID); it != remotes_.end())
    {
      remote = it->second;
    }
  }
  if (!remote)
  {
    throw Error(Errc::Unavailable, "no route to storage " + storageID);
  }
  return replyPayload<IngestReply>(remote->call(
      signedBy(makeMessage(MessageType::Ingest, channelID, request), identity_)));
}

OperationReceipt Dms::executeRequest(std::string const &channelID, std::string const &requestTxID)
{
  OperationReceipt receipt;
  receipt.channelID   = channelID;
  receipt.requestTxID = requestTxID;
  auto fail = [&](std::string reason) {
    receipt.outcome     = ResponseOutcome::Cancelled;
    receipt.reason      = std::move(reason);
    receipt.completedAt = clock_.now();
    spdlog::warn("dms {}: request {} failed: {}", id(), requestTxID, receipt.reason);
    return receipt;
  };

  auto      &peer = peerFor(channelID);
  auto const rec  = peer.ledger(channelID).getTransaction(requestTxID);
  if (rec)
  {
    receipt.txType = rec->envelope.proposal.tx.txType;
  }
  if (!rec || rec->validity != ValidationCode::Valid ||
      rec->envelope.proposal.tx.phase != Phase::ClientRequest ||
      !isStorageAffecting(rec->envelope.proposal.tx.txType))
  {
    return fail("no-valid-request");
  }
  auto const pending = pendingFor(channelID, requestTxID);
  if (!pending || pending->executingStorageID != storageID())
  {
    return fail("no-valid-request");
  }
  {
    std::lock_guard lock{mutex_};
    verified_.insert(requestTxID);
  }

  chaincode::SnapshotView const view{peer.ledger(channelID).snapshot()};
  try
  {
    auto requireAsset = [&](std::string const &fileID) {
      auto asset = chaincode::loadAsset(view, channelID, fileID);
      if (!asset)
      {
        throw Error(Errc::UnknownAsset, fileID);
      }
      return *asset;
    };
    switch (pending->txType)
    {
    case TxType::Upload:
    {
      auto const staged = stagingPath(channelID, pending->fileID);
      if (!fs::exists(staged))
      {
        return fail("no-staged-content");
      }
      auto const content     = readFile(staged);
      auto const name        = localName(channelID, pending->fileID);
      receipt.checksum       = backend_.store(name, content, requestTxID);
      receipt.localFileName  = name;
      fs::remove(staged);
      break;
    }
    case TxType::Download:
    {
      auto const asset   = requireAsset(pending->fileID);
      auto const content = backend_.read(asset.fileName);
      writeFileAtomic(outboxPath(channelID, requestTxID), content);
      receipt.checksum      = contentChecksum(content);
      receipt.localFileName = asset.fileName;
      break;
    }
    case TxType::CopyWithin:
    {
      auto const source     = requireAsset(pending->sourceFileID);
      auto const name       = localName(channelID, pending->fileID);
      receipt.checksum      = backend_.store(name, backend_.read(source.fileName), requestTxID);
      receipt.localFileName = name;
      break;
    }
    case TxType::CopyToStorage:
    {
      auto const source = requireAsset(pending->sourceFileID);
      auto const reply  = sendToRemote(
          channelID, pending->destinationStorageID.value_or(""),
          IngestRequest{pending->fileID, requestTxID, backend_.read(source.fileName)});
      receipt.checksum      = reply.checksum;
      receipt.localFileName = reply.localFileName;
      break;
    }
    case TxType::Delete:
    {
      auto const asset = requireAsset(pending->fileID);
      backend_.remove(asset.fileName, requestTxID);
      receipt.localFileName = asset.fileName;
      break;
    }
    case TxType::TransferToStorage:
    {
      auto const asset = requireAsset(pending->fileID);
      auto const reply = sendToRemote(
          channelID, pending->destinationStorageID.value_or(""),
          IngestRequest{pending->fileID, requestTxID, backend_.read(asset.fileName)});
      backend_.remove(asset.fileName, requestTxID);
      receipt.checksum      = reply.checksum;
      receipt.localFileName = reply.localFileName;
      break;
    }
    default: return fail("no-valid-request");
    }
  }
  catch (Error const &e)
  {
    return fail(std::string{errcName(e.code())} + ": " + e.detail());
  }
  catch (fs::filesystem_error const &e)
  {
    return fail(std::string{"io: "} + e.what());
  }
  receipt.outcome     = ResponseOutcome::Done;
  receipt.completedAt = clock_.now();
  return receipt;
}

std::optional<SubmitResult> Dms::submitServerResponse(OperationReceipt const &receipt)
{
  auto const key = receipt.channelID + "/" + receipt.requestTxID;
  auto const pending = pendingFor(receipt.channelID, receipt.requestTxID);
  if (!pending || pending->consumedBy)
  {
    std::lock_guard lock{mutex_};
    stuck_.erase(key);
    return std::nullopt;
  }

  PmdTransaction tx;
  tx.txType            = pending->txType;
  tx.phase             = Phase::ServerResponse;
  tx.linkedRequestTxID = receipt.requestTxID;
  ServerResponse resp;
  resp.outcome  = receipt.outcome;
  resp.reason   = receipt.reason;
  resp.fileName = receipt.localFileName.value_or("");
  resp.checksum = receipt.checksum.value_or("");
  tx.payload    = resp;

  std::string lastError;
  for (unsigned attempt = 0; attempt < options_.maxAttempts; ++attempt)
  {
    if (attempt > 0)
    {
      clock_.sleepFor(options_.retryBaseMs << (attempt - 1));
    }
    try
    {
      auto const result = gateway_.submit(receipt.channelID, tx);
      if (result.valid())
      {
        std::lock_guard lock{mutex_};
        stuck_.erase(key);
        return result;
      }
      lastError = "committed invalid (" + std::string{validationCodeName(result.validity)} + ")";
    }
    catch (Error const &e)
    {
      if (e.code() == Errc::RequestAlreadyConsumed)
      {
        std::lock_guard lock{mutex_};
        stuck_.erase(key);
        return std::nullopt;
      }
      lastError = e.what();
      bool const retryable =
          e.code() == Errc::Timeout || e.code() == Errc::Unavailable ||
          e.code() == Errc::PolicyUnsatisfiable || e.code() == Errc::InvalidTransaction ||
          e.code() == Errc::EndorsementMismatch;
      if (!retryable)
      {
        break;
      }
    }
  }
  spdlog::error("dms {}: response to {} is stuck: {}", id(), receipt.requestTxID, lastError);
  std::lock_guard lock{mutex_};
  stuck_[key] = receipt;
  return std::nullopt;
}

ReconcileReport Dms::reconcile(TimeMs maxAge)
{
  std::lock_guard worker{workerMutex_};
  ReconcileReport report;
  report.ranAt = clock_.now();

  std::map<std::string, OperationReceipt> stuck;
  std::map<std::string, Peer *>           peers;
  {
    std::lock_guard lock{mutex_};
    stuck = stuck_;
    peers = peers_;
  }
  for (auto const &[key, receipt] : stuck)
  {
    submitServerResponse(receipt);
    report.resubmitted.push_back(receipt.requestTxID);
  }

  std::set<std::string> tracked;
  for (auto const &[channelID, peer] : peers)
  {
    chaincode::SnapshotView const view{peer->ledger(channelID).snapshot()};
    for (auto const &e : view.range(chaincode::pendingKeyPrefix(channelID)))
    {
      auto const p = codec::deserialize<chaincode::PendingRequest>(e.value);
      if (p.consumedBy || p.executingStorageID != storageID() ||
          report.ranAt < p.requestedAt + maxAge)
      {
        continue;
      }
      {
        std::lock_guard lock{mutex_};
        if (queued_.count(channelID + "/" + p.requestTxID) != 0)
        {
          continue;
        }
      }
      OperationReceipt cancel;
      cancel.channelID   = channelID;
      cancel.requestTxID = p.requestTxID;
      cancel.txType      = p.txType;
      cancel.outcome     = ResponseOutcome::Cancelled;
      cancel.reason      = "reconcile: request outlived its deadline";
      cancel.completedAt = report.ranAt;
      journal(channelID + "/" + p.requestTxID);
      if (submitServerResponse(cancel))
      {
        report.cancelled.push_back(p.requestTxID);
      }
    }

    chaincode::SnapshotView const now{peer->ledger(channelID).snapshot()};
    for (auto const &e : now.range(chaincode::assetKeyPrefix(channelID)))
    {
      auto const asset = codec::deserialize<FileAsset>(e.value);
      if (asset.storageID != storageID() || asset.fileName.empty())
      {
        continue;
      }
      bool const present = backend_.exists(asset.fileName);
      if (present)
      {
        tracked.insert(asset.fileName);
      }
      if (asset.temporary)
      {
        continue;
      }
      if (!present)
      {
        report.missingFiles.push_back(asset.fileID);
      }
      else if (asset.checksum && backend_.checksum(asset.fileName) != *asset.checksum)
      {
        report.checksumMismatches.push_back(asset.fileID);
      }
    }
  }
  for (auto const &file : backend_.list())
  {
    if (tracked.count(file) == 0)
    {
      report.untrackedFiles.push_back(file);
    }
  }
  std::lock_guard lock{mutex_};
  lastReconcile_ = report;
  return report;
}

IngestReply Dms::ingest(std::string const &channelID, IngestRequest const &request)
{
  if (!isValidId(channelID) || !isValidId(request.fileID))
  {
    throw Error(Errc::Malformed, "invalid channel or fileID");
  }
  if (request.requestTxID.empty())
  {
    writeFileAtomic(stagingPath(channelID, request.fileID), request.content);
    return IngestReply{{}, contentChecksum(request.content)};
  }

  auto const rec = peerFor(channelID).ledger(channelID).getTransaction(request.requestTxID);
  auto const pending = pendingFor(channelID, request.requestTxID);
  if (!rec || rec->validity != ValidationCode::Valid || !pending || pending->consumedBy ||
      (pending->txType != TxType::CopyToStorage && pending->txType != TxType::TransferToStorage) ||
      pending->destinationStorageID != storageID() || pending->fileID != request.fileID)
  {
    throw Error(Errc::NotAuthorized,
                "no valid request " + request.requestTxID + " targets storage " + storageID());
  }
  {
    std::lock_guard lock{mutex_};
    verified_.insert(request.requestTxID);
  }
  auto const name = localName(channelID, request.fileID);
  return IngestReply{name, backend_.store(name, request.content, request.requestTxID)};
}

Bytes Dms::fetch(std::string const &channelID, std::string const &requestTxID,
                 std::string const &callerID)
{
  auto const pending = pendingFor(channelID, requestTxID);
  if (!pending || pending->txType != TxType::Download || pending->requesterID != callerID)
  {
    throw Error(Errc::NotAuthorized, "no download " + requestTxID + " for " + callerID);
  }
  auto const path = outboxPath(channelID, requestTxID);
  if (!fs::exists(path))
  {
    throw Error(Errc::NotFound, "download " + requestTxID + " has no content (yet)");
  }
  return readFile(path);
}

std::vector<std::string> Dms::stuck() const
{
  std::lock_guard          lock{mutex_};
  std::vector<std::string> out;
  for (auto const &[key, r] : stuck_)
  {
    out.push_back(r.requestTxID);
  }
  return out;
}

std::set<std::string> Dms::verifiedRequests() const
{
  std::lock_guard lock{mutex_};
  return verified_;
}

std::string Dms::statusJson() const
{
  nlohmann::json j;
  std::lock_guard lock{mutex_};
  j["storageID"]  = storageID();
  j["dmsID"]      = id();
  j["queueDepth"] = queue_.size();
  j["executed"]   = journaled_.size();
  std::vector<std::string> stuck;
  for (auto const &[key, r] : stuck_)
  {
    stuck.push_back(r.requestTxID);
  }
  j["stuck"] = stuck;
  j["lastReconcile"] =
      lastReconcile_ ? nlohmann::json::parse(reconcileReportJson(*lastReconcile_)) : nullptr;
  return j.dump();
}

Message Dms::handle(Message const &request)
{
  Message reply;
  try
  {
    switch (request.type)
    {
    case MessageType::Ingest:
      reply = makeReply(ingest(request.channel, codec::deserialize<IngestRequest>(request.payload)));
      break;
    case MessageType::Fetch:
    {
      auto const caller = msp_.lookup(request.sender);
      if (!caller || caller->revoked ||
          !verifySignature(caller->credential.participant, messageSigningBytes(request),
                           request.signature))
      {
        throw Error(Errc::BadSignature, "fetch request is not signed by a member");
      }
      reply = makeReply(
          fetch(request.channel, codec::deserialize<std::string>(request.payload), request.sender));
      break;
    }
    case MessageType::Status: reply = makeReply(statusJson()); break;
    default:
      throw Error(Errc::Malformed,
                  "DMS does not serve " + std::string{messageTypeName(request.type)});
    }
  }
  catch (Error const &e)
  {
    reply = makeFailure(e);
  }
  reply.sender    = id();
  reply.signature = identity_.sign(messageSigningBytes(reply));
  return reply;
}

}  // namespace provhl
