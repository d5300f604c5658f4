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

#include "provhl/chaincode.hpp"

#include "provhl/error.hpp"

#include <algorithm>

namespace provhl::chaincode {

std::string assetKeyPrefix(std::string_view channelID)
{
  return "asset/" + std::string{channelID} + "/";
}

std::string assetKey(std::string_view channelID, std::string_view fileID)
{
  return assetKeyPrefix(channelID) + std::string{fileID};
}

std::string pendingKeyPrefix(std::string_view channelID)
{
  return "pending/" + std::string{channelID} + "/";
}

std::string pendingKey(std::string_view channelID, std::string_view requestTxID)
{
  return pendingKeyPrefix(channelID) + std::string{requestTxID};
}

std::string storageKey(std::string_view channelID, std::string_view storageID)
{
  return "storage/" + std::string{channelID} + "/" + std::string{storageID};
}

std::string configKey(std::string_view channelID)
{
  return "config/" + std::string{channelID};
}

std::string aclSequenceKey(std::string_view channelID)
{
  return "meta/" + std::string{channelID} + "/aclseq";
}

void encode(codec::Writer &w, PendingRequest const &p)
{
  w.str(p.requestTxID);
  encode(w, p.txType);
  w.str(p.requesterID);
  w.str(p.fileID);
  w.str(p.sourceFileID);
  w.str(p.executingStorageID);
  codec::encode(w, p.destinationStorageID);
  w.u64(p.requestedAt);
  codec::encode(w, p.consumedBy);
}

void decode(codec::Reader &r, PendingRequest &p)
{
  p.requestTxID = r.str();
  decode(r, p.txType);
  p.requesterID        = r.str();
  p.fileID             = r.str();
  p.sourceFileID       = r.str();
  p.executingStorageID = r.str();
  codec::decode(r, p.destinationStorageID);
  p.requestedAt = r.u64();
  codec::decode(r, p.consumedBy);
}

std::optional<StateEntry> SnapshotView::get(std::string const &key) const
{
  if (auto const *e = state_->get(key))
  {
    return *e;
  }
  return std::nullopt;
}

std::vector<StateEntry> SnapshotView::range(std::string const &prefix) const
{
  return state_->range(prefix);
}

std::vector<acl::AclRule> loadRules(StateView const &view, std::string_view channelID)
{
  std::vector<acl::StateKV> entries;
  for (auto const &e : view.range(acl::ruleKeyPrefix(channelID)))
  {
    entries.emplace_back(e.key, e.value);
  }
  return acl::stateEntriesToRules(channelID, entries);
}

std::optional<FileAsset> loadAsset(StateView const &view, std::string_view channelID,
                                   std::string_view fileID)
{
  auto const e = view.get(assetKey(channelID, fileID));
  if (!e)
  {
    return std::nullopt;
  }
  return codec::deserialize<FileAsset>(e->value);
}

std::optional<PendingRequest> loadPending(StateView const &view, std::string_view channelID,
                                          std::string_view requestTxID)
{
  auto const e = view.get(pendingKey(channelID, requestTxID));
  if (!e)
  {
    return std::nullopt;
  }
  return codec::deserialize<PendingRequest>(e->value);
}

std::optional<ChannelConfig> loadConfig(StateView const &view, std::string_view channelID)
{
  auto const e = view.get(configKey(channelID));
  if (!e)
  {
    return std::nullopt;
  }
  return codec::deserialize<ChannelConfig>(e->value);
}

namespace {

/// Wraps a view, recording the version of every key read, and collects
/// writes. Reads of keys already written in this transaction see the write.
class TxContext
{
public:
  TxContext(StateView const &view, Invocation const &call)
    : view_{view}
    , call_{call}
    , channel_{call.proposal.channelID}
  {}

  std::string const &channel() const noexcept { return channel_; }
  Invocation const  &call() const noexcept { return call_; }
  PmdTransaction const &tx() const noexcept { return call_.proposal.tx; }

  std::optional<Bytes> get(std::string const &key)
  {
    if (auto const w = writes_.find(key); w != writes_.end())
    {
      return w->second;
    }
    auto const entry = view_.get(key);
    reads_.try_emplace(key, entry ? std::optional<Version>{entry->version} : std::nullopt);
    return entry ? std::optional<Bytes>{entry->value} : std::nullopt;
  }

  std::vector<StateEntry> range(std::string const &prefix)
  {
    auto entries = view_.range(prefix);
    for (auto const &e : entries)
    {
      reads_.try_emplace(e.key, e.version);
    }
    return entries;
  }

  void put(std::string const &key, Bytes value) { writes_[key] = std::move(value); }
  void erase(std::string const &key) { writes_[key] = std::nullopt; }

  std::optional<FileAsset> asset(std::string_view fileID)
  {
    auto const raw = get(assetKey(channel_, fileID));
    if (!raw)
    {
      return std::nullopt;
    }
    return codec::deserialize<FileAsset>(*raw);
  }

  void putAsset(FileAsset const &a) { put(assetKey(channel_, a.fileID), codec::serialize(a)); }

  bool storageExists(std::string_view storageID)
  {
    return get(storageKey(channel_, storageID)).has_value();
  }

  std::vector<acl::AclRule> rules()
  {
    std::vector<acl::StateKV> entries;
    for (auto const &e : range(acl::ruleKeyPrefix(channel_)))
    {
      entries.emplace_back(e.key, e.value);
    }
    return acl::stateEntriesToRules(channel_, entries);
  }

  void authorize(acl::Operation op, FileAsset const *asset, std::string_view targetStorage)
  {
    auto const decision = acl::evaluate(call_.requester, op, asset, rules(), targetStorage);
    if (call_.observer)
    {
      call_.observer(call_.txID, op, decision);
    }
    if (!decision.allowed())
    {
      throw Error(Errc::AclDenied, call_.requester.participantID + " may not " +
                                       std::string{acl::operationName(op)} + ": " +
                                       decision.reason);
    }
  }

  void putPending(PendingRequest const &p)
  {
    put(pendingKey(channel_, p.requestTxID), codec::serialize(p));
  }

  ReadWriteSet finish() const
  {
    ReadWriteSet rw;
    for (auto const &[key, version] : reads_)
    {
      rw.reads.push_back(ReadEntry{key, version});
    }
    for (auto const &[key, value] : writes_)
    {
      rw.writes.push_back(WriteEntry{key, value});
    }
    return rw;
  }

private:
  StateView const                              &view_;
  Invocation const                             &call_;
  std::string                                   channel_;
  std::map<std::string, std::optional<Version>> reads_;
  std::map<std::string, std::optional<Bytes>>   writes_;
};

template <typename T>
T const &payloadAs(PmdTransaction const &tx)
{
  auto const *p = std::get_if<T>(&tx.payload);
  if (p == nullptr)
  {
    throw Error(Errc::Malformed, std::string{"payload does not match "} +
                                     std::string{txTypeName(tx.txType)});
  }
  return *p;
}

void requireId(std::string_view id, std::string_view what)
{
  if (!isValidId(id))
  {
    throw Error(Errc::Malformed, "invalid " + std::string{what} + " '" + std::string{id} + "'");
  }
}

FileAsset requireUsableAsset(TxContext &ctx, std::string const &fileID)
{
  auto asset = ctx.asset(fileID);
  if (!asset)
  {
    throw Error(Errc::UnknownAsset, fileID);
  }
  if (asset->temporary)
  {
    throw Error(Errc::AssetTemporary, fileID + " has an operation in flight");
  }
  return *asset;
}

PendingRequest newPending(TxContext &ctx, std::string fileID, std::string executingStorage)
{
  PendingRequest p;
  p.requestTxID        = ctx.call().txID;
  p.txType             = ctx.tx().txType;
  p.requesterID        = ctx.call().requester.participantID;
  p.fileID             = std::move(fileID);
  p.executingStorageID = std::move(executingStorage);
  p.requestedAt        = ctx.call().proposal.timestamp;
  return p;
}

void requestUpload(TxContext &ctx)
{
  auto const &req = payloadAs<UploadRequest>(ctx.tx());
  requireId(req.fileID, "fileID");
  if (!ctx.storageExists(req.storageID))
  {
    throw Error(Errc::UnknownStorage, req.storageID);
  }
  if (req.assetType == AssetType::Replica && !std::holds_alternative<DerivedSource>(req.source))
  {
    throw Error(Errc::Malformed, "a replica must declare a derived source");
  }
  if (auto const *derived = std::get_if<DerivedSource>(&req.source))
  {
    if (!ctx.asset(derived->sourceFileID))
    {
      throw Error(Errc::UnknownAsset, "source " + derived->sourceFileID);
    }
  }
  if (ctx.asset(req.fileID))
  {
    throw Error(Errc::DuplicateFileId, req.fileID);
  }
  ctx.authorize(acl::Operation::Upload, nullptr, req.storageID);

  FileAsset asset;
  asset.fileID      = req.fileID;
  asset.fileName    = req.fileName;
  asset.storageID   = req.storageID;
  asset.creatorID   = ctx.call().requester.participantID;
  asset.ownerID     = asset.creatorID;
  asset.assetType   = req.assetType;
  asset.source      = req.source;
  asset.createdAt   = ctx.call().proposal.timestamp / 1000;
  asset.metadataURI = req.metadataURI;
  asset.temporary   = true;
  ctx.putAsset(asset);
  ctx.putPending(newPending(ctx, req.fileID, req.storageID));
}

void requestDownload(TxContext &ctx)
{
  auto const &req   = payloadAs<FileRequest>(ctx.tx());
  auto const  asset = requireUsableAsset(ctx, req.fileID);
  ctx.authorize(acl::Operation::Download, &asset, asset.storageID);
  ctx.putPending(newPending(ctx, req.fileID, asset.storageID));
}

void requestCopy(TxContext &ctx)
{
  auto const &req      = payloadAs<CopyRequest>(ctx.tx());
  bool const  toOther  = ctx.tx().txType == TxType::CopyToStorage;
  if (toOther != req.destinationStorageID.has_value())
  {
    throw Error(Errc::Malformed, toOther ? "copy to storage needs a destination"
                                         : "copy within a storage takes no destination");
  }
  requireId(req.newFileID, "fileID");
  auto const source = requireUsableAsset(ctx, req.fileID);
  if (toOther && !ctx.storageExists(*req.destinationStorageID))
  {
    throw Error(Errc::UnknownStorage, *req.destinationStorageID);
  }
  ctx.authorize(toOther ? acl::Operation::CopyToStorage : acl::Operation::CopyWithin, &source,
                source.storageID);
  if (ctx.asset(req.newFileID))
  {
    throw Error(Errc::DuplicateFileId, req.newFileID);
  }

  FileAsset replica;
  replica.fileID      = req.newFileID;
  replica.storageID   = toOther ? *req.destinationStorageID : source.storageID;
  replica.creatorID   = ctx.call().requester.participantID;
  replica.ownerID     = source.ownerID;
  replica.assetType   = AssetType::Replica;
  replica.source      = DerivedSource{source.fileID, "copy"};
  replica.createdAt   = ctx.call().proposal.timestamp / 1000;
  replica.metadataURI = source.metadataURI;
  replica.temporary   = true;
  ctx.putAsset(replica);

  auto pending         = newPending(ctx, req.newFileID, source.storageID);
  pending.sourceFileID = source.fileID;
  if (toOther)
  {
    pending.destinationStorageID = req.destinationStorageID;
  }
  ctx.putPending(pending);
}

void requestDelete(TxContext &ctx)
{
  auto const &req   = payloadAs<FileRequest>(ctx.tx());
  auto        asset = requireUsableAsset(ctx, req.fileID);
  ctx.authorize(acl::Operation::Delete, &asset, asset.storageID);
  asset.temporary = true;
  ctx.putAsset(asset);
  ctx.putPending(newPending(ctx, req.fileID, asset.storageID));
}

void requestTransfer(TxContext &ctx)
{
  auto const &req   = payloadAs<TransferRequest>(ctx.tx());
  auto        asset = requireUsableAsset(ctx, req.fileID);
  if (!ctx.storageExists(req.destinationStorageID))
  {
    throw Error(Errc::UnknownStorage, req.destinationStorageID);
  }
  if (req.destinationStorageID == asset.storageID)
  {
    throw Error(Errc::SameStorageDestination, req.destinationStorageID);
  }
  ctx.authorize(acl::Operation::TransferToStorage, &asset, asset.storageID);
  asset.temporary = true;
  ctx.putAsset(asset);
  auto pending                 = newPending(ctx, req.fileID, asset.storageID);
  pending.destinationStorageID = req.destinationStorageID;
  ctx.putPending(pending);
}

/// Owner (or an explicit rule), or a supervisor of the owner's organisation.
bool mayAdminister(TxContext &ctx, FileAsset const &asset, acl::Operation op)
{
  auto const &who = ctx.call().requester;
  if (who.role == Role::Supervisor && ctx.call().directory)
  {
    if (auto const owner = ctx.call().directory(asset.ownerID); owner && owner->orgID == who.orgID)
    {
      return true;
    }
  }
  auto const decision = acl::evaluate(who, op, &asset, ctx.rules(), asset.storageID);
  if (ctx.call().observer)
  {
    ctx.call().observer(ctx.call().txID, op, decision);
  }
  return decision.allowed();
}

void grantAccess(TxContext &ctx)
{
  auto const &req = payloadAs<GrantRequest>(ctx.tx());
  requireId(req.rule.ruleID, "rule id");
  if (req.rule.operations.empty())
  {
    throw Error(Errc::Malformed, "grant names no operations");
  }
  auto const asset = ctx.asset(req.fileID);
  if (!asset)
  {
    throw Error(Errc::UnknownAsset, req.fileID);
  }
  if (!mayAdminister(ctx, *asset, acl::Operation::Grant))
  {
    throw Error(Errc::NotOwner, ctx.call().requester.participantID + " does not control " +
                                    req.fileID);
  }
  auto const key = acl::ruleKey(ctx.channel(), req.rule.ruleID);
  if (ctx.get(key))
  {
    throw Error(Errc::DuplicateId, "rule " + req.rule.ruleID);
  }
  std::uint64_t seq = 0;
  if (auto const raw = ctx.get(aclSequenceKey(ctx.channel())))
  {
    seq = codec::deserialize<std::uint64_t>(*raw);
  }
  auto rule      = req.rule;
  rule.resource  = acl::AssetResource{req.fileID};
  rule.grantorID = ctx.call().requester.participantID;
  ctx.put(key, acl::ruleEntryValue(rule, seq));
  ctx.put(aclSequenceKey(ctx.channel()), codec::serialize(seq + 1));
}

void revokeAccess(TxContext &ctx)
{
  auto const &req = payloadAs<RevokeRequest>(ctx.tx());
  auto const  key = acl::ruleKey(ctx.channel(), req.ruleID);
  auto const  raw = ctx.get(key);
  if (!raw)
  {
    throw Error(Errc::UnknownRule, req.ruleID);
  }
  auto const [seq, rule] = acl::decodeRuleEntry(*raw);
  auto const &who        = ctx.call().requester;
  bool        allowed    = rule.grantorID == who.participantID || who.role == Role::MspAdmin;
  if (!allowed)
  {
    if (auto const *target = std::get_if<acl::AssetResource>(&rule.resource))
    {
      if (auto const asset = ctx.asset(target->fileID))
      {
        allowed = mayAdminister(ctx, *asset, acl::Operation::Revoke);
      }
    }
  }
  if (!allowed)
  {
    throw Error(Errc::NotOwner, who.participantID + " may not revoke " + req.ruleID);
  }
  ctx.erase(key);
}

FileAsset requireAsset(TxContext &ctx, std::string const &fileID)
{
  auto asset = ctx.asset(fileID);
  if (!asset)
  {
    throw Error(Errc::UnknownAsset, fileID);
  }
  return *asset;
}

void serverResponse(TxContext &ctx)
{
  auto const &tx  = ctx.tx();
  auto const &who = ctx.call().requester;
  if (who.role != Role::Dms)
  {
    throw Error(Errc::WrongRole, who.participantID + " is not a DMS");
  }
  if (!isStorageAffecting(tx.txType))
  {
    throw Error(Errc::Malformed, "no server response for " + std::string{txTypeName(tx.txType)});
  }
  if (!tx.linkedRequestTxID)
  {
    throw Error(Errc::Malformed, "server response without linked request");
  }
  auto const &resp = payloadAs<ServerResponse>(tx);

  auto const rawPending = ctx.get(pendingKey(ctx.channel(), *tx.linkedRequestTxID));
  if (!rawPending)
  {
    throw Error(Errc::UnknownAsset, "no request " + *tx.linkedRequestTxID);
  }
  auto pending = codec::deserialize<PendingRequest>(*rawPending);
  if (pending.consumedBy)
  {
    throw Error(Errc::RequestAlreadyConsumed,
                *tx.linkedRequestTxID + " confirmed by " + *pending.consumedBy);
  }
  if (pending.txType != tx.txType)
  {
    throw Error(Errc::Malformed, "response type differs from request type");
  }
  auto const rawStorage = ctx.get(storageKey(ctx.channel(), pending.executingStorageID));
  if (!rawStorage ||
      codec::deserialize<StorageInfo>(*rawStorage).dmsID != who.participantID)
  {
    throw Error(Errc::WrongRole,
                who.participantID + " does not operate storage " + pending.executingStorageID);
  }

  bool const done = resp.outcome == ResponseOutcome::Done;
  switch (tx.txType)
  {
  case TxType::Upload:
  case TxType::CopyWithin:
  case TxType::CopyToStorage:
  {
    auto asset = requireAsset(ctx, pending.fileID);
    if (done)
    {
      asset.temporary = false;
      asset.fileName  = resp.fileName;
      asset.checksum  = resp.checksum;
      ctx.putAsset(asset);
    }
    else
    {
      ctx.erase(assetKey(ctx.channel(), pending.fileID));
    }
    break;
  }
  case TxType::Download:
  {
    // the asset may have disappeared meanwhile; the request is still consumed
    if (auto asset = ctx.asset(pending.fileID); asset && done)
    {
      asset->downloads += 1;
      asset->dUsers.push_back(DownloadRecord{pending.requesterID, pending.requestTxID});
      ctx.putAsset(*asset);
    }
    break;
  }
  case TxType::Delete:
  {
    auto asset = requireAsset(ctx, pending.fileID);
    if (done)
    {
      ctx.erase(assetKey(ctx.channel(), pending.fileID));
    }
    else
    {
      asset.temporary = false;
      ctx.putAsset(asset);
    }
    break;
  }
  case TxType::TransferToStorage:
  {
    auto asset = requireAsset(ctx, pending.fileID);
    if (done)
    {
      asset.storageID = pending.destinationStorageID.value_or(asset.storageID);
      asset.fileName  = resp.fileName;
      asset.checksum  = resp.checksum;
    }
    asset.temporary = false;
    ctx.putAsset(asset);
    break;
  }
  default: break;
  }

  pending.consumedBy = ctx.call().txID;
  ctx.putPending(pending);
}

}  // namespace

ReadWriteSet simulate(StateView const &view, Invocation const &call)
{
  auto const &tx = call.proposal.tx;
  if (tx.requesterID != call.requester.participantID)
  {
    throw Error(Errc::NotAuthorized, "requester does not match the signing identity");
  }
  TxContext ctx{view, call};
  if (tx.phase == Phase::ServerResponse)
  {
    serverResponse(ctx);
    return ctx.finish();
  }
  if (tx.linkedRequestTxID)
  {
    throw Error(Errc::Malformed, "client request must not link a request");
  }
  switch (tx.txType)
  {
  case TxType::Upload: requestUpload(ctx); break;
  case TxType::Download: requestDownload(ctx); break;
  case TxType::CopyWithin:
  case TxType::CopyToStorage: requestCopy(ctx); break;
  case TxType::Delete: requestDelete(ctx); break;
  case TxType::TransferToStorage: requestTransfer(ctx); break;
  case TxType::GrantAccess: grantAccess(ctx); break;
  case TxType::RevokeAccess: revokeAccess(ctx); break;
  case TxType::Config: throw Error(Errc::NotAuthorized, "configuration is fixed at genesis");
  }
  return ctx.finish();
}

void applyTransaction(WorldState &state, TransactionEnvelope const &envelope, Version version)
{
  applyWriteSet(state, envelope.rwset.writes, version);
}

std::string policyStorage(StateView const &committed, Proposal const &proposal)
{
  auto const &tx      = proposal.tx;
  auto const &channel = proposal.channelID;
  auto storageOf      = [&](std::string const &fileID) -> std::string {
    auto const asset = loadAsset(committed, channel, fileID);
    return asset ? asset->storageID : std::string{};
  };
  try
  {
    if (tx.phase == Phase::ServerResponse)
    {
      if (!tx.linkedRequestTxID)
      {
        return {};
      }
      auto const pending = loadPending(committed, channel, *tx.linkedRequestTxID);
      return pending ? pending->executingStorageID : std::string{};
    }
    return std::visit(
        [&](auto const &p) -> std::string {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, UploadRequest>) return p.storageID;
          else if constexpr (std::is_same_v<T, FileRequest> || std::is_same_v<T, CopyRequest> ||
                             std::is_same_v<T, TransferRequest> || std::is_same_v<T, GrantRequest>)
            return storageOf(p.fileID);
          else if constexpr (std::is_same_v<T, RevokeRequest>)
          {
            auto const raw = committed.get(acl::ruleKey(channel, p.ruleID));
            if (!raw)
            {
              return {};
            }
            auto const rule = acl::decodeRuleEntry(raw->value).second;
            if (auto const *target = std::get_if<acl::AssetResource>(&rule.resource))
            {
              return storageOf(target->fileID);
            }
            return {};
          }
          else return {};
        },
        tx.payload);
  }
  catch (Error const &)
  {
    return {};
  }
}

ReadWriteSet genesisWrites(ChannelConfig const &config)
{
  std::map<std::string, Bytes> writes;
  writes[configKey(config.channelID)] = codec::serialize(config);
  for (auto const &s : config.storages)
  {
    writes[storageKey(config.channelID, s.storageID)] = codec::serialize(s);
  }
  auto rules = config.bootstrapRules;
  for (auto &rule : rules)
  {
    if (rule.grantorID.empty())
    {
      rule.grantorID = "genesis";
    }
  }
  for (auto &[key, value] : acl::rulesToStateEntries(config.channelID, rules))
  {
    writes[key] = std::move(value);
  }
  writes[aclSequenceKey(config.channelID)] = codec::serialize(std::uint64_t{rules.size()});

  ReadWriteSet rw;
  for (auto &[key, value] : writes)
  {
    rw.writes.push_back(WriteEntry{key, std::move(value)});
  }
  return rw;
}

}  // namespace provhl::chaincode
