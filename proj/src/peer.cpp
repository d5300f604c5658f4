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

#include "provhl/peer.hpp"

#include "provhl/error.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <set>

namespace provhl {

struct Peer::Channel
{
  ChannelConfig                  config;
  EndorsementPolicy              policy;
  std::unique_ptr<ChannelLedger> ledger;
  std::map<std::string, std::string> peerOrgs;

  std::mutex              commitMutex;
  std::mutex              eventsMutex;
  std::condition_variable eventsCv;
  std::vector<CommitEvent> events;
};

namespace {

/// Committed snapshot plus the writes of transactions already found valid
/// earlier in the block being validated.
class OverlayView final : public chaincode::StateView
{
public:
  explicit OverlayView(std::shared_ptr<WorldState const> base)
    : base_{std::move(base)}
  {}

  std::optional<StateEntry> get(std::string const &key) const override
  {
    if (auto const it = overlay_.find(key); it != overlay_.end())
    {
      return it->second;
    }
    if (auto const *e = base_->get(key))
    {
      return *e;
    }
    return std::nullopt;
  }

  std::vector<StateEntry> range(std::string const &prefix) const override
  {
    std::map<std::string, StateEntry> merged;
    for (auto &e : base_->range(prefix))
    {
      merged.emplace(e.key, std::move(e));
    }
    for (auto it = overlay_.lower_bound(prefix);
         it != overlay_.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it)
    {
      if (it->second)
      {
        merged.insert_or_assign(it->first, *it->second);
      }
      else
      {
        merged.erase(it->first);
      }
    }
    std::vector<StateEntry> out;
    out.reserve(merged.size());
    for (auto &[k, e] : merged)
    {
      out.push_back(std::move(e));
    }
    return out;
  }

  void apply(std::vector<WriteEntry> const &writes, Version version)
  {
    for (auto const &w : writes)
    {
      if (w.value)
      {
        overlay_[w.key] = StateEntry{w.key, *w.value, version};
      }
      else
      {
        overlay_[w.key] = std::nullopt;
      }
    }
  }

private:
  std::shared_ptr<WorldState const>                         base_;
  std::map<std::string, std::optional<StateEntry>>          overlay_;
};

std::vector<CommitEvent> eventsForBlock(Block const &block, std::uint64_t firstSequence)
{
  std::vector<CommitEvent> out;
  for (std::size_t i = 0; i < block.envelopes.size(); ++i)
  {
    auto const &env = block.envelopes[i];
    CommitEvent e;
    e.channelID         = block.channelID;
    e.sequence          = firstSequence + i;
    e.blockNumber       = block.blockNumber;
    e.txIndex           = static_cast<std::uint32_t>(i);
    e.txID              = env.txID;
    e.validity          = i < block.validity.size() ? block.validity[i] : ValidationCode::Malformed;
    e.txType            = env.proposal.tx.txType;
    e.phase             = env.proposal.tx.phase;
    e.requesterID       = env.proposal.tx.requesterID;
    e.linkedRequestTxID = env.proposal.tx.linkedRequestTxID;
    if (e.valid())
    {
      for (auto const &w : env.rwset.writes)
      {
        e.affectedKeys.push_back(w.key);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

Peer::Peer(SigningIdentity identity, Msp const &msp, std::filesystem::path dataDir,
           bool syncWrites)
  : identity_{std::move(identity)}
  , msp_{msp}
  , dataDir_{std::move(dataDir)}
  , sync_{syncWrites}
{
  if (!dataDir_.empty())
  {
    std::filesystem::create_directories(dataDir_);
  }
}

Peer::~Peer() = default;

KeyResolver Peer::keyResolver() const
{
  return [&msp = msp_](std::string const &id) -> std::optional<PublicKey> {
    if (auto const rec = msp.lookup(id))
    {
      return rec->credential.participant.publicKey;
    }
    return std::nullopt;
  };
}

void Peer::joinChannel(Block const &genesis)
{
  auto const config = genesisConfig(genesis);
  if (config.channelID != genesis.channelID)
  {
    throw Error(Errc::Malformed, "genesis block names a different channel");
  }
  bool listed = false;
  for (auto const &p : config.peers)
  {
    listed = listed || (p.peerID == id() && p.orgID == org());
  }
  if (!listed)
  {
    throw Error(Errc::NotAuthorized, id() + " is not a peer of channel " + config.channelID);
  }
  if (config.mspRootPublicKey != msp_.rootPublicKey())
  {
    throw Error(Errc::BadSignature, "genesis block was issued under a different MSP");
  }
  // the genesis transaction must be signed by a registered MSP administrator
  auto const &env   = genesis.envelopes.front();
  auto const  admin = msp_.lookup(env.proposal.tx.requesterID);
  if (genesis.envelopes.size() != 1 || !admin || admin->revoked ||
      admin->credential.participant.role != Role::MspAdmin ||
      !verifySignature(admin->credential.participant, proposalSigningBytes(env.proposal),
                       env.proposal.clientSignature) ||
      env.txID != computeTxID(env.proposal) ||
      env.rwset != chaincode::genesisWrites(config) || !genesis.previousHash.isZero() ||
      genesis.dataHash != computeDataHash(genesis.envelopes) ||
      !verify(config.ordererPublicKey, blockHeaderBytes(genesis), genesis.ordererSignature))
  {
    throw Error(Errc::InvalidTransaction, "genesis block of " + config.channelID +
                                              " does not verify");
  }

  std::unique_lock lock{channelsMutex_};
  if (channels_.count(config.channelID) != 0)
  {
    throw Error(Errc::DuplicateChannel, config.channelID);
  }
  auto ch    = std::make_unique<Channel>();
  ch->config = config;
  ch->policy = config.policy.empty() ? EndorsementPolicy{} : EndorsementPolicy::parse(config.policy);
  for (auto const &p : config.peers)
  {
    ch->peerOrgs[p.peerID] = p.orgID;
  }

  std::optional<BlockStore> store;
  if (dataDir_.empty())
  {
    store.emplace(config.channelID);
  }
  else
  {
    store.emplace(config.channelID, dataDir_ / (config.channelID + ".blocks"), keyResolver(),
                  sync_);
  }
  bool const fresh = store->empty();
  if (!fresh && store->block(0).envelopes != genesis.envelopes)
  {
    throw Error(Errc::ChainMismatch, "stored chain of " + config.channelID +
                                         " has a different genesis block");
  }
  ch->ledger = std::make_unique<ChannelLedger>(std::move(*store));
  if (fresh)
  {
    Block b    = genesis;
    b.validity = {ValidationCode::Valid};
    b.validatorID        = id();
    b.validatorSignature = identity_.sign(validationSigningBytes(b));
    ch->ledger->commit(b, config.ordererPublicKey);
  }
  for (std::uint64_t n = 0; n < ch->ledger->height(); ++n)
  {
    auto evs = eventsForBlock(ch->ledger->block(n), ch->events.size());
    ch->events.insert(ch->events.end(), evs.begin(), evs.end());
  }
  spdlog::debug("{} joined {} at height {}", id(), config.channelID, ch->ledger->height());
  channels_.emplace(config.channelID, std::move(ch));
}

bool Peer::hasChannel(std::string const &channelID) const
{
  std::shared_lock lock{channelsMutex_};
  return channels_.count(channelID) != 0;
}

std::vector<std::string> Peer::channels() const
{
  std::shared_lock         lock{channelsMutex_};
  std::vector<std::string> out;
  for (auto const &[k, v] : channels_)
  {
    out.push_back(k);
  }
  return out;
}

Peer::Channel &Peer::channel(std::string const &channelID) const
{
  std::shared_lock lock{channelsMutex_};
  auto const       it = channels_.find(channelID);
  if (it == channels_.end())
  {
    throw Error(Errc::UnknownChannel, channelID);
  }
  return *it->second;
}

ChannelLedger const &Peer::ledger(std::string const &channelID) const
{
  return *channel(channelID).ledger;
}

ChannelConfig Peer::config(std::string const &channelID) const
{
  return channel(channelID).config;
}

ProposeReply Peer::endorse(Proposal const &proposal)
{
  if (!running())
  {
    throw Error(Errc::Unavailable, id() + " is stopped");
  }
  auto &ch = channel(proposal.channelID);
  auto const &tx = proposal.tx;
  if (tx.txType == TxType::Config)
  {
    throw Error(Errc::NotAuthorized, "configuration is fixed at genesis");
  }
  auto const rec = msp_.lookup(tx.requesterID);
  if (!rec)
  {
    throw Error(Errc::Unknown, "requester " + tx.requesterID + " is not registered");
  }
  if (rec->revoked)
  {
    throw Error(Errc::Revoked, tx.requesterID);
  }
  auto const &requester = rec->credential.participant;
  if (!verifySignature(requester, proposalSigningBytes(proposal), proposal.clientSignature))
  {
    throw Error(Errc::BadSignature, "client signature of " + tx.requesterID);
  }
  auto const txID = computeTxID(proposal);
  if (ch.ledger->hasTransaction(txID))
  {
    throw Error(Errc::DuplicateId, "transaction " + txID + " already committed");
  }

  chaincode::SnapshotView const view{ch.ledger->snapshot()};
  chaincode::DecisionObserver   observer;
  std::function<void(ReadWriteSet &)> fault;
  {
    std::lock_guard lock{hooksMutex_};
    observer = decisionObserver_;
    fault    = endorsementFault_;
  }
  chaincode::Invocation const call{
      proposal, txID, requester,
      [&msp = msp_](std::string const &pid) { return msp.findParticipant(pid); }, observer};
  auto rwset = chaincode::simulate(view, call);
  if (fault)
  {
    fault(rwset);
  }

  ProposeReply reply;
  reply.endorsement.peerID       = id();
  reply.endorsement.resultDigest = hashOf(rwset);
  reply.endorsement.peerSignature =
      identity_.sign(endorsementSigningBytes(proposalDigest(proposal), reply.endorsement.resultDigest));
  reply.endorsement.rwset = std::move(rwset);
  if (auto const *storage = ch.config.findStorage(chaincode::policyStorage(view, proposal)))
  {
    reply.storageOrg = storage->orgID;
  }
  reply.requesterOrg = requester.orgID;
  return reply;
}

std::vector<ValidationCode> Peer::validateBlock(Block const &block) const
{
  auto &ch = channel(block.channelID);
  if (block.blockNumber != ch.ledger->height() || ch.ledger->tipHash() != block.previousHash)
  {
    throw Error(Errc::ChainMismatch, "block " + std::to_string(block.blockNumber) +
                                         " does not extend the tip of " + block.channelID);
  }
  if (block.dataHash != computeDataHash(block.envelopes) ||
      !verify(ch.config.ordererPublicKey, blockHeaderBytes(block), block.ordererSignature))
  {
    throw Error(Errc::BadSignature, "block " + std::to_string(block.blockNumber) +
                                        " is not signed by the orderer");
  }

  OverlayView           view{ch.ledger->snapshot()};
  std::set<std::string> seen;
  std::vector<ValidationCode> flags;
  for (std::size_t i = 0; i < block.envelopes.size(); ++i)
  {
    auto const &env = block.envelopes[i];
    auto const &tx  = env.proposal.tx;
    auto const  code = [&]() -> ValidationCode {
      if (env.txID != computeTxID(env.proposal) || env.proposal.channelID != block.channelID ||
          env.endorsements.empty() || tx.txType == TxType::Config)
      {
        return ValidationCode::Malformed;
      }
      if (seen.count(env.txID) != 0 || ch.ledger->hasTransaction(env.txID))
      {
        return ValidationCode::DuplicateTxId;
      }
      auto const rec = msp_.lookup(tx.requesterID);
      if (!rec || rec->revoked ||
          !verifySignature(rec->credential.participant, proposalSigningBytes(env.proposal),
                           env.proposal.clientSignature))
      {
        return ValidationCode::BadClientSignature;
      }

      auto const            digest    = hashOf(env.rwset);
      auto const            proposalD = proposalDigest(env.proposal);
      std::set<std::string> orgs;
      for (auto const &e : env.endorsements)
      {
        auto const org    = ch.peerOrgs.find(e.peerID);
        auto const signer = msp_.lookup(e.peerID);
        if (e.resultDigest != digest || e.rwset != env.rwset || org == ch.peerOrgs.end() ||
            !signer || signer->revoked || signer->credential.participant.orgID != org->second ||
            !verifySignature(signer->credential.participant,
                             endorsementSigningBytes(proposalD, e.resultDigest), e.peerSignature))
        {
          return ValidationCode::BadEndorsement;
        }
        orgs.insert(org->second);
      }
      PolicyContext ctx;
      ctx.requesterOrg = rec->credential.participant.orgID;
      if (auto const *s = ch.config.findStorage(chaincode::policyStorage(view, env.proposal)))
      {
        ctx.storageOrg = s->orgID;
      }
      if (!ch.policy.satisfiedBy(orgs, ctx))
      {
        return ValidationCode::PolicyFailure;
      }

      for (auto const &r : env.rwset.reads)
      {
        auto const cur = view.get(r.key);
        auto const ver = cur ? std::optional<Version>{cur->version} : std::nullopt;
        if (ver != r.version)
        {
          return ValidationCode::VersionConflict;
        }
      }

      if (tx.phase == Phase::ServerResponse)
      {
        auto const linked =
            tx.linkedRequestTxID ? ch.ledger->getTransaction(*tx.linkedRequestTxID) : std::nullopt;
        if (!linked || linked->validity != ValidationCode::Valid ||
            linked->envelope.proposal.tx.phase != Phase::ClientRequest ||
            linked->envelope.proposal.tx.txType != tx.txType)
        {
          return ValidationCode::LinkageFailure;
        }
      }
      return ValidationCode::Valid;
    }();

    seen.insert(env.txID);
    if (code == ValidationCode::Valid)
    {
      view.apply(env.rwset.writes, Version{block.blockNumber, static_cast<std::uint32_t>(i)});
    }
    flags.push_back(code);
  }
  return flags;
}

void Peer::commitLocked(Channel &ch, Block block)
{
  block.validity           = {};
  block.validatorID        = {};
  block.validatorSignature = {};
  block.validity           = validateBlock(block);
  block.validatorID        = id();
  block.validatorSignature = identity_.sign(validationSigningBytes(block));
  ch.ledger->commit(block, ch.config.ordererPublicKey);

  std::vector<CommitEvent> evs;
  {
    std::lock_guard lock{ch.eventsMutex};
    evs = eventsForBlock(block, ch.events.size());
    ch.events.insert(ch.events.end(), evs.begin(), evs.end());
  }
  ch.eventsCv.notify_all();

  std::vector<Subscription> subs;
  CommitObserver            observer;
  {
    std::lock_guard lock{hooksMutex_};
    for (auto const &[h, s] : subscriptions_)
    {
      if (s.channelID == block.channelID)
      {
        subs.push_back(s);
      }
    }
    observer = commitObserver_;
  }
  for (auto const &e : evs)
  {
    for (auto const &s : subs)
    {
      if (!s.filter || *s.filter == e.txType)
      {
        s.callback(e);
      }
    }
  }
  if (observer)
  {
    observer(id(), block, ch.ledger->stateHash());
  }
}

void Peer::deliver(Block const &block)
{
  {
    std::lock_guard lock{runMutex_};
    if (!running_)
    {
      backlog_.push_back(block);
      return;
    }
  }
  auto           &ch = channel(block.channelID);
  std::lock_guard lock{ch.commitMutex};
  if (block.blockNumber < ch.ledger->height())
  {
    return;  // redelivery
  }
  commitLocked(ch, block);
}

std::uint64_t Peer::subscribe(std::string const &channelID, std::optional<TxType> filter,
                              EventCallback callback)
{
  channel(channelID);
  std::lock_guard lock{hooksMutex_};
  auto const      h = nextSubscription_++;
  subscriptions_.emplace(h, Subscription{channelID, filter, std::move(callback)});
  return h;
}

void Peer::unsubscribe(std::uint64_t handle)
{
  std::lock_guard lock{hooksMutex_};
  subscriptions_.erase(handle);
}

EventBatch Peer::events(std::string const &channelID, EventsQuery const &query)
{
  auto            &ch = channel(channelID);
  std::unique_lock lock{ch.eventsMutex};
  ch.eventsCv.wait_for(lock, std::chrono::milliseconds(query.maxWaitMs),
                       [&] { return ch.events.size() > query.fromSequence; });
  EventBatch batch;
  auto       seq = query.fromSequence;
  for (; seq < ch.events.size() && batch.events.size() < query.maxEvents; ++seq)
  {
    if (!query.txType || *query.txType == ch.events[seq].txType)
    {
      batch.events.push_back(ch.events[seq]);
    }
  }
  batch.nextSequence = std::max(seq, query.fromSequence);
  return batch;
}

void Peer::stop()
{
  std::lock_guard lock{runMutex_};
  running_ = false;
}

void Peer::start()
{
  for (;;)
  {
    Block next;
    {
      std::lock_guard lock{runMutex_};
      if (backlog_.empty())
      {
        running_ = true;
        return;
      }
      next = std::move(backlog_.front());
      backlog_.pop_front();
    }
    auto           &ch = channel(next.channelID);
    std::lock_guard lock{ch.commitMutex};
    if (next.blockNumber >= ch.ledger->height())
    {
      commitLocked(ch, next);
    }
  }
}

bool Peer::running() const noexcept
{
  std::lock_guard lock{runMutex_};
  return running_;
}

void Peer::setEndorsementFault(std::function<void(ReadWriteSet &)> fault)
{
  std::lock_guard lock{hooksMutex_};
  endorsementFault_ = std::move(fault);
}

void Peer::setDecisionObserver(chaincode::DecisionObserver observer)
{
  std::lock_guard lock{hooksMutex_};
  decisionObserver_ = std::move(observer);
}

void Peer::setCommitObserver(CommitObserver observer)
{
  std::lock_guard lock{hooksMutex_};
  commitObserver_ = std::move(observer);
}

Message Peer::dispatch(Message const &request)
{
  auto const &ch = request.channel;
  switch (request.type)
  {
  case MessageType::Propose:
    return makeReply(endorse(codec::deserialize<Proposal>(request.payload)));
  case MessageType::Deliver:
    deliver(codec::deserialize<Block>(request.payload));
    return makeReply(std::uint8_t{0});
  case MessageType::Events:
    return makeReply(events(ch, codec::deserialize<EventsQuery>(request.payload)));
  case MessageType::GetTx:
    return makeReply(ledger(ch).getTransaction(codec::deserialize<std::string>(request.payload)));
  case MessageType::GetState:
    return makeReply(ledger(ch).getState(codec::deserialize<std::string>(request.payload)));
  case MessageType::GetHistory:
    return makeReply(
        ledger(ch).getStateHistory(codec::deserialize<std::string>(request.payload)));
  case MessageType::GetBlock:
  {
    auto const      n   = codec::deserialize<std::uint64_t>(request.payload);
    auto const     &led = ledger(ch);
    std::optional<Block> b;
    if (n < led.height())
    {
      b = led.block(n);
    }
    return makeReply(b);
  }
  case MessageType::Height: return makeReply(ledger(ch).height());
  default:
    throw Error(Errc::Malformed,
                "peer does not serve " + std::string{messageTypeName(request.type)});
  }
}

Message Peer::handle(Message const &request)
{
  Message reply;
  try
  {
    if (!running() && request.type != MessageType::Deliver)
    {
      throw Error(Errc::Unavailable, id() + " is stopped");
    }
    reply = dispatch(request);
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
