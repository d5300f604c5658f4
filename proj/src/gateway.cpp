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

#include "provhl/gateway.hpp"

#include "provhl/chaincode.hpp"
#include "provhl/error.hpp"

#include <set>

namespace provhl {

Bytes randomNonce()
{
  Bytes nonce(16);
  randomBytes(nonce);
  return nonce;
}

Gateway::Gateway(SigningIdentity identity, Clock &clock,
                 std::map<std::string, std::shared_ptr<Endpoint>> peers,
                 std::shared_ptr<Endpoint> orderer, Driver &driver, NonceSource nonces)
  : identity_{std::move(identity)}
  , clock_{clock}
  , peers_{std::move(peers)}
  , orderer_{std::move(orderer)}
  , driver_{driver}
  , nonces_{std::move(nonces)}
{
  if (peers_.empty())
  {
    throw Error(Errc::ConfigInvalid, "gateway needs at least one peer");
  }
}

Message Gateway::query(std::string const &channelID, Message const &request)
{
  // own organisation first, then the rest
  std::vector<std::string> order;
  std::set<std::string>    own;
  {
    std::lock_guard lock{cacheMutex_};
    if (auto const it = configs_.find(channelID); it != configs_.end())
    {
      for (auto const &p : it->second.peers)
      {
        if (p.orgID == identity_.org() && peers_.count(p.peerID) != 0)
        {
          order.push_back(p.peerID);
          own.insert(p.peerID);
        }
      }
    }
  }
  for (auto const &[id, ep] : peers_)
  {
    if (own.count(id) == 0)
    {
      order.push_back(id);
    }
  }
  std::optional<Error> last;
  for (auto const &id : order)
  {
    auto reply = peers_.at(id)->call(request);
    if (reply.type == MessageType::Failure)
    {
      auto const f = codec::deserialize<FailureReply>(reply.payload);
      if (f.code == Errc::Unavailable || f.code == Errc::UnknownChannel)
      {
        last.emplace(f.code, f.detail);
        continue;
      }
    }
    return reply;
  }
  throw last.value_or(Error(Errc::Unavailable, "no peer reachable"));
}

ChannelConfig Gateway::channelConfig(std::string const &channelID)
{
  {
    std::lock_guard lock{cacheMutex_};
    if (auto const it = configs_.find(channelID); it != configs_.end())
    {
      return it->second;
    }
  }
  auto const entry = replyPayload<std::optional<StateEntry>>(
      query(channelID, makeMessage(MessageType::GetState, channelID,
                                   chaincode::configKey(channelID))));
  if (!entry)
  {
    throw Error(Errc::UnknownChannel, channelID);
  }
  auto config = codec::deserialize<ChannelConfig>(entry->value);
  std::lock_guard lock{cacheMutex_};
  configs_[channelID] = config;
  return config;
}

Proposal Gateway::prepare(std::string const &channelID, PmdTransaction tx)
{
  Proposal p;
  tx.requesterID    = identity_.id();
  p.tx              = std::move(tx);
  p.channelID       = channelID;
  p.timestamp       = clock_.now();
  p.nonce           = nonces_();
  p.clientSignature = identity_.sign(proposalSigningBytes(p));
  return p;
}

TransactionEnvelope Gateway::endorse(Proposal const &proposal)
{
  auto const &channelID = proposal.channelID;
  auto const  config    = channelConfig(channelID);
  auto const  policy =
      config.policy.empty() ? EndorsementPolicy{} : EndorsementPolicy::parse(config.policy);
  auto const request = makeMessage(MessageType::Propose, channelID, proposal);

  std::map<std::string, std::vector<std::string>> byOrg;
  for (auto const &p : config.peers)
  {
    if (peers_.count(p.peerID) != 0)
    {
      byOrg[p.orgID].push_back(p.peerID);
    }
  }

  std::map<std::string, ProposeReply> endorsed;  // by org
  std::set<std::string>               dead;      // orgs with no live peer
  auto endorseFrom = [&](std::string const &org) -> bool {
    for (auto const &peerID : byOrg[org])
    {
      auto const reply = peers_.at(peerID)->call(request);
      if (reply.type == MessageType::Failure)
      {
        auto const f = codec::deserialize<FailureReply>(reply.payload);
        if (f.code == Errc::Unavailable)
        {
          continue;
        }
        throw Error(f.code, f.detail);
      }
      endorsed[org] = replyPayload<ProposeReply>(reply);
      return true;
    }
    dead.insert(org);
    return false;
  };

  // the requester's own organisation first: its answer resolves $storageOrg
  std::vector<std::string> first{identity_.org()};
  for (auto const &[org, ids] : byOrg)
  {
    if (org != identity_.org())
    {
      first.push_back(org);
    }
  }
  for (auto const &org : first)
  {
    if (byOrg.count(org) != 0 && endorseFrom(org))
    {
      break;
    }
  }
  if (endorsed.empty())
  {
    throw Error(Errc::PolicyUnsatisfiable, "no endorsing peer is reachable");
  }

  PolicyContext const ctx{endorsed.begin()->second.storageOrg,
                          endorsed.begin()->second.requesterOrg};
  for (;;)
  {
    std::set<std::string> available;
    for (auto const &[org, ids] : byOrg)
    {
      if (dead.count(org) == 0)
      {
        available.insert(org);
      }
    }
    auto const choice = policy.chooseOrgs(available, ctx);
    if (!choice)
    {
      throw Error(Errc::PolicyUnsatisfiable,
                  "policy " + policy.toString() + " cannot be met by the reachable peers");
    }
    bool complete = true;
    for (auto const &org : *choice)
    {
      if (endorsed.count(org) == 0 && !endorseFrom(org))
      {
        complete = false;
        break;
      }
    }
    if (complete)
    {
      TransactionEnvelope env;
      env.txID     = computeTxID(proposal);
      env.proposal = proposal;
      for (auto const &org : *choice)
      {
        env.endorsements.push_back(endorsed.at(org).endorsement);
      }
      env.rwset = env.endorsements.front().rwset;
      for (auto const &e : env.endorsements)
      {
        if (e.resultDigest != env.endorsements.front().resultDigest ||
            hashOf(e.rwset) != e.resultDigest)
        {
          throw Error(Errc::EndorsementMismatch,
                      "endorsers " + env.endorsements.front().peerID + " and " + e.peerID +
                          " disagree on the result");
        }
      }
      return env;
    }
  }
}

void Gateway::broadcast(TransactionEnvelope const &envelope)
{
  auto const ack = replyPayload<BroadcastAck>(
      orderer_->call(makeMessage(MessageType::Broadcast, envelope.proposal.channelID, envelope)));
  if (!ack.accepted)
  {
    throw Error(Errc::InvalidTransaction, "orderer rejected " + envelope.txID + ": " + ack.reason);
  }
}

SubmitResult Gateway::awaitCommit(std::string const &channelID, std::string const &txID)
{
  auto const deadline = clock_.now() + timeout_;
  for (;;)
  {
    if (auto const rec = getTransaction(channelID, txID))
    {
      return SubmitResult{txID, rec->validity, rec->blockNumber, rec->txIndex};
    }
    if (clock_.now() >= deadline)
    {
      throw Error(Errc::Timeout, "transaction " + txID + " not committed");
    }
    driver_.step();
  }
}

SubmitResult Gateway::submit(std::string const &channelID, PmdTransaction tx)
{
  auto const proposal = prepare(channelID, std::move(tx));
  auto const envelope = endorse(proposal);
  broadcast(envelope);
  return awaitCommit(channelID, envelope.txID);
}

std::optional<StateEntry> Gateway::getState(std::string const &channelID, std::string const &key)
{
  return replyPayload<std::optional<StateEntry>>(
      query(channelID, makeMessage(MessageType::GetState, channelID, key)));
}

std::vector<HistoryEntry> Gateway::getHistory(std::string const &channelID,
                                              std::string const &key)
{
  return replyPayload<std::vector<HistoryEntry>>(
      query(channelID, makeMessage(MessageType::GetHistory, channelID, key)));
}

std::optional<TxRecord> Gateway::getTransaction(std::string const &channelID,
                                                std::string const &txID)
{
  return replyPayload<std::optional<TxRecord>>(
      query(channelID, makeMessage(MessageType::GetTx, channelID, txID)));
}

std::optional<Block> Gateway::getBlock(std::string const &channelID, std::uint64_t n)
{
  return replyPayload<std::optional<Block>>(
      query(channelID, makeMessage(MessageType::GetBlock, channelID, n)));
}

std::uint64_t Gateway::height(std::string const &channelID)
{
  return replyPayload<std::uint64_t>(
      query(channelID, makeMessage(MessageType::Height, channelID, std::uint8_t{0})));
}

EventBatch Gateway::events(std::string const &channelID, EventsQuery const &q)
{
  return replyPayload<EventBatch>(query(channelID, makeMessage(MessageType::Events, channelID, q)));
}

}  // namespace provhl
