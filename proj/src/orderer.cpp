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

#include "provhl/orderer.hpp"

#include "provhl/error.hpp"

#include <spdlog/spdlog.h>

namespace provhl {

SoloOrderer::SoloOrderer(std::string id, KeyPair key, Clock &clock, OrdererConfig config,
                         std::filesystem::path dataDir, bool syncWrites)
  : id_{std::move(id)}
  , key_{std::move(key)}
  , clock_{clock}
  , config_{config}
  , dataDir_{std::move(dataDir)}
  , sync_{syncWrites}
{
  if (config_.maxMessagesPerBlock == 0)
  {
    throw Error(Errc::ConfigInvalid, "orderer.maxMessagesPerBlock must be positive");
  }
  if (!dataDir_.empty())
  {
    std::filesystem::create_directories(dataDir_);
  }
}

SoloOrderer::~SoloOrderer() = default;

Block SoloOrderer::createChannel(TransactionEnvelope const &configEnvelope)
{
  auto const *config = std::get_if<ChannelConfig>(&configEnvelope.proposal.tx.payload);
  if (config == nullptr || configEnvelope.proposal.tx.txType != TxType::Config)
  {
    throw Error(Errc::Malformed, "not a channel configuration transaction");
  }
  if (config->ordererPublicKey != key_.publicKey())
  {
    throw Error(Errc::ConfigInvalid, "channel configuration names a different orderer key");
  }
  auto const &channelID = config->channelID;

  std::lock_guard lock{mutex_};
  if (channels_.count(channelID) != 0)
  {
    throw Error(Errc::DuplicateChannel, channelID);
  }
  Channel ch;
  if (dataDir_.empty())
  {
    ch.store = std::make_unique<BlockStore>(channelID);
  }
  else
  {
    ch.store = std::make_unique<BlockStore>(channelID, dataDir_ / (channelID + ".blocks"),
                                            KeyResolver{}, sync_);
    if (!ch.store->empty())
    {
      throw Error(Errc::DuplicateChannel, channelID + " already has a block log");
    }
  }
  Block genesis;
  genesis.channelID        = channelID;
  genesis.envelopes        = {configEnvelope};
  genesis.dataHash         = computeDataHash(genesis.envelopes);
  genesis.ordererSignature = key_.sign(blockHeaderBytes(genesis));
  ch.store->append(genesis, key_.publicKey());
  channels_.emplace(channelID, std::move(ch));
  spdlog::info("orderer: created channel {}", channelID);
  return genesis;
}

void SoloOrderer::restoreChannel(std::string const &channelID)
{
  if (dataDir_.empty())
  {
    throw Error(Errc::NotFound, "orderer keeps no block logs");
  }
  std::lock_guard lock{mutex_};
  if (channels_.count(channelID) != 0)
  {
    throw Error(Errc::DuplicateChannel, channelID);
  }
  Channel ch;
  ch.store = std::make_unique<BlockStore>(channelID, dataDir_ / (channelID + ".blocks"),
                                          KeyResolver{}, sync_);
  if (ch.store->empty())
  {
    throw Error(Errc::NotFound, "no block log for " + channelID);
  }
  channels_.emplace(channelID, std::move(ch));
}

bool SoloOrderer::hasChannel(std::string const &channelID) const
{
  std::lock_guard lock{mutex_};
  return channels_.count(channelID) != 0;
}

std::uint64_t SoloOrderer::height(std::string const &channelID) const
{
  std::lock_guard lock{mutex_};
  auto const      it = channels_.find(channelID);
  if (it == channels_.end())
  {
    throw Error(Errc::UnknownChannel, channelID);
  }
  return it->second.store->height();
}

std::vector<Bytes> SoloOrderer::rawBlocks(std::string const &channelID) const
{
  std::lock_guard lock{mutex_};
  auto const      it = channels_.find(channelID);
  if (it == channels_.end())
  {
    throw Error(Errc::UnknownChannel, channelID);
  }
  return it->second.store->rawBlocks();
}

Block SoloOrderer::block(std::string const &channelID, std::uint64_t n) const
{
  std::lock_guard lock{mutex_};
  auto const      it = channels_.find(channelID);
  if (it == channels_.end())
  {
    throw Error(Errc::UnknownChannel, channelID);
  }
  return it->second.store->block(n);
}

void SoloOrderer::addSink(std::string const &channelID, BlockSink sink)
{
  std::lock_guard lock{mutex_};
  auto const      it = channels_.find(channelID);
  if (it == channels_.end())
  {
    throw Error(Errc::UnknownChannel, channelID);
  }
  it->second.sinks.push_back(std::move(sink));
}

Block SoloOrderer::cutLocked(std::string const &channelID, Channel &ch, std::size_t count)
{
  Block b;
  b.channelID    = channelID;
  b.blockNumber  = ch.store->height();
  b.previousHash = ch.store->tipHash().value_or(HashDigest{});
  for (std::size_t i = 0; i < count; ++i)
  {
    b.envelopes.push_back(std::move(ch.pending.front()));
    ch.pending.pop_front();
  }
  b.dataHash         = computeDataHash(b.envelopes);
  b.ordererSignature = key_.sign(blockHeaderBytes(b));
  ch.store->append(b, key_.publicKey());
  ch.firstPendingAt = clock_.now();
  spdlog::debug("orderer: cut block {} of {} with {} envelopes", b.blockNumber, channelID,
                b.envelopes.size());
  return b;
}

void SoloOrderer::publish(std::vector<Cut> const &blocks)
{
  for (auto const &[block, sinks] : blocks)
  {
    for (auto const &sink : sinks)
    {
      try
      {
        sink(block);
      }
      catch (Error const &e)
      {
        spdlog::warn("orderer: delivery of block {} of {} failed: {}", block.blockNumber,
                     block.channelID, e.what());
      }
    }
  }
}

BroadcastAck SoloOrderer::broadcast(std::string const &channelID,
                                    TransactionEnvelope const &envelope)
{
  std::vector<Cut>                           cut;
  std::unique_lock                           lock{mutex_};
  auto const                                 it = channels_.find(channelID);
  if (it == channels_.end())
  {
    throw Error(Errc::UnknownChannel, channelID);
  }
  auto &ch = it->second;

  std::string reason;
  if (envelope.proposal.channelID != channelID)
  {
    reason = "envelope is for channel " + envelope.proposal.channelID;
  }
  else if (envelope.txID != computeTxID(envelope.proposal))
  {
    reason = "txID does not match the proposal";
  }
  else if (envelope.endorsements.empty())
  {
    reason = "envelope carries no endorsements";
  }
  else if (envelope.proposal.tx.txType == TxType::Config)
  {
    reason = "configuration transactions are only accepted at channel creation";
  }
  if (!reason.empty())
  {
    spdlog::warn("orderer: dropped envelope {}: {}", envelope.txID, reason);
    return BroadcastAck{false, reason};
  }

  if (ch.pending.empty())
  {
    ch.firstPendingAt = clock_.now();
  }
  ch.pending.push_back(envelope);
  while (ch.pending.size() >= config_.maxMessagesPerBlock)
  {
    cut.emplace_back(cutLocked(channelID, ch, config_.maxMessagesPerBlock), ch.sinks);
  }
  std::unique_lock publishing{publishMutex_};
  lock.unlock();
  publish(cut);
  return BroadcastAck{true, {}};
}

std::optional<TimeMs> SoloOrderer::nextDeadline() const
{
  std::lock_guard       lock{mutex_};
  std::optional<TimeMs> best;
  for (auto const &[id, ch] : channels_)
  {
    if (!ch.pending.empty())
    {
      auto const d = ch.firstPendingAt + config_.batchTimeoutMs;
      best         = best ? std::min(*best, d) : d;
    }
  }
  return best;
}

std::size_t SoloOrderer::tick()
{
  std::vector<Cut>                           cut;
  std::unique_lock                           lock{mutex_};
  auto const                                 now = clock_.now();
  for (auto &[channelID, ch] : channels_)
  {
    if (!ch.pending.empty() && now >= ch.firstPendingAt + config_.batchTimeoutMs)
    {
      cut.emplace_back(cutLocked(channelID, ch, ch.pending.size()), ch.sinks);
    }
  }
  std::unique_lock publishing{publishMutex_};
  lock.unlock();
  publish(cut);
  return cut.size();
}

Message SoloOrderer::handle(Message const &request)
{
  Message reply;
  try
  {
    switch (request.type)
    {
    case MessageType::Broadcast:
      reply = makeReply(
          broadcast(request.channel, codec::deserialize<TransactionEnvelope>(request.payload)));
      break;
    case MessageType::Height: reply = makeReply(height(request.channel)); break;
    case MessageType::GetBlock:
    {
      auto const           n = codec::deserialize<std::uint64_t>(request.payload);
      std::optional<Block> b;
      if (n < height(request.channel))
      {
        b = block(request.channel, n);
      }
      reply = makeReply(b);
      break;
    }
    default:
      throw Error(Errc::Malformed,
                  "orderer does not serve " + std::string{messageTypeName(request.type)});
    }
  }
  catch (Error const &e)
  {
    reply = makeFailure(e);
  }
  reply.sender    = id_;
  reply.signature = key_.sign(messageSigningBytes(reply));
  return reply;
}

}  // namespace provhl
