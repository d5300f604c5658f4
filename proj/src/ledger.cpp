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

#include "provhl/ledger.hpp"

#include "provhl/error.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <unistd.h>

namespace provhl {

void encode(codec::Writer &w, Block const &b)
{
  w.u64(b.blockNumber);
  encode(w, b.previousHash);
  encode(w, b.dataHash);
  codec::encode(w, b.envelopes);
  codec::encode(w, b.validity);
  w.bytes(b.ordererSignature);
  w.str(b.channelID);
  w.str(b.validatorID);
  w.bytes(b.validatorSignature);
}

void decode(codec::Reader &r, Block &b)
{
  b.blockNumber = r.u64();
  decode(r, b.previousHash);
  decode(r, b.dataHash);
  codec::decode(r, b.envelopes);
  codec::decode(r, b.validity);
  b.ordererSignature = r.bytes();
  b.channelID        = r.str();
  b.validatorID      = r.str();
  b.validatorSignature = r.bytes();
}

HashDigest computeDataHash(std::vector<TransactionEnvelope> const &envelopes)
{
  return sha256(codec::serialize(envelopes));
}

Bytes blockHeaderBytes(Block const &b)
{
  codec::Writer w;
  w.u64(b.blockNumber);
  encode(w, b.previousHash);
  encode(w, b.dataHash);
  return w.take();
}

HashDigest hashBlock(Block const &b)
{
  return sha256(blockHeaderBytes(b));
}

Bytes validationSigningBytes(Block const &b)
{
  codec::Writer w;
  encode(w, hashBlock(b));
  codec::encode(w, b.validity);
  return w.take();
}

void encode(codec::Writer &w, StateEntry const &e)
{
  w.str(e.key);
  w.bytes(e.value);
  encode(w, e.version);
}

void decode(codec::Reader &r, StateEntry &e)
{
  e.key   = r.str();
  e.value = r.bytes();
  decode(r, e.version);
}

StateEntry const *WorldState::get(std::string const &key) const
{
  auto const it = entries.find(key);
  return it == entries.end() ? nullptr : &it->second;
}

std::vector<StateEntry> WorldState::range(std::string const &prefix) const
{
  std::vector<StateEntry> out;
  for (auto it = entries.lower_bound(prefix);
       it != entries.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it)
  {
    out.push_back(it->second);
  }
  return out;
}

HashDigest WorldState::hash() const
{
  codec::Writer w;
  w.str(channelID);
  w.length(entries.size());
  for (auto const &[key, entry] : entries)
  {
    encode(w, entry);
  }
  return sha256(w.data());
}

void applyWriteSet(WorldState &state, std::vector<WriteEntry> const &writes, Version version)
{
  for (auto const &write : writes)
  {
    if (write.value)
    {
      state.entries[write.key] = StateEntry{write.key, *write.value, version};
    }
    else
    {
      state.entries.erase(write.key);
    }
  }
}

void encode(codec::Writer &w, HistoryEntry const &e)
{
  w.str(e.txID);
  w.u64(e.blockNumber);
  w.u32(e.txIndex);
  codec::encode(w, e.value);
}

void decode(codec::Reader &r, HistoryEntry &e)
{
  e.txID        = r.str();
  e.blockNumber = r.u64();
  e.txIndex     = r.u32();
  codec::decode(r, e.value);
}

void encode(codec::Writer &w, TxRecord const &t)
{
  encode(w, t.envelope);
  w.u64(t.blockNumber);
  w.u32(t.txIndex);
  encode(w, t.validity);
}

void decode(codec::Reader &r, TxRecord &t)
{
  decode(r, t.envelope);
  t.blockNumber = r.u64();
  t.txIndex     = r.u32();
  decode(r, t.validity);
}

ChannelConfig genesisConfig(Block const &genesis)
{
  if (genesis.blockNumber != 0 || genesis.envelopes.empty())
  {
    throw Error(Errc::Malformed, "not a genesis block");
  }
  auto const &tx = genesis.envelopes.front().proposal.tx;
  if (tx.txType != TxType::Config)
  {
    throw Error(Errc::Malformed, "genesis block carries no channel configuration");
  }
  auto const *config = std::get_if<ChannelConfig>(&tx.payload);
  if (config == nullptr)
  {
    throw Error(Errc::Malformed, "genesis block carries no channel configuration");
  }
  return *config;
}

namespace {

VerificationReport failAt(std::uint64_t n, std::string reason, std::uint64_t checked)
{
  VerificationReport report;
  report.ok            = false;
  report.failedBlock   = n;
  report.reason        = std::move(reason);
  report.blocksChecked = checked;
  return report;
}

}  // namespace

VerificationReport verifyChain(std::vector<Bytes> const &rawBlocks, std::string const &channelID,
                               KeyResolver const &validatorKeys,
                               std::optional<PublicKey> ordererKey)
{
  std::optional<HashDigest> previous;
  for (std::uint64_t n = 0; n < rawBlocks.size(); ++n)
  {
    Block block;
    try
    {
      block = codec::deserialize<Block>(rawBlocks[n]);
    }
    catch (Error const &e)
    {
      return failAt(n, std::string{"undecodable block: "} + e.what(), n);
    }
    if (block.channelID != channelID)
    {
      return failAt(n, "channel id mismatch", n);
    }
    if (block.blockNumber != n)
    {
      return failAt(n, "block number out of sequence", n);
    }
    auto const expectedPrev = n == 0 ? HashDigest::zero() : *previous;
    if (block.previousHash != expectedPrev)
    {
      return failAt(n, "previousHash does not link to the preceding block", n);
    }
    if (block.dataHash != computeDataHash(block.envelopes))
    {
      return failAt(n, "dataHash does not match envelopes", n);
    }
    if (n == 0 && !ordererKey)
    {
      try
      {
        ordererKey = genesisConfig(block).ordererPublicKey;
      }
      catch (Error const &e)
      {
        return failAt(0, e.what(), 0);
      }
    }
    if (!verify(*ordererKey, blockHeaderBytes(block), block.ordererSignature))
    {
      return failAt(n, "orderer signature does not verify", n);
    }
    if (!validatorKeys)
    {
      // orderer-side log: blocks are stored as cut, before validation
      if (!block.validity.empty() || !block.validatorID.empty() ||
          !block.validatorSignature.empty())
      {
        return failAt(n, "unexpected validation metadata in orderer log", n);
      }
    }
    else
    {
      if (block.validity.size() != block.envelopes.size())
      {
        return failAt(n, "validity list length differs from envelope count", n);
      }
      auto const key = validatorKeys(block.validatorID);
      if (!key || !verify(*key, validationSigningBytes(block), block.validatorSignature))
      {
        return failAt(n, "validator signature does not verify", n);
      }
    }
    previous = hashBlock(block);
  }
  VerificationReport ok;
  ok.blocksChecked = rawBlocks.size();
  return ok;
}

RawBlockLog readBlockLog(std::filesystem::path const &path)
{
  RawBlockLog   log;
  std::ifstream in{path, std::ios::binary};
  if (!in)
  {
    return log;
  }
  Bytes const data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::size_t pos = 0;
  while (pos < data.size())
  {
    if (data.size() - pos < 4)
    {
      log.framingError = "truncated length prefix at offset " + std::to_string(pos);
      break;
    }
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
    {
      len = (len << 8) | data[pos + i];
    }
    pos += 4;
    if (data.size() - pos < len)
    {
      log.framingError = "truncated record at offset " + std::to_string(pos);
      break;
    }
    log.offsets.push_back(pos);
    log.records.emplace_back(data.begin() + static_cast<std::ptrdiff_t>(pos),
                             data.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return log;
}

void tamperBlockLog(std::filesystem::path const &path, std::uint64_t blockNumber,
                    std::uint64_t byteOffset)
{
  auto const log = readBlockLog(path);
  if (blockNumber >= log.records.size())
  {
    throw Error(Errc::OutOfRange, "block " + std::to_string(blockNumber) + " not in log of " +
                                      std::to_string(log.records.size()) + " blocks");
  }
  if (byteOffset >= log.records[blockNumber].size())
  {
    throw Error(Errc::OutOfRange, "offset " + std::to_string(byteOffset) + " beyond block size " +
                                      std::to_string(log.records[blockNumber].size()));
  }
  std::fstream f{path, std::ios::binary | std::ios::in | std::ios::out};
  auto const   at = static_cast<std::streamoff>(log.offsets[blockNumber] + byteOffset);
  f.seekg(at);
  char c = 0;
  f.read(&c, 1);
  c = static_cast<char>(static_cast<unsigned char>(c) ^ 0xff);
  f.seekp(at);
  f.write(&c, 1);
  if (!f)
  {
    throw Error(Errc::Io, "cannot modify " + path.string());
  }
}

BlockStore::BlockStore(std::string channelID)
  : channelID_{std::move(channelID)}
{}

BlockStore::BlockStore(std::string channelID, std::filesystem::path file,
                       KeyResolver validatorKeys, bool syncWrites)
  : channelID_{std::move(channelID)}
  , file_{std::move(file)}
  , sync_{syncWrites}
{
  auto log = readBlockLog(*file_);
  if (log.framingError)
  {
    throw Error(Errc::ChainMismatch, file_->string() + ": " + *log.framingError);
  }
  auto const report = verifyChain(log.records, channelID_, validatorKeys);
  if (!report.ok)
  {
    throw Error(Errc::ChainMismatch, file_->string() + ": block " +
                                         std::to_string(*report.failedBlock) + ": " +
                                         report.reason);
  }
  for (auto &raw : log.records)
  {
    blocks_.push_back(codec::deserialize<Block>(raw));
    raw_.push_back(std::move(raw));
  }
}

std::uint64_t BlockStore::append(Block const &block, PublicKey const &ordererKey)
{
  auto const expectedNumber = blocks_.size();
  auto const expectedPrev   = blocks_.empty() ? HashDigest::zero() : hashBlock(blocks_.back());
  if (block.blockNumber != expectedNumber || block.previousHash != expectedPrev)
  {
    throw Error(Errc::ChainMismatch, "block " + std::to_string(block.blockNumber) +
                                         " does not extend tip " +
                                         std::to_string(expectedNumber));
  }
  if (block.channelID != channelID_)
  {
    throw Error(Errc::ChainMismatch, "block belongs to channel " + block.channelID);
  }
  if (block.dataHash != computeDataHash(block.envelopes))
  {
    throw Error(Errc::ChainMismatch, "dataHash does not match envelopes");
  }
  if (!provhl::verify(ordererKey, blockHeaderBytes(block), block.ordererSignature))
  {
    throw Error(Errc::BadSignature, "orderer signature does not verify");
  }
  auto raw = codec::serialize(block);
  if (file_)
  {
    std::FILE *f = std::fopen(file_->c_str(), "ab");
    if (f == nullptr)
    {
      throw Error(Errc::Io, "cannot open block log " + file_->string());
    }
    codec::Writer prefix;
    prefix.u32(static_cast<std::uint32_t>(raw.size()));
    bool ok = std::fwrite(prefix.data().data(), 1, 4, f) == 4 &&
              std::fwrite(raw.data(), 1, raw.size(), f) == raw.size() && std::fflush(f) == 0;
    if (ok && sync_)
    {
      ok = ::fdatasync(::fileno(f)) == 0;
    }
    std::fclose(f);
    if (!ok)
    {
      throw Error(Errc::Io, "cannot append to block log " + file_->string());
    }
  }
  blocks_.push_back(block);
  raw_.push_back(std::move(raw));
  return expectedNumber;
}

Block const &BlockStore::block(std::uint64_t n) const
{
  if (n >= blocks_.size())
  {
    throw Error(Errc::OutOfRange, "block " + std::to_string(n));
  }
  return blocks_[n];
}

std::optional<HashDigest> BlockStore::tipHash() const
{
  if (blocks_.empty())
  {
    return std::nullopt;
  }
  return hashBlock(blocks_.back());
}

VerificationReport BlockStore::verify(KeyResolver const &validatorKeys) const
{
  return verifyChain(raw_, channelID_, validatorKeys);
}

WorldState replayToState(BlockStore const &store, ApplyFn const &apply)
{
  WorldState state;
  state.channelID = store.channelID();
  for (auto const &block : store.blocks())
  {
    for (std::uint32_t i = 0; i < block.envelopes.size(); ++i)
    {
      if (i >= block.validity.size() || block.validity[i] != ValidationCode::Valid)
      {
        continue;
      }
      Version const version{block.blockNumber, i};
      if (apply)
      {
        apply(state, block.envelopes[i], version);
      }
      else
      {
        applyWriteSet(state, block.envelopes[i].rwset.writes, version);
      }
    }
  }
  return state;
}

ChannelLedger::ChannelLedger(BlockStore store)
  : channelID_{store.channelID()}
  , store_{std::move(store)}
{
  WorldState state;
  state.channelID = channelID_;
  for (auto const &block : store_.blocks())
  {
    indexBlockLocked(block, state);
  }
  state_ = std::make_shared<WorldState const>(std::move(state));
}

void ChannelLedger::indexBlockLocked(Block const &block, WorldState &state)
{
  for (std::uint32_t i = 0; i < block.envelopes.size(); ++i)
  {
    auto const &env = block.envelopes[i];
    // the first occurrence of a txID owns the index entry; later duplicates
    // are flagged invalid and stay reachable only through their block
    txIndex_.try_emplace(env.txID, block.blockNumber, i);
    if (i >= block.validity.size() || block.validity[i] != ValidationCode::Valid)
    {
      continue;
    }
    for (auto const &write : env.rwset.writes)
    {
      history_[write.key].push_back(HistoryEntry{env.txID, block.blockNumber, i, write.value});
    }
    applyWriteSet(state, env.rwset.writes, Version{block.blockNumber, i});
  }
}

void ChannelLedger::commit(Block const &block, PublicKey const &ordererKey)
{
  std::unique_lock lock{mutex_};
  if (block.validity.size() != block.envelopes.size())
  {
    throw Error(Errc::Malformed, "block is not validated");
  }
  store_.append(block, ordererKey);
  auto next = std::make_shared<WorldState>(*state_);
  indexBlockLocked(block, *next);
  state_ = std::move(next);
}

std::uint64_t ChannelLedger::height() const
{
  std::shared_lock lock{mutex_};
  return store_.height();
}

std::optional<HashDigest> ChannelLedger::tipHash() const
{
  std::shared_lock lock{mutex_};
  return store_.tipHash();
}

Block ChannelLedger::block(std::uint64_t n) const
{
  std::shared_lock lock{mutex_};
  return store_.block(n);
}

std::shared_ptr<WorldState const> ChannelLedger::snapshot() const
{
  std::shared_lock lock{mutex_};
  return state_;
}

std::optional<StateEntry> ChannelLedger::getState(std::string const &key) const
{
  auto const snap = snapshot();
  if (auto const *e = snap->get(key))
  {
    return *e;
  }
  return std::nullopt;
}

std::vector<HistoryEntry> ChannelLedger::getStateHistory(std::string const &key) const
{
  std::shared_lock lock{mutex_};
  auto const       it = history_.find(key);
  return it == history_.end() ? std::vector<HistoryEntry>{} : it->second;
}

std::optional<TxRecord> ChannelLedger::getTransaction(std::string const &txID) const
{
  std::shared_lock lock{mutex_};
  auto const       it = txIndex_.find(txID);
  if (it == txIndex_.end())
  {
    return std::nullopt;
  }
  auto const &[blockNumber, txIndex] = it->second;
  auto const &block                  = store_.block(blockNumber);
  return TxRecord{block.envelopes[txIndex], blockNumber, txIndex, block.validity[txIndex]};
}

bool ChannelLedger::hasTransaction(std::string const &txID) const
{
  std::shared_lock lock{mutex_};
  return txIndex_.contains(txID);
}

HashDigest ChannelLedger::stateHash() const
{
  return snapshot()->hash();
}

VerificationReport ChannelLedger::verify(KeyResolver const &validatorKeys) const
{
  std::shared_lock lock{mutex_};
  return store_.verify(validatorKeys);
}

std::vector<Bytes> ChannelLedger::rawBlocks() const
{
  std::shared_lock lock{mutex_};
  return store_.rawBlocks();
}

}  // namespace provhl
