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

#include "provhl/crypto.hpp"
#include "provhl/transaction.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace provhl {

/// Hash-chained batch of envelopes.
///
/// The header (number, previous hash, data hash) is what the orderer signs and
/// what the next block links to. The validity flags are filled in by the
/// committing peer, which signs them together with the header hash so the
/// stored flags are covered by a signature as well.
struct Block
{
  std::uint64_t                    blockNumber{0};
  HashDigest                       previousHash;
  HashDigest                       dataHash;
  std::vector<TransactionEnvelope> envelopes;
  std::vector<ValidationCode>      validity;
  Signature                        ordererSignature;
  std::string                      channelID;
  std::string                      validatorID;
  Signature                        validatorSignature;

  bool operator==(Block const &) const = default;
};

void encode(codec::Writer &w, Block const &b);
void decode(codec::Reader &r, Block &b);

HashDigest computeDataHash(std::vector<TransactionEnvelope> const &envelopes);
Bytes      blockHeaderBytes(Block const &b);
HashDigest hashBlock(Block const &b);
Bytes      validationSigningBytes(Block const &b);

/// Resolves a signer id to its public key (MSP registry lookup).
using KeyResolver = std::function<std::optional<PublicKey>(std::string const &)>;

struct StateEntry
{
  std::string key;
  Bytes       value;
  Version     version;

  bool operator==(StateEntry const &) const = default;
};

void encode(codec::Writer &w, StateEntry const &e);
void decode(codec::Reader &r, StateEntry &e);

struct WorldState
{
  std::string                       channelID;
  std::map<std::string, StateEntry> entries;

  StateEntry const       *get(std::string const &key) const;
  std::vector<StateEntry> range(std::string const &prefix) const;
  /// Canonical digest over all entries in key order.
  HashDigest hash() const;

  bool operator==(WorldState const &) const = default;
};

/// Applies a write set verbatim: values overwrite, tombstones erase.
void applyWriteSet(WorldState &state, std::vector<WriteEntry> const &writes, Version version);

struct HistoryEntry
{
  std::string          txID;
  std::uint64_t        blockNumber{0};
  std::uint32_t        txIndex{0};
  std::optional<Bytes> value;  // tombstone when empty

  bool operator==(HistoryEntry const &) const = default;
};

void encode(codec::Writer &w, HistoryEntry const &e);
void decode(codec::Reader &r, HistoryEntry &e);

struct TxRecord
{
  TransactionEnvelope envelope;
  std::uint64_t       blockNumber{0};
  std::uint32_t       txIndex{0};
  ValidationCode      validity{ValidationCode::Valid};
};

void encode(codec::Writer &w, TxRecord const &t);
void decode(codec::Reader &r, TxRecord &t);

struct VerificationReport
{
  bool                         ok{true};
  std::optional<std::uint64_t> failedBlock;
  std::string                  reason;
  std::uint64_t                blocksChecked{0};
};

/// Checks number sequence, previous-hash linkage, data hash, orderer
/// signature and (when flags are present) the validator signature of every
/// record. The orderer key is taken from the genesis configuration unless
/// given explicitly. Stops at the first failure.
VerificationReport verifyChain(std::vector<Bytes> const &rawBlocks, std::string const &channelID,
                               KeyResolver const &validatorKeys,
                               std::optional<PublicKey> ordererKey = std::nullopt);

/// Raw block log: [4-byte big-endian length][canonical block bytes]...
struct RawBlockLog
{
  std::vector<Bytes>           records;
  std::vector<std::uint64_t>   offsets;  // file offset of each record's payload
  std::optional<std::string>   framingError;
};

RawBlockLog readBlockLog(std::filesystem::path const &path);

/// Flips one byte of block `blockNumber`, offset counted from the first byte
/// of its canonical encoding. Throws Error(OutOfRange).
void tamperBlockLog(std::filesystem::path const &path, std::uint64_t blockNumber,
                    std::uint64_t byteOffset);

/// Extracts the channel configuration carried by a genesis block.
ChannelConfig genesisConfig(Block const &genesis);

/// Append-only block store; file-backed when given a path.
class BlockStore
{
public:
  explicit BlockStore(std::string channelID);
  /// Opens (creating if needed) a log file. An existing log must verify.
  BlockStore(std::string channelID, std::filesystem::path file, KeyResolver validatorKeys,
             bool syncWrites = true);

  BlockStore(BlockStore &&) noexcept            = default;
  BlockStore &operator=(BlockStore &&) noexcept = default;

  /// Checks linkage and the orderer signature, then appends. Returns the
  /// position of the new block.
  std::uint64_t append(Block const &block, PublicKey const &ordererKey);

  std::uint64_t             height() const noexcept { return blocks_.size(); }
  bool                      empty() const noexcept { return blocks_.empty(); }
  Block const              &block(std::uint64_t n) const;
  std::vector<Block> const &blocks() const noexcept { return blocks_; }
  std::vector<Bytes> const &rawBlocks() const noexcept { return raw_; }
  std::optional<HashDigest> tipHash() const;
  std::string const        &channelID() const noexcept { return channelID_; }

  VerificationReport verify(KeyResolver const &validatorKeys) const;

private:
  std::string                          channelID_;
  std::vector<Block>                   blocks_;
  std::vector<Bytes>                   raw_;
  std::optional<std::filesystem::path> file_;
  bool                                 sync_{true};
};

using ApplyFn = std::function<void(WorldState &, TransactionEnvelope const &, Version)>;

/// Rebuilds world state from the valid transactions of a chain. The default
/// apply function is applyWriteSet over the envelope's write set.
WorldState replayToState(BlockStore const &store, ApplyFn const &apply = {});

/// One peer's ledger for one channel: block store, world state, history and
/// transaction indexes.
///
/// Single writer (commit), many readers. Readers obtain immutable state
/// snapshots and never observe a partially committed block.
class ChannelLedger
{
public:
  explicit ChannelLedger(BlockStore store);

  ChannelLedger(ChannelLedger const &)            = delete;
  ChannelLedger &operator=(ChannelLedger const &) = delete;

  /// Appends a validated block and applies its valid write sets.
  void commit(Block const &block, PublicKey const &ordererKey);

  std::uint64_t             height() const;
  std::optional<HashDigest> tipHash() const;
  Block                     block(std::uint64_t n) const;  // throws OutOfRange

  std::shared_ptr<WorldState const> snapshot() const;
  std::optional<StateEntry>         getState(std::string const &key) const;
  std::vector<HistoryEntry>         getStateHistory(std::string const &key) const;
  std::optional<TxRecord>           getTransaction(std::string const &txID) const;
  bool                              hasTransaction(std::string const &txID) const;
  HashDigest                        stateHash() const;

  std::string const &channelID() const noexcept { return channelID_; }

  VerificationReport verify(KeyResolver const &validatorKeys) const;
  std::vector<Bytes> rawBlocks() const;

private:
  void indexBlockLocked(Block const &block, WorldState &state);

  std::string                                              channelID_;
  mutable std::shared_mutex                                mutex_;
  BlockStore                                               store_;
  std::shared_ptr<WorldState const>                        state_;
  std::map<std::string, std::vector<HistoryEntry>>         history_;
  std::map<std::string, std::pair<std::uint64_t, std::uint32_t>> txIndex_;
};

}  // namespace provhl
