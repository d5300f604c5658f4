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

#include "support.hpp"

#include "provhl/chaincode.hpp"
#include "provhl/ledger.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace fs = std::filesystem;

namespace provhl::testing {
namespace {

struct ChainKeys
{
  std::map<std::string, PublicKey> keys;
  PublicKey                        orderer{};

  explicit ChainKeys(Network &net)
    : orderer{net.orderer().publicKey()}
  {
    for (auto const &r : net.msp().records())
    {
      keys[r.credential.participant.participantID] = r.credential.participant.publicKey;
    }
  }

  KeyResolver resolver() const
  {
    return [k = keys](std::string const &id) -> std::optional<PublicKey> {
      auto it = k.find(id);
      return it == k.end() ? std::nullopt : std::optional{it->second};
    };
  }
};

TEST(WorldState, HashCoversKeysValuesAndVersions)
{
  WorldState a{"ch", {}};
  applyWriteSet(a, {{"k1", toBytes("v1")}, {"k2", toBytes("v2")}}, {1, 0});
  WorldState b{"ch", {}};
  applyWriteSet(b, {{"k2", toBytes("v2")}}, {1, 0});
  applyWriteSet(b, {{"k1", toBytes("v1")}}, {1, 0});
  EXPECT_EQ(a.hash(), b.hash());

  auto c = a;
  applyWriteSet(c, {{"k1", toBytes("v1")}}, {2, 0});
  EXPECT_NE(c.hash(), a.hash());
  auto d = a;
  applyWriteSet(d, {{"k2", std::nullopt}}, {2, 0});
  EXPECT_EQ(d.entries.count("k2"), 0u);
  EXPECT_NE(d.hash(), a.hash());
  EXPECT_EQ(a.range("k").size(), 2u);
}

TEST(Ledger, PeersVerifyTheirChains)
{
  Harness h;
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  for (auto *p : h.net().peers())
  {
    auto const report = p->ledger("ch1").verify(p->keyResolver());
    EXPECT_TRUE(report.ok) << report.reason;
    EXPECT_EQ(report.blocksChecked, p->ledger("ch1").height());
  }
}

TEST(Ledger, HistoryListsEveryWriteInOrder)
{
  Harness h;
  auto   &alice = h.as("alice");
  alice.upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  alice.download("ch1", "f1");
  alice.remove("ch1", "f1");
  auto const history = alice.gateway().getHistory("ch1", chaincode::assetKey("ch1", "f1"));
  ASSERT_GE(history.size(), 4u);
  for (std::size_t i = 1; i < history.size(); ++i)
  {
    EXPECT_LT(std::pair(history[i - 1].blockNumber, history[i - 1].txIndex),
              std::pair(history[i].blockNumber, history[i].txIndex));
  }
  EXPECT_FALSE(history.back().value);  // deleted
  EXPECT_TRUE(codec::deserialize<FileAsset>(*history.front().value).temporary);
}

TEST(Ledger, TransactionIndexRecordsValidity)
{
  Harness h;
  auto    out = h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  auto const rec = h.net().peers().front()->ledger("ch1").getTransaction(out.request.txID);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->validity, ValidationCode::Valid);
  EXPECT_EQ(rec->blockNumber, out.request.blockNumber);
  EXPECT_FALSE(h.net().peers().front()->ledger("ch1").getTransaction("00"));
}

TEST(Ledger, EveryByteOfASmallChainIsProtected)
{
  Harness h{{.persistent = true}};
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  ChainKeys const keys{h.net()};
  h.down();

  auto const peerLog    = h.root() / "data/peers/peer0.org2/ch1.blocks";
  auto const ordererLog = h.root() / "data/orderer/ch1.blocks";
  for (auto const &path : {peerLog, ordererLog})
  {
    auto const resolver = path == ordererLog ? KeyResolver{} : keys.resolver();
    auto const clean    = readBlockLog(path);
    ASSERT_TRUE(verifyChain(clean.records, "ch1", resolver, keys.orderer).ok);
    for (std::size_t b = 1; b < clean.records.size(); ++b)
    {
      for (std::size_t off = 0; off < clean.records[b].size(); ++off)
      {
        auto raw = clean.records;
        raw[b][off] ^= 0x5a;
        auto const report = verifyChain(raw, "ch1", resolver, keys.orderer);
        ASSERT_FALSE(report.ok) << "block " << b << " offset " << off;
        ASSERT_EQ(report.failedBlock, b) << "offset " << off << ": " << report.reason;
      }
    }
  }
}

TEST(Ledger, TamperIsAnInvolution)
{
  Harness h{{.persistent = true}};
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  ChainKeys const keys{h.net()};
  h.down();
  auto const path   = h.root() / "data/peers/peer0.org1/ch1.blocks";
  auto const before = readBlockLog(path);
  tamperBlockLog(path, 1, 17);
  EXPECT_FALSE(verifyChain(readBlockLog(path).records, "ch1", keys.resolver()).ok);
  tamperBlockLog(path, 1, 17);
  EXPECT_EQ(readBlockLog(path).records, before.records);
  EXPECT_TRUE(verifyChain(before.records, "ch1", keys.resolver()).ok);

  expectErrc(Errc::OutOfRange, [&] { tamperBlockLog(path, before.records.size(), 0); });
  expectErrc(Errc::OutOfRange, [&] { tamperBlockLog(path, 0, before.records[0].size()); });
}

TEST(Ledger, TruncatedLogIsReported)
{
  Harness h{{.persistent = true}};
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  h.down();
  auto const path = h.root() / "data/peers/peer0.org1/ch1.blocks";
  fs::resize_file(path, fs::file_size(path) - 3);
  auto const log = readBlockLog(path);
  EXPECT_TRUE(log.framingError);
  expectErrc(Errc::ChainMismatch, [&] { h.restart(); });
}

TEST(Ledger, ReplayMatchesLiveState)
{
  Harness  h{{.persistent = true}};
  Workload w{h, {"ch1"}, 21};
  w.runUntil(60);
  h.net().settle();
  ChainKeys const keys{h.net()};
  auto const      live = *h.net().peer("peer1.org1").ledger("ch1").snapshot();
  h.down();
  BlockStore const store{"ch1", h.root() / "data/peers/peer1.org1/ch1.blocks", keys.resolver()};
  EXPECT_EQ(replayToState(store), live);
}

TEST(BlockStore, RejectsBrokenLinkage)
{
  Harness h;
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  auto const &ledger = h.net().peers().front()->ledger("ch1");
  auto const  key    = h.net().orderer().publicKey();
  BlockStore  store{"ch1"};
  store.append(ledger.block(0), key);
  expectErrc(Errc::ChainMismatch, [&] { store.append(ledger.block(2), key); });
  auto forged = ledger.block(1);
  forged.envelopes.clear();
  expectErrc(Errc::ChainMismatch, [&] { store.append(forged, key); });
  store.append(ledger.block(1), key);
  EXPECT_EQ(store.height(), 2u);
}

}  // namespace
}  // namespace provhl::testing
