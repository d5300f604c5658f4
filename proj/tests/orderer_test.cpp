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

#include <gtest/gtest.h>

namespace provhl::testing {
namespace {

std::vector<TransactionEnvelope> downloads(Harness &h, std::size_t n)
{
  auto &gw = h.as("alice").gateway();
  std::vector<TransactionEnvelope> out;
  for (std::size_t i = 0; i < n; ++i)
  {
    PmdTransaction tx;
    tx.txType      = TxType::Download;
    tx.payload     = FileRequest{"f1"};
    tx.requesterID = "alice";
    out.push_back(gw.endorse(gw.prepare("ch1", tx)));
  }
  return out;
}

TEST(Orderer, CutsAtMaxMessages)
{
  Harness h{{.maxMessagesPerBlock = 3}};
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  auto      &o      = h.net().orderer();
  auto const height = o.height("ch1");
  auto const envs   = downloads(h, 3);
  o.broadcast("ch1", envs[0]);
  o.broadcast("ch1", envs[1]);
  EXPECT_EQ(o.height("ch1"), height);
  EXPECT_TRUE(o.nextDeadline());
  o.broadcast("ch1", envs[2]);
  EXPECT_EQ(o.height("ch1"), height + 1);
  EXPECT_EQ(o.block("ch1", height).envelopes.size(), 3u);
  EXPECT_FALSE(o.nextDeadline());
}

TEST(Orderer, CutsOnBatchTimeout)
{
  Harness h;
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  auto      &o      = h.net().orderer();
  auto      &clock  = *h.net().virtualClock();
  auto const height = o.height("ch1");
  o.broadcast("ch1", downloads(h, 1).front());
  auto const deadline = o.nextDeadline();
  ASSERT_TRUE(deadline);
  EXPECT_EQ(*deadline, clock.now() + h.net().config().batchTimeoutMs);
  EXPECT_EQ(o.tick(), 0u);
  clock.advanceTo(*deadline);
  EXPECT_EQ(o.tick(), 1u);
  EXPECT_EQ(o.height("ch1"), height + 1);
}

TEST(Orderer, RejectsMalformedEnvelopes)
{
  Harness h;
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  auto env = downloads(h, 1).front();
  env.txID = std::string(64, '0');
  auto const ack = h.net().orderer().broadcast("ch1", env);
  EXPECT_FALSE(ack.accepted);
  EXPECT_FALSE(h.net().orderer().nextDeadline());
  expectErrc(Errc::UnknownChannel, [&] { h.net().orderer().broadcast("nope", env); });
}

TEST(Orderer, BlocksAreSignedAndLinked)
{
  Harness h;
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  auto      &o   = h.net().orderer();
  auto const raw = o.rawBlocks("ch1");
  auto const report = verifyChain(raw, "ch1", {}, o.publicKey());
  EXPECT_TRUE(report.ok) << report.reason;
  EXPECT_EQ(report.blocksChecked, o.height("ch1"));
}

TEST(Orderer, RestoresFromDisk)
{
  Harness h{{.persistent = true}};
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  auto const raw = h.net().orderer().rawBlocks("ch1");
  h.restart();
  EXPECT_EQ(h.net().orderer().rawBlocks("ch1"), raw);
  EXPECT_TRUE(h.as("alice").download("ch1", "f1").done());
  EXPECT_EQ(h.net().orderer().height("ch1"), h.net().peers().front()->ledger("ch1").height());
}

}  // namespace
}  // namespace provhl::testing
