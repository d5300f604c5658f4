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

#include <gtest/gtest.h>

namespace provhl::testing {
namespace {

struct PeerFixture : ::testing::Test
{
  Harness h;

  PeerFixture() { h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x")); }

  Gateway &gw(std::string const &who) { return h.as(who).gateway(); }

  TransactionEnvelope endorsed(std::string const &who, TxType type, TxPayload payload)
  {
    PmdTransaction tx;
    tx.txType      = type;
    tx.payload     = std::move(payload);
    tx.requesterID = who;
    return gw(who).endorse(gw(who).prepare("ch1", tx));
  }

  ValidationCode commit(TransactionEnvelope const &env)
  {
    gw("alice").broadcast(env);
    return gw("alice").awaitCommit("ch1", env.txID).validity;
  }
};

TEST_F(PeerFixture, ValidTransactionsCommit)
{
  EXPECT_EQ(commit(endorsed("alice", TxType::Download, FileRequest{"f1"})),
            ValidationCode::Valid);
}

TEST_F(PeerFixture, ResubmittedTransactionIsDuplicate)
{
  auto const env = endorsed("alice", TxType::Download, FileRequest{"f1"});
  EXPECT_EQ(commit(env), ValidationCode::Valid);
  gw("alice").broadcast(env);
  h.net().settle();
  auto const &ledger = h.net().peers().front()->ledger("ch1");
  auto const  last   = ledger.block(ledger.height() - 1);
  bool        found  = false;
  for (std::size_t i = 0; i < last.envelopes.size(); ++i)
  {
    if (last.envelopes[i].txID == env.txID)
    {
      found = true;
      EXPECT_EQ(last.validity[i], ValidationCode::DuplicateTxId);
    }
  }
  EXPECT_TRUE(found);
}

TEST_F(PeerFixture, TamperedClientSignature)
{
  auto env = endorsed("alice", TxType::Download, FileRequest{"f1"});
  env.proposal.clientSignature[0] ^= 1;
  EXPECT_EQ(commit(env), ValidationCode::BadClientSignature);
}

TEST_F(PeerFixture, TamperedEndorsement)
{
  auto env = endorsed("alice", TxType::Download, FileRequest{"f1"});
  env.endorsements.front().peerSignature[3] ^= 1;
  EXPECT_EQ(commit(env), ValidationCode::BadEndorsement);
}

TEST_F(PeerFixture, RewrittenWriteSet)
{
  auto env = endorsed("alice", TxType::Download, FileRequest{"f1"});
  env.rwset.writes.push_back({"asset/ch1/f9", toBytes("forged")});
  EXPECT_EQ(commit(env), ValidationCode::BadEndorsement);
}

TEST_F(PeerFixture, MissingOrganisationFailsPolicy)
{
  // bob (org2) reading from storage A (org1) needs both organisations
  h.as("alice").grant("ch1", grantOf("f1", "g1", "bob", {acl::Operation::Download}));
  auto env = endorsed("bob", TxType::Download, FileRequest{"f1"});
  ASSERT_GE(env.endorsements.size(), 2u);
  std::erase_if(env.endorsements, [](auto const &e) { return e.peerID.ends_with(".org1"); });
  EXPECT_EQ(commit(env), ValidationCode::PolicyFailure);
}

TEST_F(PeerFixture, ForeignChannelIsMalformed)
{
  auto env               = endorsed("alice", TxType::Download, FileRequest{"f1"});
  env.proposal.channelID = "other";
  env.txID               = computeTxID(env.proposal);
  EXPECT_FALSE(h.net().orderer().broadcast("ch1", env).accepted);

  auto       &peer = h.net().peer("peer0.org1");
  auto const &ledger = peer.ledger("ch1");
  Block       block;
  block.channelID    = "ch1";
  block.blockNumber  = ledger.height();
  block.previousHash = *ledger.tipHash();
  block.envelopes    = {env, endorsed("alice", TxType::Download, FileRequest{"f1"})};
  block.dataHash     = computeDataHash(block.envelopes);
  auto const orderer = KeyPair::fromSeedText("fixture/orderer");
  ASSERT_EQ(orderer.publicKey(), h.net().orderer().publicKey());
  block.ordererSignature = orderer.sign(blockHeaderBytes(block));
  EXPECT_EQ(peer.validateBlock(block),
            (std::vector{ValidationCode::Malformed, ValidationCode::Valid}));
}

TEST_F(PeerFixture, RevokedRequesterIsRejectedAtValidation)
{
  auto const env = endorsed("carol", TxType::Upload, uploadOf("c1", "A"));
  h.net().msp().revokeCredential(h.net().admin().credential, "carol");
  EXPECT_EQ(commit(env), ValidationCode::BadClientSignature);
  expectErrc(Errc::Revoked, [&] { endorsed("carol", TxType::Upload, uploadOf("c2", "A")); });
}

TEST_F(PeerFixture, ConflictingEndorsementsAreRefused)
{
  h.net().peer("peer0.org2").setEndorsementFault(
      [](ReadWriteSet &s) { s.writes.push_back({"asset/ch1/zz", toBytes("z")}); });
  h.net().peer("peer1.org2").setEndorsementFault(
      [](ReadWriteSet &s) { s.writes.push_back({"asset/ch1/zz", toBytes("z")}); });
  h.as("alice").grant("ch1", grantOf("f1", "g1", "bob", {acl::Operation::Download}));
  expectErrc(Errc::EndorsementMismatch,
             [&] { endorsed("bob", TxType::Download, FileRequest{"f1"}); });
}

TEST_F(PeerFixture, ValidateBlockDoesNotCommit)
{
  auto       &peer   = h.net().peer("peer0.org1");
  auto const  height = peer.ledger("ch1").height();
  auto const  block  = peer.ledger("ch1").block(height - 1);
  EXPECT_THROW(peer.validateBlock(block), Error);  // does not extend the tip
  EXPECT_EQ(peer.ledger("ch1").height(), height);
}

TEST_F(PeerFixture, StoppedPeerCatchesUpFromBacklog)
{
  auto &peer = h.net().peer("peer1.org2");
  peer.stop();
  auto const before = peer.ledger("ch1").height();
  h.as("alice").upload("ch1", uploadOf("f2", "A"), toBytes("y"));
  EXPECT_EQ(peer.ledger("ch1").height(), before);
  peer.start();
  auto const &ref = h.net().peer("peer0.org1").ledger("ch1");
  EXPECT_EQ(peer.ledger("ch1").height(), ref.height());
  EXPECT_EQ(peer.ledger("ch1").stateHash(), ref.stateHash());
}

TEST_F(PeerFixture, EventsAreSequencedAndFiltered)
{
  auto &peer = h.net().peer("peer0.org1");
  auto  all  = peer.events("ch1", EventsQuery{});
  ASSERT_FALSE(all.events.empty());
  for (std::size_t i = 0; i < all.events.size(); ++i)
  {
    EXPECT_EQ(all.events[i].sequence, i);
  }
  EventsQuery q;
  q.txType   = TxType::Upload;
  auto const uploads = peer.events("ch1", q);
  EXPECT_EQ(uploads.events.size(), 2u);  // request and response
  q.fromSequence = all.events.back().sequence + 1;
  EXPECT_TRUE(peer.events("ch1", q).events.empty());
}

TEST_F(PeerFixture, SubscribersSeeEveryCommitOnce)
{
  std::vector<std::string> seen;
  auto const handle = h.net().peer("peer0.org2").subscribe(
      "ch1", std::nullopt, [&](CommitEvent const &e) { seen.push_back(e.txID); });
  auto const out = h.as("alice").download("ch1", "f1");
  h.net().peer("peer0.org2").unsubscribe(handle);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen.front(), out.request.txID);
  EXPECT_EQ(seen.back(), out.response->txID);
}

}  // namespace
}  // namespace provhl::testing
