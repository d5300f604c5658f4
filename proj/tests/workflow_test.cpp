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

TEST(Workflow, UploadThenDownload)
{
  Harness h;
  auto   &alice = h.as("alice");
  auto const content = toBytes("spectrum 1 2 3");
  auto const up = alice.upload("ch1", uploadOf("f1", "A"), content);
  ASSERT_TRUE(up.done()) << validationCodeName(up.request.validity);
  auto const asset = alice.asset("ch1", "f1");
  ASSERT_TRUE(asset);
  EXPECT_FALSE(asset->temporary);
  EXPECT_EQ(asset->ownerID, "alice");
  EXPECT_EQ(asset->creatorID, "alice");
  EXPECT_EQ(asset->storageID, "A");
  EXPECT_EQ(asset->fileName, "ch1/f1");
  EXPECT_EQ(asset->checksum, contentChecksum(content));
  EXPECT_EQ(asset->source, SourceDescriptor{FacilitySource{"beamline-7"}});

  Bytes got;
  auto const down = alice.download("ch1", "f1", &got);
  ASSERT_TRUE(down.done());
  EXPECT_EQ(got, content);
  auto const after = alice.asset("ch1", "f1");
  EXPECT_EQ(after->downloads, 1u);
  EXPECT_EQ(after->dUsers, (std::vector<DownloadRecord>{{"alice", down.request.txID}}));
}

TEST(Workflow, RequestLeavesTemporaryAssetUntilConfirmed)
{
  Harness        h;
  PmdTransaction tx;
  tx.txType      = TxType::Upload;
  tx.payload     = uploadOf("f1", "A");
  tx.requesterID = "alice";
  auto &alice    = h.as("alice");
  alice.gateway().submit("ch1", tx);
  auto const pending = alice.asset("ch1", "f1");
  ASSERT_TRUE(pending);
  EXPECT_TRUE(pending->temporary);
  expectErrc(Errc::AssetTemporary, [&] { alice.download("ch1", "f1"); });
}

TEST(Workflow, CopyWithinCreatesReplica)
{
  Harness h;
  auto   &alice = h.as("alice");
  alice.upload("ch1", uploadOf("f1", "A"), toBytes("data"));
  ASSERT_TRUE(alice.copy("ch1", CopyRequest{"f1", "f1-copy", std::nullopt}).done());
  auto const copy = alice.asset("ch1", "f1-copy");
  ASSERT_TRUE(copy);
  EXPECT_EQ(copy->assetType, AssetType::Replica);
  EXPECT_EQ(copy->storageID, "A");
  EXPECT_EQ(copy->source, SourceDescriptor{(DerivedSource{"f1", "copy"})});
  EXPECT_EQ(h.net().backend("A").read(copy->fileName), toBytes("data"));
}

TEST(Workflow, CopyToOtherStorage)
{
  Harness h;
  auto   &alice = h.as("alice");
  alice.upload("ch1", uploadOf("f1", "A"), toBytes("data"));
  ASSERT_TRUE(alice.copy("ch1", CopyRequest{"f1", "f1-b", "B"}).done());
  auto const copy = alice.asset("ch1", "f1-b");
  EXPECT_EQ(copy->storageID, "B");
  EXPECT_EQ(h.net().backend("B").read(copy->fileName), toBytes("data"));
  EXPECT_TRUE(h.net().backend("A").exists("ch1/f1"));
}

TEST(Workflow, TransferMovesTheFile)
{
  Harness h;
  auto   &alice = h.as("alice");
  alice.upload("ch1", uploadOf("f1", "A"), toBytes("data"));
  ASSERT_TRUE(alice.transfer("ch1", TransferRequest{"f1", "B"}).done());
  auto const moved = alice.asset("ch1", "f1");
  EXPECT_EQ(moved->storageID, "B");
  EXPECT_FALSE(h.net().backend("A").exists("ch1/f1"));
  EXPECT_EQ(h.net().backend("B").checksum(moved->fileName), moved->checksum);
  Bytes got;
  ASSERT_TRUE(alice.download("ch1", "f1", &got).done());
  EXPECT_EQ(got, toBytes("data"));
  expectErrc(Errc::SameStorageDestination,
             [&] { alice.transfer("ch1", TransferRequest{"f1", "B"}); });
}

TEST(Workflow, DeleteRemovesAssetAndFile)
{
  Harness h;
  auto   &alice = h.as("alice");
  alice.upload("ch1", uploadOf("f1", "A"), toBytes("data"));
  ASSERT_TRUE(alice.remove("ch1", "f1").done());
  EXPECT_FALSE(alice.asset("ch1", "f1"));
  EXPECT_TRUE(h.net().backend("A").list().empty());
  expectErrc(Errc::UnknownAsset, [&] { alice.download("ch1", "f1"); });
}

TEST(Workflow, ContractErrors)
{
  Harness h;
  auto   &alice = h.as("alice");
  alice.upload("ch1", uploadOf("f1", "A"), toBytes("data"));
  expectErrc(Errc::DuplicateFileId,
             [&] { alice.upload("ch1", uploadOf("f1", "A"), toBytes("again")); });
  expectErrc(Errc::UnknownStorage,
             [&] { alice.upload("ch1", uploadOf("f2", "Z"), toBytes("x")); });
  expectErrc(Errc::UnknownAsset, [&] { alice.download("ch1", "nope"); });
  expectErrc(Errc::DuplicateFileId,
             [&] { alice.copy("ch1", CopyRequest{"f1", "f1", std::nullopt}); });
  expectErrc(Errc::UnknownStorage, [&] { alice.transfer("ch1", TransferRequest{"f1", "Z"}); });
  expectErrc(Errc::UnknownRule, [&] { alice.revoke("ch1", "nope"); });
  auto bad = uploadOf("f3", "A");
  bad.assetType = AssetType::Replica;
  expectErrc(Errc::Malformed, [&] { alice.upload("ch1", bad, toBytes("x")); });
}

TEST(Workflow, OnlyOwnersGrantAndOnlyGrantorsRevoke)
{
  Harness h;
  auto   &alice = h.as("alice");
  alice.upload("ch1", uploadOf("f1", "A"), toBytes("data"));
  expectErrc(Errc::NotOwner, [&] {
    h.as("bob").grant("ch1", grantOf("f1", "g0", "bob", {acl::Operation::Download}));
  });
  ASSERT_TRUE(alice.grant("ch1", grantOf("f1", "g1", "bob", {acl::Operation::Download})).valid());
  expectErrc(Errc::DuplicateId, [&] {
    alice.grant("ch1", grantOf("f1", "g1", "carol", {acl::Operation::Download}));
  });
  expectErrc(Errc::NotOwner, [&] { h.as("bob").revoke("ch1", "g1"); });
  EXPECT_TRUE(alice.revoke("ch1", "g1").valid());
}

TEST(Workflow, ServerResponsesComeOnlyFromTheExecutingDms)
{
  Harness        h;
  auto          &alice = h.as("alice");
  PmdTransaction req;
  req.txType      = TxType::Upload;
  req.payload     = uploadOf("f1", "A");
  req.requesterID = "alice";
  auto const request = alice.gateway().submit("ch1", req);

  PmdTransaction resp;
  resp.txType            = TxType::Upload;
  resp.phase             = Phase::ServerResponse;
  resp.linkedRequestTxID = request.txID;
  resp.payload           = ServerResponse{};

  expectErrc(Errc::WrongRole, [&] { alice.gateway().submit("ch1", resp); });
  auto dmsB = h.net().gateway(h.net().identity("dms-B"));
  expectErrc(Errc::WrongRole, [&] { dmsB->submit("ch1", resp); });

  h.net().settle();
  auto dmsA = h.net().gateway(h.net().identity("dms-A"));
  expectErrc(Errc::RequestAlreadyConsumed, [&] { dmsA->submit("ch1", resp); });
}

TEST(Workflow, ImpersonationIsRejected)
{
  Harness        h;
  auto          &gw = h.as("alice").gateway();
  PmdTransaction tx;
  tx.txType               = TxType::Upload;
  tx.payload              = uploadOf("f1", "A");
  auto proposal           = gw.prepare("ch1", tx);
  proposal.tx.requesterID = "bob";
  proposal.clientSignature = gw.identity().sign(proposalSigningBytes(proposal));
  expectErrc(Errc::BadSignature, [&] { gw.endorse(proposal); });
}

TEST(Workflow, StateSurvivesRestart)
{
  Harness h{{.persistent = true}};
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("data"));
  h.as("alice").download("ch1", "f1");
  auto const hash = h.net().peers().front()->ledger("ch1").stateHash();
  h.restart();
  for (auto *p : h.net().peers())
  {
    EXPECT_EQ(p->ledger("ch1").stateHash(), hash);
  }
  Bytes got;
  ASSERT_TRUE(h.as("alice").download("ch1", "f1", &got).done());
  EXPECT_EQ(got, toBytes("data"));
  EXPECT_EQ(h.as("alice").asset("ch1", "f1")->downloads, 2u);
}

TEST(WorkflowProperty, QuiescentNetworkIsConsistent)
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
  {
    Harness  h{{.seed = "q" + std::to_string(seed)}};
    Workload w{h, {"ch1"}, seed};
    w.runUntil(120);
    auto &net = h.net();
    net.settle();
    auto const &ledger = net.peers().front()->ledger("ch1");
    for (auto const &e : ledger.snapshot()->range(chaincode::pendingKeyPrefix("ch1")))
    {
      EXPECT_TRUE(codec::deserialize<chaincode::PendingRequest>(e.value).consumedBy);
    }
    for (auto const &e : ledger.snapshot()->range(chaincode::assetKeyPrefix("ch1")))
    {
      EXPECT_FALSE(codec::deserialize<FileAsset>(e.value).temporary) << e.key;
    }
    for (auto *dms : net.dmsAdapters())
    {
      auto const report = dms->reconcile(net.config().reconcileMaxAgeMs);
      EXPECT_TRUE(report.clean()) << reconcileReportJson(report);
      EXPECT_TRUE(dms->stuck().empty());
    }
  }
}

}  // namespace
}  // namespace provhl::testing
