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

#include "provhl/ledger.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace provhl::testing {
namespace {

TEST(Network, MinimalNetworkRuns)
{
  TempDir       dir;
  NetworkConfig c;
  c.virtualTime = true;
  c.adminOrg    = "lab";
  c.mspRootKey  = dir.path() / "root.key";
  c.orgs        = {{"lab", {"peer0.lab"}}};
  c.storages    = {{"disk", "lab", dir.path() / "files", "dms-disk", std::nullopt}};
  std::ofstream{dir.path() / "main.acl"} << "rule up: allow any upload on any\n";
  c.channels    = {{"main", {"lab"}, "", dir.path() / "main.acl", {}}};
  c.participants = {{"alice", "lab", Role::User}};
  validate(c);
  auto net = Network::up(c);
  auto gw  = net->gateway(net->identity("alice"));
  Client client{*gw, net->dmsEndpoints(), [&] { net->settle(); }, net->clock()};
  auto const content = toBytes("x");
  EXPECT_TRUE(client.upload("main", uploadOf("f1", "disk"), content).done());
  Bytes got;
  EXPECT_TRUE(client.download("main", "f1", &got).done());
  EXPECT_EQ(got, content);
}

TEST(Network, AllNodesShareTheGenesisBlock)
{
  Harness     h{{.peersPerOrg = 2}};
  auto const &ordererGenesis = h.net().orderer().block("ch1", 0);
  ASSERT_EQ(h.net().peers().size(), 4u);
  for (auto *p : h.net().peers())
  {
    auto const b = p->ledger("ch1").block(0);
    EXPECT_EQ(hashBlock(b), hashBlock(ordererGenesis)) << p->id();
    EXPECT_EQ(genesisConfig(b), genesisConfig(ordererGenesis));
  }
  auto const config = genesisConfig(ordererGenesis);
  EXPECT_EQ(config.memberOrgIDs, (std::vector<std::string>{"org1", "org2"}));
  EXPECT_EQ(config.storages.size(), 2u);
  EXPECT_EQ(config.ordererPublicKey, h.net().orderer().publicKey());
  EXPECT_EQ(config.mspRootPublicKey, h.net().msp().rootPublicKey());
}

TEST(Network, SeededRunsAreByteIdentical)
{
  auto run = [](std::uint64_t seed) {
    Harness  h{{.persistent = true, .seed = "det"}};
    Workload w{h, {"ch1"}, seed};
    w.runUntil(80);
    h.net().settle();
    auto raw = h.net().orderer().rawBlocks("ch1");
    h.down();
    return raw;
  };
  auto const a = run(4);
  EXPECT_EQ(a, run(4));
  EXPECT_NE(a, run(5));
}

TEST(Network, OnlyAdministratorsCreateChannels)
{
  Harness h;
  ChannelSpec spec{"ch9", {"org1"}, "", {}, {"A"}};
  expectErrc(Errc::NotAuthorized, [&] { h.net().createChannel(h.net().identity("alice"), spec); });
  auto const genesis = h.net().createChannel(h.net().admin(), spec);
  EXPECT_EQ(genesis.channelID, "ch9");
  EXPECT_TRUE(h.net().peer("peer0.org1").hasChannel("ch9"));
  EXPECT_FALSE(h.net().peer("peer0.org2").hasChannel("ch9"));
  expectErrc(Errc::DuplicateChannel, [&] { h.net().createChannel(h.net().admin(), spec); });
  expectErrc(Errc::AclDenied, [&] {
    h.as("alice").upload("ch9", uploadOf("f1", "A"), toBytes("x"));  // no rules yet
  });
}

TEST(Network, RegisteredParticipantsCanTransact)
{
  Harness h{{.persistent = true}};
  h.net().registerParticipant("dave", "org2", Role::User);
  EXPECT_TRUE(h.as("dave").upload("ch1", uploadOf("f1", "B"), toBytes("x")).done());
  expectErrc(Errc::DuplicateId, [&] { h.net().registerParticipant("dave", "org2", Role::User); });
  h.restart();
  EXPECT_EQ(h.net().identity("dave").org(), "org2");
  EXPECT_EQ(h.as("dave").asset("ch1", "f1")->ownerID, "dave");
}

TEST(Network, TamperedLogStopsTheBoot)
{
  Harness h{{.persistent = true}};
  h.as("alice").upload("ch1", uploadOf("f1", "A"), toBytes("x"));
  h.down();
  tamperBlockLog(h.root() / "data/peers/peer0.org2/ch1.blocks", 1, 40);
  expectErrc(Errc::ChainMismatch, [&] { h.restart(); });
  tamperBlockLog(h.root() / "data/peers/peer0.org2/ch1.blocks", 1, 40);
  h.restart();
  EXPECT_TRUE(h.as("alice").asset("ch1", "f1"));
}

}  // namespace
}  // namespace provhl::testing
