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

#include "provhl/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace provhl::testing {
namespace {

std::string const kMinimal = R"(
[network]
name = "mini"
dataDir = "data"

[[orgs]]
orgID = "lab"
peers = ["peer0.lab"]

[[storages]]
storageID = "disk"
orgID = "lab"
rootPath = "files"

[[channels]]
channelID = "main"
memberOrgs = ["lab"]

[[participants]]
id = "alice"
orgID = "lab"
role = "user"
)";

std::string replaced(std::string text, std::string const &from, std::string const &to)
{
  auto const pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

void expectInvalid(std::string const &text, std::string const &field)
{
  try
  {
    parseNetworkConfig(text, "/base");
    ADD_FAILURE() << "accepted; expected an error on " << field;
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), Errc::ConfigInvalid) << e.what();
    EXPECT_EQ(e.detail().rfind(field + ":", 0), 0u) << e.detail();
  }
}

TEST(Config, ParsesMinimalNetwork)
{
  auto const c = parseNetworkConfig(kMinimal, "/base");
  EXPECT_EQ(c.name, "mini");
  EXPECT_EQ(c.dataDir, "/base/data");
  EXPECT_FALSE(c.virtualTime);
  EXPECT_TRUE(c.syncWrites);
  EXPECT_EQ(c.maxMessagesPerBlock, 10u);
  EXPECT_EQ(c.batchTimeoutMs, 250u);
  EXPECT_EQ(c.adminID, "admin");
  EXPECT_EQ(c.adminOrg, "lab");
  ASSERT_EQ(c.storages.size(), 1u);
  EXPECT_EQ(c.storages[0].rootPath, "/base/files");
  EXPECT_EQ(c.storages[0].dmsID, "dms-disk");
  EXPECT_FALSE(c.storages[0].capacityBytes);
  ASSERT_EQ(c.participants.size(), 1u);
  EXPECT_EQ(c.participants[0].role, Role::User);
  EXPECT_EQ(c.findOrg("lab")->peers, std::vector<std::string>{"peer0.lab"});
  EXPECT_EQ(c.findStorage("nope"), nullptr);
}

TEST(Config, ReadsOptionalTables)
{
  auto const text = kMinimal + R"(
[orderer]
maxMessagesPerBlock = 3
batchTimeoutMs = 1_000

[msp]
admin = "root"
rootKey = "/keys/root.key"
)";
  auto const c = parseNetworkConfig(replaced(text, "name = \"mini\"",
                                             "name = \"mini\"\nclock = \"virtual\"\nseed = \"s\""),
                                    "/base");
  EXPECT_TRUE(c.virtualTime);
  EXPECT_EQ(c.seed, "s");
  EXPECT_EQ(c.maxMessagesPerBlock, 3u);
  EXPECT_EQ(c.batchTimeoutMs, 1000u);
  EXPECT_EQ(c.adminID, "root");
  EXPECT_EQ(c.mspRootKey, "/keys/root.key");
}

TEST(Config, NamesTheOffendingField)
{
  expectInvalid(replaced(kMinimal, "orgID = \"lab\"\nrootPath", "orgID = \"hpc\"\nrootPath"),
                "storages[0].orgID");
  expectInvalid(replaced(kMinimal, "memberOrgs = [\"lab\"]", "memberOrgs = [\"lab\", \"hpc\"]"),
                "channels[0].memberOrgs[1]");
  expectInvalid(replaced(kMinimal, "id = \"alice\"\norgID = \"lab\"", "id = \"alice\"\norgID = \"x\""),
                "participants[0].orgID");
  expectInvalid(replaced(kMinimal, "role = \"user\"", "role = \"mspadmin\""), "participants[0].role");
  expectInvalid(replaced(kMinimal, "role = \"user\"", "role = \"king\""), "participants[0].role");
  expectInvalid(replaced(kMinimal, "name = \"mini\"", "name = \"mini\"\ncolour = \"red\""),
                "network.colour");
  expectInvalid(replaced(kMinimal, "name = \"mini\"", "name = \"mini\"\nclock = \"sundial\""),
                "network.clock");
  expectInvalid(kMinimal + "[orderer]\nmaxMessagesPerBlock = \"ten\"\n",
                "orderer.maxMessagesPerBlock");
  expectInvalid(kMinimal + "[orderer]\nmaxMessagesPerBlock = 0\n", "orderer.maxMessagesPerBlock");
  expectInvalid(replaced(kMinimal, "id = \"alice\"", "id = \"peer0.lab\""), "participants[0].id");
  expectInvalid(kMinimal + "[[storages]]\nstorageID = \"disk2\"\norgID = \"lab\"\nrootPath = \"files\"\n",
                "storages[1].rootPath");
  expectInvalid(kMinimal + "[[storages]]\nstorageID = \"disk\"\norgID = \"lab\"\nrootPath = \"o\"\n",
                "storages[1].storageID");
  expectInvalid(kMinimal + "[unknown]\nx = 1\n", "unknown");
}

TEST(Config, ChannelStoragesMustBelongToMembers)
{
  auto const text = replaced(kMinimal, "[[channels]]", R"([[orgs]]
orgID = "hpc"
peers = ["peer0.hpc"]

[[storages]]
storageID = "tape"
orgID = "hpc"
rootPath = "tape"

[[channels]])");
  expectInvalid(replaced(text, "memberOrgs = [\"lab\"]", "memberOrgs = [\"lab\"]\nstorages = [\"tape\"]"),
                "channels[0].storages[0]");
}

TEST(Config, SyntaxErrorsCarryLineNumbers)
{
  try
  {
    parseNetworkConfig("[network]\nname = \"x\"\nname2 = \n", "/");
    ADD_FAILURE();
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_NE(e.detail().find("line 3"), std::string::npos) << e.detail();
  }
  expectErrc(Errc::ParseError, [] { parseNetworkConfig("[network\n", "/"); });
  expectErrc(Errc::ParseError, [] { parseNetworkConfig("[network]\nname = \"open\n", "/"); });
}

TEST(Config, LoadsRelativeToTheFile)
{
  TempDir dir;
  auto const path = dir.path() / "net.toml";
  std::ofstream{path} << kMinimal;
  auto const c = loadNetworkConfig(path);
  EXPECT_EQ(c.dataDir, dir.path() / "data");
  expectErrc(Errc::Io, [&] { loadNetworkConfig(dir.path() / "missing.toml"); });
}

}  // namespace
}  // namespace provhl::testing
