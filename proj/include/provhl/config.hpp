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

#include "provhl/identity.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace provhl {

namespace toml {

using Value = std::variant<std::string, std::int64_t, bool, std::vector<std::string>>;

struct Table
{
  std::string                  path;  // "orderer", "storages[1]"
  std::map<std::string, Value> values;
};

/// Subset of TOML: [table], [[array-of-tables]], key = "string" | integer |
/// true/false | ["string", ...], and # comments.
struct Document
{
  Table                                     root;
  std::map<std::string, Table>              tables;
  std::map<std::string, std::vector<Table>> arrays;
};

Document parse(std::string_view text);  // throws Error(ParseError) with line numbers

}  // namespace toml

struct OrgConfig
{
  std::string              orgID;
  std::vector<std::string> peers;
};

struct StorageConfig
{
  std::string                  storageID;
  std::string                  orgID;
  std::filesystem::path        rootPath;
  std::string                  dmsID;
  std::optional<std::uint64_t> capacityBytes;
};

struct ChannelSpec
{
  std::string              channelID;
  std::vector<std::string> memberOrgs;
  std::string              policy;
  std::filesystem::path    aclFile;   // empty: no bootstrap rules
  std::vector<std::string> storages;  // empty: every storage of a member org
};

struct ParticipantConfig
{
  std::string participantID;
  std::string orgID;
  Role        role{Role::User};
};

struct NetworkConfig
{
  std::string           name{"provhl"};
  std::filesystem::path dataDir;  // empty: keep ledgers in memory
  bool                  virtualTime{false};
  std::string           seed;     // non-empty: deterministic keys and nonces
  bool                  syncWrites{true};

  std::uint32_t maxMessagesPerBlock{10};
  std::uint64_t batchTimeoutMs{250};
  std::uint64_t reconcileMaxAgeMs{60'000};

  std::filesystem::path mspRootKey;  // empty: <dataDir>/msp/root.key
  std::string           adminID{"admin"};
  std::string           adminOrg;

  std::vector<OrgConfig>         orgs;
  std::vector<StorageConfig>     storages;
  std::vector<ChannelSpec>       channels;
  std::vector<ParticipantConfig> participants;

  OrgConfig const     *findOrg(std::string_view orgID) const noexcept;
  StorageConfig const *findStorage(std::string_view storageID) const noexcept;
};

/// Relative paths resolve against baseDir. Throws Error(ConfigInvalid) naming
/// the offending field, or Error(ParseError).
NetworkConfig parseNetworkConfig(std::string_view text, std::filesystem::path const &baseDir);
NetworkConfig loadNetworkConfig(std::filesystem::path const &path);

/// Checks cross references; called by both functions above.
void validate(NetworkConfig const &config);

}  // namespace provhl
