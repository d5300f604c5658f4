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

#include "provhl/asset.hpp"
#include "provhl/identity.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

// Access-rights rules. One rule per line:
//
//   rule <id>: <allow|deny> <principal> <op[,op...]> on <resource>
//
//   principal  user:<participantID> | org:<orgID> | role:<Role> | any
//   resource   asset:<fileID> | ownedBy:<participantID> | storage:<storageID> | any
//
// '#' starts a comment. Evaluation is first-match-wins with deny by default;
// the owner of an asset is allowed unless an explicit deny rule matches them.

namespace provhl::acl {

enum class Operation : std::uint8_t
{
  Upload,
  Download,
  CopyWithin,
  Delete,
  CopyToStorage,
  TransferToStorage,
  Grant,
  Revoke,
};
inline constexpr std::uint8_t kOperationCount = 8;

std::string_view         operationName(Operation op) noexcept;
std::optional<Operation> parseOperation(std::string_view text) noexcept;

class OperationSet
{
public:
  OperationSet() = default;
  OperationSet(std::initializer_list<Operation> ops)
  {
    for (auto op : ops)
    {
      insert(op);
    }
  }

  void insert(Operation op) noexcept { bits_ |= bit(op); }
  bool contains(Operation op) const noexcept { return (bits_ & bit(op)) != 0; }
  bool empty() const noexcept { return bits_ == 0; }

  std::uint16_t raw() const noexcept { return bits_; }
  static OperationSet fromRaw(std::uint16_t bits);  // throws Malformed on unknown bits

  std::vector<Operation> list() const;

  bool operator==(OperationSet const &) const = default;

private:
  static constexpr std::uint16_t bit(Operation op) noexcept
  {
    return static_cast<std::uint16_t>(1u << static_cast<unsigned>(op));
  }

  std::uint16_t bits_{0};
};

struct AnyPrincipal
{
  bool operator==(AnyPrincipal const &) const = default;
};
struct ParticipantPrincipal
{
  std::string participantID;
  bool        operator==(ParticipantPrincipal const &) const = default;
};
struct OrgPrincipal
{
  std::string orgID;
  bool        operator==(OrgPrincipal const &) const = default;
};
struct RolePrincipal
{
  Role role{Role::User};
  bool operator==(RolePrincipal const &) const = default;
};
using Principal = std::variant<ParticipantPrincipal, OrgPrincipal, RolePrincipal, AnyPrincipal>;

struct AnyResource
{
  bool operator==(AnyResource const &) const = default;
};
struct AssetResource
{
  std::string fileID;
  bool        operator==(AssetResource const &) const = default;
};
struct OwnedByResource
{
  std::string participantID;
  bool        operator==(OwnedByResource const &) const = default;
};
struct StorageResource
{
  std::string storageID;
  bool        operator==(StorageResource const &) const = default;
};
using ResourceSelector = std::variant<AssetResource, OwnedByResource, StorageResource, AnyResource>;

enum class Effect : std::uint8_t
{
  Allow,
  Deny,
};

struct AclRule
{
  std::string      ruleID;
  Principal        principal{AnyPrincipal{}};
  OperationSet     operations;
  ResourceSelector resource{AnyResource{}};
  Effect           effect{Effect::Deny};
  std::string      grantorID;

  bool operator==(AclRule const &) const = default;
};

struct Decision
{
  Effect                     outcome{Effect::Deny};
  std::optional<std::string> matchedRuleID;
  std::string                reason;

  bool allowed() const noexcept { return outcome == Effect::Allow; }
};

void encode(codec::Writer &w, AclRule const &rule);
void decode(codec::Reader &r, AclRule &rule);

/// Parses an acl-file; throws Error(ParseError) naming the line and token.
std::vector<AclRule> parseRules(std::string_view text);

/// Renders a rule back into acl-file syntax (the grantor is not part of it).
std::string formatRule(AclRule const &rule);

bool principalMatches(Principal const &principal, Participant const &who) noexcept;

/// The asset is absent only for asset-creating operations; resources are then
/// matched against targetStorageID (storage:<id> and any can match).
bool resourceMatches(ResourceSelector const &resource, FileAsset const *asset,
                     std::string_view targetStorageID) noexcept;

Decision evaluate(Participant const &who, Operation op, FileAsset const *asset,
                  std::vector<AclRule> const &rules, std::string_view targetStorageID = {});

using StateKV = std::pair<std::string, Bytes>;

std::string ruleKeyPrefix(std::string_view channelID);
std::string ruleKey(std::string_view channelID, std::string_view ruleID);

/// Rule order is preserved through a sequence number stored in each value,
/// starting at firstSequence.
std::vector<StateKV> rulesToStateEntries(std::string_view channelID,
                                         std::vector<AclRule> const &rules,
                                         std::uint64_t firstSequence = 0);

/// Throws Error(Malformed) for truncated values or keys that do not match the
/// rule they hold.
std::vector<AclRule> stateEntriesToRules(std::string_view channelID,
                                         std::vector<StateKV> const &entries);

/// Value of one rule entry; exposed for the chaincode.
Bytes ruleEntryValue(AclRule const &rule, std::uint64_t sequence);
std::pair<std::uint64_t, AclRule> decodeRuleEntry(ByteView value);

}  // namespace provhl::acl
