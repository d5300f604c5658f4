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

#include "provhl/acl.hpp"

#include "provhl/error.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace provhl::acl {
namespace {

std::string lowercase(std::string_view s)
{
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void parseFail(std::size_t line, std::string_view token, std::string_view what)
{
  throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + std::string{what} +
                                    " at token '" + std::string{token} + "'");
}

Principal parsePrincipal(std::string_view tok, std::size_t line)
{
  if (tok == "any")
  {
    return AnyPrincipal{};
  }
  auto const colon = tok.find(':');
  if (colon == std::string_view::npos)
  {
    parseFail(line, tok, "expected principal");
  }
  auto const kind  = tok.substr(0, colon);
  auto const value = tok.substr(colon + 1);
  if (kind == "role")
  {
    auto const role = parseRole(value);
    if (!role)
    {
      parseFail(line, tok, "unknown role");
    }
    return RolePrincipal{*role};
  }
  if (!isValidId(value))
  {
    parseFail(line, tok, "invalid identifier");
  }
  if (kind == "user")
  {
    return ParticipantPrincipal{std::string{value}};
  }
  if (kind == "org")
  {
    return OrgPrincipal{std::string{value}};
  }
  parseFail(line, tok, "expected principal");
}

ResourceSelector parseResource(std::string_view tok, std::size_t line)
{
  if (tok == "any")
  {
    return AnyResource{};
  }
  auto const colon = tok.find(':');
  if (colon == std::string_view::npos)
  {
    parseFail(line, tok, "expected resource");
  }
  auto const kind  = tok.substr(0, colon);
  auto const value = std::string{tok.substr(colon + 1)};
  if (!isValidId(value))
  {
    parseFail(line, tok, "invalid identifier");
  }
  if (kind == "asset")
  {
    return AssetResource{value};
  }
  if (kind == "ownedBy")
  {
    return OwnedByResource{value};
  }
  if (kind == "storage")
  {
    return StorageResource{value};
  }
  parseFail(line, tok, "expected resource");
}

OperationSet parseOperations(std::string_view tok, std::size_t line)
{
  OperationSet ops;
  std::size_t  start = 0;
  while (start <= tok.size())
  {
    auto end = tok.find(',', start);
    if (end == std::string_view::npos)
    {
      end = tok.size();
    }
    auto const name = tok.substr(start, end - start);
    if (name == "all" || name == "*")
    {
      for (std::uint8_t i = 0; i < kOperationCount; ++i)
      {
        ops.insert(static_cast<Operation>(i));
      }
    }
    else
    {
      auto const op = parseOperation(name);
      if (!op)
      {
        parseFail(line, name.empty() ? tok : name, "unknown operation");
      }
      ops.insert(*op);
    }
    start = end + 1;
  }
  return ops;
}

}  // namespace

std::string_view operationName(Operation op) noexcept
{
  switch (op)
  {
  case Operation::Upload: return "upload";
  case Operation::Download: return "download";
  case Operation::CopyWithin: return "copyWithin";
  case Operation::Delete: return "delete";
  case Operation::CopyToStorage: return "copyToStorage";
  case Operation::TransferToStorage: return "transferToStorage";
  case Operation::Grant: return "grant";
  case Operation::Revoke: return "revoke";
  }
  return "?";
}

std::optional<Operation> parseOperation(std::string_view text) noexcept
{
  auto const needle = lowercase(text);
  for (std::uint8_t i = 0; i < kOperationCount; ++i)
  {
    auto const op = static_cast<Operation>(i);
    if (lowercase(operationName(op)) == needle)
    {
      return op;
    }
  }
  if (needle == "copy")
  {
    return Operation::CopyWithin;
  }
  if (needle == "transfer")
  {
    return Operation::TransferToStorage;
  }
  return std::nullopt;
}

OperationSet OperationSet::fromRaw(std::uint16_t bits)
{
  if (bits >> kOperationCount != 0)
  {
    throw Error(Errc::Malformed, "unknown operation bits");
  }
  OperationSet s;
  s.bits_ = bits;
  return s;
}

std::vector<Operation> OperationSet::list() const
{
  std::vector<Operation> out;
  for (std::uint8_t i = 0; i < kOperationCount; ++i)
  {
    if (contains(static_cast<Operation>(i)))
    {
      out.push_back(static_cast<Operation>(i));
    }
  }
  return out;
}

void encode(codec::Writer &w, AclRule const &rule)
{
  w.str(rule.ruleID);
  w.u8(static_cast<std::uint8_t>(rule.principal.index()));
  std::visit(
      [&w](auto const &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ParticipantPrincipal>) w.str(p.participantID);
        else if constexpr (std::is_same_v<T, OrgPrincipal>) w.str(p.orgID);
        else if constexpr (std::is_same_v<T, RolePrincipal>) provhl::encode(w, p.role);
      },
      rule.principal);
  w.u32(rule.operations.raw());
  w.u8(static_cast<std::uint8_t>(rule.resource.index()));
  std::visit(
      [&w](auto const &res) {
        using T = std::decay_t<decltype(res)>;
        if constexpr (std::is_same_v<T, AssetResource>) w.str(res.fileID);
        else if constexpr (std::is_same_v<T, OwnedByResource>) w.str(res.participantID);
        else if constexpr (std::is_same_v<T, StorageResource>) w.str(res.storageID);
      },
      rule.resource);
  w.u8(static_cast<std::uint8_t>(rule.effect));
  w.str(rule.grantorID);
}

void decode(codec::Reader &r, AclRule &rule)
{
  rule.ruleID = r.str();
  switch (r.u8())
  {
  case 0: rule.principal = ParticipantPrincipal{r.str()}; break;
  case 1: rule.principal = OrgPrincipal{r.str()}; break;
  case 2:
  {
    RolePrincipal p;
    provhl::decode(r, p.role);
    rule.principal = p;
    break;
  }
  case 3: rule.principal = AnyPrincipal{}; break;
  default: throw Error(Errc::Malformed, "unknown principal tag");
  }
  auto const bits = r.u32();
  if (bits > 0xffff)
  {
    throw Error(Errc::Malformed, "operation set out of range");
  }
  rule.operations = OperationSet::fromRaw(static_cast<std::uint16_t>(bits));
  if (rule.operations.empty())
  {
    throw Error(Errc::Malformed, "empty operation set");
  }
  switch (r.u8())
  {
  case 0: rule.resource = AssetResource{r.str()}; break;
  case 1: rule.resource = OwnedByResource{r.str()}; break;
  case 2: rule.resource = StorageResource{r.str()}; break;
  case 3: rule.resource = AnyResource{}; break;
  default: throw Error(Errc::Malformed, "unknown resource tag");
  }
  rule.effect    = r.enumeration<Effect>(2);
  rule.grantorID = r.str();
}

std::vector<AclRule> parseRules(std::string_view text)
{
  std::vector<AclRule> rules;
  std::istringstream   in{std::string{text}};
  std::string          raw;
  std::size_t          lineNo = 0;
  while (std::getline(in, raw))
  {
    ++lineNo;
    if (auto const hash = raw.find('#'); hash != std::string::npos)
    {
      raw.erase(hash);
    }
    std::istringstream       words{raw};
    std::vector<std::string> tok;
    for (std::string w; words >> w;)
    {
      tok.push_back(w);
    }
    if (tok.empty())
    {
      continue;
    }
    if (tok[0] != "rule")
    {
      parseFail(lineNo, tok[0], "expected 'rule'");
    }
    if (tok.size() < 2)
    {
      parseFail(lineNo, tok[0], "missing rule id");
    }
    // "<id>:" or "<id> :"
    std::string id = tok[1];
    std::size_t next;
    if (id.size() > 1 && id.back() == ':')
    {
      id.pop_back();
      next = 2;
    }
    else if (tok.size() > 2 && tok[2] == ":")
    {
      next = 3;
    }
    else
    {
      parseFail(lineNo, tok[1], "expected ':' after rule id");
    }
    if (!isValidId(id))
    {
      parseFail(lineNo, tok[1], "invalid rule id");
    }
    if (tok.size() != next + 5)
    {
      parseFail(lineNo, tok.back(), "expected '<effect> <principal> <ops> on <resource>'");
    }
    AclRule rule;
    rule.ruleID           = id;
    auto const effectWord = lowercase(tok[next]);
    if (effectWord == "allow")
    {
      rule.effect = Effect::Allow;
    }
    else if (effectWord == "deny")
    {
      rule.effect = Effect::Deny;
    }
    else
    {
      parseFail(lineNo, tok[next], "expected allow or deny");
    }
    rule.principal  = parsePrincipal(tok[next + 1], lineNo);
    rule.operations = parseOperations(tok[next + 2], lineNo);
    if (tok[next + 3] != "on")
    {
      parseFail(lineNo, tok[next + 3], "expected 'on'");
    }
    rule.resource = parseResource(tok[next + 4], lineNo);
    auto const dup = std::find_if(rules.begin(), rules.end(),
                                  [&](AclRule const &r) { return r.ruleID == rule.ruleID; });
    if (dup != rules.end())
    {
      parseFail(lineNo, tok[1], "duplicate rule id");
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::string formatRule(AclRule const &rule)
{
  std::string out = "rule " + rule.ruleID + ": ";
  out += rule.effect == Effect::Allow ? "allow " : "deny ";
  out += std::visit(
      [](auto const &p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ParticipantPrincipal>) return "user:" + p.participantID;
        else if constexpr (std::is_same_v<T, OrgPrincipal>) return "org:" + p.orgID;
        else if constexpr (std::is_same_v<T, RolePrincipal>)
          return "role:" + std::string{roleName(p.role)};
        else return "any";
      },
      rule.principal);
  out += ' ';
  bool first = true;
  for (auto op : rule.operations.list())
  {
    if (!first)
    {
      out += ',';
    }
    out += operationName(op);
    first = false;
  }
  out += " on ";
  out += std::visit(
      [](auto const &res) -> std::string {
        using T = std::decay_t<decltype(res)>;
        if constexpr (std::is_same_v<T, AssetResource>) return "asset:" + res.fileID;
        else if constexpr (std::is_same_v<T, OwnedByResource>) return "ownedBy:" + res.participantID;
        else if constexpr (std::is_same_v<T, StorageResource>) return "storage:" + res.storageID;
        else return "any";
      },
      rule.resource);
  return out;
}

bool principalMatches(Principal const &principal, Participant const &who) noexcept
{
  return std::visit(
      [&who](auto const &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ParticipantPrincipal>) return p.participantID == who.participantID;
        else if constexpr (std::is_same_v<T, OrgPrincipal>) return p.orgID == who.orgID;
        else if constexpr (std::is_same_v<T, RolePrincipal>) return p.role == who.role;
        else return true;
      },
      principal);
}

bool resourceMatches(ResourceSelector const &resource, FileAsset const *asset,
                     std::string_view targetStorageID) noexcept
{
  return std::visit(
      [&](auto const &res) {
        using T = std::decay_t<decltype(res)>;
        if constexpr (std::is_same_v<T, AssetResource>) return asset && asset->fileID == res.fileID;
        else if constexpr (std::is_same_v<T, OwnedByResource>)
          return asset && asset->ownerID == res.participantID;
        else if constexpr (std::is_same_v<T, StorageResource>)
          return asset ? asset->storageID == res.storageID : targetStorageID == res.storageID;
        else return true;
      },
      resource);
}

Decision evaluate(Participant const &who, Operation op, FileAsset const *asset,
                  std::vector<AclRule> const &rules, std::string_view targetStorageID)
{
  auto matches = [&](AclRule const &rule) {
    return rule.operations.contains(op) && principalMatches(rule.principal, who) &&
           resourceMatches(rule.resource, asset, targetStorageID);
  };

  if (asset && asset->ownerID == who.participantID)
  {
    for (auto const &rule : rules)
    {
      if (rule.effect == Effect::Deny && matches(rule))
      {
        return Decision{Effect::Deny, rule.ruleID, "explicit deny for owner"};
      }
    }
    return Decision{Effect::Allow, std::nullopt, "owner"};
  }

  for (auto const &rule : rules)
  {
    if (matches(rule))
    {
      return Decision{rule.effect, rule.ruleID,
                      rule.effect == Effect::Allow ? "rule allows" : "rule denies"};
    }
  }
  return Decision{Effect::Deny, std::nullopt, "deny-by-default"};
}

std::string ruleKeyPrefix(std::string_view channelID)
{
  return "acl/" + std::string{channelID} + "/";
}

std::string ruleKey(std::string_view channelID, std::string_view ruleID)
{
  return ruleKeyPrefix(channelID) + std::string{ruleID};
}

Bytes ruleEntryValue(AclRule const &rule, std::uint64_t sequence)
{
  codec::Writer w;
  w.u64(sequence);
  encode(w, rule);
  return w.take();
}

std::pair<std::uint64_t, AclRule> decodeRuleEntry(ByteView value)
{
  codec::Reader r{value};
  auto const    seq = r.u64();
  AclRule       rule;
  decode(r, rule);
  r.expectEnd();
  return {seq, std::move(rule)};
}

std::vector<StateKV> rulesToStateEntries(std::string_view channelID,
                                         std::vector<AclRule> const &rules,
                                         std::uint64_t firstSequence)
{
  std::vector<StateKV> out;
  out.reserve(rules.size());
  auto seq = firstSequence;
  for (auto const &rule : rules)
  {
    out.emplace_back(ruleKey(channelID, rule.ruleID), ruleEntryValue(rule, seq++));
  }
  return out;
}

std::vector<AclRule> stateEntriesToRules(std::string_view channelID,
                                         std::vector<StateKV> const &entries)
{
  std::vector<std::pair<std::uint64_t, AclRule>> ordered;
  ordered.reserve(entries.size());
  for (auto const &[key, value] : entries)
  {
    auto entry = decodeRuleEntry(value);
    if (key != ruleKey(channelID, entry.second.ruleID))
    {
      throw Error(Errc::Malformed, "rule entry key does not match rule id: " + key);
    }
    ordered.push_back(std::move(entry));
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](auto const &a, auto const &b) {
    return a.first != b.first ? a.first < b.first : a.second.ruleID < b.second.ruleID;
  });
  std::vector<AclRule> rules;
  rules.reserve(ordered.size());
  for (auto &e : ordered)
  {
    rules.push_back(std::move(e.second));
  }
  return rules;
}

}  // namespace provhl::acl
