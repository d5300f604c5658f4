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

#include "provhl/config.hpp"

#include "provhl/error.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace provhl {

namespace toml {

namespace {

class LineParser
{
public:
  LineParser(std::string_view line, std::size_t number)
    : s_{line}
    , line_{number}
  {}

  [[noreturn]] void fail(std::string const &what) const
  {
    throw Error(Errc::ParseError, "line " + std::to_string(line_) + ": " + what);
  }

  void skipSpace()
  {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t'))
    {
      ++pos_;
    }
  }

  bool atEnd()
  {
    skipSpace();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  bool consume(char c)
  {
    skipSpace();
    if (pos_ < s_.size() && s_[pos_] == c)
    {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string key()
  {
    skipSpace();
    auto const start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
            s_[pos_] == '-' || s_[pos_] == '.'))
    {
      ++pos_;
    }
    if (start == pos_)
    {
      fail("expected a key");
    }
    return std::string{s_.substr(start, pos_ - start)};
  }

  std::string string()
  {
    if (!consume('"'))
    {
      fail("expected a string");
    }
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"')
    {
      char c = s_[pos_++];
      if (c == '\\')
      {
        if (pos_ >= s_.size())
        {
          fail("unterminated escape");
        }
        char const e = s_[pos_++];
        switch (e)
        {
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        case '"': c = '"'; break;
        case '\\': c = '\\'; break;
        default: fail(std::string{"unsupported escape \\"} + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size())
    {
      fail("unterminated string");
    }
    ++pos_;
    return out;
  }

  Value value()
  {
    skipSpace();
    if (pos_ >= s_.size())
    {
      fail("expected a value");
    }
    char const c = s_[pos_];
    if (c == '"')
    {
      return string();
    }
    if (c == '[')
    {
      ++pos_;
      std::vector<std::string> items;
      if (consume(']'))
      {
        return items;
      }
      do
      {
        if (consume(']'))
        {
          return items;  // trailing comma
        }
        items.push_back(string());
      } while (consume(','));
      if (!consume(']'))
      {
        fail("expected ']'");
      }
      return items;
    }
    auto const start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '#')
    {
      ++pos_;
    }
    auto const word = std::string{s_.substr(start, pos_ - start)};
    if (word == "true" || word == "false")
    {
      return word == "true";
    }
    std::string digits;
    for (char d : word)
    {
      if (d != '_')
      {
        digits.push_back(d);
      }
    }
    std::size_t used = 0;
    try
    {
      auto const v = std::stoll(digits, &used);
      if (used == digits.size() && !digits.empty())
      {
        return static_cast<std::int64_t>(v);
      }
    }
    catch (std::exception const &)
    {
    }
    fail("unsupported value '" + word + "'");
  }

private:
  std::string_view s_;
  std::size_t      line_;
  std::size_t      pos_{0};
};

}  // namespace

Document parse(std::string_view text)
{
  Document    doc;
  Table      *current = &doc.root;
  std::size_t number  = 0;
  std::size_t start   = 0;
  while (start <= text.size())
  {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos)
    {
      end = text.size();
    }
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r')
    {
      line.remove_suffix(1);
    }
    start = end + 1;
    ++number;

    LineParser p{line, number};
    if (p.atEnd())
    {
      continue;
    }
    if (p.consume('['))
    {
      bool const array = p.consume('[');
      auto const name  = p.key();
      if (!p.consume(']') || (array && !p.consume(']')) || !p.atEnd())
      {
        p.fail("malformed table header");
      }
      if (array)
      {
        auto &list = doc.arrays[name];
        list.push_back(Table{name + "[" + std::to_string(list.size()) + "]", {}});
        current = &list.back();
      }
      else
      {
        if (doc.tables.count(name) != 0)
        {
          p.fail("table [" + name + "] defined twice");
        }
        current = &doc.tables.emplace(name, Table{name, {}}).first->second;
      }
      continue;
    }
    auto const key = p.key();
    if (!p.consume('='))
    {
      p.fail("expected '=' after " + key);
    }
    auto value = p.value();
    if (!p.atEnd())
    {
      p.fail("trailing characters after value of " + key);
    }
    if (!current->values.emplace(key, std::move(value)).second)
    {
      p.fail("duplicate key " + key);
    }
  }
  return doc;
}

}  // namespace toml

namespace {

[[noreturn]] void invalid(std::string const &field, std::string const &what)
{
  throw Error(Errc::ConfigInvalid, field + ": " + what);
}

class Fields
{
public:
  explicit Fields(toml::Table const &t)
    : t_{t}
  {}

  std::string field(std::string const &key) const
  {
    return t_.path.empty() ? key : t_.path + "." + key;
  }

  template <typename T>
  std::optional<T> get(std::string const &key, char const *typeName) const
  {
    auto const it = t_.values.find(key);
    used_.insert(key);
    if (it == t_.values.end())
    {
      return std::nullopt;
    }
    if (auto const *v = std::get_if<T>(&it->second))
    {
      return *v;
    }
    invalid(field(key), std::string{"expected "} + typeName);
  }

  std::optional<std::string> str(std::string const &key) const
  {
    return get<std::string>(key, "a string");
  }
  std::string requiredStr(std::string const &key) const
  {
    auto v = str(key);
    if (!v || v->empty())
    {
      invalid(field(key), "required");
    }
    return *v;
  }
  std::optional<std::int64_t> integer(std::string const &key) const
  {
    auto v = get<std::int64_t>(key, "an integer");
    if (v && *v < 0)
    {
      invalid(field(key), "must not be negative");
    }
    return v;
  }
  std::optional<bool> boolean(std::string const &key) const
  {
    return get<bool>(key, "a boolean");
  }
  std::vector<std::string> list(std::string const &key) const
  {
    return get<std::vector<std::string>>(key, "an array of strings").value_or(std::vector<std::string>{});
  }

  void rejectUnknown() const
  {
    for (auto const &[k, v] : t_.values)
    {
      if (used_.count(k) == 0)
      {
        invalid(field(k), "unknown key");
      }
    }
  }

private:
  toml::Table const              &t_;
  mutable std::set<std::string>   used_;
};

std::filesystem::path resolve(std::filesystem::path const &base, std::string const &p)
{
  if (p.empty())
  {
    return {};
  }
  std::filesystem::path const path{p};
  return path.is_absolute() ? path : base / path;
}

void requireId(std::string const &field, std::string const &id)
{
  if (!isValidId(id))
  {
    invalid(field, "invalid identifier '" + id + "'");
  }
}

}  // namespace

OrgConfig const *NetworkConfig::findOrg(std::string_view orgID) const noexcept
{
  for (auto const &o : orgs)
  {
    if (o.orgID == orgID)
    {
      return &o;
    }
  }
  return nullptr;
}

StorageConfig const *NetworkConfig::findStorage(std::string_view storageID) const noexcept
{
  for (auto const &s : storages)
  {
    if (s.storageID == storageID)
    {
      return &s;
    }
  }
  return nullptr;
}

NetworkConfig parseNetworkConfig(std::string_view text, std::filesystem::path const &baseDir)
{
  auto const    doc = toml::parse(text);
  NetworkConfig c;

  if (!doc.root.values.empty())
  {
    invalid(doc.root.values.begin()->first, "keys must live inside a table");
  }
  std::set<std::string> const knownTables{"network", "orderer", "msp"};
  std::set<std::string> const knownArrays{"orgs", "storages", "channels", "participants"};
  for (auto const &[name, t] : doc.tables)
  {
    if (knownTables.count(name) == 0)
    {
      invalid(name, "unknown table");
    }
  }
  for (auto const &[name, t] : doc.arrays)
  {
    if (knownArrays.count(name) == 0)
    {
      invalid(name, "unknown table array");
    }
  }
  auto table = [&](std::string const &name) -> toml::Table {
    auto const it = doc.tables.find(name);
    return it == doc.tables.end() ? toml::Table{name, {}} : it->second;
  };
  auto array = [&](std::string const &name) -> std::vector<toml::Table> {
    auto const it = doc.arrays.find(name);
    return it == doc.arrays.end() ? std::vector<toml::Table>{} : it->second;
  };

  {
    auto const t = table("network");
    Fields     f{t};
    c.name        = f.str("name").value_or(c.name);
    c.dataDir     = resolve(baseDir, f.str("dataDir").value_or(""));
    auto const clk = f.str("clock").value_or("wall");
    if (clk != "wall" && clk != "virtual")
    {
      invalid(f.field("clock"), "expected \"wall\" or \"virtual\"");
    }
    c.virtualTime       = clk == "virtual";
    c.seed              = f.str("seed").value_or("");
    c.syncWrites        = f.boolean("syncWrites").value_or(true);
    c.reconcileMaxAgeMs = f.integer("reconcileMaxAgeMs").value_or(c.reconcileMaxAgeMs);
    f.rejectUnknown();
  }
  {
    auto const t = table("orderer");
    Fields     f{t};
    c.maxMessagesPerBlock =
        static_cast<std::uint32_t>(f.integer("maxMessagesPerBlock").value_or(10));
    c.batchTimeoutMs = f.integer("batchTimeoutMs").value_or(250);
    if (c.maxMessagesPerBlock == 0)
    {
      invalid(f.field("maxMessagesPerBlock"), "must be positive");
    }
    f.rejectUnknown();
  }
  {
    auto const t = table("msp");
    Fields     f{t};
    c.mspRootKey = resolve(baseDir, f.str("rootKey").value_or(""));
    c.adminID    = f.str("admin").value_or(c.adminID);
    c.adminOrg   = f.str("adminOrg").value_or("");
    f.rejectUnknown();
  }
  for (auto const &t : array("orgs"))
  {
    Fields    f{t};
    OrgConfig o;
    o.orgID = f.requiredStr("orgID");
    o.peers = f.list("peers");
    f.rejectUnknown();
    c.orgs.push_back(std::move(o));
  }
  for (auto const &t : array("storages"))
  {
    Fields        f{t};
    StorageConfig s;
    s.storageID = f.requiredStr("storageID");
    s.orgID     = f.requiredStr("orgID");
    s.rootPath  = resolve(baseDir, f.requiredStr("rootPath"));
    s.dmsID     = f.str("dmsID").value_or("dms-" + s.storageID);
    if (auto const cap = f.integer("capacityBytes"); cap && *cap > 0)
    {
      s.capacityBytes = static_cast<std::uint64_t>(*cap);
    }
    f.rejectUnknown();
    c.storages.push_back(std::move(s));
  }
  for (auto const &t : array("channels"))
  {
    Fields      f{t};
    ChannelSpec ch;
    ch.channelID  = f.requiredStr("channelID");
    ch.memberOrgs = f.list("memberOrgs");
    ch.policy     = f.str("policy").value_or("");
    ch.aclFile    = resolve(baseDir, f.str("aclFile").value_or(""));
    ch.storages   = f.list("storages");
    f.rejectUnknown();
    c.channels.push_back(std::move(ch));
  }
  for (auto const &t : array("participants"))
  {
    Fields            f{t};
    ParticipantConfig p;
    p.participantID = f.requiredStr("id");
    p.orgID         = f.requiredStr("orgID");
    auto const role = parseRole(f.str("role").value_or("user"));
    if (!role)
    {
      invalid(f.field("role"), "unknown role");
    }
    p.role = *role;
    f.rejectUnknown();
    c.participants.push_back(std::move(p));
  }
  if (c.adminOrg.empty() && !c.orgs.empty())
  {
    c.adminOrg = c.orgs.front().orgID;
  }
  validate(c);
  return c;
}

NetworkConfig loadNetworkConfig(std::filesystem::path const &path)
{
  std::ifstream in{path};
  if (!in)
  {
    throw Error(Errc::Io, "cannot read " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parseNetworkConfig(ss.str(), path.parent_path());
}

void validate(NetworkConfig const &c)
{
  if (c.orgs.empty())
  {
    invalid("orgs", "at least one organisation is required");
  }
  if (c.storages.empty())
  {
    invalid("storages", "at least one storage is required");
  }
  std::set<std::string> ids;  // participants share one namespace
  auto claim = [&](std::string const &field, std::string const &id) {
    requireId(field, id);
    if (!ids.insert(id).second)
    {
      invalid(field, "identifier '" + id + "' is used twice");
    }
  };
  claim("msp.admin", c.adminID);
  std::size_t peerCount = 0;
  std::set<std::string> orgIDs;
  for (std::size_t i = 0; i < c.orgs.size(); ++i)
  {
    auto const field = "orgs[" + std::to_string(i) + "]";
    requireId(field + ".orgID", c.orgs[i].orgID);
    if (!orgIDs.insert(c.orgs[i].orgID).second)
    {
      invalid(field + ".orgID", "organisation declared twice");
    }
    for (std::size_t k = 0; k < c.orgs[i].peers.size(); ++k)
    {
      claim(field + ".peers[" + std::to_string(k) + "]", c.orgs[i].peers[k]);
      ++peerCount;
    }
  }
  if (peerCount == 0)
  {
    invalid("orgs", "at least one peer is required");
  }
  if (orgIDs.count(c.adminOrg) == 0)
  {
    invalid("msp.adminOrg", "undeclared organisation '" + c.adminOrg + "'");
  }
  std::set<std::string> storageIDs;
  for (std::size_t i = 0; i < c.storages.size(); ++i)
  {
    auto const  field = "storages[" + std::to_string(i) + "]";
    auto const &s     = c.storages[i];
    requireId(field + ".storageID", s.storageID);
    if (!storageIDs.insert(s.storageID).second)
    {
      invalid(field + ".storageID", "storage declared twice");
    }
    if (orgIDs.count(s.orgID) == 0)
    {
      invalid(field + ".orgID", "undeclared organisation '" + s.orgID + "'");
    }
    claim(field + ".dmsID", s.dmsID);
    for (std::size_t k = 0; k < i; ++k)
    {
      if (c.storages[k].rootPath == s.rootPath)
      {
        invalid(field + ".rootPath", "shared with storages[" + std::to_string(k) + "]");
      }
    }
  }
  std::set<std::string> channelIDs;
  for (std::size_t i = 0; i < c.channels.size(); ++i)
  {
    auto const  field = "channels[" + std::to_string(i) + "]";
    auto const &ch    = c.channels[i];
    requireId(field + ".channelID", ch.channelID);
    if (!channelIDs.insert(ch.channelID).second)
    {
      invalid(field + ".channelID", "channel declared twice");
    }
    if (ch.memberOrgs.empty())
    {
      invalid(field + ".memberOrgs", "at least one member organisation is required");
    }
    for (std::size_t k = 0; k < ch.memberOrgs.size(); ++k)
    {
      if (orgIDs.count(ch.memberOrgs[k]) == 0)
      {
        invalid(field + ".memberOrgs[" + std::to_string(k) + "]",
                "undeclared organisation '" + ch.memberOrgs[k] + "'");
      }
    }
    for (std::size_t k = 0; k < ch.storages.size(); ++k)
    {
      auto const *s = c.findStorage(ch.storages[k]);
      if (s == nullptr)
      {
        invalid(field + ".storages[" + std::to_string(k) + "]",
                "undeclared storage '" + ch.storages[k] + "'");
      }
      if (std::find(ch.memberOrgs.begin(), ch.memberOrgs.end(), s->orgID) == ch.memberOrgs.end())
      {
        invalid(field + ".storages[" + std::to_string(k) + "]",
                "storage '" + s->storageID + "' belongs to a non-member organisation");
      }
    }
  }
  for (std::size_t i = 0; i < c.participants.size(); ++i)
  {
    auto const field = "participants[" + std::to_string(i) + "]";
    claim(field + ".id", c.participants[i].participantID);
    if (orgIDs.count(c.participants[i].orgID) == 0)
    {
      invalid(field + ".orgID", "undeclared organisation '" + c.participants[i].orgID + "'");
    }
    if (c.participants[i].role == Role::MspAdmin)
    {
      invalid(field + ".role", "administrators are registered through [msp]");
    }
  }
}

}  // namespace provhl
