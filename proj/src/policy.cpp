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

#include "provhl/policy.hpp"

#include "provhl/error.hpp"
#include "provhl/identity.hpp"

#include <cctype>

namespace provhl {

struct EndorsementPolicy::Node
{
  enum class Kind
  {
    And,
    Or,
    Org,
    StorageOrg,
    RequesterOrg,
  };

  Kind                              kind{Kind::Org};
  std::string                       org;
  std::vector<std::shared_ptr<Node>> children;
};

namespace {

using Node = EndorsementPolicy::Node;

class Parser
{
public:
  explicit Parser(std::string_view text)
    : text_{text}
  {}

  std::shared_ptr<Node> parseAll()
  {
    auto node = parseExpr();
    skipSpace();
    if (pos_ != text_.size())
    {
      fail("trailing input");
    }
    return node;
  }

private:
  [[noreturn]] void fail(std::string const &what) const
  {
    throw Error(Errc::ParseError, "policy: " + what + " at offset " + std::to_string(pos_));
  }

  void skipSpace()
  {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
    {
      ++pos_;
    }
  }

  std::string word()
  {
    skipSpace();
    auto const start = pos_;
    while (pos_ < text_.size())
    {
      char const c = text_[pos_];
      if (c == '(' || c == ')' || c == ',' || std::isspace(static_cast<unsigned char>(c)))
      {
        break;
      }
      ++pos_;
    }
    return std::string{text_.substr(start, pos_ - start)};
  }

  bool consume(char c)
  {
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == c)
    {
      ++pos_;
      return true;
    }
    return false;
  }

  std::shared_ptr<Node> parseExpr()
  {
    auto const token = word();
    if (token.empty())
    {
      fail("expected expression");
    }
    auto node = std::make_shared<Node>();
    if (token == "AND" || token == "OR")
    {
      node->kind = token == "AND" ? Node::Kind::And : Node::Kind::Or;
      if (!consume('('))
      {
        fail("expected '(' after " + token);
      }
      do
      {
        node->children.push_back(parseExpr());
      } while (consume(','));
      if (!consume(')'))
      {
        fail("expected ')'");
      }
      return node;
    }
    if (token == "$storageOrg")
    {
      node->kind = Node::Kind::StorageOrg;
    }
    else if (token == "$requesterOrg")
    {
      node->kind = Node::Kind::RequesterOrg;
    }
    else if (isValidId(token))
    {
      node->kind = Node::Kind::Org;
      node->org  = token;
    }
    else
    {
      fail("bad organisation '" + token + "'");
    }
    return node;
  }

  std::string_view text_;
  std::size_t      pos_{0};
};

std::string leafOrg(Node const &n, PolicyContext const &ctx)
{
  switch (n.kind)
  {
  case Node::Kind::StorageOrg: return ctx.storageOrg.empty() ? ctx.requesterOrg : ctx.storageOrg;
  case Node::Kind::RequesterOrg: return ctx.requesterOrg;
  default: return n.org;
  }
}

bool satisfied(Node const &n, std::set<std::string> const &orgs, PolicyContext const &ctx)
{
  switch (n.kind)
  {
  case Node::Kind::And:
    for (auto const &c : n.children)
    {
      if (!satisfied(*c, orgs, ctx))
      {
        return false;
      }
    }
    return true;
  case Node::Kind::Or:
    for (auto const &c : n.children)
    {
      if (satisfied(*c, orgs, ctx))
      {
        return true;
      }
    }
    return false;
  default:
  {
    auto const org = leafOrg(n, ctx);
    return !org.empty() && orgs.count(org) != 0;
  }
  }
}

std::optional<std::set<std::string>> choose(Node const &n, std::set<std::string> const &avail,
                                            PolicyContext const &ctx)
{
  switch (n.kind)
  {
  case Node::Kind::And:
  {
    std::set<std::string> all;
    for (auto const &c : n.children)
    {
      auto part = choose(*c, avail, ctx);
      if (!part)
      {
        return std::nullopt;
      }
      all.insert(part->begin(), part->end());
    }
    return all;
  }
  case Node::Kind::Or:
  {
    std::optional<std::set<std::string>> best;
    for (auto const &c : n.children)
    {
      auto part = choose(*c, avail, ctx);
      if (part && (!best || part->size() < best->size()))
      {
        best = std::move(part);
      }
    }
    return best;
  }
  default:
  {
    auto const org = leafOrg(n, ctx);
    if (org.empty() || avail.count(org) == 0)
    {
      return std::nullopt;
    }
    return std::set<std::string>{org};
  }
  }
}

void collect(Node const &n, std::set<std::string> &out)
{
  if (n.kind == Node::Kind::Org)
  {
    out.insert(n.org);
  }
  for (auto const &c : n.children)
  {
    collect(*c, out);
  }
}

std::string render(Node const &n)
{
  switch (n.kind)
  {
  case Node::Kind::And:
  case Node::Kind::Or:
  {
    std::string s = n.kind == Node::Kind::And ? "AND(" : "OR(";
    for (std::size_t i = 0; i < n.children.size(); ++i)
    {
      s += (i == 0 ? "" : ", ") + render(*n.children[i]);
    }
    return s + ")";
  }
  case Node::Kind::StorageOrg: return "$storageOrg";
  case Node::Kind::RequesterOrg: return "$requesterOrg";
  default: return n.org;
  }
}

}  // namespace

EndorsementPolicy::EndorsementPolicy()
  : root_{Parser{kDefault}.parseAll()}
{}

EndorsementPolicy EndorsementPolicy::parse(std::string_view text)
{
  EndorsementPolicy p;
  p.root_ = Parser{text}.parseAll();
  return p;
}

bool EndorsementPolicy::satisfiedBy(std::set<std::string> const &endorsingOrgs,
                                    PolicyContext const &ctx) const
{
  return satisfied(*root_, endorsingOrgs, ctx);
}

std::optional<std::set<std::string>> EndorsementPolicy::chooseOrgs(
    std::set<std::string> const &available, PolicyContext const &ctx) const
{
  return choose(*root_, available, ctx);
}

std::set<std::string> EndorsementPolicy::namedOrgs() const
{
  std::set<std::string> out;
  collect(*root_, out);
  return out;
}

std::string EndorsementPolicy::toString() const
{
  return render(*root_);
}

}  // namespace provhl
