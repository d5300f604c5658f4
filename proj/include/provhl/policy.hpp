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

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace provhl {

/// Values substituted for the placeholders of a policy expression.
struct PolicyContext
{
  std::string storageOrg;    // "$storageOrg"
  std::string requesterOrg;  // "$requesterOrg"
};

/// AND/OR tree over organisations. A leaf is satisfied by one endorsement
/// from a peer of that organisation.
///
///   expr := AND(expr, ...) | OR(expr, ...) | orgID | $storageOrg | $requesterOrg
class EndorsementPolicy
{
public:
  static constexpr std::string_view kDefault = "AND($storageOrg, $requesterOrg)";

  EndorsementPolicy();

  /// Throws Error(ParseError).
  static EndorsementPolicy parse(std::string_view text);

  bool satisfiedBy(std::set<std::string> const &endorsingOrgs, PolicyContext const &ctx) const;

  /// Smallest-first choice of organisations to ask, restricted to `available`.
  /// Empty when no subset of `available` satisfies the policy.
  std::optional<std::set<std::string>> chooseOrgs(std::set<std::string> const &available,
                                                  PolicyContext const &ctx) const;

  /// Organisations named literally in the expression.
  std::set<std::string> namedOrgs() const;

  std::string toString() const;

  struct Node;

private:
  std::shared_ptr<Node const> root_;
};

}  // namespace provhl
