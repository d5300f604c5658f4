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

#include "provhl/policy.hpp"

#include <gtest/gtest.h>

namespace provhl::testing {
namespace {

TEST(Policy, DefaultNeedsStorageAndRequesterOrgs)
{
  EndorsementPolicy const p;
  PolicyContext const     ctx{"org1", "org2"};
  EXPECT_EQ(p.toString(), EndorsementPolicy::kDefault);
  EXPECT_TRUE(p.satisfiedBy({"org1", "org2"}, ctx));
  EXPECT_FALSE(p.satisfiedBy({"org1"}, ctx));
  EXPECT_FALSE(p.satisfiedBy({"org2"}, ctx));
  EXPECT_TRUE(p.satisfiedBy({"org1"}, PolicyContext{"org1", "org1"}));
}

TEST(Policy, NestedExpressions)
{
  auto const p = EndorsementPolicy::parse("OR(AND(org1, org2), org3)");
  PolicyContext const ctx;
  EXPECT_TRUE(p.satisfiedBy({"org3"}, ctx));
  EXPECT_TRUE(p.satisfiedBy({"org1", "org2"}, ctx));
  EXPECT_FALSE(p.satisfiedBy({"org1"}, ctx));
  EXPECT_EQ(p.namedOrgs(), (std::set<std::string>{"org1", "org2", "org3"}));
  EXPECT_EQ(EndorsementPolicy::parse(p.toString()).toString(), p.toString());
}

TEST(Policy, ChoosesSmallestSatisfyingSet)
{
  auto const p = EndorsementPolicy::parse("OR(AND(org1, org2), org3)");
  EXPECT_EQ(p.chooseOrgs({"org1", "org2", "org3"}, {}), (std::set<std::string>{"org3"}));
  EXPECT_EQ(p.chooseOrgs({"org1", "org2"}, {}), (std::set<std::string>{"org1", "org2"}));
  EXPECT_FALSE(p.chooseOrgs({"org1"}, {}));
}

TEST(Policy, RejectsBadSyntax)
{
  for (auto const *text : {"", "AND(", "AND(org1,)", "XOR(org1, org2)", "org1 org2", "$nobody",
                           "AND(org1, org2))"})
  {
    expectErrc(Errc::ParseError, [&] { EndorsementPolicy::parse(text); });
  }
}

}  // namespace
}  // namespace provhl::testing
