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

#include "provhl/network.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <vector>
#include <string>

namespace provhl::testing {

class TempDir
{
public:
  TempDir();
  ~TempDir();
  TempDir(TempDir const &)            = delete;
  TempDir &operator=(TempDir const &) = delete;

  std::filesystem::path const &path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
};

struct NetworkShape
{
  unsigned    peersPerOrg{2};
  std::string acl{"rule up: allow any upload on any\n"};
  std::string policy;
  bool        persistent{false};
  std::string seed{"fixture"};
  unsigned    maxMessagesPerBlock{10};
  bool        secondChannel{false};  // ch2 shares storage A with ch1
};

/// Two organisations (org1, org2), storages A (org1) and B (org2), channel
/// ch1 over both, users alice and carol (org1) and bob (org2), supervisor
/// sup1 (org1). Virtual time.
NetworkConfig twoOrgConfig(std::filesystem::path const &root, NetworkShape const &shape = {});

class Harness
{
public:
  explicit Harness(NetworkShape shape = {});

  Network &net() { return *net_; }
  Client  &as(std::string const &participantID);
  void     restart();
  /// Stops the network; as() and net() are unusable until restart().
  void     down();

  std::filesystem::path const &root() const { return dir_.path(); }

private:
  TempDir                                         dir_;
  NetworkShape                                    shape_;
  std::unique_ptr<Network>                        net_;
  std::map<std::string, std::unique_ptr<Gateway>> gateways_;
  std::map<std::string, std::unique_ptr<Client>>  clients_;
};

/// Runs `f` and checks it throws Error with `code`.
template <class F>
void expectErrc(Errc code, F &&f)
{
  try
  {
    f();
    ADD_FAILURE() << "expected " << errcName(code) << ", nothing thrown";
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

UploadRequest uploadOf(std::string const &fileID, std::string const &storageID);

/// Grant of `ops` on one asset to one participant.
GrantRequest grantOf(std::string const &fileID, std::string const &ruleID,
                     std::string const &participantID, acl::OperationSet ops);

/// Non-temporary assets of a channel as seen by one peer.
std::vector<FileAsset> confirmedAssets(Peer const &peer, std::string const &channelID);

/// Every committed envelope of a channel (genesis included) with its flag.
struct CommittedTx
{
  TransactionEnvelope envelope;
  ValidationCode      validity;
  std::uint64_t       blockNumber;
};
std::vector<CommittedTx> committedTransactions(ChannelLedger const &ledger);

/// Random mix of every operation, with denials, conflicting submissions and
/// storage faults, over the users of twoOrgConfig.
class Workload
{
public:
  Workload(Harness &harness, std::vector<std::string> channels, std::uint64_t seed);

  void step();
  /// Steps until at least `n` transactions beyond genesis are committed.
  void runUntil(std::size_t n);
  std::size_t committed();

  std::size_t rejected() const noexcept { return rejected_; }
  std::size_t steps() const noexcept { return steps_; }

private:
  struct GrantMade
  {
    std::string channelID;
    std::string ruleID;
    std::string grantorID;
  };

  std::string pick(std::vector<std::string> const &from);
  std::string freshFileID();
  void        race(std::string const &channelID, FileAsset const &asset);

  Harness                      &h_;
  std::vector<std::string>      channels_;
  std::mt19937_64               rng_;
  std::vector<GrantMade>        grants_;
  std::map<std::string, std::pair<std::uint64_t, std::size_t>> scanned_;
  std::size_t                   nextFile_{0};
  std::size_t                   rejected_{0};
  std::size_t                   steps_{0};
};

}  // namespace provhl::testing
