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

#include "provhl/chaincode.hpp"
#include "provhl/crypto.hpp"

#include <algorithm>
#include <fstream>

namespace fs = std::filesystem;

namespace provhl::testing {

TempDir::TempDir()
{
  Bytes tag(6);
  randomBytes(tag);
  path_ = fs::temp_directory_path() / ("provhl-test-" + toHex(tag));
  fs::create_directories(path_);
}

TempDir::~TempDir()
{
  std::error_code ec;
  fs::remove_all(path_, ec);
}

NetworkConfig twoOrgConfig(fs::path const &root, NetworkShape const &shape)
{
  NetworkConfig c;
  c.name                = "fixture";
  c.dataDir             = shape.persistent ? root / "data" : fs::path{};
  c.virtualTime         = true;
  c.seed                = shape.seed;
  c.syncWrites          = false;
  c.maxMessagesPerBlock = shape.maxMessagesPerBlock;
  c.mspRootKey          = root / "msp-root.key";
  c.adminOrg            = "org1";
  for (std::string org : {"org1", "org2"})
  {
    OrgConfig o{org, {}};
    for (unsigned i = 0; i < shape.peersPerOrg; ++i)
    {
      o.peers.push_back("peer" + std::to_string(i) + "." + org);
    }
    c.orgs.push_back(o);
  }
  c.storages.push_back(StorageConfig{"A", "org1", root / "storageA", "dms-A", std::nullopt});
  c.storages.push_back(StorageConfig{"B", "org2", root / "storageB", "dms-B", std::nullopt});
  {
    std::ofstream out{root / "ch.acl"};
    out << shape.acl;
  }
  c.channels.push_back(ChannelSpec{"ch1", {"org1", "org2"}, shape.policy, root / "ch.acl", {}});
  if (shape.secondChannel)
  {
    c.channels.push_back(ChannelSpec{"ch2", {"org1"}, shape.policy, root / "ch.acl", {"A"}});
  }
  c.participants = {
      {"alice", "org1", Role::User},
      {"carol", "org1", Role::User},
      {"bob", "org2", Role::User},
      {"sup1", "org1", Role::Supervisor},
  };
  return c;
}

Harness::Harness(NetworkShape shape)
  : shape_{std::move(shape)}
{
  net_ = Network::up(twoOrgConfig(dir_.path(), shape_));
}

void Harness::down()
{
  clients_.clear();
  gateways_.clear();
  net_.reset();
}

void Harness::restart()
{
  clients_.clear();
  gateways_.clear();
  net_.reset();
  net_ = Network::up(twoOrgConfig(dir_.path(), shape_));
}

Client &Harness::as(std::string const &participantID)
{
  auto it = clients_.find(participantID);
  if (it != clients_.end())
  {
    return *it->second;
  }
  auto &gw = gateways_[participantID];
  gw       = net_->gateway(net_->identity(participantID));
  auto c   = std::make_unique<Client>(*gw, net_->dmsEndpoints(), [this] { net_->settle(); },
                                      net_->clock());
  return *clients_.emplace(participantID, std::move(c)).first->second;
}

UploadRequest uploadOf(std::string const &fileID, std::string const &storageID)
{
  UploadRequest r;
  r.fileID    = fileID;
  r.storageID = storageID;
  r.fileName  = fileID + ".dat";
  r.assetType = AssetType::Primary;
  r.source    = FacilitySource{"beamline-7"};
  return r;
}

GrantRequest grantOf(std::string const &fileID, std::string const &ruleID,
                     std::string const &participantID, acl::OperationSet ops)
{
  GrantRequest g;
  g.fileID          = fileID;
  g.rule.ruleID     = ruleID;
  g.rule.principal  = acl::ParticipantPrincipal{participantID};
  g.rule.operations = ops;
  g.rule.resource   = acl::AssetResource{fileID};
  g.rule.effect     = acl::Effect::Allow;
  return g;
}

std::vector<FileAsset> confirmedAssets(Peer const &peer, std::string const &channelID)
{
  std::vector<FileAsset> out;
  auto const             state = peer.ledger(channelID).snapshot();
  for (auto const &e : state->range(chaincode::assetKeyPrefix(channelID)))
  {
    auto a = codec::deserialize<FileAsset>(e.value);
    if (!a.temporary)
    {
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::vector<CommittedTx> committedTransactions(ChannelLedger const &ledger)
{
  std::vector<CommittedTx> out;
  for (std::uint64_t n = 0; n < ledger.height(); ++n)
  {
    auto const b = ledger.block(n);
    for (std::size_t i = 0; i < b.envelopes.size(); ++i)
    {
      out.push_back({b.envelopes[i], b.validity.at(i), n});
    }
  }
  return out;
}

Workload::Workload(Harness &harness, std::vector<std::string> channels, std::uint64_t seed)
  : h_{harness}
  , channels_{std::move(channels)}
  , rng_{seed}
{}

std::string Workload::pick(std::vector<std::string> const &from)
{
  return from.at(std::uniform_int_distribution<std::size_t>{0, from.size() - 1}(rng_));
}

std::string Workload::freshFileID()
{
  return "w" + std::to_string(nextFile_++);
}

std::size_t Workload::committed()
{
  auto       &peer  = *h_.net().peers().front();
  std::size_t total = 0;
  for (auto const &ch : channels_)
  {
    auto &[height, count] = scanned_[ch];
    auto const &ledger    = peer.ledger(ch);
    for (; height < ledger.height(); ++height)
    {
      if (height > 0)
      {
        count += ledger.block(height).envelopes.size();
      }
    }
    total += count;
  }
  return total;
}

void Workload::runUntil(std::size_t n)
{
  while (committed() < n)
  {
    step();
  }
}

void Workload::race(std::string const &channelID, FileAsset const &asset)
{
  auto &gw = h_.as(asset.ownerID).gateway();
  std::vector<TransactionEnvelope> envs;
  for (int i = 0; i < 2; ++i)
  {
    PmdTransaction tx;
    tx.txType      = TxType::Delete;
    tx.payload     = FileRequest{asset.fileID};
    tx.requesterID = asset.ownerID;
    envs.push_back(gw.endorse(gw.prepare(channelID, tx)));
  }
  for (auto const &e : envs)
  {
    gw.broadcast(e);
  }
  for (auto const &e : envs)
  {
    gw.awaitCommit(channelID, e.txID);
  }
  h_.net().settle();
}

void Workload::step()
{
  ++steps_;
  auto const channelID = pick(channels_);
  auto      &net       = h_.net();
  auto      &peer      = *net.peers().front();
  auto const config    = peer.config(channelID);

  std::vector<std::string> users;
  for (auto const &p : net.config().participants)
  {
    if (p.role == Role::User &&
        std::find(config.memberOrgIDs.begin(), config.memberOrgIDs.end(), p.orgID) !=
            config.memberOrgIDs.end())
    {
      users.push_back(p.participantID);
    }
  }
  std::vector<std::string> storages;
  for (auto const &s : config.storages)
  {
    storages.push_back(s.storageID);
  }
  auto const assets = confirmedAssets(peer, channelID);
  auto const user   = pick(users);

  int roll = std::uniform_int_distribution<int>{0, 99}(rng_);
  if (assets.empty())
  {
    roll = 0;
  }
  FileAsset const *asset = assets.empty() ? nullptr : &assets.at(std::uniform_int_distribution<
                                                          std::size_t>{0, assets.size() - 1}(rng_));
  try
  {
    if (roll < 30)
    {
      Bytes content(std::uniform_int_distribution<std::size_t>{1, 200}(rng_));
      for (auto &b : content)
      {
        b = static_cast<std::uint8_t>(rng_());
      }
      h_.as(user).upload(channelID, uploadOf(freshFileID(), pick(storages)), content);
    }
    else if (roll < 55)
    {
      h_.as(user).download(channelID, asset->fileID);
    }
    else if (roll < 63)
    {
      h_.as(user).copy(channelID, CopyRequest{asset->fileID, freshFileID(), std::nullopt});
    }
    else if (roll < 69)
    {
      h_.as(user).copy(channelID, CopyRequest{asset->fileID, freshFileID(), pick(storages)});
    }
    else if (roll < 74)
    {
      h_.as(asset->ownerID).transfer(channelID, TransferRequest{asset->fileID, pick(storages)});
    }
    else if (roll < 80)
    {
      h_.as(pick({asset->ownerID, user})).remove(channelID, asset->fileID);
    }
    else if (roll < 88)
    {
      auto const ruleID = "r" + std::to_string(steps_);
      auto const r      = h_.as(asset->ownerID)
                         .grant(channelID, grantOf(asset->fileID, ruleID, user,
                                                   {acl::Operation::Download}));
      if (r.valid())
      {
        grants_.push_back({channelID, ruleID, asset->ownerID});
      }
    }
    else if (roll < 92 && !grants_.empty())
    {
      auto const i = std::uniform_int_distribution<std::size_t>{0, grants_.size() - 1}(rng_);
      auto const g = grants_[i];
      grants_.erase(grants_.begin() + static_cast<std::ptrdiff_t>(i));
      h_.as(g.grantorID).revoke(g.channelID, g.ruleID);
    }
    else if (roll < 97)
    {
      race(channelID, *asset);
    }
    else
    {
      auto const storageID = pick(storages);
      net.backend(storageID).failNext(Errc::Io, 1);
      h_.as(user).upload(channelID, uploadOf(freshFileID(), storageID), toBytes("doomed"));
    }
  }
  catch (Error const &)
  {
    ++rejected_;
  }
}

}  // namespace provhl::testing
