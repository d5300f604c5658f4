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

#include "provhl/config.hpp"
#include "provhl/gateway.hpp"
#include "provhl/identity.hpp"
#include "provhl/orderer.hpp"
#include "provhl/peer.hpp"
#include "provhl/storage.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace provhl {

/// Identity files: `<dir>/<participantID>.id` holding the secret key and the
/// MSP-issued credential, one hex line each.
class Keystore
{
public:
  explicit Keystore(std::filesystem::path dir);

  std::filesystem::path const &dir() const noexcept { return dir_; }
  void                         save(SigningIdentity const &who) const;
  std::optional<SigningIdentity> load(std::string const &participantID) const;
  bool                         contains(std::string const &participantID) const;

private:
  std::filesystem::path dir_;
};

/// Nonces from a per-identity counter: deterministic runs produce identical
/// transaction IDs.
NonceSource counterNonces(std::string const &label);

/// Cuts due blocks in-process. Under virtual time it jumps the clock to the
/// orderer's next deadline (or one batch timeout when nothing is pending).
class OrdererDriver final : public Driver
{
public:
  OrdererDriver(SoloOrderer &orderer, Clock &clock)
    : orderer_{orderer}
    , clock_{clock}
  {}
  void step() override;

private:
  SoloOrderer &orderer_;
  Clock       &clock_;
};

/// Remote clients only wait; the serving process cuts blocks.
class SleepDriver final : public Driver
{
public:
  explicit SleepDriver(Clock &clock, TimeMs interval = 10)
    : clock_{clock}
    , interval_{interval}
  {}
  void step() override { clock_.sleepFor(interval_); }

private:
  Clock &clock_;
  TimeMs interval_;
};

/// A whole network in one process: MSP, solo orderer, peers, storages and
/// their DMS adapters, wired through in-process endpoints.
///
/// With a dataDir every component persists and a later up() with the same
/// configuration resumes from disk.
class Network
{
public:
  static std::unique_ptr<Network> up(NetworkConfig config);
  ~Network();

  Network(Network const &)            = delete;
  Network &operator=(Network const &) = delete;

  NetworkConfig const &config() const noexcept { return config_; }
  Clock               &clock() noexcept { return *clock_; }
  VirtualClock        *virtualClock() noexcept;
  Msp                 &msp() noexcept { return *msp_; }
  SoloOrderer         &orderer() noexcept { return *orderer_; }
  Driver              &driver() noexcept { return *driver_; }
  Keystore const      &keystore() const noexcept { return *keystore_; }

  Peer                &peer(std::string const &peerID);
  std::vector<Peer *>  peers();
  Dms                 &dms(std::string const &storageID);
  std::vector<Dms *>   dmsAdapters();
  StorageBackend      &backend(std::string const &storageID);

  SigningIdentity const &admin() const noexcept { return admin_; }
  /// Identity from the keystore. Throws Error(NotFound).
  SigningIdentity        identity(std::string const &participantID) const;
  /// Registers (or re-registers after revocation is not allowed) a member
  /// through the bootstrap administrator and stores its keys.
  SigningIdentity        registerParticipant(std::string const &participantID,
                                             std::string const &orgID, Role role);

  /// Creates a channel from a specification; the caller must be an MspAdmin.
  Block createChannel(SigningIdentity const &caller, ChannelSpec const &spec);

  std::map<std::string, std::shared_ptr<Endpoint>> peerEndpoints();
  std::shared_ptr<Endpoint>                        ordererEndpoint();
  std::map<std::string, std::shared_ptr<Endpoint>> dmsEndpoints();

  /// A gateway acting for `who`; deterministic nonces when the network is seeded.
  std::unique_ptr<Gateway> gateway(SigningIdentity const &who);

  /// Drains every DMS queue and cuts pending blocks until nothing moves.
  void        settle();
  std::size_t pumpDms();

  std::vector<std::string> channelIDs() const;

private:
  explicit Network(NetworkConfig config);

  void        boot();
  void        bootMsp();
  void        bootChannels();
  void        bootStorages();
  KeyPair     keyFor(std::string const &participantID) const;
  Participant ensureRegistered(std::string const &participantID, std::string const &orgID,
                               Role role);
  ChannelConfig channelConfig(ChannelSpec const &spec) const;
  void        joinPeers(Block const &genesis);
  std::filesystem::path dir(std::string const &sub) const;

  NetworkConfig                                          config_;
  std::unique_ptr<Clock>                                 clock_;
  std::unique_ptr<Keystore>                              keystore_;
  std::unique_ptr<Msp>                                   msp_;
  SigningIdentity                                        admin_;
  std::unique_ptr<SoloOrderer>                           orderer_;
  std::unique_ptr<Driver>                                driver_;
  std::map<std::string, std::unique_ptr<Peer>>           peers_;
  std::map<std::string, std::unique_ptr<StorageBackend>> backends_;
  std::map<std::string, std::unique_ptr<Gateway>>        dmsGateways_;
  std::map<std::string, std::unique_ptr<Dms>>            dms_;
  std::vector<std::string>                               channels_;
  std::filesystem::path                                  scratch_;  // in-memory runs
};

/// Result of a storage-affecting request: the request transaction and, once
/// the DMS has answered, its linked response.
struct WorkflowOutcome
{
  SubmitResult                  request;
  std::optional<SubmitResult>   response;
  std::optional<ServerResponse> detail;

  bool done() const noexcept
  {
    return request.valid() && response && response->valid() && detail &&
           detail->outcome == ResponseOutcome::Done;
  }
};

/// End-user operations over a gateway: the two-phase workflow as one call.
class Client
{
public:
  /// `settle` makes progress while waiting for a DMS response: a local
  /// network's settle(), or a short sleep against a served network.
  Client(Gateway &gateway, std::map<std::string, std::shared_ptr<Endpoint>> dms,
         std::function<void()> settle, Clock &clock, TimeMs responseTimeout = 30'000);

  Gateway &gateway() noexcept { return gateway_; }
  std::string const &id() const noexcept { return gateway_.identity().id(); }

  /// Stages the content with the target DMS, then records the request.
  WorkflowOutcome upload(std::string const &channelID, UploadRequest request, ByteView content);
  WorkflowOutcome download(std::string const &channelID, std::string const &fileID,
                           Bytes *content = nullptr);
  WorkflowOutcome copy(std::string const &channelID, CopyRequest request);
  WorkflowOutcome transfer(std::string const &channelID, TransferRequest request);
  WorkflowOutcome remove(std::string const &channelID, std::string const &fileID);
  SubmitResult    grant(std::string const &channelID, GrantRequest request);
  SubmitResult    revoke(std::string const &channelID, std::string const &ruleID);

  /// Signed fetch of a confirmed download's content.
  Bytes fetch(std::string const &channelID, std::string const &storageID,
              std::string const &requestTxID);

  WorkflowOutcome awaitResponse(std::string const &channelID, SubmitResult const &request);
  std::optional<FileAsset> asset(std::string const &channelID, std::string const &fileID);

private:
  WorkflowOutcome run(std::string const &channelID, TxType type, TxPayload payload);
  std::shared_ptr<Endpoint> dmsFor(std::string const &storageID) const;

  Gateway                                         &gateway_;
  std::map<std::string, std::shared_ptr<Endpoint>> dms_;
  std::function<void()>                            settle_;
  Clock                                           &clock_;
  TimeMs                                           timeout_;
};

}  // namespace provhl
