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

#include "provhl/network.hpp"

#include "provhl/chaincode.hpp"
#include "provhl/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace provhl {

namespace {

std::string readText(fs::path const &path)
{
  std::ifstream in{path, std::ios::binary};
  if (!in)
  {
    throw Error(Errc::Io, "cannot read " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writePrivate(fs::path const &path, std::string const &text)
{
  fs::create_directories(path.parent_path());
  auto const tmp = path.string() + ".tmp";
  {
    std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
    out << text;
    if (!out)
    {
      throw Error(Errc::Io, "cannot write " + path.string());
    }
  }
  fs::permissions(tmp, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
  fs::rename(tmp, path);
}

std::string trim(std::string s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
  {
    s.pop_back();
  }
  return s;
}

}  // namespace

Keystore::Keystore(fs::path dir)
  : dir_{std::move(dir)}
{
  fs::create_directories(dir_);
}

void Keystore::save(SigningIdentity const &who) const
{
  writePrivate(dir_ / (who.id() + ".id"),
               who.keys.secretHex() + "\n" + toHex(codec::serialize(who.credential)) + "\n");
}

std::optional<SigningIdentity> Keystore::load(std::string const &participantID) const
{
  if (!isValidId(participantID) || !contains(participantID))
  {
    return std::nullopt;
  }
  std::istringstream in{readText(dir_ / (participantID + ".id"))};
  std::string        secret, credential;
  if (!std::getline(in, secret) || !std::getline(in, credential))
  {
    throw Error(Errc::Malformed, "identity file of " + participantID + " is truncated");
  }
  SigningIdentity who;
  who.keys       = KeyPair::fromSecretHex(trim(secret));
  who.credential = codec::deserialize<Credential>(fromHex(trim(credential)));
  if (who.credential.participant.publicKey != who.keys.publicKey())
  {
    throw Error(Errc::Malformed, "identity file of " + participantID + " holds mismatched keys");
  }
  return who;
}

bool Keystore::contains(std::string const &participantID) const
{
  return fs::exists(dir_ / (participantID + ".id"));
}

NonceSource counterNonces(std::string const &label)
{
  auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
  return [label, counter] {
    auto  n     = counter->fetch_add(1) + 1;
    Bytes nonce = toBytes(label);
    for (int i = 7; i >= 0; --i)
    {
      nonce.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    }
    return nonce;
  };
}

void OrdererDriver::step()
{
  if (auto const deadline = orderer_.nextDeadline())
  {
    clock_.sleepUntil(*deadline);
    orderer_.tick();
    return;
  }
  clock_.sleepFor(clock_.isVirtual() ? orderer_.config().batchTimeoutMs
                                     : std::min<TimeMs>(orderer_.config().batchTimeoutMs, 10));
}

Network::Network(NetworkConfig config)
  : config_{std::move(config)}
{
  if (config_.virtualTime)
  {
    clock_ = std::make_unique<VirtualClock>();
  }
  else
  {
    clock_ = std::make_unique<SystemClock>();
  }
  if (config_.dataDir.empty())
  {
    Bytes tag(8);
    randomBytes(tag);
    scratch_ = fs::temp_directory_path() / ("provhl-" + toHex(tag));
    fs::create_directories(scratch_);
  }
}

Network::~Network()
{
  dms_.clear();
  dmsGateways_.clear();
  peers_.clear();
  orderer_.reset();
  if (!scratch_.empty())
  {
    std::error_code ec;
    fs::remove_all(scratch_, ec);
  }
}

std::unique_ptr<Network> Network::up(NetworkConfig config)
{
  validate(config);
  std::unique_ptr<Network> net{new Network(std::move(config))};
  net->boot();
  return net;
}

fs::path Network::dir(std::string const &sub) const
{
  return (config_.dataDir.empty() ? scratch_ : config_.dataDir) / sub;
}

VirtualClock *Network::virtualClock() noexcept
{
  return dynamic_cast<VirtualClock *>(clock_.get());
}

KeyPair Network::keyFor(std::string const &participantID) const
{
  if (!config_.seed.empty())
  {
    return KeyPair::fromSeedText(config_.seed + "/" + participantID);
  }
  return KeyPair::generate();
}

void Network::boot()
{
  keystore_ = std::make_unique<Keystore>(dir("keystore"));
  bootMsp();

  auto const ordererKeyFile = dir("orderer") / "orderer.key";
  KeyPair    ordererKey;
  if (fs::exists(ordererKeyFile))
  {
    ordererKey = KeyPair::fromSecretHex(trim(readText(ordererKeyFile)));
  }
  else
  {
    ordererKey = keyFor("orderer");
    writePrivate(ordererKeyFile, ordererKey.secretHex() + "\n");
  }
  orderer_ = std::make_unique<SoloOrderer>(
      "orderer", ordererKey, *clock_,
      OrdererConfig{config_.maxMessagesPerBlock, config_.batchTimeoutMs},
      config_.dataDir.empty() ? fs::path{} : dir("orderer"), config_.syncWrites);
  driver_ = std::make_unique<OrdererDriver>(*orderer_, *clock_);

  for (auto const &org : config_.orgs)
  {
    for (auto const &peerID : org.peers)
    {
      ensureRegistered(peerID, org.orgID, Role::User);
      peers_.emplace(peerID, std::make_unique<Peer>(
                                 identity(peerID), *msp_,
                                 config_.dataDir.empty() ? fs::path{} : dir("peers") / peerID,
                                 config_.syncWrites));
    }
  }
  for (auto const &p : config_.participants)
  {
    ensureRegistered(p.participantID, p.orgID, p.role);
  }
  bootStorages();
  bootChannels();
}

void Network::bootMsp()
{
  auto const rootFile = config_.mspRootKey.empty() ? dir("msp") / "root.key" : config_.mspRootKey;
  KeyPair    root;
  if (fs::exists(rootFile))
  {
    root = KeyPair::fromSecretHex(trim(readText(rootFile)));
  }
  else
  {
    root = keyFor("msp-root");
    writePrivate(rootFile, root.secretHex() + "\n");
  }
  msp_ = std::make_unique<Msp>(root, *clock_);

  fs::create_directories(dir("msp"));
  auto const registry = dir("msp") / "registry";
  if (fs::exists(registry))
  {
    msp_->loadFile(registry);
  }
  msp_->attachFile(registry);

  if (auto const rec = msp_->lookup(config_.adminID))
  {
    if (rec->credential.participant.role != Role::MspAdmin)
    {
      throw Error(Errc::ConfigInvalid, "msp.admin: " + config_.adminID + " is not an administrator");
    }
    auto const who = keystore_->load(config_.adminID);
    if (!who)
    {
      throw Error(Errc::ConfigInvalid, "msp.admin: keystore has no identity for " + config_.adminID);
    }
    admin_ = *who;
  }
  else
  {
    auto keys = keyFor(config_.adminID);
    admin_.credential =
        msp_->bootstrapAdmin(config_.adminID, config_.adminOrg, keys.publicKey());
    admin_.keys = keys;
    keystore_->save(admin_);
  }
}

Participant Network::ensureRegistered(std::string const &participantID, std::string const &orgID,
                                      Role role)
{
  if (auto const rec = msp_->lookup(participantID))
  {
    auto const &p = rec->credential.participant;
    if (p.orgID != orgID || p.role != role)
    {
      throw Error(Errc::ConfigInvalid, participantID + " is registered as " +
                                           std::string{roleName(p.role)} + " of " + p.orgID);
    }
    if (!keystore_->contains(participantID))
    {
      throw Error(Errc::ConfigInvalid, "keystore has no identity for " + participantID);
    }
    return p;
  }
  return registerParticipant(participantID, orgID, role).credential.participant;
}

SigningIdentity Network::registerParticipant(std::string const &participantID,
                                             std::string const &orgID, Role role)
{
  if (config_.findOrg(orgID) == nullptr)
  {
    throw Error(Errc::ConfigInvalid, "unknown organisation " + orgID);
  }
  SigningIdentity who;
  who.keys       = keyFor(participantID);
  who.credential = msp_->registerParticipant(admin_.credential, participantID, orgID, role,
                                             who.keys.publicKey());
  keystore_->save(who);
  return who;
}

SigningIdentity Network::identity(std::string const &participantID) const
{
  auto who = keystore_->load(participantID);
  if (!who)
  {
    throw Error(Errc::NotFound, "no identity for " + participantID);
  }
  return *who;
}

void Network::bootStorages()
{
  auto const peers   = peerEndpoints();
  auto const orderer = ordererEndpoint();
  for (auto const &s : config_.storages)
  {
    ensureRegistered(s.dmsID, s.orgID, Role::Dms);
    auto backend = std::make_unique<StorageBackend>(s.storageID, s.rootPath, s.capacityBytes);
    auto who     = identity(s.dmsID);
    auto gw      = std::make_unique<Gateway>(
        who, *clock_, peers, orderer, *driver_,
        config_.seed.empty() ? NonceSource{randomNonce}
                             : counterNonces(s.dmsID + "@" + std::to_string(clock_->now())));
    auto dms = std::make_unique<Dms>(who, StorageInfo{s.storageID, s.orgID, s.dmsID}, *backend,
                                     *msp_, *gw, *clock_, dir("dms") / s.storageID, Dms::Options{});
    backends_.emplace(s.storageID, std::move(backend));
    dmsGateways_.emplace(s.storageID, std::move(gw));
    dms_.emplace(s.storageID, std::move(dms));
  }
  for (auto &[id, dms] : dms_)
  {
    for (auto &[other, remote] : dms_)
    {
      if (other != id)
      {
        dms->addRemote(other, std::make_shared<InProcessEndpoint>(*remote));
      }
    }
  }
}

void Network::bootChannels()
{
  std::set<std::string> restored;
  if (!config_.dataDir.empty() && fs::exists(dir("orderer")))
  {
    std::vector<std::string> logs;
    for (auto const &entry : fs::directory_iterator{dir("orderer")})
    {
      if (entry.path().extension() == ".blocks")
      {
        logs.push_back(entry.path().stem().string());
      }
    }
    std::sort(logs.begin(), logs.end());
    for (auto const &channelID : logs)
    {
      orderer_->restoreChannel(channelID);
      joinPeers(orderer_->block(channelID, 0));
      restored.insert(channelID);
    }
  }
  for (auto const &spec : config_.channels)
  {
    if (restored.count(spec.channelID) == 0)
    {
      createChannel(admin_, spec);
    }
  }
  // resume logical time after everything already on the ledger
  if (auto *vc = virtualClock())
  {
    TimeMs latest = 0;
    for (auto const &channelID : channels_)
    {
      for (std::uint64_t n = 0; n < orderer_->height(channelID); ++n)
      {
        for (auto const &env : orderer_->block(channelID, n).envelopes)
        {
          latest = std::max(latest, env.proposal.timestamp);
        }
      }
    }
    vc->advanceTo(latest + 1);
  }
}

ChannelConfig Network::channelConfig(ChannelSpec const &spec) const
{
  ChannelConfig c;
  c.channelID    = spec.channelID;
  c.memberOrgIDs = spec.memberOrgs;
  c.policy       = spec.policy;
  if (!c.policy.empty())
  {
    EndorsementPolicy::parse(c.policy);
  }
  for (auto const &org : spec.memberOrgs)
  {
    auto const *o = config_.findOrg(org);
    if (o == nullptr)
    {
      throw Error(Errc::ConfigInvalid, "channel " + spec.channelID + " names unknown org " + org);
    }
    for (auto const &p : o->peers)
    {
      c.peers.push_back(PeerInfo{p, org});
    }
  }
  for (auto const &s : config_.storages)
  {
    bool const member = std::find(spec.memberOrgs.begin(), spec.memberOrgs.end(), s.orgID) !=
                        spec.memberOrgs.end();
    bool const listed = spec.storages.empty()
                            ? member
                            : std::find(spec.storages.begin(), spec.storages.end(),
                                        s.storageID) != spec.storages.end();
    if (listed)
    {
      c.storages.push_back(StorageInfo{s.storageID, s.orgID, s.dmsID});
    }
  }
  c.ordererPublicKey = orderer_->publicKey();
  c.mspRootPublicKey = msp_->rootPublicKey();
  if (!spec.aclFile.empty())
  {
    c.bootstrapRules = acl::parseRules(readText(spec.aclFile));
  }
  return c;
}

Block Network::createChannel(SigningIdentity const &caller, ChannelSpec const &spec)
{
  auto const who = msp_->authenticate(caller.credential);
  if (who.role != Role::MspAdmin)
  {
    throw Error(Errc::NotAuthorized, caller.id() + " may not create channels");
  }
  if (orderer_->hasChannel(spec.channelID))
  {
    throw Error(Errc::DuplicateChannel, spec.channelID);
  }
  auto const config = channelConfig(spec);

  Proposal p;
  p.tx.txType      = TxType::Config;
  p.tx.phase       = Phase::ClientRequest;
  p.tx.payload     = config;
  p.tx.requesterID = caller.id();
  p.channelID      = spec.channelID;
  p.timestamp      = clock_->now();
  p.nonce          = toBytes(spec.channelID);
  p.clientSignature = caller.sign(proposalSigningBytes(p));

  TransactionEnvelope env;
  env.txID     = computeTxID(p);
  env.proposal = p;
  env.rwset    = chaincode::genesisWrites(config);
  auto genesis = orderer_->createChannel(env);
  joinPeers(genesis);
  spdlog::info("channel {} created with {} peers and {} storages", spec.channelID,
               config.peers.size(), config.storages.size());
  return genesis;
}

void Network::joinPeers(Block const &genesis)
{
  auto const  config    = genesisConfig(genesis);
  auto const &channelID = config.channelID;
  for (auto const &info : config.peers)
  {
    auto const it = peers_.find(info.peerID);
    if (it == peers_.end())
    {
      spdlog::warn("channel {} lists peer {} which this network does not run", channelID,
                   info.peerID);
      continue;
    }
    auto &peer = *it->second;
    peer.joinChannel(genesis);
    for (auto n = peer.ledger(channelID).height(); n < orderer_->height(channelID); ++n)
    {
      peer.deliver(orderer_->block(channelID, n));
    }
    orderer_->addSink(channelID, [&peer](Block const &b) { peer.deliver(b); });
  }
  channels_.push_back(channelID);

  for (auto const &s : config.storages)
  {
    auto const d = dms_.find(s.storageID);
    if (d == dms_.end())
    {
      continue;
    }
    Peer *chosen = nullptr;
    for (auto const &info : config.peers)
    {
      auto const it = peers_.find(info.peerID);
      if (it != peers_.end() && (chosen == nullptr || (info.orgID == s.orgID &&
                                                        chosen->org() != s.orgID)))
      {
        chosen = it->second.get();
      }
    }
    if (chosen != nullptr)
    {
      d->second->attach(*chosen, channelID);
    }
  }
}

Peer &Network::peer(std::string const &peerID)
{
  auto const it = peers_.find(peerID);
  if (it == peers_.end())
  {
    throw Error(Errc::NotFound, "no peer " + peerID);
  }
  return *it->second;
}

std::vector<Peer *> Network::peers()
{
  std::vector<Peer *> out;
  for (auto &[id, p] : peers_)
  {
    out.push_back(p.get());
  }
  return out;
}

Dms &Network::dms(std::string const &storageID)
{
  auto const it = dms_.find(storageID);
  if (it == dms_.end())
  {
    throw Error(Errc::UnknownStorage, storageID);
  }
  return *it->second;
}

std::vector<Dms *> Network::dmsAdapters()
{
  std::vector<Dms *> out;
  for (auto &[id, d] : dms_)
  {
    out.push_back(d.get());
  }
  return out;
}

StorageBackend &Network::backend(std::string const &storageID)
{
  auto const it = backends_.find(storageID);
  if (it == backends_.end())
  {
    throw Error(Errc::UnknownStorage, storageID);
  }
  return *it->second;
}

std::map<std::string, std::shared_ptr<Endpoint>> Network::peerEndpoints()
{
  std::map<std::string, std::shared_ptr<Endpoint>> out;
  for (auto &[id, p] : peers_)
  {
    out.emplace(id, std::make_shared<InProcessEndpoint>(*p));
  }
  return out;
}

std::shared_ptr<Endpoint> Network::ordererEndpoint()
{
  return std::make_shared<InProcessEndpoint>(*orderer_);
}

std::map<std::string, std::shared_ptr<Endpoint>> Network::dmsEndpoints()
{
  std::map<std::string, std::shared_ptr<Endpoint>> out;
  for (auto &[id, d] : dms_)
  {
    out.emplace(id, std::make_shared<InProcessEndpoint>(*d));
  }
  return out;
}

std::unique_ptr<Gateway> Network::gateway(SigningIdentity const &who)
{
  return std::make_unique<Gateway>(
      who, *clock_, peerEndpoints(), ordererEndpoint(), *driver_,
      config_.seed.empty() ? NonceSource{randomNonce}
                           : counterNonces(who.id() + "@" + std::to_string(clock_->now())));
}

std::size_t Network::pumpDms()
{
  std::size_t n = 0;
  for (auto &[id, d] : dms_)
  {
    n += d->drain();
  }
  return n;
}

void Network::settle()
{
  for (;;)
  {
    auto moved = pumpDms();
    if (orderer_->nextDeadline())
    {
      driver_->step();
      ++moved;
    }
    if (moved == 0)
    {
      return;
    }
  }
}

std::vector<std::string> Network::channelIDs() const
{
  return channels_;
}

// --------------------------------------------------------------------------

Client::Client(Gateway &gateway, std::map<std::string, std::shared_ptr<Endpoint>> dms,
               std::function<void()> settle, Clock &clock, TimeMs responseTimeout)
  : gateway_{gateway}
  , dms_{std::move(dms)}
  , settle_{std::move(settle)}
  , clock_{clock}
  , timeout_{responseTimeout}
{}

std::shared_ptr<Endpoint> Client::dmsFor(std::string const &storageID) const
{
  auto const it = dms_.find(storageID);
  if (it == dms_.end())
  {
    throw Error(Errc::UnknownStorage, "no DMS endpoint for storage " + storageID);
  }
  return it->second;
}

WorkflowOutcome Client::awaitResponse(std::string const &channelID, SubmitResult const &request)
{
  WorkflowOutcome out;
  out.request = request;
  if (!request.valid())
  {
    return out;
  }
  auto const key      = chaincode::pendingKey(channelID, request.txID);
  auto const deadline = clock_.now() + timeout_;
  for (;;)
  {
    if (auto const entry = gateway_.getState(channelID, key))
    {
      auto const pending = codec::deserialize<chaincode::PendingRequest>(entry->value);
      if (pending.consumedBy)
      {
        if (auto const rec = gateway_.getTransaction(channelID, *pending.consumedBy))
        {
          out.response = SubmitResult{rec->envelope.txID, rec->validity, rec->blockNumber,
                                      rec->txIndex};
          out.detail = std::get<ServerResponse>(rec->envelope.proposal.tx.payload);
          return out;
        }
      }
    }
    if (clock_.now() >= deadline)
    {
      throw Error(Errc::Timeout, "no storage response to " + request.txID);
    }
    settle_();
  }
}

WorkflowOutcome Client::run(std::string const &channelID, TxType type, TxPayload payload)
{
  PmdTransaction tx;
  tx.txType  = type;
  tx.payload = std::move(payload);
  auto const request = gateway_.submit(channelID, std::move(tx));
  settle_();
  return awaitResponse(channelID, request);
}

WorkflowOutcome Client::upload(std::string const &channelID, UploadRequest request,
                               ByteView content)
{
  IngestRequest staged;
  staged.fileID  = request.fileID;
  staged.content = Bytes(content.begin(), content.end());
  replyPayload<IngestReply>(
      dmsFor(request.storageID)->call(makeMessage(MessageType::Ingest, channelID, staged)));
  return run(channelID, TxType::Upload, std::move(request));
}

WorkflowOutcome Client::download(std::string const &channelID, std::string const &fileID,
                                 Bytes *content)
{
  auto out = run(channelID, TxType::Download, FileRequest{fileID});
  if (content != nullptr && out.done())
  {
    auto const entry = gateway_.getState(channelID, chaincode::pendingKey(channelID, out.request.txID));
    auto const pending = codec::deserialize<chaincode::PendingRequest>(entry.value().value);
    *content           = fetch(channelID, pending.executingStorageID, out.request.txID);
  }
  return out;
}

WorkflowOutcome Client::copy(std::string const &channelID, CopyRequest request)
{
  auto const type =
      request.destinationStorageID ? TxType::CopyToStorage : TxType::CopyWithin;
  return run(channelID, type, std::move(request));
}

WorkflowOutcome Client::transfer(std::string const &channelID, TransferRequest request)
{
  return run(channelID, TxType::TransferToStorage, std::move(request));
}

WorkflowOutcome Client::remove(std::string const &channelID, std::string const &fileID)
{
  return run(channelID, TxType::Delete, FileRequest{fileID});
}

SubmitResult Client::grant(std::string const &channelID, GrantRequest request)
{
  PmdTransaction tx;
  tx.txType  = TxType::GrantAccess;
  tx.payload = std::move(request);
  return gateway_.submit(channelID, std::move(tx));
}

SubmitResult Client::revoke(std::string const &channelID, std::string const &ruleID)
{
  PmdTransaction tx;
  tx.txType  = TxType::RevokeAccess;
  tx.payload = RevokeRequest{ruleID};
  return gateway_.submit(channelID, std::move(tx));
}

Bytes Client::fetch(std::string const &channelID, std::string const &storageID,
                    std::string const &requestTxID)
{
  auto const msg = signedBy(makeMessage(MessageType::Fetch, channelID, requestTxID),
                            gateway_.identity());
  return replyPayload<Bytes>(dmsFor(storageID)->call(msg));
}

std::optional<FileAsset> Client::asset(std::string const &channelID, std::string const &fileID)
{
  auto const entry = gateway_.getState(channelID, chaincode::assetKey(channelID, fileID));
  if (!entry)
  {
    return std::nullopt;
  }
  return codec::deserialize<FileAsset>(entry->value);
}

}  // namespace provhl
