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

#include "provhl/cli.hpp"

#include "provhl/chaincode.hpp"
#include "provhl/http.hpp"
#include "provhl/network.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fcntl.h>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace provhl {

namespace {

std::atomic<bool> gStop{false};

extern "C" void onSignal(int)
{
  gStop = true;
}

std::string envOr(char const *name, std::string fallback)
{
  char const *v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string{v} : std::move(fallback);
}

Bytes readBinary(fs::path const &path)
{
  std::ifstream in{path, std::ios::binary};
  if (!in)
  {
    throw Error(Errc::Io, "cannot read " + path.string());
  }
  return Bytes(std::istreambuf_iterator<char>{in}, {});
}

void writeBinary(fs::path const &path, ByteView content)
{
  std::ofstream out{path, std::ios::binary | std::ios::trunc};
  out.write(reinterpret_cast<char const *>(content.data()),
            static_cast<std::streamsize>(content.size()));
  if (!out)
  {
    throw Error(Errc::Io, "cannot write " + path.string());
  }
}

/// Exclusive use of a data directory by one process.
class DirLock
{
public:
  explicit DirLock(fs::path const &dir)
  {
    fs::create_directories(dir);
    fd_ = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT, 0600);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX | LOCK_NB) != 0)
    {
      if (fd_ >= 0)
      {
        ::close(fd_);
      }
      fd_ = -1;
      throw Error(Errc::Unavailable, "data directory " + dir.string() +
                                         " is in use (a served network? use --remote)");
    }
  }
  ~DirLock()
  {
    if (fd_ >= 0)
    {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  DirLock(DirLock const &)            = delete;
  DirLock &operator=(DirLock const &) = delete;

private:
  int fd_{-1};
};

struct Options
{
  std::string config;
  std::string remote;
  std::string as;
  std::string channel;
  bool        json{false};
  bool        verbose{false};
};

/// Either a network booted in this process or endpoints of a served one.
class Session
{
public:
  explicit Session(Options const &o)
    : opts_{o}
  {
    if (!o.remote.empty())
    {
      remote_.emplace(Discovery::load(o.remote));
      clock_  = std::make_unique<SystemClock>();
      driver_ = std::make_unique<SleepDriver>(*clock_, 20);
    }
    else
    {
      config_ = loadNetworkConfig(o.config);
      if (!config_.dataDir.empty())
      {
        lock_ = std::make_unique<DirLock>(config_.dataDir);
      }
    }
  }

  bool remote() const { return remote_.has_value(); }

  NetworkConfig const &config() const
  {
    requireLocal("this command");
    return config_;
  }

  void requireLocal(std::string const &what) const
  {
    if (remote_)
    {
      throw Error(Errc::ConfigInvalid, what + " works on a local data directory, not --remote");
    }
  }

  Network &net()
  {
    requireLocal("this command");
    if (!net_)
    {
      net_ = Network::up(config_);
    }
    return *net_;
  }

  std::string channel()
  {
    if (!opts_.channel.empty())
    {
      return opts_.channel;
    }
    if (remote_)
    {
      if (remote_->discovery.channels.empty())
      {
        throw Error(Errc::UnknownChannel, "the served network has no channel");
      }
      return remote_->discovery.channels.front();
    }
    if (config_.channels.empty())
    {
      throw Error(Errc::UnknownChannel, "no channel configured; pass --channel");
    }
    return config_.channels.front().channelID;
  }

  std::string actorID() const
  {
    if (!opts_.as.empty())
    {
      return opts_.as;
    }
    return envOr("PROVHL_USER", remote_ ? std::string{"admin"} : config_.adminID);
  }

  SigningIdentity identity()
  {
    auto const id = actorID();
    if (remote_)
    {
      auto who = Keystore{remote_->discovery.keystore}.load(id);
      if (!who)
      {
        throw Error(Errc::NotFound, "no identity for " + id + " in " +
                                        remote_->discovery.keystore.string());
      }
      return *who;
    }
    return net().identity(id);
  }

  Client &client()
  {
    if (client_)
    {
      return *client_;
    }
    auto const who = identity();
    if (remote_)
    {
      gateway_ = std::make_unique<Gateway>(who, *clock_, remote_->peers, remote_->orderer, *driver_);
      client_  = std::make_unique<Client>(*gateway_, remote_->dms, [this] { driver_->step(); },
                                          *clock_);
    }
    else
    {
      gateway_ = net().gateway(who);
      client_  = std::make_unique<Client>(*gateway_, net().dmsEndpoints(),
                                          [this] { net_->settle(); }, net().clock());
    }
    return *client_;
  }

  Gateway &gateway() { return client().gateway(); }

private:
  Options                        opts_;
  NetworkConfig                  config_;
  std::unique_ptr<DirLock>       lock_;
  std::unique_ptr<Network>       net_;
  std::optional<RemoteNetwork>   remote_;
  std::unique_ptr<Clock>         clock_;
  std::unique_ptr<Driver>        driver_;
  std::unique_ptr<Gateway>       gateway_;
  std::unique_ptr<Client>        client_;
};

json assetJson(FileAsset const &a)
{
  json j;
  j["fileID"]    = a.fileID;
  j["fileName"]  = a.fileName;
  j["storageID"] = a.storageID;
  j["creatorID"] = a.creatorID;
  j["ownerID"]   = a.ownerID;
  j["assetType"] = assetTypeName(a.assetType);
  j["source"]    = describeSource(a.source);
  j["createdAt"] = formatDateTime(a.createdAt);
  j["downloads"] = a.downloads;
  json users     = json::array();
  for (auto const &d : a.dUsers)
  {
    users.push_back({{"userID", d.userID}, {"txID", d.txID}});
  }
  j["dUsers"]      = users;
  j["metadataURI"] = a.metadataURI ? json(*a.metadataURI) : json(nullptr);
  j["temporary"]   = a.temporary;
  j["checksum"]    = a.checksum ? json(*a.checksum) : json(nullptr);
  return j;
}

json submitJson(SubmitResult const &r)
{
  return {{"txID", r.txID},
          {"validity", validationCodeName(r.validity)},
          {"block", r.blockNumber},
          {"txIndex", r.txIndex}};
}

json outcomeJson(WorkflowOutcome const &o)
{
  json j;
  j["request"] = submitJson(o.request);
  if (o.response)
  {
    j["response"] = submitJson(*o.response);
  }
  if (o.detail)
  {
    j["outcome"]  = o.detail->outcome == ResponseOutcome::Done ? "done" : "cancelled";
    j["reason"]   = o.detail->reason;
    j["checksum"] = o.detail->checksum;
  }
  return j;
}

json eventJson(CommitEvent const &e)
{
  return {{"sequence", e.sequence},
          {"block", e.blockNumber},
          {"txIndex", e.txIndex},
          {"txID", e.txID},
          {"txType", txTypeName(e.txType)},
          {"phase", phaseName(e.phase)},
          {"validity", validationCodeName(e.validity)},
          {"requester", e.requesterID},
          {"linkedRequest", e.linkedRequestTxID ? json(*e.linkedRequestTxID) : json(nullptr)},
          {"keys", e.affectedKeys}};
}

std::string eventLine(CommitEvent const &e)
{
  std::ostringstream s;
  s << e.sequence << "  " << e.blockNumber << "." << e.txIndex << "  " << txTypeName(e.txType)
    << "/" << phaseName(e.phase) << "  " << validationCodeName(e.validity) << "  " << e.txID
    << "  " << e.requesterID;
  if (e.linkedRequestTxID)
  {
    s << "  -> " << *e.linkedRequestTxID;
  }
  return s.str();
}

class Printer
{
public:
  Printer(std::ostream &out, bool json)
    : out_{out}
    , json_{json}
  {}

  bool json() const { return json_; }

  void emit(nlohmann::json const &j, std::string const &text) const
  {
    if (json_)
    {
      out_ << j.dump(2) << "\n";
    }
    else
    {
      out_ << text;
      if (!text.empty() && text.back() != '\n')
      {
        out_ << "\n";
      }
    }
  }

  std::ostream &out() const { return out_; }

private:
  std::ostream &out_;
  bool          json_;
};

int reportOutcome(Printer const &p, WorkflowOutcome const &o, std::string const &fileID = {})
{
  std::ostringstream t;
  if (!fileID.empty())
  {
    t << "fileID   " << fileID << "\n";
  }
  t << "request  " << o.request.txID << "  " << validationCodeName(o.request.validity)
    << "  block " << o.request.blockNumber << "\n";
  if (o.response)
  {
    t << "response " << o.response->txID << "  " << validationCodeName(o.response->validity)
      << "  block " << o.response->blockNumber << "\n";
  }
  if (o.detail)
  {
    t << (o.detail->outcome == ResponseOutcome::Done ? "done" : "cancelled: " + o.detail->reason)
      << "\n";
  }
  auto j = outcomeJson(o);
  if (!fileID.empty())
  {
    j["fileID"] = fileID;
  }
  p.emit(j, t.str());
  if (!o.request.valid() || (o.response && !o.response->valid()))
  {
    return exitcode::kInvalidTransaction;
  }
  return o.done() ? exitcode::kOk : exitcode::kCancelled;
}

int reportSubmit(Printer const &p, SubmitResult const &r)
{
  p.emit(submitJson(r), r.txID + "  " + std::string{validationCodeName(r.validity)} + "  block " +
                            std::to_string(r.blockNumber));
  return r.valid() ? exitcode::kOk : exitcode::kInvalidTransaction;
}

fs::path blockLogPath(NetworkConfig const &c, std::string const &channelID,
                      std::string const &peer, bool orderer, std::string const &file)
{
  if (!file.empty())
  {
    return file;
  }
  if (c.dataDir.empty())
  {
    throw Error(Errc::ConfigInvalid, "network.dataDir is not set; pass --file");
  }
  if (orderer)
  {
    return c.dataDir / "orderer" / (channelID + ".blocks");
  }
  auto id = peer;
  if (id.empty())
  {
    for (auto const &o : c.orgs)
    {
      if (!o.peers.empty())
      {
        id = o.peers.front();
        break;
      }
    }
  }
  return c.dataDir / "peers" / id / (channelID + ".blocks");
}

/// Participant keys straight from the registry file, without booting nodes.
KeyResolver registryKeys(NetworkConfig const &c)
{
  auto const rootFile =
      c.mspRootKey.empty() ? c.dataDir / "msp" / "root.key" : c.mspRootKey;
  std::ifstream in{rootFile};
  std::string   hex;
  if (!(in >> hex))
  {
    throw Error(Errc::Io, "cannot read MSP root key " + rootFile.string());
  }
  static SystemClock clock;
  auto               msp = std::make_shared<Msp>(KeyPair::fromSecretHex(hex), clock);
  msp->loadFile(c.dataDir / "msp" / "registry");
  return [msp](std::string const &id) -> std::optional<PublicKey> {
    if (auto const rec = msp->lookup(id))
    {
      return rec->credential.participant.publicKey;
    }
    return std::nullopt;
  };
}

std::string readText(fs::path const &path)
{
  auto const b = readBinary(path);
  return toString(b);
}

SourceDescriptor sourceFrom(std::string const &facility, std::string const &derivedFrom,
                            std::string const &tool)
{
  if (!derivedFrom.empty())
  {
    return DerivedSource{derivedFrom, tool.empty() ? std::string{"unknown"} : tool};
  }
  return FacilitySource{facility.empty() ? std::string{"unknown"} : facility};
}

}  // namespace

std::string outcomeName(int exitCode)
{
  switch (exitCode)
  {
  case exitcode::kOk: return "ok";
  case exitcode::kFailure: return "failure";
  case exitcode::kUsage: return "usage";
  case exitcode::kInvalidTransaction: return "invalid";
  case exitcode::kCancelled: return "cancelled";
  default: break;
  }
  if (exitCode > exitcode::kErrorBase &&
      exitCode <= exitCodeFor(Errc::Capacity))
  {
    return std::string{errcName(static_cast<Errc>(exitCode - exitcode::kErrorBase))};
  }
  return "exit-" + std::to_string(exitCode);
}

std::vector<ScenarioStep> parseScenario(std::string_view text, fs::path const &dir)
{
  std::vector<ScenarioStep> steps;
  std::istringstream        in{std::string{text}};
  std::string               raw;
  std::size_t               lineNo = 0;
  while (std::getline(in, raw))
  {
    ++lineNo;
    std::vector<std::string> tok;
    std::string              cur;
    bool                     quoted = false, have = false;
    for (char c : raw)
    {
      if (c == '"')
      {
        quoted = !quoted;
        have   = true;
      }
      else if (!quoted && c == '#')
      {
        break;
      }
      else if (!quoted && std::isspace(static_cast<unsigned char>(c)))
      {
        if (have)
        {
          tok.push_back(cur);
        }
        cur.clear();
        have = false;
      }
      else
      {
        cur.push_back(c);
        have = true;
      }
    }
    if (quoted)
    {
      throw Error(Errc::ParseError, "line " + std::to_string(lineNo) + ": unterminated quote");
    }
    if (have)
    {
      tok.push_back(cur);
    }
    if (tok.empty())
    {
      continue;
    }
    if (tok.size() < 2)
    {
      throw Error(Errc::ParseError, "line " + std::to_string(lineNo) + ": expected an outcome and a command");
    }
    ScenarioStep step;
    step.line   = lineNo;
    step.expect = tok.front();
    for (std::size_t i = 1; i < tok.size(); ++i)
    {
      auto arg = tok[i];
      for (auto pos = arg.find("{dir}"); pos != std::string::npos; pos = arg.find("{dir}"))
      {
        arg.replace(pos, 5, dir.empty() ? std::string{"."} : dir.string());
      }
      step.args.push_back(arg);
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

int runCommand(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Provenance ledger for scientific data files", "provhl"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "provhl 1.0.0");

  Options o;
  o.config = envOr("PROVHL_CONFIG", "provhl.toml");
  o.remote = envOr("PROVHL_DISCOVERY", "");
  auto *configOpt =
      app.add_option("-c,--config", o.config, "Network configuration file (PROVHL_CONFIG)");
  auto *remoteOpt = app.add_option("--remote", o.remote, "Discovery file of a served network (PROVHL_DISCOVERY)");
  app.add_option("--as", o.as, "Acting participant (PROVHL_USER, default: the MSP admin)");
  app.add_option("--channel", o.channel, "Channel (default: the first one)");
  app.add_flag("--json", o.json, "Machine-readable output");
  app.add_flag("-v,--verbose", o.verbose, "Log progress to stderr");

  std::function<int()> action;
  auto on = [&action](CLI::App *sub, std::function<int()> fn) {
    sub->callback([&action, fn] { action = fn; });
  };

  Printer const *printer = nullptr;
  std::unique_ptr<Printer> printerHolder;
  std::unique_ptr<Session> sessionHolder;
  auto session = [&]() -> Session & {
    if (!sessionHolder)
    {
      sessionHolder = std::make_unique<Session>(o);
    }
    return *sessionHolder;
  };
  auto P = [&]() -> Printer const & { return *printer; };

  // up
  auto *up = app.add_subcommand("up", "Create (or reopen) the network and print a summary");
  on(up, [&] {
    auto &net = session().net();
    json  j;
    std::ostringstream t;
    t << "network " << net.config().name << "\n";
    for (auto const &ch : net.channelIDs())
    {
      auto const h = net.orderer().height(ch);
      j["channels"][ch] = {{"height", h},
                           {"tip", net.orderer().block(ch, h - 1).dataHash.hex()}};
      t << "channel " << ch << "  height " << h << "\n";
    }
    for (auto *peer : net.peers())
    {
      j["peers"].push_back({{"peerID", peer->id()}, {"orgID", peer->org()}});
      t << "peer    " << peer->id() << " (" << peer->org() << ")\n";
    }
    for (auto const &s : net.config().storages)
    {
      j["storages"].push_back(
          {{"storageID", s.storageID}, {"orgID", s.orgID}, {"rootPath", s.rootPath.string()}});
      t << "storage " << s.storageID << " (" << s.orgID << ") at " << s.rootPath.string() << "\n";
    }
    P().emit(j, t.str());
    return exitcode::kOk;
  });

  // serve
  std::string discoveryPath;
  TimeMs      serveFor = 0;
  auto *serve = app.add_subcommand("serve", "Serve every node over HTTP until interrupted");
  serve->add_option("--discovery", discoveryPath, "Where to write the discovery file");
  serve->add_option("--for-ms", serveFor, "Stop after this many milliseconds");
  on(serve, [&] {
    auto &net = session().net();
    auto  path = discoveryPath.empty()
                     ? (net.config().dataDir.empty() ? fs::path{"provhl-discovery.json"}
                                                     : net.config().dataDir / "discovery.json")
                     : fs::path{discoveryPath};
    NetworkServer server{net};
    server.discovery().save(path);
    P().emit(json::parse(server.discovery().toJson()),
             "serving " + net.config().name + "; discovery file " + path.string());
    P().out().flush();
    gStop = false;
    std::signal(SIGINT, onSignal);
    std::signal(SIGTERM, onSignal);
    auto const started = std::chrono::steady_clock::now();
    while (!gStop)
    {
      std::this_thread::sleep_for(std::chrono::milliseconds{50});
      if (serveFor != 0 && std::chrono::steady_clock::now() - started >
                               std::chrono::milliseconds{serveFor})
      {
        break;
      }
    }
    server.stop();
    std::error_code ec;
    fs::remove(path, ec);
    return exitcode::kOk;
  });

  // register / revoke-member
  std::string regID, regOrg, regRole{"user"};
  auto *reg = app.add_subcommand("register", "Register a participant and store its keys");
  reg->add_option("id", regID)->required();
  reg->add_option("--org", regOrg)->required();
  reg->add_option("--role", regRole, "user|dms|supervisor|owner");
  on(reg, [&] {
    auto &s    = session();
    auto &net  = s.net();
    auto  role = parseRole(regRole);
    if (!role)
    {
      throw Error(Errc::Malformed, "unknown role " + regRole);
    }
    if (net.msp().authenticate(s.identity().credential).role != Role::MspAdmin)
    {
      throw Error(Errc::NotAuthorized, s.actorID() + " is not an MSP administrator");
    }
    auto const who = net.registerParticipant(regID, regOrg, *role);
    P().emit({{"participantID", who.id()}, {"orgID", who.org()}, {"role", roleName(*role)}},
             "registered " + who.id() + " (" + std::string{roleName(*role)} + ") in " + who.org());
    return exitcode::kOk;
  });
  std::string revokeMemberID;
  auto *revm = app.add_subcommand("revoke-member", "Revoke a participant's credential");
  revm->add_option("id", revokeMemberID)->required();
  on(revm, [&] {
    auto &s = session();
    s.net().msp().revokeCredential(s.identity().credential, revokeMemberID);
    P().emit({{"revoked", revokeMemberID}}, "revoked " + revokeMemberID);
    return exitcode::kOk;
  });

  // upload
  std::string upPath, upStorage, upFileID, upName, upType{"primary"}, upFacility, upDerived,
      upTool, upMeta;
  auto *upl = app.add_subcommand("upload", "Store a file and record it on the ledger");
  upl->add_option("path", upPath)->required()->check(CLI::ExistingFile);
  upl->add_option("--storage", upStorage)->required();
  upl->add_option("--file-id", upFileID, "Default: the file name");
  upl->add_option("--name", upName, "Default: the file name");
  upl->add_option("--type", upType, "primary|secondary|replica");
  std::string upSource;
  upl->add_option("--source", upSource, "facility:<id> or derived:<fileID>[:<tool>]");
  upl->add_option("--facility", upFacility, "Experimental facility that produced the file");
  upl->add_option("--derived-from", upDerived, "Source fileID of a derived file");
  upl->add_option("--tool", upTool, "Tool that derived the file");
  upl->add_option("--metadata", upMeta, "Metadata URI");
  on(upl, [&] {
    auto          &s = session();
    UploadRequest  r;
    auto const     filename = fs::path{upPath}.filename().string();
    r.fileID    = upFileID.empty() ? filename : upFileID;
    r.fileName  = upName.empty() ? filename : upName;
    r.storageID = upStorage;
    auto const type = parseAssetType(upType);
    if (!type)
    {
      throw Error(Errc::Malformed, "unknown asset type " + upType);
    }
    r.assetType = *type;
    if (!upSource.empty())
    {
      auto const colon = upSource.find(':');
      auto const kind  = upSource.substr(0, colon);
      auto const rest  = colon == std::string::npos ? std::string{} : upSource.substr(colon + 1);
      if (kind == "facility")
      {
        upFacility = rest;
      }
      else if (kind == "derived")
      {
        auto const c2 = rest.find(':');
        upDerived     = rest.substr(0, c2);
        upTool        = c2 == std::string::npos ? std::string{} : rest.substr(c2 + 1);
      }
      else
      {
        throw Error(Errc::Malformed, "--source must start with facility: or derived:");
      }
    }
    r.source    = sourceFrom(upFacility, upDerived, upTool);
    if (!upMeta.empty())
    {
      r.metadataURI = upMeta;
    }
    return reportOutcome(P(), s.client().upload(s.channel(), r, readBinary(upPath)), r.fileID);
  });

  // download
  std::string downID, downOut;
  auto *dl = app.add_subcommand("download", "Download a file (recorded on the ledger)");
  dl->add_option("fileID", downID)->required();
  dl->add_option("-o,--out", downOut, "Output path (default: the file ID)");
  on(dl, [&] {
    auto &s = session();
    Bytes content;
    auto  outcome = s.client().download(s.channel(), downID, &content);
    auto  code    = reportOutcome(P(), outcome);
    if (outcome.done())
    {
      writeBinary(downOut.empty() ? downID : downOut, content);
    }
    return code;
  });

  // copy / transfer / delete
  std::string cpID, cpNew, cpTo;
  auto *cp = app.add_subcommand("copy", "Make a replica, in place or on another storage");
  cp->add_option("fileID", cpID)->required();
  cp->add_option("--new-id", cpNew)->required();
  cp->add_option("--to-storage", cpTo);
  on(cp, [&] {
    auto       &s = session();
    CopyRequest r{cpID, cpNew, std::nullopt};
    if (!cpTo.empty())
    {
      r.destinationStorageID = cpTo;
    }
    return reportOutcome(P(), s.client().copy(s.channel(), r));
  });
  std::string trID, trTo;
  auto *tr = app.add_subcommand("transfer", "Move a file to another storage");
  tr->add_option("fileID", trID)->required();
  tr->add_option("--to-storage", trTo)->required();
  on(tr, [&] {
    auto &s = session();
    return reportOutcome(P(), s.client().transfer(s.channel(), TransferRequest{trID, trTo}));
  });
  std::string delID;
  auto *del = app.add_subcommand("delete", "Delete a file");
  del->add_option("fileID", delID)->required();
  on(del, [&] {
    auto &s = session();
    return reportOutcome(P(), s.client().remove(s.channel(), delID));
  });

  // grant / revoke
  std::string grID, grRule, grPrincipal, grOps;
  bool        grDeny = false;
  auto *gr = app.add_subcommand("grant", "Add an access rule on a file");
  gr->add_option("fileID", grID)->required();
  gr->add_option("--to,--principal", grPrincipal, "user:<id> | org:<id> | role:<role> | any")
      ->required();
  gr->add_option("--ops", grOps, "Comma-separated operations, e.g. download,copyWithin")
      ->required();
  gr->add_option("--rule-id", grRule, "Default: derived from file, principal and operations");
  gr->add_flag("--deny", grDeny, "Add a deny rule instead of an allow rule");
  on(gr, [&] {
    auto &s = session();
    if (grRule.empty())
    {
      grRule = "g-" + sha256(grID + "|" + grPrincipal + "|" + grOps + (grDeny ? "|deny" : ""))
                          .hex()
                          .substr(0, 12);
    }
    auto const text = "rule " + grRule + ": " + (grDeny ? "deny " : "allow ") + grPrincipal +
                      " " + grOps + " on asset:" + grID + "\n";
    auto const rules = acl::parseRules(text);
    auto const r     = s.client().grant(s.channel(), GrantRequest{grID, rules.front()});
    P().emit({{"ruleID", grRule}, {"transaction", submitJson(r)}},
             "rule " + grRule + "\n" + r.txID + "  " + std::string{validationCodeName(r.validity)} +
                 "  block " + std::to_string(r.blockNumber));
    return r.valid() ? exitcode::kOk : exitcode::kInvalidTransaction;
  });
  std::string rvRule;
  auto *rv = app.add_subcommand("revoke", "Remove an access rule");
  rv->add_option("ruleID", rvRule)->required();
  on(rv, [&] {
    auto &s = session();
    return reportSubmit(P(), s.client().revoke(s.channel(), rvRule));
  });

  // queries
  std::string stID;
  auto *st = app.add_subcommand("state", "Show the current record of a file");
  st->add_option("fileID", stID)->required();
  on(st, [&] {
    auto &s     = session();
    auto  asset = s.client().asset(s.channel(), stID);
    if (!asset)
    {
      throw Error(Errc::UnknownAsset, stID);
    }
    auto const         j = assetJson(*asset);
    std::ostringstream t;
    for (auto const &[k, v] : j.items())
    {
      t << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    }
    P().emit(j, t.str());
    return exitcode::kOk;
  });
  std::string hiID;
  auto *hi = app.add_subcommand("history", "Show every committed version of a file record");
  hi->add_option("fileID", hiID)->required();
  on(hi, [&] {
    auto      &s  = session();
    auto const ch = s.channel();
    auto const entries = s.gateway().getHistory(ch, chaincode::assetKey(ch, hiID));
    json               j = json::array();
    std::ostringstream t;
    for (auto const &e : entries)
    {
      json row{{"txID", e.txID}, {"block", e.blockNumber}, {"txIndex", e.txIndex}};
      t << e.blockNumber << "." << e.txIndex << "  " << e.txID << "  ";
      if (e.value)
      {
        auto const a = codec::deserialize<FileAsset>(*e.value);
        row["asset"] = assetJson(a);
        t << "owner " << a.ownerID << ", storage " << a.storageID << ", downloads "
          << a.downloads << (a.temporary ? ", temporary" : "") << "\n";
      }
      else
      {
        row["asset"] = nullptr;
        t << "deleted\n";
      }
      j.push_back(row);
    }
    if (entries.empty())
    {
      throw Error(Errc::UnknownAsset, hiID);
    }
    P().emit(j, t.str());
    return exitcode::kOk;
  });
  std::string txID;
  auto *txc = app.add_subcommand("tx", "Show a committed transaction");
  txc->add_option("txID", txID)->required();
  on(txc, [&] {
    auto &s   = session();
    auto  rec = s.gateway().getTransaction(s.channel(), txID);
    if (!rec)
    {
      throw Error(Errc::NotFound, "transaction " + txID);
    }
    auto const &tx = rec->envelope.proposal.tx;
    json        j{{"txID", rec->envelope.txID},
           {"block", rec->blockNumber},
           {"txIndex", rec->txIndex},
           {"validity", validationCodeName(rec->validity)},
           {"txType", txTypeName(tx.txType)},
           {"phase", phaseName(tx.phase)},
           {"requester", tx.requesterID},
           {"timestamp", rec->envelope.proposal.timestamp},
           {"linkedRequest", tx.linkedRequestTxID ? json(*tx.linkedRequestTxID) : json(nullptr)}};
    for (auto const &e : rec->envelope.endorsements)
    {
      j["endorsers"].push_back(e.peerID);
    }
    for (auto const &w : rec->envelope.rwset.writes)
    {
      j["writes"].push_back(w.key);
    }
    std::ostringstream t;
    t << rec->envelope.txID << "\n  " << txTypeName(tx.txType) << "/" << phaseName(tx.phase)
      << " by " << tx.requesterID << "\n  block " << rec->blockNumber << "." << rec->txIndex
      << "  " << validationCodeName(rec->validity) << "\n";
    if (tx.linkedRequestTxID)
    {
      t << "  answers " << *tx.linkedRequestTxID << "\n";
    }
    P().emit(j, t.str());
    return exitcode::kOk;
  });

  // verify-chain / tamper
  std::string vcPeer, vcFile;
  bool        vcOrderer = false;
  auto *vc = app.add_subcommand("verify-chain", "Check hashes and signatures of a block log");
  vc->add_option("--peer", vcPeer, "Peer whose log to check (default: the first peer)");
  vc->add_flag("--orderer", vcOrderer, "Check the orderer's log");
  vc->add_option("--file", vcFile, "Explicit block log path");
  on(vc, [&] {
    auto      &s    = session();
    auto const ch   = s.channel();
    auto const path = blockLogPath(s.config(), ch, vcPeer, vcOrderer, vcFile);
    auto const log  = readBlockLog(path);
    auto       report = verifyChain(log.records, ch, vcOrderer ? KeyResolver{} : registryKeys(s.config()));
    if (report.ok && log.framingError)
    {
      report.ok          = false;
      report.failedBlock = log.records.size();
      report.reason      = *log.framingError;
    }
    json j{{"ok", report.ok}, {"blocksChecked", report.blocksChecked}, {"path", path.string()}};
    if (!report.ok)
    {
      j["failedBlock"] = report.failedBlock ? json(*report.failedBlock) : json(nullptr);
      j["reason"]      = report.reason;
      P().emit(j, "chain broken at block " +
                      (report.failedBlock ? std::to_string(*report.failedBlock) : "?") + ": " +
                      report.reason);
      return exitCodeFor(Errc::ChainMismatch);
    }
    P().emit(j, "chain ok: " + std::to_string(report.blocksChecked) + " blocks");
    return exitcode::kOk;
  });
  std::string   tpPeer, tpFile;
  bool          tpOrderer = false;
  std::uint64_t tpBlock = 0, tpOffset = 0;
  auto *tp = app.add_subcommand("tamper", "Flip one byte of a stored block (for testing)");
  tp->add_option("--peer", tpPeer);
  tp->add_flag("--orderer", tpOrderer);
  tp->add_option("--file", tpFile);
  tp->add_option("--block", tpBlock)->required();
  tp->add_option("--offset", tpOffset)->required();
  on(tp, [&] {
    auto      &s    = session();
    auto const path = blockLogPath(s.config(), s.channel(), tpPeer, tpOrderer, tpFile);
    tamperBlockLog(path, tpBlock, tpOffset);
    P().emit({{"path", path.string()}, {"block", tpBlock}, {"offset", tpOffset}},
             "flipped byte " + std::to_string(tpOffset) + " of block " + std::to_string(tpBlock) +
                 " in " + path.string());
    return exitcode::kOk;
  });

  // events
  bool          evFollow = false;
  std::uint64_t evFrom   = 0;
  std::string   evType;
  auto *ev = app.add_subcommand("events", "List commit events");
  ev->add_flag("-f,--follow", evFollow, "Keep waiting for new events (needs --remote)");
  ev->add_option("--from", evFrom, "First sequence number");
  ev->add_option("--type", evType, "Only this transaction type");
  on(ev, [&] {
    auto &s = session();
    if (evFollow && !s.remote())
    {
      throw Error(Errc::ConfigInvalid, "events --follow needs a served network (--remote)");
    }
    EventsQuery q;
    q.fromSequence = evFrom;
    if (!evType.empty())
    {
      q.txType = parseTxType(evType);
      if (!q.txType)
      {
        throw Error(Errc::Malformed, "unknown transaction type " + evType);
      }
    }
    auto const ch = s.channel();
    gStop         = false;
    std::signal(SIGINT, onSignal);
    std::signal(SIGTERM, onSignal);
    do
    {
      q.maxWaitMs = evFollow ? 1000 : 0;
      auto const batch = s.gateway().events(ch, q);
      for (auto const &e : batch.events)
      {
        if (P().json())
        {
          P().out() << eventJson(e).dump() << "\n";
        }
        else
        {
          P().out() << eventLine(e) << "\n";
        }
      }
      P().out().flush();
      q.fromSequence = batch.nextSequence;
    } while (evFollow && !gStop);
    return exitcode::kOk;
  });

  // notify: the user hands a request txID to the storage directly
  std::string ntTx, ntStorage;
  auto *nt = app.add_subcommand("notify", "Hand a committed request to a storage adapter");
  nt->add_option("txID", ntTx)->required();
  nt->add_option("--storage", ntStorage)->required();
  on(nt, [&] {
    auto      &s      = session();
    auto      &net    = s.net();
    auto const ch     = s.channel();
    bool const queued = net.dms(ntStorage).enqueue(ch, ntTx);
    net.settle();
    auto const o = s.client().awaitResponse(ch, SubmitResult{ntTx, ValidationCode::Valid, 0, 0});
    if (!queued && !o.response)
    {
      throw Error(Errc::NotFound, "storage " + ntStorage + " has nothing to do for " + ntTx);
    }
    return reportOutcome(P(), o);
  });

  // scenario
  std::string scPath;
  auto *sc = app.add_subcommand("scenario", "Run a script of commands and check their outcomes");
  sc->add_option("script", scPath)->required()->check(CLI::ExistingFile);
  on(sc, [&] {
    auto const steps = parseScenario(readText(scPath), fs::path{scPath}.parent_path());
    std::vector<std::string> base;
    if (!o.config.empty())
    {
      base = {"--config", o.config};
    }
    std::size_t failed = 0;
    json        results = json::array();
    for (auto const &step : steps)
    {
      auto argv = base;
      argv.insert(argv.end(), step.args.begin(), step.args.end());
      std::ostringstream sink;
      auto const         code = runCommand(argv, sink, sink);
      auto const         got  = outcomeName(code);
      bool const         pass = got == step.expect;
      failed += pass ? 0 : 1;
      results.push_back({{"line", step.line}, {"expect", step.expect}, {"got", got}, {"pass", pass}});
      if (!P().json())
      {
        P().out() << (pass ? "pass" : "FAIL") << "  line " << step.line << "  expect "
                  << step.expect << "  got " << got << "\n";
        if (!pass)
        {
          P().out() << sink.str();
        }
      }
    }
    if (P().json())
    {
      P().out() << results.dump(2) << "\n";
    }
    return failed == 0 ? exitcode::kOk : exitcode::kFailure;
  });

  // reconcile / status
  std::string rcStorage;
  TimeMs      rcAge = 0;
  auto *rc = app.add_subcommand("reconcile", "Compare storages with the ledger and repair");
  rc->add_option("--storage", rcStorage, "Only this storage");
  rc->add_option("--max-age-ms", rcAge, "Cancel unanswered requests older than this");
  on(rc, [&] {
    auto &s   = session();
    auto &net = s.net();
    auto const age = rcAge == 0 ? net.config().reconcileMaxAgeMs : rcAge;
    net.settle();
    json               j = json::object();
    std::ostringstream t;
    bool               clean = true;
    for (auto *dms : net.dmsAdapters())
    {
      if (!rcStorage.empty() && dms->storageID() != rcStorage)
      {
        continue;
      }
      auto const report = dms->reconcile(age);
      net.settle();
      clean                    = clean && report.clean();
      j[dms->storageID()]      = json::parse(reconcileReportJson(report));
      t << "storage " << dms->storageID() << (report.clean() ? ": clean" : ":") << "\n";
      auto list = [&t](char const *label, std::vector<std::string> const &items) {
        for (auto const &i : items)
        {
          t << "  " << label << " " << i << "\n";
        }
      };
      list("cancelled", report.cancelled);
      list("resubmitted", report.resubmitted);
      list("untracked", report.untrackedFiles);
      list("missing", report.missingFiles);
      list("checksum-mismatch", report.checksumMismatches);
    }
    P().emit(j, t.str());
    return exitcode::kOk;
  });
  auto *status = app.add_subcommand("status", "Heights and storage adapter status");
  on(status, [&] {
    auto &s = session();
    json  j;
    std::ostringstream t;
    auto const ch = s.channel();
    auto const h  = s.gateway().height(ch);
    j["channel"]  = ch;
    j["height"]   = h;
    t << "channel " << ch << "  height " << h << "\n";
    if (!s.remote())
    {
      for (auto *dms : s.net().dmsAdapters())
      {
        j["storages"][dms->storageID()] = json::parse(dms->statusJson());
        t << "storage " << dms->storageID() << "  " << dms->statusJson() << "\n";
      }
    }
    P().emit(j, t.str());
    return exitcode::kOk;
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try
  {
    app.parse(reversed);
  }
  catch (CLI::ParseError const &e)
  {
    auto const code = app.exit(e, out, err);
    return code == 0 ? exitcode::kOk : exitcode::kUsage;
  }

  if (configOpt->count() > 0 && remoteOpt->count() == 0)
  {
    o.remote.clear();
  }
  spdlog::set_level(o.verbose ? spdlog::level::info : spdlog::level::warn);
  printerHolder = std::make_unique<Printer>(out, o.json);
  printer       = printerHolder.get();
  try
  {
    return action ? action() : exitcode::kUsage;
  }
  catch (Error const &e)
  {
    if (o.json)
    {
      out << json{{"error", errcName(e.code())}, {"detail", e.detail()}}.dump(2) << "\n";
    }
    err << "error: " << e.what() << "\n";
    return exitCodeFor(e.code());
  }
  catch (std::exception const &e)
  {
    err << "error: " << e.what() << "\n";
    return exitcode::kFailure;
  }
}

}  // namespace provhl
