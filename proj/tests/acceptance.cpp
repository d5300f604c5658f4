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

// Acceptance gate: one line per criterion, nonzero exit when any fails.

#include "support.hpp"

#include "provhl/chaincode.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace provhl;
using namespace provhl::testing;

namespace {

// pinned thresholds
constexpr std::size_t kBijectionOps      = 60;
constexpr double      kBijectionSeconds  = 30.0;
constexpr std::size_t kDownloads         = 7;
constexpr std::size_t kTamperSamples     = 128;
constexpr std::size_t kTamperWorkload    = 60;
constexpr std::size_t kConsensusTx       = 200;
constexpr std::size_t kReplayTx          = 500;
constexpr std::size_t kReplaySeeds       = 20;
constexpr std::size_t kIsolationTx       = 100;

struct Verdict
{
  bool        pass{false};
  std::string detail;
};

Verdict fail(std::string detail)
{
  return {false, std::move(detail)};
}

struct Snapshot
{
  std::map<std::string, HashDigest>  stateHashes;
  std::map<std::string, std::uint64_t> heights;
  std::map<std::string, std::string>   files;  // storage/name -> checksum

  bool operator==(Snapshot const &) const = default;
};

Snapshot snapshot(Network &net, std::string const &channelID)
{
  Snapshot s;
  for (auto *p : net.peers())
  {
    if (p->hasChannel(channelID))
    {
      s.stateHashes[p->id()] = p->ledger(channelID).stateHash();
      s.heights[p->id()]     = p->ledger(channelID).height();
    }
  }
  for (auto const &st : net.config().storages)
  {
    auto &b = net.backend(st.storageID);
    for (auto const &f : b.list())
    {
      s.files[st.storageID + "/" + f] = b.checksum(f);
    }
  }
  return s;
}

// Every valid storage request has exactly one valid linked response, and
// every valid response links a valid request committed before it.
std::optional<std::string> bijectionViolation(ChannelLedger const &ledger)
{
  std::set<std::string>              requests;
  std::map<std::string, std::size_t> links;
  for (auto const &t : committedTransactions(ledger))
  {
    if (t.validity != ValidationCode::Valid)
    {
      continue;
    }
    auto const &tx = t.envelope.proposal.tx;
    if (tx.phase == Phase::ClientRequest && isStorageAffecting(tx.txType))
    {
      requests.insert(t.envelope.txID);
    }
    else if (tx.phase == Phase::ServerResponse)
    {
      auto const link = tx.linkedRequestTxID.value_or("");
      if (requests.count(link) == 0)
      {
        return "response " + t.envelope.txID + " links no earlier valid request";
      }
      ++links[link];
    }
  }
  for (auto const &r : requests)
  {
    if (links[r] != 1)
    {
      return "request " + r + " has " + std::to_string(links[r]) + " valid responses";
    }
  }
  return std::nullopt;
}

Verdict bijection()
{
  auto const start = std::chrono::steady_clock::now();
  Harness    h{{.acl = "rule up: allow any upload on any\n"
                       "rule rd: allow org:org1 download,copyWithin,copyToStorage on any\n"}};
  std::set<std::string> executed;
  for (auto const &st : h.net().config().storages)
  {
    h.net().backend(st.storageID)
        .setMutationObserver([&](std::string const &, std::string const &,
                                 std::string const &ctx) { executed.insert(ctx); });
  }
  Workload w{h, {"ch1"}, 1};
  while (w.steps() < kBijectionOps)
  {
    w.step();
  }
  h.net().settle();
  double const seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::set<std::string> verified;
  for (auto *d : h.net().dmsAdapters())
  {
    auto const v = d->verifiedRequests();
    verified.insert(v.begin(), v.end());
  }
  for (auto const &ctx : executed)
  {
    if (verified.count(ctx) == 0)
    {
      return fail("backend mutated for unverified request " + ctx);
    }
  }
  for (auto *p : h.net().peers())
  {
    if (auto v = bijectionViolation(p->ledger("ch1")))
    {
      return fail(p->id() + ": " + *v);
    }
  }
  if (seconds >= kBijectionSeconds)
  {
    return fail("took " + std::to_string(seconds) + " s");
  }
  std::ostringstream os;
  os << w.steps() << " ops, " << w.committed() << " tx, " << w.rejected() << " rejected, "
     << seconds << " s";
  return {true, os.str()};
}

Verdict downloadCounter()
{
  Harness h;
  auto   &alice = h.as("alice");
  if (!alice.upload("ch1", uploadOf("d1", "A"), toBytes("payload")).done())
  {
    return fail("upload not confirmed");
  }
  for (auto const &who : {"bob", "carol"})
  {
    if (!alice.grant("ch1", grantOf("d1", std::string{"g-"} + who, who, {acl::Operation::Download}))
             .valid())
    {
      return fail("grant failed");
    }
  }
  std::vector<std::string> const users{"alice", "bob", "carol"};
  for (std::size_t i = 0; i < kDownloads; ++i)
  {
    if (!h.as(users[i % users.size()]).download("ch1", "d1").done())
    {
      return fail("download " + std::to_string(i) + " not confirmed");
    }
  }
  auto const asset = alice.asset("ch1", "d1");
  if (asset->downloads != kDownloads || asset->dUsers.size() != kDownloads)
  {
    return fail("downloads=" + std::to_string(asset->downloads) +
                " dUsers=" + std::to_string(asset->dUsers.size()));
  }
  std::vector<std::uint64_t> seen;
  for (auto const &e : alice.gateway().getHistory("ch1", chaincode::assetKey("ch1", "d1")))
  {
    auto const a = codec::deserialize<FileAsset>(e.value.value());
    if (!a.temporary)
    {
      seen.push_back(a.downloads);
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
  {
    if (seen[i] != i)
    {
      return fail("history position " + std::to_string(i) + " holds " + std::to_string(seen[i]));
    }
  }
  if (seen.size() != kDownloads + 1)
  {
    return fail("history has " + std::to_string(seen.size()) + " confirmed entries");
  }
  return {true, "downloads == dUsers == " + std::to_string(kDownloads) + ", history 0.." +
                    std::to_string(kDownloads)};
}

Verdict tamperDetection()
{
  Harness h{{.persistent = true}};
  Workload w{h, {"ch1"}, 3};
  w.runUntil(kTamperWorkload);
  h.net().settle();

  std::map<std::string, PublicKey> keys;
  for (auto const &r : h.net().msp().records())
  {
    keys[r.credential.participant.participantID] = r.credential.participant.publicKey;
  }
  auto const ordererKey = h.net().orderer().publicKey();
  h.down();
  KeyResolver const resolver = [keys](std::string const &id) -> std::optional<PublicKey> {
    auto it = keys.find(id);
    return it == keys.end() ? std::nullopt : std::optional{it->second};
  };

  auto const ordererLog = h.root() / "data/orderer/ch1.blocks";
  std::vector<fs::path> const logs{h.root() / "data/peers/peer0.org1/ch1.blocks",
                                   h.root() / "data/peers/peer1.org2/ch1.blocks", ordererLog};
  // orderer logs hold blocks as cut, without validation metadata
  auto check = [&](fs::path const &path) {
    return verifyChain(readBlockLog(path).records, "ch1",
                       path == ordererLog ? KeyResolver{} : resolver, ordererKey);
  };
  std::mt19937_64 rng{7};
  std::size_t     misses = 0;
  std::size_t     blocks = 0;
  for (std::size_t i = 0; i < kTamperSamples; ++i)
  {
    auto const &path  = logs[i % logs.size()];
    auto const  clean = readBlockLog(path);
    blocks            = clean.records.size();
    auto const block  = std::uniform_int_distribution<std::size_t>{0, blocks - 1}(rng);
    auto const offset =
        std::uniform_int_distribution<std::size_t>{0, clean.records[block].size() - 1}(rng);
    tamperBlockLog(path, block, offset);
    auto const report = check(path);
    if (report.ok || report.failedBlock != block)
    {
      ++misses;
      std::fprintf(stderr, "miss: %s block %zu offset %zu -> %s\n", path.c_str(), block, offset,
                   report.ok ? "ok" : report.reason.c_str());
    }
    tamperBlockLog(path, block, offset);
  }
  for (auto const &path : logs)
  {
    if (!check(path).ok)
    {
      return fail("restored log " + path.string() + " does not verify");
    }
  }
  if (misses != 0)
  {
    return fail(std::to_string(misses) + " of " + std::to_string(kTamperSamples) + " missed");
  }
  return {true, std::to_string(kTamperSamples) + " flips over " + std::to_string(blocks) +
                    " blocks, 0 misses"};
}

Verdict aclEndToEnd()
{
  Harness h;
  auto   &alice = h.as("alice");
  auto   &bob   = h.as("bob");
  if (!alice.upload("ch1", uploadOf("p1", "A"), toBytes("secret")).done())
  {
    return fail("upload not confirmed");
  }
  auto denied = [&](std::function<void()> const &op) -> std::optional<std::string> {
    auto const before = snapshot(h.net(), "ch1");
    try
    {
      op();
      return "operation was allowed";
    }
    catch (Error const &e)
    {
      if (e.code() != Errc::AclDenied)
      {
        return std::string{"unexpected "} + e.what();
      }
    }
    h.net().settle();
    if (!(snapshot(h.net(), "ch1") == before))
    {
      return "denial changed ledger or storage";
    }
    return std::nullopt;
  };

  if (auto e = denied([&] { bob.download("ch1", "p1"); }))
  {
    return fail("deny-default download: " + *e);
  }
  if (auto e = denied([&] { bob.remove("ch1", "p1"); }))
  {
    return fail("deny-default delete: " + *e);
  }
  if (!alice.download("ch1", "p1").done())
  {
    return fail("owner download not allowed");
  }
  if (!alice.grant("ch1", grantOf("p1", "g1", "bob", {acl::Operation::Download})).valid())
  {
    return fail("grant failed");
  }
  Bytes got;
  if (!bob.download("ch1", "p1", &got).done() || got != toBytes("secret"))
  {
    return fail("granted download failed");
  }
  if (!alice.revoke("ch1", "g1").valid())
  {
    return fail("revoke failed");
  }
  if (auto e = denied([&] { bob.download("ch1", "p1"); }))
  {
    return fail("after revoke: " + *e);
  }
  return {true, "deny-default, owner, grant, revoke; denials leave no trace"};
}

Verdict consensus()
{
  Harness h{{.peersPerOrg = 2}};
  std::mutex                                                     m;
  std::map<std::string, std::map<std::uint64_t, HashDigest>>     seen;
  for (auto *p : h.net().peers())
  {
    p->setCommitObserver([&](std::string const &peerID, Block const &b, HashDigest hash) {
      std::lock_guard lock{m};
      seen[peerID][b.blockNumber] = hash;
    });
  }
  Workload w{h, {"ch1"}, 5};
  w.runUntil(kConsensusTx);
  h.net().settle();
  if (seen.size() != 4)
  {
    return fail(std::to_string(seen.size()) + " peers observed commits");
  }
  auto const &ref = seen.begin()->second;
  for (auto const &[peer, hashes] : seen)
  {
    if (hashes != ref)
    {
      return fail(peer + " diverges from " + seen.begin()->first);
    }
  }
  return {true, "4 peers, " + std::to_string(ref.size()) + " blocks, " +
                    std::to_string(w.committed()) + " tx, identical state hashes"};
}

Verdict mvcc()
{
  Harness h;
  auto   &alice = h.as("alice");
  if (!alice.upload("ch1", uploadOf("m1", "A"), toBytes("x")).done())
  {
    return fail("upload not confirmed");
  }
  auto &gw = alice.gateway();
  std::vector<TransactionEnvelope> envs;
  for (int i = 0; i < 2; ++i)
  {
    PmdTransaction tx;
    tx.txType      = TxType::Delete;
    tx.payload     = FileRequest{"m1"};
    tx.requesterID = "alice";
    envs.push_back(gw.endorse(gw.prepare("ch1", tx)));
  }
  if (envs[0].rwset.reads != envs[1].rwset.reads)
  {
    return fail("endorsements read different versions");
  }
  for (auto const &e : envs)
  {
    gw.broadcast(e);
  }
  auto const a = gw.awaitCommit("ch1", envs[0].txID);
  auto const b = gw.awaitCommit("ch1", envs[1].txID);
  if (a.blockNumber != b.blockNumber)
  {
    return fail("transactions landed in different blocks");
  }
  std::multiset<ValidationCode> const flags{a.validity, b.validity};
  if (flags != std::multiset{ValidationCode::Valid, ValidationCode::VersionConflict})
  {
    return fail(std::string{validationCodeName(a.validity)} + "/" +
                std::string{validationCodeName(b.validity)});
  }
  return {true, "block " + std::to_string(a.blockNumber) + ": valid + version-conflict"};
}

Verdict replay()
{
  std::size_t total = 0;
  for (std::uint64_t seed = 1; seed <= kReplaySeeds; ++seed)
  {
    Harness h{{.persistent = true, .seed = "replay-" + std::to_string(seed)}};
    Workload w{h, {"ch1"}, seed};
    w.runUntil(kReplayTx);
    h.net().settle();
    total += w.committed();
    std::map<std::string, WorldState> live;
    std::map<std::string, PublicKey>  keys;
    for (auto *p : h.net().peers())
    {
      live[p->id()] = *p->ledger("ch1").snapshot();
    }
    for (auto const &r : h.net().msp().records())
    {
      keys[r.credential.participant.participantID] = r.credential.participant.publicKey;
    }
    h.down();
    for (auto const &[peerID, state] : live)
    {
      BlockStore const store{"ch1", h.root() / "data/peers" / peerID / "ch1.blocks",
                             [&](std::string const &id) -> std::optional<PublicKey> {
                               auto it = keys.find(id);
                               return it == keys.end() ? std::nullopt : std::optional{it->second};
                             }};
      if (!(replayToState(store) == state))
      {
        return fail("seed " + std::to_string(seed) + ": " + peerID + " replay differs");
      }
    }
  }
  return {true, std::to_string(kReplaySeeds) + " seeds, " + std::to_string(total) +
                    " tx, replay == live on every peer"};
}

Verdict uploadAtomicity()
{
  Harness h;
  auto   &alice = h.as("alice");
  auto   &net   = h.net();

  // fault during the file operation: the request is cancelled outright
  net.backend("A").failNext(Errc::Io, 1);
  auto const cancelled = alice.upload("ch1", uploadOf("u1", "A"), toBytes("one"));
  if (cancelled.done() || !cancelled.detail ||
      cancelled.detail->outcome != ResponseOutcome::Cancelled)
  {
    return fail("faulted upload was not cancelled");
  }
  if (alice.asset("ch1", "u1"))
  {
    return fail("cancelled upload left an asset");
  }

  // fault during the file operation while the response cannot be recorded
  IngestRequest staged{"u2", "", toBytes("two")};
  replyPayload<IngestReply>(net.dmsEndpoints().at("A")->call(
      makeMessage(MessageType::Ingest, "ch1", staged)));
  PmdTransaction tx;
  tx.txType      = TxType::Upload;
  tx.payload     = uploadOf("u2", "A");
  tx.requesterID = "alice";
  if (!alice.gateway().submit("ch1", tx).valid())
  {
    return fail("request not committed");
  }
  net.backend("A").failNext(Errc::Io, 1);
  for (auto *p : net.peers())
  {
    p->setEndorsementFault([](ReadWriteSet &) { throw Error(Errc::Unavailable, "partition"); });
  }
  net.dms("A").drain();
  for (auto *p : net.peers())
  {
    p->setEndorsementFault({});
  }
  auto const pending = alice.asset("ch1", "u2");
  if (net.dms("A").stuck().empty() || !pending || !pending->temporary)
  {
    return fail("expected a stuck response and a temporary asset");
  }
  auto const report = net.dms("A").reconcile(net.config().reconcileMaxAgeMs);
  net.settle();
  for (auto const &a : {"u1", "u2"})
  {
    if (alice.asset("ch1", a))
    {
      return fail(std::string{"asset "} + a + " survived reconcile");
    }
  }
  if (report.resubmitted.empty() || !net.dms("A").stuck().empty())
  {
    return fail("stuck response not resolved");
  }

  auto const content = toBytes("three");
  if (!alice.upload("ch1", uploadOf("u3", "A"), content).done())
  {
    return fail("clean upload not confirmed");
  }
  auto const ok = alice.asset("ch1", "u3");
  if (!ok || ok->temporary || ok->checksum != net.backend("A").checksum(ok->fileName) ||
      ok->checksum != contentChecksum(content))
  {
    return fail("confirmed asset does not match the stored file");
  }
  return {true, "io faults leave no confirmed asset; reconcile clears the temporary one"};
}

Verdict isolation()
{
  Harness h{{.secondChannel = true}};
  auto   &net   = h.net();
  auto   &alice = h.as("alice");
  for (auto const &ch : {"ch1", "ch2"})
  {
    if (!alice.upload(ch, uploadOf("same", "A"), toBytes(std::string{"content of "} + ch)).done())
    {
      return fail("upload in " + std::string{ch});
    }
  }
  for (std::string const ch : {"ch1", "ch2"})
  {
    Bytes got;
    if (!alice.download(ch, "same", &got).done() || got != toBytes("content of " + ch))
    {
      return fail(ch + ": same-named file crossed channels");
    }
  }
  Workload w{h, {"ch1", "ch2"}, 9};
  w.runUntil(kIsolationTx);
  net.settle();

  std::map<std::string, std::set<std::string>> txIDs;
  for (std::string const ch : {"ch1", "ch2"})
  {
    for (auto *p : net.peers())
    {
      if (!p->hasChannel(ch))
      {
        continue;
      }
      for (auto const &t : committedTransactions(p->ledger(ch)))
      {
        if (t.envelope.proposal.channelID != ch)
        {
          return fail(p->id() + " holds a foreign transaction in " + ch);
        }
        txIDs[ch].insert(t.envelope.txID);
      }
      for (auto const &[key, entry] : p->ledger(ch).snapshot()->entries)
      {
        auto const from  = key.find('/') + 1;
        auto const owner = key.substr(from, key.find('/', from) - from);
        if (owner != ch)
        {
          return fail(p->id() + " state key " + key + " in " + ch);
        }
      }
      for (auto const &e : p->events(ch, EventsQuery{}).events)
      {
        if (e.channelID != ch || txIDs[ch].count(e.txID) == 0)
        {
          return fail(p->id() + " event " + e.txID + " leaked into " + ch);
        }
      }
      for (auto const &a : confirmedAssets(*p, ch))
      {
        if (a.fileName.rfind(ch + "/", 0) != 0)
        {
          return fail("asset " + a.fileID + " stored as " + a.fileName);
        }
      }
    }
  }
  for (auto *p : net.peers())
  {
    if (p->org() == "org2" && p->hasChannel("ch2"))
    {
      return fail(p->id() + " joined ch2");
    }
  }
  for (auto const &id : txIDs["ch1"])
  {
    if (txIDs["ch2"].count(id) != 0)
    {
      return fail("transaction " + id + " in both channels");
    }
  }
  auto const report = net.dms("A").reconcile(net.config().reconcileMaxAgeMs);
  if (!report.untrackedFiles.empty() || !report.missingFiles.empty() ||
      !report.checksumMismatches.empty())
  {
    return fail("shared storage out of step with the channels");
  }
  return {true, std::to_string(w.committed()) + " interleaved tx, no leaks"};
}

Verdict untracked()
{
  Harness h;
  auto   &alice = h.as("alice");
  if (!alice.upload("ch1", uploadOf("t1", "A"), toBytes("tracked")).done())
  {
    return fail("upload not confirmed");
  }
  auto &net = h.net();
  {
    std::ofstream out{net.backend("A").rootPath() / "stray.bin", std::ios::binary};
    out << "dropped by hand";
  }
  auto const before = snapshot(net, "ch1");
  auto const report = net.dms("A").reconcile(net.config().reconcileMaxAgeMs);
  net.settle();
  if (report.untrackedFiles != std::vector<std::string>{"stray.bin"})
  {
    return fail("untracked files: " + std::to_string(report.untrackedFiles.size()));
  }
  if (!(snapshot(net, "ch1") == before))
  {
    return fail("reconcile changed the ledger or the storage");
  }
  return {true, "stray.bin reported untracked, ledger untouched"};
}

}  // namespace

int main()
{
  spdlog::set_level(spdlog::level::off);
  std::vector<std::pair<std::string, std::function<Verdict()>>> const criteria{
      {"request/response bijection", bijection},
      {"download counter and history", downloadCounter},
      {"tamper detection", tamperDetection},
      {"access control end to end", aclEndToEnd},
      {"peer state agreement", consensus},
      {"version conflict", mvcc},
      {"replay equals live state", replay},
      {"upload atomicity", uploadAtomicity},
      {"channel isolation", isolation},
      {"untracked file report", untracked},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    Verdict    v;
    auto const start = std::chrono::steady_clock::now();
    try
    {
      v = criteria[i].second();
    }
    catch (std::exception const &e)
    {
      v = fail(std::string{"exception: "} + e.what());
    }
    auto const ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    failed += v.pass ? 0 : 1;
    std::printf("criterion %zu %s %s: %s [%lld ms]\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), v.detail.c_str(), static_cast<long long>(ms));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
