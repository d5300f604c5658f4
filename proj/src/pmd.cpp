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

#include "provhl/pmd.hpp"

#include <algorithm>
#include <cctype>

namespace provhl {

std::string_view txTypeName(TxType t) noexcept
{
  switch (t)
  {
  case TxType::Upload: return "Upload";
  case TxType::Download: return "Download";
  case TxType::CopyWithin: return "CopyWithin";
  case TxType::Delete: return "Delete";
  case TxType::CopyToStorage: return "CopyToStorage";
  case TxType::TransferToStorage: return "TransferToStorage";
  case TxType::GrantAccess: return "GrantAccess";
  case TxType::RevokeAccess: return "RevokeAccess";
  case TxType::Config: return "Config";
  }
  return "?";
}

std::optional<TxType> parseTxType(std::string_view text) noexcept
{
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  for (std::uint8_t i = 0; i < kTxTypeCount; ++i)
  {
    if (lower(txTypeName(static_cast<TxType>(i))) == lower(text))
    {
      return static_cast<TxType>(i);
    }
  }
  return std::nullopt;
}

std::string_view phaseName(Phase p) noexcept
{
  return p == Phase::ClientRequest ? "ClientRequest" : "ServerResponse";
}

bool isStorageAffecting(TxType t) noexcept
{
  switch (t)
  {
  case TxType::Upload:
  case TxType::Download:
  case TxType::CopyWithin:
  case TxType::Delete:
  case TxType::CopyToStorage:
  case TxType::TransferToStorage: return true;
  default: return false;
  }
}

StorageInfo const *ChannelConfig::findStorage(std::string_view storageID) const noexcept
{
  auto it = std::find_if(storages.begin(), storages.end(),
                         [&](StorageInfo const &s) { return s.storageID == storageID; });
  return it == storages.end() ? nullptr : &*it;
}

void encode(codec::Writer &w, TxType t) { w.u8(static_cast<std::uint8_t>(t)); }
void decode(codec::Reader &r, TxType &t) { t = r.enumeration<TxType>(kTxTypeCount); }
void encode(codec::Writer &w, Phase p) { w.u8(static_cast<std::uint8_t>(p)); }
void decode(codec::Reader &r, Phase &p) { p = r.enumeration<Phase>(2); }

void encode(codec::Writer &w, PeerInfo const &p)
{
  w.str(p.peerID);
  w.str(p.orgID);
}

void decode(codec::Reader &r, PeerInfo &p)
{
  p.peerID = r.str();
  p.orgID  = r.str();
}

void encode(codec::Writer &w, StorageInfo const &s)
{
  w.str(s.storageID);
  w.str(s.orgID);
  w.str(s.dmsID);
}

void decode(codec::Reader &r, StorageInfo &s)
{
  s.storageID = r.str();
  s.orgID     = r.str();
  s.dmsID     = r.str();
}

void encode(codec::Writer &w, ChannelConfig const &c)
{
  w.str(c.channelID);
  codec::encode(w, c.memberOrgIDs);
  codec::encode(w, c.peers);
  w.str(c.policy);
  codec::encode(w, c.storages);
  w.fixed(c.ordererPublicKey);
  w.fixed(c.mspRootPublicKey);
  codec::encode(w, c.bootstrapRules);
}

void decode(codec::Reader &r, ChannelConfig &c)
{
  c.channelID = r.str();
  codec::decode(r, c.memberOrgIDs);
  codec::decode(r, c.peers);
  c.policy = r.str();
  codec::decode(r, c.storages);
  codec::decode(r, c.ordererPublicKey);
  codec::decode(r, c.mspRootPublicKey);
  codec::decode(r, c.bootstrapRules);
}

namespace {

struct PayloadEncoder
{
  codec::Writer &w;

  void operator()(UploadRequest const &p) const
  {
    w.str(p.fileID);
    w.str(p.storageID);
    w.str(p.fileName);
    encode(w, p.assetType);
    encode(w, p.source);
    codec::encode(w, p.metadataURI);
  }
  void operator()(FileRequest const &p) const { w.str(p.fileID); }
  void operator()(CopyRequest const &p) const
  {
    w.str(p.fileID);
    w.str(p.newFileID);
    codec::encode(w, p.destinationStorageID);
  }
  void operator()(TransferRequest const &p) const
  {
    w.str(p.fileID);
    w.str(p.destinationStorageID);
  }
  void operator()(GrantRequest const &p) const
  {
    w.str(p.fileID);
    acl::encode(w, p.rule);
  }
  void operator()(RevokeRequest const &p) const { w.str(p.ruleID); }
  void operator()(ServerResponse const &p) const
  {
    w.u8(static_cast<std::uint8_t>(p.outcome));
    w.str(p.reason);
    w.str(p.fileName);
    w.str(p.checksum);
  }
  void operator()(ChannelConfig const &p) const { encode(w, p); }
};

}  // namespace

void encode(codec::Writer &w, TxPayload const &p)
{
  w.u8(static_cast<std::uint8_t>(p.index()));
  std::visit(PayloadEncoder{w}, p);
}

void decode(codec::Reader &r, TxPayload &p)
{
  switch (r.u8())
  {
  case 0:
  {
    UploadRequest u;
    u.fileID    = r.str();
    u.storageID = r.str();
    u.fileName  = r.str();
    decode(r, u.assetType);
    decode(r, u.source);
    codec::decode(r, u.metadataURI);
    p = std::move(u);
    break;
  }
  case 1: p = FileRequest{r.str()}; break;
  case 2:
  {
    CopyRequest c;
    c.fileID    = r.str();
    c.newFileID = r.str();
    codec::decode(r, c.destinationStorageID);
    p = std::move(c);
    break;
  }
  case 3:
  {
    TransferRequest t;
    t.fileID               = r.str();
    t.destinationStorageID = r.str();
    p                      = std::move(t);
    break;
  }
  case 4:
  {
    GrantRequest g;
    g.fileID = r.str();
    acl::decode(r, g.rule);
    p = std::move(g);
    break;
  }
  case 5: p = RevokeRequest{r.str()}; break;
  case 6:
  {
    ServerResponse s;
    s.outcome  = r.enumeration<ResponseOutcome>(2);
    s.reason   = r.str();
    s.fileName = r.str();
    s.checksum = r.str();
    p          = std::move(s);
    break;
  }
  case 7:
  {
    ChannelConfig c;
    decode(r, c);
    p = std::move(c);
    break;
  }
  default: throw Error(Errc::Malformed, "unknown payload tag");
  }
}

void encode(codec::Writer &w, PmdTransaction const &t)
{
  encode(w, t.txType);
  encode(w, t.phase);
  encode(w, t.payload);
  w.str(t.requesterID);
  codec::encode(w, t.linkedRequestTxID);
}

void decode(codec::Reader &r, PmdTransaction &t)
{
  decode(r, t.txType);
  decode(r, t.phase);
  decode(r, t.payload);
  t.requesterID = r.str();
  codec::decode(r, t.linkedRequestTxID);
}

void encode(codec::Writer &w, Version const &v)
{
  w.u64(v.blockNumber);
  w.u32(v.txIndex);
}

void decode(codec::Reader &r, Version &v)
{
  v.blockNumber = r.u64();
  v.txIndex     = r.u32();
}

void encode(codec::Writer &w, ReadEntry const &e)
{
  w.str(e.key);
  codec::encode(w, e.version);
}

void decode(codec::Reader &r, ReadEntry &e)
{
  e.key = r.str();
  codec::decode(r, e.version);
}

void encode(codec::Writer &w, WriteEntry const &e)
{
  w.str(e.key);
  codec::encode(w, e.value);
}

void decode(codec::Reader &r, WriteEntry &e)
{
  e.key = r.str();
  codec::decode(r, e.value);
}

void encode(codec::Writer &w, ReadWriteSet const &s)
{
  codec::encode(w, s.reads);
  codec::encode(w, s.writes);
}

void decode(codec::Reader &r, ReadWriteSet &s)
{
  codec::decode(r, s.reads);
  codec::decode(r, s.writes);
}

}  // namespace provhl
