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

#include "provhl/acl.hpp"
#include "provhl/asset.hpp"
#include "provhl/crypto.hpp"

#include <compare>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace provhl {

enum class TxType : std::uint8_t
{
  Upload,
  Download,
  CopyWithin,
  Delete,
  CopyToStorage,
  TransferToStorage,
  GrantAccess,
  RevokeAccess,
  Config,  // genesis only
};
inline constexpr std::uint8_t kTxTypeCount = 9;

enum class Phase : std::uint8_t
{
  ClientRequest,
  ServerResponse,
};

std::string_view      txTypeName(TxType t) noexcept;
std::optional<TxType> parseTxType(std::string_view text) noexcept;
std::string_view      phaseName(Phase p) noexcept;

/// Types whose ClientRequest must be followed by a DMS ServerResponse.
bool isStorageAffecting(TxType t) noexcept;

struct UploadRequest
{
  std::string                fileID;
  std::string                storageID;
  std::string                fileName;  // name suggested by the uploader
  AssetType                  assetType{AssetType::Primary};
  SourceDescriptor           source{FacilitySource{}};
  std::optional<std::string> metadataURI;
  bool                       operator==(UploadRequest const &) const = default;
};

/// Download and Delete.
struct FileRequest
{
  std::string fileID;
  bool        operator==(FileRequest const &) const = default;
};

/// CopyWithin (no destination) and CopyToStorage.
struct CopyRequest
{
  std::string                fileID;
  std::string                newFileID;
  std::optional<std::string> destinationStorageID;
  bool                       operator==(CopyRequest const &) const = default;
};

struct TransferRequest
{
  std::string fileID;
  std::string destinationStorageID;
  bool        operator==(TransferRequest const &) const = default;
};

struct GrantRequest
{
  std::string  fileID;
  acl::AclRule rule;  // resource is forced to asset:<fileID>
  bool         operator==(GrantRequest const &) const = default;
};

struct RevokeRequest
{
  std::string ruleID;
  bool        operator==(RevokeRequest const &) const = default;
};

enum class ResponseOutcome : std::uint8_t
{
  Done,
  Cancelled,
};

struct ServerResponse
{
  ResponseOutcome outcome{ResponseOutcome::Done};
  std::string     reason;
  std::string     fileName;
  std::string     checksum;
  bool            operator==(ServerResponse const &) const = default;
};

struct PeerInfo
{
  std::string peerID;
  std::string orgID;
  bool        operator==(PeerInfo const &) const = default;
};

struct StorageInfo
{
  std::string storageID;
  std::string orgID;
  std::string dmsID;  // participant operating the storage
  bool        operator==(StorageInfo const &) const = default;
};

/// Channel genesis configuration, recorded in block 0.
struct ChannelConfig
{
  std::string               channelID;
  std::vector<std::string>  memberOrgIDs;
  std::vector<PeerInfo>     peers;
  std::string               policy;
  std::vector<StorageInfo>  storages;
  PublicKey                 ordererPublicKey{};
  PublicKey                 mspRootPublicKey{};
  std::vector<acl::AclRule> bootstrapRules;
  bool                      operator==(ChannelConfig const &) const = default;

  StorageInfo const *findStorage(std::string_view storageID) const noexcept;
};

using TxPayload = std::variant<UploadRequest, FileRequest, CopyRequest, TransferRequest,
                               GrantRequest, RevokeRequest, ServerResponse, ChannelConfig>;

struct PmdTransaction
{
  TxType                     txType{TxType::Upload};
  Phase                      phase{Phase::ClientRequest};
  TxPayload                  payload{FileRequest{}};
  std::string                requesterID;
  std::optional<std::string> linkedRequestTxID;  // ServerResponse only
  bool                       operator==(PmdTransaction const &) const = default;
};

/// Version of a state entry: the (block, transaction) that last wrote it.
struct Version
{
  std::uint64_t blockNumber{0};
  std::uint32_t txIndex{0};
  auto          operator<=>(Version const &) const = default;
};

struct ReadEntry
{
  std::string            key;
  std::optional<Version> version;  // absent key
  bool                   operator==(ReadEntry const &) const = default;
};

struct WriteEntry
{
  std::string          key;
  std::optional<Bytes> value;  // tombstone when empty
  bool                 operator==(WriteEntry const &) const = default;
};

struct ReadWriteSet
{
  std::vector<ReadEntry>  reads;
  std::vector<WriteEntry> writes;
  bool                    operator==(ReadWriteSet const &) const = default;
};

void encode(codec::Writer &w, TxType t);
void decode(codec::Reader &r, TxType &t);
void encode(codec::Writer &w, Phase p);
void decode(codec::Reader &r, Phase &p);
void encode(codec::Writer &w, PeerInfo const &p);
void decode(codec::Reader &r, PeerInfo &p);
void encode(codec::Writer &w, StorageInfo const &s);
void decode(codec::Reader &r, StorageInfo &s);
void encode(codec::Writer &w, ChannelConfig const &c);
void decode(codec::Reader &r, ChannelConfig &c);
void encode(codec::Writer &w, TxPayload const &p);
void decode(codec::Reader &r, TxPayload &p);
void encode(codec::Writer &w, PmdTransaction const &t);
void decode(codec::Reader &r, PmdTransaction &t);
void encode(codec::Writer &w, Version const &v);
void decode(codec::Reader &r, Version &v);
void encode(codec::Writer &w, ReadEntry const &e);
void decode(codec::Reader &r, ReadEntry &e);
void encode(codec::Writer &w, WriteEntry const &e);
void decode(codec::Reader &r, WriteEntry &e);
void encode(codec::Writer &w, ReadWriteSet const &s);
void decode(codec::Reader &r, ReadWriteSet &s);

}  // namespace provhl
