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

#include "provhl/codec.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace provhl {

enum class AssetType : std::uint8_t
{
  Primary,
  Secondary,
  Replica,
};
inline constexpr std::uint8_t kAssetTypeCount = 3;

std::string_view         assetTypeName(AssetType t) noexcept;
std::optional<AssetType> parseAssetType(std::string_view text) noexcept;

/// File produced directly by an experimental facility.
struct FacilitySource
{
  std::string expFacilityID;
  bool        operator==(FacilitySource const &) const = default;
};

/// File obtained from another file with some tool ("copy" for replicas).
struct DerivedSource
{
  std::string sourceFileID;
  std::string toolName;
  bool        operator==(DerivedSource const &) const = default;
};

using SourceDescriptor = std::variant<FacilitySource, DerivedSource>;

struct DownloadRecord
{
  std::string userID;
  std::string txID;  // ClientRequest that initiated the download
  bool        operator==(DownloadRecord const &) const = default;
};

/// Provenance metadata of one file: the unit of world state.
struct FileAsset
{
  std::string                 fileID;
  std::string                 fileName;
  std::string                 storageID;
  std::string                 creatorID;
  std::string                 ownerID;
  AssetType                   assetType{AssetType::Primary};
  SourceDescriptor            source{FacilitySource{}};
  std::uint64_t               createdAt{0};  // whole seconds since epoch, UTC
  std::uint64_t               downloads{0};
  std::vector<DownloadRecord> dUsers;
  std::optional<std::string>  metadataURI;
  bool                        temporary{false};
  // extension: hex SHA-256 of the stored content as reported by the DMS
  std::optional<std::string> checksum;

  bool operator==(FileAsset const &) const = default;
};

void encode(codec::Writer &w, AssetType t);
void decode(codec::Reader &r, AssetType &t);
void encode(codec::Writer &w, SourceDescriptor const &s);
void decode(codec::Reader &r, SourceDescriptor &s);
void encode(codec::Writer &w, DownloadRecord const &d);
void decode(codec::Reader &r, DownloadRecord &d);
void encode(codec::Writer &w, FileAsset const &a);
void decode(codec::Reader &r, FileAsset &a);

std::string describeSource(SourceDescriptor const &s);

}  // namespace provhl
