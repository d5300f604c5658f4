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

#include "provhl/asset.hpp"

#include <algorithm>
#include <cctype>

namespace provhl {

std::string_view assetTypeName(AssetType t) noexcept
{
  switch (t)
  {
  case AssetType::Primary: return "primary";
  case AssetType::Secondary: return "secondary";
  case AssetType::Replica: return "replica";
  }
  return "?";
}

std::optional<AssetType> parseAssetType(std::string_view text) noexcept
{
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::uint8_t i = 0; i < kAssetTypeCount; ++i)
  {
    if (assetTypeName(static_cast<AssetType>(i)) == lower)
    {
      return static_cast<AssetType>(i);
    }
  }
  return std::nullopt;
}

void encode(codec::Writer &w, AssetType t) { w.u8(static_cast<std::uint8_t>(t)); }
void decode(codec::Reader &r, AssetType &t) { t = r.enumeration<AssetType>(kAssetTypeCount); }

void encode(codec::Writer &w, SourceDescriptor const &s)
{
  w.u8(static_cast<std::uint8_t>(s.index()));
  if (auto const *f = std::get_if<FacilitySource>(&s))
  {
    w.str(f->expFacilityID);
  }
  else
  {
    auto const &d = std::get<DerivedSource>(s);
    w.str(d.sourceFileID);
    w.str(d.toolName);
  }
}

void decode(codec::Reader &r, SourceDescriptor &s)
{
  switch (r.u8())
  {
  case 0: s = FacilitySource{r.str()}; break;
  case 1:
  {
    DerivedSource d;
    d.sourceFileID = r.str();
    d.toolName     = r.str();
    s              = std::move(d);
    break;
  }
  default: throw Error(Errc::Malformed, "unknown source descriptor tag");
  }
}

void encode(codec::Writer &w, DownloadRecord const &d)
{
  w.str(d.userID);
  w.str(d.txID);
}

void decode(codec::Reader &r, DownloadRecord &d)
{
  d.userID = r.str();
  d.txID   = r.str();
}

void encode(codec::Writer &w, FileAsset const &a)
{
  w.str(a.fileID);
  w.str(a.fileName);
  w.str(a.storageID);
  w.str(a.creatorID);
  w.str(a.ownerID);
  encode(w, a.assetType);
  encode(w, a.source);
  w.u64(a.createdAt);
  w.u64(a.downloads);
  codec::encode(w, a.dUsers);
  codec::encode(w, a.metadataURI);
  w.boolean(a.temporary);
  codec::encode(w, a.checksum);
}

void decode(codec::Reader &r, FileAsset &a)
{
  a.fileID    = r.str();
  a.fileName  = r.str();
  a.storageID = r.str();
  a.creatorID = r.str();
  a.ownerID   = r.str();
  decode(r, a.assetType);
  decode(r, a.source);
  a.createdAt = r.u64();
  a.downloads = r.u64();
  codec::decode(r, a.dUsers);
  codec::decode(r, a.metadataURI);
  a.temporary = r.boolean();
  codec::decode(r, a.checksum);
}

std::string describeSource(SourceDescriptor const &s)
{
  if (auto const *f = std::get_if<FacilitySource>(&s))
  {
    return "{expFacility," + f->expFacilityID + "}";
  }
  auto const &d = std::get<DerivedSource>(s);
  return "{{file," + d.sourceFileID + "},{tool," + d.toolName + "}}";
}

}  // namespace provhl
