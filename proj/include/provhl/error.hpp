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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace provhl {

enum class Errc : std::uint16_t
{
  Malformed = 1,
  ChainMismatch,
  BadSignature,
  NotFound,
  NotAuthorized,
  DuplicateId,
  Revoked,
  Unknown,
  ParseError,
  AclDenied,
  UnknownAsset,
  AssetTemporary,
  DuplicateFileId,
  RequestAlreadyConsumed,
  WrongRole,
  UnknownStorage,
  SameStorageDestination,
  NotOwner,
  UnknownRule,
  EndorsementMismatch,
  PolicyUnsatisfiable,
  Timeout,
  UnknownChannel,
  DuplicateChannel,
  ConfigInvalid,
  OutOfRange,
  Io,
  Unavailable,
  InvalidTransaction,
  Capacity,
};

constexpr std::string_view errcName(Errc code) noexcept
{
  switch (code)
  {
  case Errc::Malformed: return "malformed";
  case Errc::ChainMismatch: return "chain-mismatch";
  case Errc::BadSignature: return "bad-signature";
  case Errc::NotFound: return "not-found";
  case Errc::NotAuthorized: return "not-authorized";
  case Errc::DuplicateId: return "duplicate-id";
  case Errc::Revoked: return "revoked";
  case Errc::Unknown: return "unknown";
  case Errc::ParseError: return "parse-error";
  case Errc::AclDenied: return "acl-denied";
  case Errc::UnknownAsset: return "unknown-asset";
  case Errc::AssetTemporary: return "asset-temporary";
  case Errc::DuplicateFileId: return "duplicate-fileID";
  case Errc::RequestAlreadyConsumed: return "request-already-consumed";
  case Errc::WrongRole: return "wrong-role";
  case Errc::UnknownStorage: return "unknown-storage";
  case Errc::SameStorageDestination: return "same-storage-destination";
  case Errc::NotOwner: return "not-owner";
  case Errc::UnknownRule: return "unknown-rule";
  case Errc::EndorsementMismatch: return "endorsement-mismatch";
  case Errc::PolicyUnsatisfiable: return "policy-unsatisfiable";
  case Errc::Timeout: return "timeout";
  case Errc::UnknownChannel: return "unknown-channel";
  case Errc::DuplicateChannel: return "duplicate-channel";
  case Errc::ConfigInvalid: return "config-invalid";
  case Errc::OutOfRange: return "out-of-range";
  case Errc::Io: return "io";
  case Errc::Unavailable: return "unavailable";
  case Errc::InvalidTransaction: return "invalid-transaction";
  case Errc::Capacity: return "capacity";
  }
  return "unknown-error";
}

/// Every failure surfaced by the library carries one of the codes above so
/// callers (and the CLI exit-code table) can dispatch on it.
class Error : public std::runtime_error
{
public:
  Error(Errc code, std::string const &detail)
    : std::runtime_error(std::string{errcName(code)} + (detail.empty() ? "" : ": " + detail))
    , code_{code}
    , detail_{detail}
  {}

  Errc               code() const noexcept { return code_; }
  std::string const &detail() const noexcept { return detail_; }

private:
  Errc        code_;
  std::string detail_;
};

}  // namespace provhl
