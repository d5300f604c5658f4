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

#include "provhl/clock.hpp"
#include "provhl/crypto.hpp"
#include "provhl/pmd.hpp"

#include <string>
#include <vector>

namespace provhl {

/// A client's signed request to run one PMD transaction on a channel.
struct Proposal
{
  PmdTransaction tx;
  std::string    channelID;
  TimeMs         timestamp{0};
  Bytes          nonce;  // makes otherwise identical requests distinct
  Signature      clientSignature;

  bool operator==(Proposal const &) const = default;
};

void encode(codec::Writer &w, Proposal const &p);
void decode(codec::Reader &r, Proposal &p);

/// Everything in the proposal except the signature; this is what the client
/// signs and what the transaction id hashes.
Bytes       proposalSigningBytes(Proposal const &p);
HashDigest  proposalDigest(Proposal const &p);
std::string computeTxID(Proposal const &p);

struct EndorsementResponse
{
  std::string  peerID;
  ReadWriteSet rwset;
  HashDigest   resultDigest;
  Signature    peerSignature;

  bool operator==(EndorsementResponse const &) const = default;
};

void encode(codec::Writer &w, EndorsementResponse const &e);
void decode(codec::Reader &r, EndorsementResponse &e);

Bytes endorsementSigningBytes(HashDigest const &proposal, HashDigest const &result);

struct TransactionEnvelope
{
  std::string                      txID;
  Proposal                         proposal;
  ReadWriteSet                     rwset;
  std::vector<EndorsementResponse> endorsements;

  bool operator==(TransactionEnvelope const &) const = default;
};

void encode(codec::Writer &w, TransactionEnvelope const &e);
void decode(codec::Reader &r, TransactionEnvelope &e);

enum class ValidationCode : std::uint8_t
{
  Valid,
  PolicyFailure,
  BadEndorsement,
  VersionConflict,
  DuplicateTxId,
  LinkageFailure,
  BadClientSignature,
  Malformed,
};
inline constexpr std::uint8_t kValidationCodeCount = 8;

std::string_view validationCodeName(ValidationCode c) noexcept;

void encode(codec::Writer &w, ValidationCode c);
void decode(codec::Reader &r, ValidationCode &c);

}  // namespace provhl
