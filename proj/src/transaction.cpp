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

#include "provhl/transaction.hpp"

namespace provhl {

void encode(codec::Writer &w, Proposal const &p)
{
  encode(w, p.tx);
  w.str(p.channelID);
  w.u64(p.timestamp);
  w.bytes(p.nonce);
  w.bytes(p.clientSignature);
}

void decode(codec::Reader &r, Proposal &p)
{
  decode(r, p.tx);
  p.channelID       = r.str();
  p.timestamp       = r.u64();
  p.nonce           = r.bytes();
  p.clientSignature = r.bytes();
}

Bytes proposalSigningBytes(Proposal const &p)
{
  codec::Writer w;
  encode(w, p.tx);
  w.str(p.channelID);
  w.u64(p.timestamp);
  w.bytes(p.nonce);
  return w.take();
}

HashDigest proposalDigest(Proposal const &p)
{
  return sha256(proposalSigningBytes(p));
}

std::string computeTxID(Proposal const &p)
{
  return proposalDigest(p).hex();
}

void encode(codec::Writer &w, EndorsementResponse const &e)
{
  w.str(e.peerID);
  encode(w, e.rwset);
  encode(w, e.resultDigest);
  w.bytes(e.peerSignature);
}

void decode(codec::Reader &r, EndorsementResponse &e)
{
  e.peerID = r.str();
  decode(r, e.rwset);
  decode(r, e.resultDigest);
  e.peerSignature = r.bytes();
}

Bytes endorsementSigningBytes(HashDigest const &proposal, HashDigest const &result)
{
  codec::Writer w;
  encode(w, proposal);
  encode(w, result);
  return w.take();
}

void encode(codec::Writer &w, TransactionEnvelope const &e)
{
  w.str(e.txID);
  encode(w, e.proposal);
  encode(w, e.rwset);
  codec::encode(w, e.endorsements);
}

void decode(codec::Reader &r, TransactionEnvelope &e)
{
  e.txID = r.str();
  decode(r, e.proposal);
  decode(r, e.rwset);
  codec::decode(r, e.endorsements);
}

std::string_view validationCodeName(ValidationCode c) noexcept
{
  switch (c)
  {
  case ValidationCode::Valid: return "valid";
  case ValidationCode::PolicyFailure: return "policy";
  case ValidationCode::BadEndorsement: return "bad-endorsement";
  case ValidationCode::VersionConflict: return "version-conflict";
  case ValidationCode::DuplicateTxId: return "duplicate";
  case ValidationCode::LinkageFailure: return "linkage";
  case ValidationCode::BadClientSignature: return "bad-client-signature";
  case ValidationCode::Malformed: return "malformed";
  }
  return "?";
}

void encode(codec::Writer &w, ValidationCode c) { w.u8(static_cast<std::uint8_t>(c)); }
void decode(codec::Reader &r, ValidationCode &c)
{
  c = r.enumeration<ValidationCode>(kValidationCodeCount);
}

}  // namespace provhl
