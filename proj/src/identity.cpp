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

#include "provhl/identity.hpp"

#include "provhl/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>

namespace provhl {

std::string_view roleName(Role role) noexcept
{
  switch (role)
  {
  case Role::User: return "User";
  case Role::Dms: return "Dms";
  case Role::Supervisor: return "Supervisor";
  case Role::Owner: return "Owner";
  case Role::MspAdmin: return "MspAdmin";
  }
  return "?";
}

std::optional<Role> parseRole(std::string_view text) noexcept
{
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  auto const needle = lower(text);
  for (std::uint8_t i = 0; i < kRoleCount; ++i)
  {
    auto const role = static_cast<Role>(i);
    if (lower(roleName(role)) == needle)
    {
      return role;
    }
  }
  return std::nullopt;
}

bool isValidId(std::string_view id) noexcept
{
  if (id.empty() || id.size() > 256)
  {
    return false;
  }
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '.' || c == '_' || c == '-' || c == '@';
  });
}

void encode(codec::Writer &w, Role role) { w.u8(static_cast<std::uint8_t>(role)); }
void decode(codec::Reader &r, Role &role) { role = r.enumeration<Role>(kRoleCount); }

void encode(codec::Writer &w, Participant const &p)
{
  w.str(p.participantID);
  w.str(p.orgID);
  encode(w, p.role);
  w.fixed(p.publicKey);
}

void decode(codec::Reader &r, Participant &p)
{
  p.participantID = r.str();
  p.orgID         = r.str();
  decode(r, p.role);
  codec::decode(r, p.publicKey);
}

void encode(codec::Writer &w, Credential const &c)
{
  encode(w, c.participant);
  w.u64(c.issuedAt);
  w.bytes(c.mspSignature);
}

void decode(codec::Reader &r, Credential &c)
{
  decode(r, c.participant);
  c.issuedAt     = r.u64();
  c.mspSignature = r.bytes();
}

Bytes credentialSigningBytes(Participant const &p, TimeMs issuedAt)
{
  codec::Writer w;
  encode(w, p);
  w.u64(issuedAt);
  return w.take();
}

bool verifySignature(Participant const &p, ByteView message, ByteView signature) noexcept
{
  return verify(p.publicKey, message, signature);
}

Msp::Msp(KeyPair root, Clock &clock)
  : root_{std::move(root)}
  , clock_{clock}
{}

Credential Msp::bootstrapAdmin(std::string const &participantID, std::string const &orgID,
                               PublicKey const &publicKey)
{
  std::unique_lock lock{mutex_};
  if (!registry_.empty())
  {
    throw Error(Errc::NotAuthorized, "MSP registry already bootstrapped");
  }
  if (!isValidId(participantID) || !isValidId(orgID))
  {
    throw Error(Errc::Malformed, "invalid participant or org identifier");
  }
  Credential cred;
  cred.participant  = Participant{participantID, orgID, Role::MspAdmin, publicKey};
  cred.issuedAt     = clock_.now();
  cred.mspSignature = root_.sign(credentialSigningBytes(cred.participant, cred.issuedAt));
  registry_[participantID] = Record{cred, false};
  persistLocked();
  return cred;
}

void Msp::requireAdmin(Credential const &admin) const
{
  auto const who = authenticate(admin);
  if (who.role != Role::MspAdmin)
  {
    throw Error(Errc::NotAuthorized, who.participantID + " is not an MSP administrator");
  }
}

Credential Msp::registerParticipant(Credential const &admin, std::string const &participantID,
                                    std::string const &orgID, Role role,
                                    PublicKey const &publicKey)
{
  requireAdmin(admin);
  if (!isValidId(participantID) || !isValidId(orgID))
  {
    throw Error(Errc::Malformed, "invalid participant or org identifier");
  }
  std::unique_lock lock{mutex_};
  if (registry_.contains(participantID))
  {
    throw Error(Errc::DuplicateId, participantID);
  }
  Credential cred;
  cred.participant  = Participant{participantID, orgID, role, publicKey};
  cred.issuedAt     = clock_.now();
  cred.mspSignature = root_.sign(credentialSigningBytes(cred.participant, cred.issuedAt));
  registry_[participantID] = Record{cred, false};
  persistLocked();
  return cred;
}

Participant Msp::authenticate(Credential const &cred) const
{
  if (!verify(root_.publicKey(), credentialSigningBytes(cred.participant, cred.issuedAt),
              cred.mspSignature))
  {
    throw Error(Errc::BadSignature, "credential not signed by this MSP");
  }
  std::shared_lock lock{mutex_};
  auto const       it = registry_.find(cred.participant.participantID);
  if (it == registry_.end() || it->second.credential != cred)
  {
    throw Error(Errc::Unknown, cred.participant.participantID);
  }
  if (it->second.revoked)
  {
    throw Error(Errc::Revoked, cred.participant.participantID);
  }
  return cred.participant;
}

void Msp::revokeCredential(Credential const &admin, std::string const &participantID)
{
  requireAdmin(admin);
  std::unique_lock lock{mutex_};
  auto const       it = registry_.find(participantID);
  if (it == registry_.end())
  {
    throw Error(Errc::Unknown, participantID);
  }
  it->second.revoked = true;
  persistLocked();
}

std::optional<Msp::Record> Msp::lookup(std::string const &participantID) const
{
  std::shared_lock lock{mutex_};
  auto const       it = registry_.find(participantID);
  if (it == registry_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

std::optional<Participant> Msp::findParticipant(std::string const &participantID) const
{
  auto const rec = lookup(participantID);
  if (!rec)
  {
    return std::nullopt;
  }
  return rec->credential.participant;
}

std::vector<Msp::Record> Msp::records() const
{
  std::shared_lock    lock{mutex_};
  std::vector<Record> out;
  out.reserve(registry_.size());
  for (auto const &[id, rec] : registry_)
  {
    out.push_back(rec);
  }
  return out;
}

void Msp::attachFile(std::filesystem::path path)
{
  std::unique_lock lock{mutex_};
  file_ = std::move(path);
  persistLocked();
}

// Registry file: one record per line,
//   participantID orgID role publicKeyHex revoked signatureHex issuedAt
void Msp::persistLocked() const
{
  if (file_.empty())
  {
    return;
  }
  auto const    tmp = file_.string() + ".tmp";
  std::ofstream out{tmp, std::ios::trunc};
  for (auto const &[id, rec] : registry_)
  {
    auto const &p = rec.credential.participant;
    out << p.participantID << ' ' << p.orgID << ' ' << roleName(p.role) << ' '
        << toHex(p.publicKey) << ' ' << (rec.revoked ? 1 : 0) << ' '
        << toHex(rec.credential.mspSignature) << ' ' << rec.credential.issuedAt << '\n';
  }
  out.close();
  if (!out)
  {
    throw Error(Errc::Io, "cannot write MSP registry " + file_.string());
  }
  std::filesystem::rename(tmp, file_);
}

void Msp::loadFile(std::filesystem::path const &path)
{
  std::ifstream in{path};
  if (!in)
  {
    throw Error(Errc::Io, "cannot read MSP registry " + path.string());
  }
  std::map<std::string, Record> loaded;
  std::string                   line;
  std::size_t                   lineNo = 0;
  while (std::getline(in, line))
  {
    ++lineNo;
    if (line.empty())
    {
      continue;
    }
    std::istringstream fields{line};
    std::string        id, org, role, pub, sig;
    int                revoked = 0;
    TimeMs             issued  = 0;
    if (!(fields >> id >> org >> role >> pub >> revoked >> sig >> issued))
    {
      throw Error(Errc::Malformed, "MSP registry line " + std::to_string(lineNo));
    }
    auto const parsedRole = parseRole(role);
    auto const pubBytes   = fromHex(pub);
    if (!parsedRole || pubBytes.size() != 32)
    {
      throw Error(Errc::Malformed, "MSP registry line " + std::to_string(lineNo));
    }
    Record rec;
    rec.credential.participant.participantID = id;
    rec.credential.participant.orgID         = org;
    rec.credential.participant.role          = *parsedRole;
    std::copy(pubBytes.begin(), pubBytes.end(), rec.credential.participant.publicKey.begin());
    rec.credential.issuedAt     = issued;
    rec.credential.mspSignature = fromHex(sig);
    rec.revoked                 = revoked != 0;
    if (!verify(root_.publicKey(),
                credentialSigningBytes(rec.credential.participant, rec.credential.issuedAt),
                rec.credential.mspSignature))
    {
      throw Error(Errc::BadSignature, "MSP registry record for " + id);
    }
    loaded[id] = std::move(rec);
  }
  std::unique_lock lock{mutex_};
  registry_ = std::move(loaded);
}

}  // namespace provhl
