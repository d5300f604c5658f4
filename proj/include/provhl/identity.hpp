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
#include "provhl/codec.hpp"
#include "provhl/crypto.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace provhl {

enum class Role : std::uint8_t
{
  User,
  Dms,
  Supervisor,
  Owner,
  MspAdmin,
};
inline constexpr std::uint8_t kRoleCount = 5;

std::string_view    roleName(Role role) noexcept;
std::optional<Role> parseRole(std::string_view text) noexcept;  // case-insensitive

/// Identifiers appear inside state keys and line-oriented files, so they are
/// restricted to [A-Za-z0-9._@-] and must be non-empty.
bool isValidId(std::string_view id) noexcept;

struct Participant
{
  std::string participantID;
  std::string orgID;
  Role        role{Role::User};
  PublicKey   publicKey{};

  bool operator==(Participant const &) const = default;
};

void encode(codec::Writer &w, Participant const &p);
void decode(codec::Reader &r, Participant &p);
void encode(codec::Writer &w, Role role);
void decode(codec::Reader &r, Role &role);

struct Credential
{
  Participant participant;
  TimeMs      issuedAt{0};
  Signature   mspSignature;

  bool operator==(Credential const &) const = default;
};

void encode(codec::Writer &w, Credential const &c);
void decode(codec::Reader &r, Credential &c);

/// Bytes the MSP signs when issuing a credential.
Bytes credentialSigningBytes(Participant const &p, TimeMs issuedAt);

/// A credential together with the matching secret key.
struct SigningIdentity
{
  Credential credential;
  KeyPair    keys;

  std::string const &id() const noexcept { return credential.participant.participantID; }
  std::string const &org() const noexcept { return credential.participant.orgID; }
  Signature          sign(ByteView message) const { return keys.sign(message); }
};

/// Membership service provider: the trusted registry of network members.
///
/// Mutations are serialised; lookups and verification take a shared lock and
/// can run from any thread.
class Msp
{
public:
  struct Record
  {
    Credential credential;
    bool       revoked{false};
  };

  Msp(KeyPair root, Clock &clock);

  /// Issues the first MspAdmin credential. Only valid on an empty registry.
  Credential bootstrapAdmin(std::string const &participantID, std::string const &orgID,
                            PublicKey const &publicKey);

  Credential registerParticipant(Credential const &admin, std::string const &participantID,
                                 std::string const &orgID, Role role,
                                 PublicKey const &publicKey);

  Participant authenticate(Credential const &cred) const;

  void revokeCredential(Credential const &admin, std::string const &participantID);

  std::optional<Record>      lookup(std::string const &participantID) const;
  std::optional<Participant> findParticipant(std::string const &participantID) const;
  std::vector<Record>        records() const;

  PublicKey const &rootPublicKey() const noexcept { return root_.publicKey(); }

  /// Persist the registry after every mutation to this file.
  void attachFile(std::filesystem::path path);
  /// Replace the registry with the contents of a registry file, checking each
  /// record's MSP signature.
  void loadFile(std::filesystem::path const &path);

private:
  void requireAdmin(Credential const &admin) const;
  void persistLocked() const;

  KeyPair                       root_;
  Clock                        &clock_;
  mutable std::shared_mutex     mutex_;
  std::map<std::string, Record> registry_;
  std::filesystem::path         file_;
};

bool verifySignature(Participant const &p, ByteView message, ByteView signature) noexcept;

}  // namespace provhl
