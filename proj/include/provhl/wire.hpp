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
#include "provhl/crypto.hpp"
#include "provhl/error.hpp"
#include "provhl/ledger.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

// Node-to-node and client-to-node messages. Both transports (in-process and
// HTTP) carry the same Message values; payloads are canonical encodings.

namespace provhl {

enum class MessageType : std::uint8_t
{
  Propose,     // Proposal -> ProposeReply
  Broadcast,   // TransactionEnvelope -> BroadcastAck
  Deliver,     // Block -> (empty)
  Events,      // EventsQuery -> EventBatch
  GetTx,       // txID -> optional<TxRecord>
  GetState,    // key -> optional<StateEntry>
  GetHistory,  // key -> vector<HistoryEntry>
  GetBlock,    // u64 -> optional<Block>
  Height,      // (empty) -> u64
  Ingest,      // IngestRequest -> IngestReply
  Fetch,       // requestTxID -> content bytes
  Status,      // (empty) -> JSON text
  Reply,
  Failure,     // FailureReply
};
inline constexpr std::uint8_t kMessageTypeCount = 14;

std::string_view           messageTypeName(MessageType t) noexcept;
std::optional<MessageType> parseMessageType(std::string_view name) noexcept;

struct Message
{
  MessageType type{MessageType::Reply};
  std::string channel;
  Bytes       payload;
  std::string sender;  // signer id; empty for unsigned messages
  Signature   signature;

  bool operator==(Message const &) const = default;
};

void encode(codec::Writer &w, MessageType t);
void decode(codec::Reader &r, MessageType &t);
void encode(codec::Writer &w, Message const &m);
void decode(codec::Reader &r, Message &m);

Bytes messageSigningBytes(Message const &m);

/// {"type","channel","payload","sender","signature"} with base64 binaries.
std::string messageToJson(Message const &m);
Message     messageFromJson(std::string_view text);  // throws Error(Malformed)

struct FailureReply
{
  Errc        code{Errc::Unknown};
  std::string detail;
};

void encode(codec::Writer &w, FailureReply const &f);
void decode(codec::Reader &r, FailureReply &f);

template <typename T>
Message makeMessage(MessageType type, std::string channel, T const &payload)
{
  return Message{type, std::move(channel), codec::serialize(payload), {}, {}};
}

template <typename T>
Message makeReply(T const &payload)
{
  return makeMessage(MessageType::Reply, {}, payload);
}

Message makeFailure(Error const &e);

/// Rethrows a Failure reply as Error.
void throwIfFailure(Message const &m);

template <typename T>
T replyPayload(Message const &m)
{
  throwIfFailure(m);
  return codec::deserialize<T>(m.payload);
}

struct CommitEvent
{
  std::string                channelID;
  std::uint64_t              sequence{0};  // position in the channel's event stream
  std::uint64_t              blockNumber{0};
  std::uint32_t              txIndex{0};
  std::string                txID;
  ValidationCode             validity{ValidationCode::Valid};
  TxType                     txType{TxType::Upload};
  Phase                      phase{Phase::ClientRequest};
  std::string                requesterID;
  std::optional<std::string> linkedRequestTxID;
  std::vector<std::string>   affectedKeys;

  bool valid() const noexcept { return validity == ValidationCode::Valid; }
  bool operator==(CommitEvent const &) const = default;
};

void encode(codec::Writer &w, CommitEvent const &e);
void decode(codec::Reader &r, CommitEvent &e);

struct ProposeReply
{
  EndorsementResponse endorsement;
  std::string         storageOrg;    // as resolved by the endorser
  std::string         requesterOrg;

  bool operator==(ProposeReply const &) const = default;
};

void encode(codec::Writer &w, ProposeReply const &p);
void decode(codec::Reader &r, ProposeReply &p);

struct BroadcastAck
{
  bool        accepted{false};
  std::string reason;
};

void encode(codec::Writer &w, BroadcastAck const &a);
void decode(codec::Reader &r, BroadcastAck &a);

struct EventsQuery
{
  std::uint64_t         fromSequence{0};
  std::optional<TxType> txType;
  std::uint32_t         maxWaitMs{0};
  std::uint32_t         maxEvents{1000};
};

void encode(codec::Writer &w, EventsQuery const &q);
void decode(codec::Reader &r, EventsQuery &q);

struct EventBatch
{
  std::vector<CommitEvent> events;
  std::uint64_t            nextSequence{0};
};

void encode(codec::Writer &w, EventBatch const &b);
void decode(codec::Reader &r, EventBatch &b);

struct IngestRequest
{
  std::string fileID;
  std::string requestTxID;  // empty: stage client bytes for a later upload
  Bytes       content;
};

void encode(codec::Writer &w, IngestRequest const &q);
void decode(codec::Reader &r, IngestRequest &q);

struct IngestReply
{
  std::string localFileName;
  std::string checksum;
};

void encode(codec::Writer &w, IngestReply const &r);
void decode(codec::Reader &r, IngestReply &p);

/// Anything that answers messages: peers, the orderer, DMS adapters.
class Node
{
public:
  virtual ~Node()                              = default;
  virtual Message handle(Message const &request) = 0;
};

/// Client side of a transport.
class Endpoint
{
public:
  virtual ~Endpoint()                          = default;
  virtual Message call(Message const &request) = 0;
};

/// Direct call with a serialisation round trip, so in-process runs exercise
/// exactly the bytes the HTTP transport would carry.
class InProcessEndpoint final : public Endpoint
{
public:
  explicit InProcessEndpoint(Node &node)
    : node_{node}
  {}

  Message call(Message const &request) override;

private:
  Node &node_;
};

}  // namespace provhl
