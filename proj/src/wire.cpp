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

#include "provhl/wire.hpp"

#include <json.hpp>

#include <array>

namespace provhl {

namespace {

constexpr std::array<std::string_view, kMessageTypeCount> kMessageTypeNames = {
    "propose", "broadcast", "deliver", "events", "tx",     "state",  "history",
    "block",   "height",    "ingest",  "fetch",  "status", "reply",  "failure",
};

}  // namespace

std::string_view messageTypeName(MessageType t) noexcept
{
  auto const i = static_cast<std::size_t>(t);
  return i < kMessageTypeNames.size() ? kMessageTypeNames[i] : "?";
}

std::optional<MessageType> parseMessageType(std::string_view name) noexcept
{
  for (std::size_t i = 0; i < kMessageTypeNames.size(); ++i)
  {
    if (kMessageTypeNames[i] == name)
    {
      return static_cast<MessageType>(i);
    }
  }
  return std::nullopt;
}

void encode(codec::Writer &w, MessageType t)
{
  w.u8(static_cast<std::uint8_t>(t));
}

void decode(codec::Reader &r, MessageType &t)
{
  t = r.enumeration<MessageType>(kMessageTypeCount);
}

void encode(codec::Writer &w, Message const &m)
{
  encode(w, m.type);
  w.str(m.channel);
  w.bytes(m.payload);
  w.str(m.sender);
  w.bytes(m.signature);
}

void decode(codec::Reader &r, Message &m)
{
  decode(r, m.type);
  m.channel   = r.str();
  m.payload   = r.bytes();
  m.sender    = r.str();
  m.signature = r.bytes();
}

Bytes messageSigningBytes(Message const &m)
{
  codec::Writer w;
  w.str("provhl/message");
  encode(w, m.type);
  w.str(m.channel);
  w.bytes(m.payload);
  w.str(m.sender);
  return w.take();
}

std::string messageToJson(Message const &m)
{
  nlohmann::json j;
  j["type"]      = std::string{messageTypeName(m.type)};
  j["channel"]   = m.channel;
  j["payload"]   = toBase64(m.payload);
  j["sender"]    = m.sender;
  j["signature"] = toBase64(m.signature);
  return j.dump();
}

Message messageFromJson(std::string_view text)
{
  try
  {
    auto const j    = nlohmann::json::parse(text);
    auto const type = parseMessageType(j.at("type").get<std::string>());
    if (!type)
    {
      throw Error(Errc::Malformed, "unknown message type");
    }
    Message m;
    m.type      = *type;
    m.channel   = j.value("channel", "");
    m.payload   = fromBase64(j.value("payload", ""));
    m.sender    = j.value("sender", "");
    m.signature = fromBase64(j.value("signature", ""));
    return m;
  }
  catch (nlohmann::json::exception const &e)
  {
    throw Error(Errc::Malformed, std::string{"message json: "} + e.what());
  }
}

void encode(codec::Writer &w, FailureReply const &f)
{
  w.u32(static_cast<std::uint32_t>(f.code));
  w.str(f.detail);
}

void decode(codec::Reader &r, FailureReply &f)
{
  auto const code = r.u32();
  if (code < static_cast<std::uint32_t>(Errc::Malformed) ||
      code > static_cast<std::uint32_t>(Errc::Capacity))
  {
    throw Error(Errc::Malformed, "unknown error code " + std::to_string(code));
  }
  f.code   = static_cast<Errc>(code);
  f.detail = r.str();
}

Message makeFailure(Error const &e)
{
  return makeMessage(MessageType::Failure, {}, FailureReply{e.code(), e.detail()});
}

void throwIfFailure(Message const &m)
{
  if (m.type == MessageType::Failure)
  {
    auto const f = codec::deserialize<FailureReply>(m.payload);
    throw Error(f.code, f.detail);
  }
  if (m.type != MessageType::Reply)
  {
    throw Error(Errc::Malformed, "unexpected " + std::string{messageTypeName(m.type)} + " reply");
  }
}

void encode(codec::Writer &w, CommitEvent const &e)
{
  w.str(e.channelID);
  w.u64(e.sequence);
  w.u64(e.blockNumber);
  w.u32(e.txIndex);
  w.str(e.txID);
  encode(w, e.validity);
  encode(w, e.txType);
  encode(w, e.phase);
  w.str(e.requesterID);
  codec::encode(w, e.linkedRequestTxID);
  codec::encode(w, e.affectedKeys);
}

void decode(codec::Reader &r, CommitEvent &e)
{
  e.channelID   = r.str();
  e.sequence    = r.u64();
  e.blockNumber = r.u64();
  e.txIndex     = r.u32();
  e.txID        = r.str();
  decode(r, e.validity);
  decode(r, e.txType);
  decode(r, e.phase);
  e.requesterID = r.str();
  codec::decode(r, e.linkedRequestTxID);
  codec::decode(r, e.affectedKeys);
}

void encode(codec::Writer &w, ProposeReply const &p)
{
  encode(w, p.endorsement);
  w.str(p.storageOrg);
  w.str(p.requesterOrg);
}

void decode(codec::Reader &r, ProposeReply &p)
{
  decode(r, p.endorsement);
  p.storageOrg   = r.str();
  p.requesterOrg = r.str();
}

void encode(codec::Writer &w, BroadcastAck const &a)
{
  w.boolean(a.accepted);
  w.str(a.reason);
}

void decode(codec::Reader &r, BroadcastAck &a)
{
  a.accepted = r.boolean();
  a.reason   = r.str();
}

void encode(codec::Writer &w, EventsQuery const &q)
{
  w.u64(q.fromSequence);
  codec::encode(w, q.txType);
  w.u32(q.maxWaitMs);
  w.u32(q.maxEvents);
}

void decode(codec::Reader &r, EventsQuery &q)
{
  q.fromSequence = r.u64();
  codec::decode(r, q.txType);
  q.maxWaitMs = r.u32();
  q.maxEvents = r.u32();
}

void encode(codec::Writer &w, EventBatch const &b)
{
  codec::encode(w, b.events);
  w.u64(b.nextSequence);
}

void decode(codec::Reader &r, EventBatch &b)
{
  codec::decode(r, b.events);
  b.nextSequence = r.u64();
}

void encode(codec::Writer &w, IngestRequest const &q)
{
  w.str(q.fileID);
  w.str(q.requestTxID);
  w.bytes(q.content);
}

void decode(codec::Reader &r, IngestRequest &q)
{
  q.fileID      = r.str();
  q.requestTxID = r.str();
  q.content     = r.bytes();
}

void encode(codec::Writer &w, IngestReply const &p)
{
  w.str(p.localFileName);
  w.str(p.checksum);
}

void decode(codec::Reader &r, IngestReply &p)
{
  p.localFileName = r.str();
  p.checksum      = r.str();
}

Message InProcessEndpoint::call(Message const &request)
{
  auto const delivered = codec::deserialize<Message>(codec::serialize(request));
  auto const reply     = node_.handle(delivered);
  return codec::deserialize<Message>(codec::serialize(reply));
}

}  // namespace provhl
