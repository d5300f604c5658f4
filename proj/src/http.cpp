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

#include "provhl/http.hpp"

#include "provhl/error.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <sstream>

namespace provhl {

namespace {

constexpr char const *kSenderHeader    = "X-Provhl-Sender";
constexpr char const *kSignatureHeader = "X-Provhl-Signature";

int statusFor(Errc code)
{
  switch (code)
  {
  case Errc::Malformed:
  case Errc::ParseError: return 400;
  case Errc::BadSignature:
  case Errc::NotAuthorized:
  case Errc::AclDenied:
  case Errc::Revoked: return 403;
  case Errc::NotFound:
  case Errc::UnknownAsset:
  case Errc::UnknownChannel:
  case Errc::UnknownStorage:
  case Errc::UnknownRule: return 404;
  case Errc::Unavailable: return 503;
  case Errc::Timeout: return 504;
  default: return 409;
  }
}

void respond(httplib::Response &res, Message const &reply)
{
  res.status = 200;
  if (reply.type == MessageType::Failure)
  {
    res.status = statusFor(codec::deserialize<FailureReply>(reply.payload).code);
  }
  res.set_content(messageToJson(reply), "application/json");
}

std::string param(httplib::Request const &req, char const *name)
{
  return req.has_param(name) ? req.get_param_value(name) : std::string{};
}

std::uint64_t numberParam(httplib::Request const &req, char const *name, std::uint64_t fallback)
{
  auto const text = param(req, name);
  if (text.empty())
  {
    return fallback;
  }
  try
  {
    std::size_t used = 0;
    auto const  v    = std::stoull(text, &used);
    if (used == text.size())
    {
      return v;
    }
  }
  catch (std::exception const &)
  {
  }
  throw Error(Errc::Malformed, std::string{"query parameter "} + name + " is not a number");
}

std::string enc(std::string const &s)
{
  return httplib::detail::encode_query_param(s);
}

}  // namespace

HttpServer::HttpServer(Node &node, std::string host, int port)
  : node_{node}
  , host_{std::move(host)}
  , server_{std::make_unique<httplib::Server>()}
{
  routes();
  if (port == 0)
  {
    port_ = server_->bind_to_any_port(host_);
  }
  else if (server_->bind_to_port(host_, port))
  {
    port_ = port;
  }
  if (port_ <= 0)
  {
    throw Error(Errc::Io, "cannot listen on " + host_ + ":" + std::to_string(port));
  }
  thread_ = std::thread{[this] { server_->listen_after_bind(); }};
  server_->wait_until_ready();
}

HttpServer::~HttpServer()
{
  stop();
}

std::string HttpServer::url() const
{
  return "http://" + host_ + ":" + std::to_string(port_);
}

void HttpServer::stop()
{
  if (thread_.joinable())
  {
    server_->stop();
    thread_.join();
  }
}

void HttpServer::routes()
{
  auto serve = [this](httplib::Response &res, auto build) {
    try
    {
      respond(res, node_.handle(build()));
    }
    catch (Error const &e)
    {
      respond(res, makeFailure(e));
    }
    catch (std::exception const &e)
    {
      respond(res, makeFailure(Error(Errc::Malformed, e.what())));
    }
  };

  auto wrapped = [serve](MessageType expected) {
    return [serve, expected](httplib::Request const &req, httplib::Response &res) {
      serve(res, [&] {
        auto m = messageFromJson(req.body);
        if (m.type != expected)
        {
          throw Error(Errc::Malformed, "message type does not match the route");
        }
        return m;
      });
    };
  };
  server_->Post("/propose", wrapped(MessageType::Propose));
  server_->Post("/broadcast", wrapped(MessageType::Broadcast));
  server_->Post("/deliver", wrapped(MessageType::Deliver));

  server_->Get("/events", [serve](httplib::Request const &req, httplib::Response &res) {
    serve(res, [&] {
      EventsQuery q;
      q.fromSequence = numberParam(req, "from", 0);
      q.maxWaitMs    = static_cast<std::uint32_t>(numberParam(req, "wait", 0));
      q.maxEvents    = static_cast<std::uint32_t>(numberParam(req, "max", q.maxEvents));
      if (auto const type = param(req, "type"); !type.empty())
      {
        q.txType = parseTxType(type);
        if (!q.txType)
        {
          throw Error(Errc::Malformed, "unknown transaction type " + type);
        }
      }
      return makeMessage(MessageType::Events, param(req, "channel"), q);
    });
  });

  auto byKey = [serve](MessageType type) {
    return [serve, type](httplib::Request const &req, httplib::Response &res) {
      serve(res, [&] { return makeMessage(type, param(req, "channel"), std::string{req.matches[1]}); });
    };
  };
  server_->Get(R"(/tx/(.+))", byKey(MessageType::GetTx));
  server_->Get(R"(/state/(.+))", byKey(MessageType::GetState));
  server_->Get(R"(/history/(.+))", byKey(MessageType::GetHistory));

  server_->Get(R"(/block/(\d+))", [serve](httplib::Request const &req, httplib::Response &res) {
    serve(res, [&] {
      return makeMessage(MessageType::GetBlock, param(req, "channel"),
                         static_cast<std::uint64_t>(std::stoull(req.matches[1])));
    });
  });
  server_->Get("/height", [serve](httplib::Request const &req, httplib::Response &res) {
    serve(res, [&] { return makeMessage(MessageType::Height, param(req, "channel"), std::uint8_t{0}); });
  });
  server_->Put(R"(/ingest/(.+))", [serve](httplib::Request const &req, httplib::Response &res) {
    serve(res, [&] {
      IngestRequest in;
      in.fileID      = req.matches[1];
      in.requestTxID = param(req, "tx");
      in.content     = toBytes(req.body);
      return makeMessage(MessageType::Ingest, param(req, "channel"), in);
    });
  });
  server_->Get(R"(/fetch/(.+))", [serve](httplib::Request const &req, httplib::Response &res) {
    serve(res, [&] {
      auto m = makeMessage(MessageType::Fetch, param(req, "channel"), std::string{req.matches[1]});
      m.sender    = req.get_header_value(kSenderHeader);
      m.signature = fromBase64(req.get_header_value(kSignatureHeader));
      return m;
    });
  });
  server_->Get("/status", [serve](httplib::Request const &, httplib::Response &res) {
    serve(res, [&] { return makeMessage(MessageType::Status, {}, std::uint8_t{0}); });
  });
}

HttpEndpoint::HttpEndpoint(std::string baseUrl, TimeMs timeoutMs)
  : baseUrl_{std::move(baseUrl)}
  , timeout_{timeoutMs}
{}

Message HttpEndpoint::call(Message const &m)
{
  httplib::Client cli{baseUrl_};
  cli.set_url_encode(false);
  cli.set_connection_timeout(std::chrono::milliseconds{std::min<TimeMs>(timeout_, 5'000)});
  TimeMs readTimeout = timeout_;

  auto const channel = "channel=" + enc(m.channel);
  httplib::Result res{nullptr, httplib::Error::Unknown};
  auto post = [&](char const *path) {
    return cli.Post(path, messageToJson(m), "application/json");
  };
  auto keyed = [&](char const *prefix) {
    return cli.Get(prefix + enc(codec::deserialize<std::string>(m.payload)) + "?" + channel);
  };

  switch (m.type)
  {
  case MessageType::Propose: res = post("/propose"); break;
  case MessageType::Broadcast: res = post("/broadcast"); break;
  case MessageType::Deliver: res = post("/deliver"); break;
  case MessageType::Events:
  {
    auto const q = codec::deserialize<EventsQuery>(m.payload);
    readTimeout += q.maxWaitMs;
    cli.set_read_timeout(std::chrono::milliseconds{readTimeout});
    auto path = "/events?" + channel + "&from=" + std::to_string(q.fromSequence) +
                "&wait=" + std::to_string(q.maxWaitMs) + "&max=" + std::to_string(q.maxEvents);
    if (q.txType)
    {
      path += "&type=" + std::string{txTypeName(*q.txType)};
    }
    res = cli.Get(path);
    break;
  }
  case MessageType::GetTx: res = keyed("/tx/"); break;
  case MessageType::GetState: res = keyed("/state/"); break;
  case MessageType::GetHistory: res = keyed("/history/"); break;
  case MessageType::GetBlock:
    res = cli.Get("/block/" + std::to_string(codec::deserialize<std::uint64_t>(m.payload)) + "?" +
                  channel);
    break;
  case MessageType::Height: res = cli.Get("/height?" + channel); break;
  case MessageType::Ingest:
  {
    auto const in = codec::deserialize<IngestRequest>(m.payload);
    auto       path = "/ingest/" + enc(in.fileID) + "?" + channel;
    if (!in.requestTxID.empty())
    {
      path += "&tx=" + enc(in.requestTxID);
    }
    res = cli.Put(path, toString(in.content), "application/octet-stream");
    break;
  }
  case MessageType::Fetch:
  {
    httplib::Headers headers{{kSenderHeader, m.sender}, {kSignatureHeader, toBase64(m.signature)}};
    res = cli.Get("/fetch/" + enc(codec::deserialize<std::string>(m.payload)) + "?" + channel,
                  headers);
    break;
  }
  case MessageType::Status: res = cli.Get("/status"); break;
  default:
    return makeFailure(Error(Errc::Malformed, "no HTTP route for " +
                                                  std::string{messageTypeName(m.type)}));
  }
  if (!res)
  {
    return makeFailure(Error(Errc::Unavailable,
                             baseUrl_ + " unreachable: " + httplib::to_string(res.error())));
  }
  try
  {
    return messageFromJson(res->body);
  }
  catch (Error const &)
  {
    return makeFailure(Error(Errc::Unavailable, baseUrl_ + " answered HTTP " +
                                                    std::to_string(res->status)));
  }
}

std::string Discovery::toJson() const
{
  nlohmann::json j;
  j["name"]     = name;
  j["orderer"]  = orderer;
  j["peers"]    = peers;
  j["dms"]      = dms;
  j["keystore"] = keystore.string();
  j["channels"] = channels;
  return j.dump(2);
}

Discovery Discovery::fromJson(std::string const &text)
{
  try
  {
    auto const j = nlohmann::json::parse(text);
    Discovery  d;
    d.name     = j.value("name", "");
    d.orderer  = j.at("orderer").get<std::string>();
    d.peers    = j.at("peers").get<std::map<std::string, std::string>>();
    d.dms      = j.value("dms", std::map<std::string, std::string>{});
    d.keystore = j.value("keystore", "");
    d.channels = j.value("channels", std::vector<std::string>{});
    return d;
  }
  catch (nlohmann::json::exception const &e)
  {
    throw Error(Errc::ConfigInvalid, std::string{"discovery file: "} + e.what());
  }
}

void Discovery::save(std::filesystem::path const &path) const
{
  if (path.has_parent_path())
  {
    std::filesystem::create_directories(path.parent_path());
  }
  auto const tmp = path.string() + ".tmp";
  {
    std::ofstream out{tmp, std::ios::trunc};
    out << toJson() << "\n";
    if (!out)
    {
      throw Error(Errc::Io, "cannot write " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Discovery Discovery::load(std::filesystem::path const &path)
{
  std::ifstream in{path};
  if (!in)
  {
    throw Error(Errc::Io, "cannot read discovery file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return fromJson(ss.str());
}

NetworkServer::NetworkServer(Network &network, std::string host)
  : net_{network}
{
  discovery_.name     = net_.config().name;
  discovery_.keystore = std::filesystem::absolute(net_.keystore().dir());
  discovery_.channels = net_.channelIDs();
  servers_.push_back(std::make_unique<HttpServer>(net_.orderer(), host));
  discovery_.orderer = servers_.back()->url();
  for (auto *peer : net_.peers())
  {
    servers_.push_back(std::make_unique<HttpServer>(*peer, host));
    discovery_.peers[peer->id()] = servers_.back()->url();
  }
  for (auto *dms : net_.dmsAdapters())
  {
    servers_.push_back(std::make_unique<HttpServer>(*dms, host));
    discovery_.dms[dms->storageID()] = servers_.back()->url();
  }
  worker_ = std::thread{[this] { loop(); }};
}

NetworkServer::~NetworkServer()
{
  stop();
}

Discovery NetworkServer::discovery() const
{
  return discovery_;
}

void NetworkServer::stop()
{
  stopping_ = true;
  if (worker_.joinable())
  {
    worker_.join();
  }
  for (auto &s : servers_)
  {
    s->stop();
  }
}

void NetworkServer::loop()
{
  while (!stopping_)
  {
    std::size_t moved = 0;
    try
    {
      if (net_.orderer().nextDeadline())
      {
        net_.driver().step();
        ++moved;
      }
      moved += net_.pumpDms();
    }
    catch (std::exception const &e)
    {
      spdlog::error("network loop: {}", e.what());
    }
    if (moved == 0)
    {
      std::this_thread::sleep_for(std::chrono::milliseconds{5});
    }
  }
}

RemoteNetwork::RemoteNetwork(Discovery d)
  : discovery{std::move(d)}
{
  for (auto const &[id, url] : discovery.peers)
  {
    peers.emplace(id, std::make_shared<HttpEndpoint>(url));
  }
  orderer = std::make_shared<HttpEndpoint>(discovery.orderer);
  for (auto const &[id, url] : discovery.dms)
  {
    dms.emplace(id, std::make_shared<HttpEndpoint>(url));
  }
}

}  // namespace provhl
