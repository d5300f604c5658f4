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

#include "provhl/network.hpp"
#include "provhl/wire.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace provhl {

/// Exposes one node over HTTP:
///
///   POST /propose /broadcast /deliver     JSON message wrapper
///   GET  /events?channel=&from=&type=&wait=&max=
///   GET  /tx/{txID} /state/{key} /history/{key} /block/{n} /height  (?channel=)
///   PUT  /ingest/{fileID}?channel=[&tx=]   raw content
///   GET  /fetch/{requestTxID}?channel=     X-Provhl-Sender, X-Provhl-Signature
///   GET  /status
///
/// Every response body is the JSON wrapper of the reply message.
class HttpServer
{
public:
  HttpServer(Node &node, std::string host = "127.0.0.1", int port = 0);
  ~HttpServer();

  HttpServer(HttpServer const &)            = delete;
  HttpServer &operator=(HttpServer const &) = delete;

  int         port() const noexcept { return port_; }
  std::string url() const;
  void        stop();

private:
  void routes();

  Node                            &node_;
  std::string                      host_;
  int                              port_{0};
  std::unique_ptr<httplib::Server> server_;
  std::thread                      thread_;
};

/// Client side of HttpServer.
class HttpEndpoint final : public Endpoint
{
public:
  explicit HttpEndpoint(std::string baseUrl, TimeMs timeoutMs = 30'000);
  Message call(Message const &request) override;

private:
  std::string baseUrl_;
  TimeMs      timeout_;
};

/// Where the nodes of a served network listen.
struct Discovery
{
  std::string                        name;
  std::string                        orderer;
  std::map<std::string, std::string> peers;  // peerID -> base URL
  std::map<std::string, std::string> dms;    // storageID -> base URL
  std::filesystem::path              keystore;
  std::vector<std::string>           channels;

  std::string     toJson() const;
  static Discovery fromJson(std::string const &text);
  void            save(std::filesystem::path const &path) const;
  static Discovery load(std::filesystem::path const &path);
};

/// Serves every node of a network and runs the orderer and DMS loop.
class NetworkServer
{
public:
  NetworkServer(Network &network, std::string host = "127.0.0.1");
  ~NetworkServer();

  Discovery discovery() const;
  void      stop();

private:
  void loop();

  Network                                  &net_;
  std::vector<std::unique_ptr<HttpServer>>  servers_;
  Discovery                                 discovery_;
  std::atomic<bool>                         stopping_{false};
  std::thread                               worker_;
};

/// Endpoints for a served network, from its discovery file.
struct RemoteNetwork
{
  Discovery                                        discovery;
  std::map<std::string, std::shared_ptr<Endpoint>> peers;
  std::shared_ptr<Endpoint>                        orderer;
  std::map<std::string, std::shared_ptr<Endpoint>> dms;

  explicit RemoteNetwork(Discovery d);
};

}  // namespace provhl
