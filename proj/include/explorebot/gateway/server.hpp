#pragma once

// WebSocket gateway for the browser chat client plus a small HTTP side API:
//   GET  /health                    liveness
//   GET  /history?channel=C         audit records of a channel, in offset order
//   GET  /session?channel=C         whether a session is active and the time left
//   POST /attachments?name=F        upload; answers with the reference to put in a frame
//   GET  /uploads/<ref>             download an uploaded file
//   GET  /ws  (Upgrade: websocket)  frame protocol, see wire.hpp
// All network I/O and engine calls run on one io thread, so every channel's
// events reach the engine in arrival order.

#include <memory>

#include "explorebot/event_store.hpp"
#include "explorebot/gateway/config.hpp"
#include "explorebot/host.hpp"

namespace explorebot::gateway {

class Server {
 public:
  Server(ServiceConfig config, std::shared_ptr<const EngineContext> ctx, EventStore& store);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the listen address and serves on a background thread. Returns the
  /// bound port (useful with port 0).
  unsigned short start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  Host& host();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace explorebot::gateway
