#include "explorebot/gateway/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "explorebot/gateway/wire.hpp"

namespace explorebot::gateway {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxWebSocketMessage = 4 * 1024 * 1024;

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::map<std::string, std::string> query_params(std::string_view target) {
  std::map<std::string, std::string> params;
  const auto q = target.find('?');
  if (q == std::string_view::npos) return params;
  std::istringstream in{std::string(target.substr(q + 1))};
  std::string pair;
  while (std::getline(in, pair, '&')) {
    const auto eq = pair.find('=');
    if (eq != std::string::npos) params[url_decode(pair.substr(0, eq))] = url_decode(pair.substr(eq + 1));
  }
  return params;
}

std::string_view path_of(std::string_view target) { return target.substr(0, target.find('?')); }

std::string sanitize_filename(std::string_view name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') ? c : '_';
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), 'f');
  return out;
}

Timestamp wall_now() {
  const auto since = std::chrono::system_clock::now().time_since_epoch();
  return from_millis(std::chrono::duration_cast<Millis>(since).count());
}

class WsSession;

}  // namespace

struct Server::Impl : ActionSink {
  Impl(ServiceConfig cfg, std::shared_ptr<const EngineContext> ctx, EventStore& store)
      : config(std::move(cfg)), host(std::move(ctx), store, *this), store(store), acceptor(ioc), ticker(ioc) {}

  ServiceConfig config;
  Host host;
  EventStore& store;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer ticker;
  std::thread thread;
  std::mutex stop_mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;

  Timestamp clock{};
  std::uint64_t upload_counter = 0;
  std::map<std::string, std::vector<std::weak_ptr<WsSession>>> sessions_by_channel;
  std::vector<std::pair<ChannelId, WireFrame>> pending;

  Timestamp now() {
    clock = std::max(clock, wall_now());
    return clock;
  }

  // Called inside Host while the channel is locked: queue only.
  void deliver(const OutboundAction& action, const EventRecord& record) override {
    WireFrame f;
    f.type = FrameType::action;
    f.channel = action.channel.str();
    f.text = action.text;
    f.attachments = action.attachments;
    f.action = std::string(to_string(action.kind));
    if (action.flow) f.flow = action.flow->str();
    if (action.item_id) f.item = *action.item_id;
    f.offset = record.offset;
    pending.emplace_back(action.channel, std::move(f));
  }

  std::optional<std::int64_t> remaining_ms(const ChannelId& channel) {
    auto state = host.snapshot(channel);
    if (!state || !state->active_session) return std::nullopt;
    return state->active_session->remaining(clock).count();
  }

  void flush();
  void accept();
  void tick();
  http::response<http::string_body> handle_http(http::request<http::string_body>&& req);
  void register_session(const std::string& channel, const std::shared_ptr<WsSession>& s) {
    sessions_by_channel[channel].push_back(s);
  }
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req) {
    auto opt = websocket::stream_base::timeout::suggested(beast::role_type::server);
    opt.keep_alive_pings = true;
    ws_.set_option(opt);
    ws_.read_message_max(kMaxWebSocketMessage);
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read();
    });
  }

  void send(WireFrame frame) {
    if (closing_) return;
    frame.seq = ++out_seq_;
    queue_.push_back(encode_frame(frame));
    if (queue_.size() == 1) write();
  }

  const std::string& channel() const { return channel_; }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const std::string payload = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(payload);
      if (!self->closing_) self->read();
    });
  }

  void write() {
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) {
        self->write();
      } else if (self->close_after_flush_) {
        self->close_after_flush_ = false;
        self->closing_ = true;
        self->ws_.async_close(websocket::close_code::policy_error, [self](beast::error_code) {});
      }
    });
  }

  void fail(std::string code, std::string message) { send(make_error_frame(std::move(code), std::move(message))); }

  void handle(const std::string& payload) {
    WireFrame frame = decode_frame(payload, server_.config.max_frame_bytes);
    if (frame.type == FrameType::error && frame.seq == 0 && frame.code) {
      send(std::move(frame));
      return;
    }
    if (frame.seq <= last_in_seq_) {
      fail("bad-seq", "frame seq " + std::to_string(frame.seq) + " is not greater than " + std::to_string(last_in_seq_));
      return;
    }
    last_in_seq_ = frame.seq;

    switch (frame.type) {
      case FrameType::hello: on_hello(frame); return;
      case FrameType::ping: {
        WireFrame pong;
        pong.type = FrameType::ping;
        pong.text = frame.text;
        send(std::move(pong));
        return;
      }
      case FrameType::message: on_message(frame); return;
      case FrameType::action:
      case FrameType::error:
        fail("unexpected-type", "clients may send hello, message and ping frames only");
        return;
    }
  }

  void on_hello(const WireFrame& frame) {
    if (*frame.version != kProtocolVersion) {
      fail("version-mismatch", "server speaks protocol version " + std::to_string(kProtocolVersion) + ", client sent " +
                                   std::to_string(*frame.version));
      close_after_flush_ = true;
      return;
    }
    if (hello_) {
      fail("duplicate-hello", "hello was already exchanged on this connection");
      return;
    }
    if (frame.channel.empty()) {
      fail("malformed", "hello frame needs a channel");
      return;
    }
    hello_ = true;
    channel_ = frame.channel;
    user_ = frame.user.empty() ? "tester" : frame.user;
    server_.register_session(channel_, shared_from_this());
    WireFrame reply;
    reply.type = FrameType::hello;
    reply.version = kProtocolVersion;
    reply.channel = channel_;
    reply.user = user_;
    server_.now();
    reply.remaining_ms = server_.remaining_ms(ChannelId(channel_));
    send(std::move(reply));
  }

  void on_message(const WireFrame& frame) {
    if (!hello_) {
      fail("hello-required", "send a hello frame before messages");
      return;
    }
    InboundMessage msg{ChannelId(channel_), UserId(user_), frame.text, frame.attachments, server_.now()};
    try {
      if (server_.host.submit(msg) == SubmitStatus::halted) fail("channel-halted", "this channel is halted");
    } catch (const std::invalid_argument& e) {
      fail("invalid-message", e.what());
    }
    server_.flush();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool hello_ = false;
  bool closing_ = false;
  bool close_after_flush_ = false;
  std::string channel_;
  std::string user_;
  std::uint64_t last_in_seq_ = 0;
  std::uint64_t out_seq_ = 0;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() { read(); }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(server_.config.max_upload_bytes);
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, *parser_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::body_limit) {
      respond(text_response(http::status::payload_too_large, "upload too large\n", 11, false));
      return;
    }
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (websocket::is_upgrade(parser_->get())) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), server_)->run(parser_->release());
      return;
    }
    respond(server_.handle_http(parser_->release()));
  }

  static http::response<http::string_body> text_response(http::status status, std::string body, unsigned version,
                                                         bool keep_alive) {
    http::response<http::string_body> res{status, version};
    res.set(http::field::content_type, "text/plain");
    res.keep_alive(keep_alive);
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  void respond(http::response<http::string_body> response) {
    auto res = std::make_shared<http::response<http::string_body>>(std::move(response));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) {
        self->read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
};

}  // namespace

void Server::Impl::flush() {
  auto frames = std::move(pending);
  pending.clear();
  std::map<ChannelId, std::optional<std::int64_t>> remaining;
  for (auto& [channel, frame] : frames) {
    if (!remaining.count(channel)) remaining[channel] = remaining_ms(channel);
    frame.remaining_ms = remaining[channel];
    auto& list = sessions_by_channel[channel.str()];
    std::erase_if(list, [](const auto& weak) { return weak.expired(); });
    for (const auto& weak : list) {
      if (auto s = weak.lock()) s->send(frame);
    }
  }
}

void Server::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), *this)->run();
    accept();
  });
}

void Server::Impl::tick() {
  ticker.expires_after(std::chrono::milliseconds(250));
  ticker.async_wait([this](beast::error_code ec) {
    if (ec) return;
    host.advance_all(now());
    flush();
    tick();
  });
}

http::response<http::string_body> Server::Impl::handle_http(http::request<http::string_body>&& req) {
  const std::string target(req.target());
  const auto path = path_of(target);
  const auto params = query_params(target);
  auto respond = [&](http::status status, std::string body, std::string_view type) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, std::string(type));
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  auto json_response = [&](const json& j) { return respond(http::status::ok, j.dump(), "application/json"); };
  auto channel_param = [&]() -> std::optional<ChannelId> {
    auto it = params.find("channel");
    if (it == params.end() || it->second.empty()) return std::nullopt;
    return ChannelId(it->second);
  };

  if (req.method() == http::verb::get && path == "/health") return respond(http::status::ok, "ok\n", "text/plain");

  if (req.method() == http::verb::get && path == "/history") {
    const auto channel = channel_param();
    if (!channel) return respond(http::status::bad_request, "missing channel\n", "text/plain");
    json records = json::array();
    for (const auto& r : store.query(ByChannel{*channel})) records.push_back(to_json(r));
    return json_response({{"channel", channel->str()}, {"records", std::move(records)}});
  }

  if (req.method() == http::verb::get && path == "/session") {
    const auto channel = channel_param();
    if (!channel) return respond(http::status::bad_request, "missing channel\n", "text/plain");
    now();
    const auto left = remaining_ms(*channel);
    json j{{"channel", channel->str()}, {"active", left.has_value()}};
    if (left) j["remaining_ms"] = *left;
    return json_response(j);
  }

  if (req.method() == http::verb::post && path == "/attachments") {
    auto it = params.find("name");
    if (it == params.end() || it->second.empty()) return respond(http::status::bad_request, "missing name\n", "text/plain");
    std::error_code fs_ec;
    std::filesystem::create_directories(config.uploads, fs_ec);
    std::string stored;
    do {
      stored = std::to_string(++upload_counter) + "-" + sanitize_filename(it->second);
    } while (std::filesystem::exists(config.uploads / stored, fs_ec));
    std::ofstream out(config.uploads / stored, std::ios::binary);
    out << req.body();
    if (!out) return respond(http::status::internal_server_error, "cannot store upload\n", "text/plain");
    return json_response({{"name", it->second},
                          {"ref", "upload:" + stored},
                          {"media", to_string(media_kind_for_filename(it->second))},
                          {"size", req.body().size()}});
  }

  if (req.method() == http::verb::get && path.starts_with("/uploads/")) {
    const std::string stored = sanitize_filename(path.substr(std::string_view("/uploads/").size()));
    std::ifstream in(config.uploads / stored, std::ios::binary);
    if (!in) return respond(http::status::not_found, "no such upload\n", "text/plain");
    std::ostringstream body;
    body << in.rdbuf();
    return respond(http::status::ok, body.str(), "application/octet-stream");
  }

  return respond(http::status::not_found, "not found\n", "text/plain");
}

Server::Server(ServiceConfig config, std::shared_ptr<const EngineContext> ctx, EventStore& store)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(ctx), store)) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  auto& i = *impl_;
  const tcp::endpoint endpoint(net::ip::make_address(i.config.listen_host), i.config.listen_port);
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(net::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(net::socket_base::max_listen_connections);
  const auto port = i.acceptor.local_endpoint().port();
  i.accept();
  i.tick();
  i.thread = std::thread([&i] { i.ioc.run(); });
  return port;
}

void Server::wait() {
  std::unique_lock lock(impl_->stop_mutex);
  impl_->stopped_cv.wait(lock, [&] { return impl_->stopped; });
}

void Server::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  {
    std::lock_guard lock(impl_->stop_mutex);
    impl_->stopped = true;
  }
  impl_->stopped_cv.notify_all();
}

Host& Server::host() { return impl_->host; }

}  // namespace explorebot::gateway
