#include <deque>
#include <iostream>
#include <regex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <fmt/format.h>

#include "dressguard/bridge.hpp"

namespace dressguard {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

class WsConn;

struct Slot {
  explicit Slot(Session s) : session(std::move(s)) {}
  Session session;
  std::vector<std::weak_ptr<WsConn>> clients;
  Session::Clock::time_point wall_start{};
  double sim_start = 0.0;
};

using SlotMap = std::map<std::string, std::shared_ptr<Slot>>;

void broadcast(Slot& slot, const std::vector<std::string>& messages);

class WsConn : public std::enable_shared_from_this<WsConn> {
 public:
  WsConn(tcp::socket socket, std::shared_ptr<Slot> slot)
      : ws_(std::move(socket)), slot_(std::move(slot)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->slot_->clients.push_back(self);
      self->send(wire_message("mode", self->slot_->session.id(), self->slot_->session.sim_time(),
                              {{"status", to_string(self->slot_->session.status())}})
                     .dump());
      self->read();
    });
  }

  void send(std::string message) {
    outbox_.push_back(std::move(message));
    if (outbox_.size() == 1) write();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_message(text);
      self->read();
    });
  }

  void on_message(const std::string& text) {
    Session& s = slot_->session;
    try {
      const ClientMessage msg = parse_client_message(text);
      const bool starting = std::holds_alternative<StartMsg>(msg);
      s.handle(msg);
      if (starting) {
        slot_->wall_start = Session::Clock::now();
        slot_->sim_start = 0.0;
      }
    } catch (const BridgeError& ex) {
      send(wire_message("error", s.id(), s.sim_time(), {{"message", ex.what()}}).dump());
    }
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->outbox_.clear();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Slot> slot_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
};

void broadcast(Slot& slot, const std::vector<std::string>& messages) {
  if (messages.empty()) return;
  std::erase_if(slot.clients, [](const std::weak_ptr<WsConn>& w) { return w.expired(); });
  for (const auto& weak : slot.clients) {
    if (auto conn = weak.lock()) {
      for (const std::string& m : messages) conn->send(m);
    }
  }
}

struct Response {
  http::status status = http::status::ok;
  json body;
};

class HttpConn : public std::enable_shared_from_this<HttpConn> {
 public:
  HttpConn(tcp::socket socket, SlotMap& slots, const BridgeConfig& config, const Corpus& corpus,
           int& next_id)
      : stream_(std::move(socket)), slots_(slots), config_(config), corpus_(corpus),
        next_id_(next_id) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->on_request();
                     });
  }

  void on_request() {
    static const std::regex ws_path(R"(/session/([A-Za-z0-9]+)/ws)");
    const std::string target(req_.target());
    std::smatch m;
    if (websocket::is_upgrade(req_)) {
      if (std::regex_match(target, m, ws_path)) {
        auto it = slots_.find(m[1]);
        if (it != slots_.end()) {
          stream_.expires_never();
          std::make_shared<WsConn>(stream_.release_socket(), it->second)->run(std::move(req_));
          return;
        }
      }
      reply({http::status::not_found, {{"error", "unknown session"}}});
      return;
    }
    reply(route(target));
  }

  Response route(const std::string& target) {
    static const std::regex action(R"(/session/([A-Za-z0-9]+)/(start|reset|summary))");
    if (req_.method() == http::verb::options) return {http::status::no_content, nullptr};
    if (target == "/session" && req_.method() == http::verb::post) {
      const std::string id = fmt::format("s{}", next_id_++);
      slots_.emplace(id, std::make_shared<Slot>(Session(id, config_, corpus_)));
      return {http::status::created, {{"v", kWireVersion}, {"session_id", id}}};
    }
    std::smatch m;
    if (!std::regex_match(target, m, action)) {
      return {http::status::not_found, {{"error", "no such route"}}};
    }
    auto it = slots_.find(m[1]);
    if (it == slots_.end()) return {http::status::not_found, {{"error", "unknown session"}}};
    Slot& slot = *it->second;
    const std::string verb = m[2];
    try {
      if (verb == "summary" && req_.method() == http::verb::get) {
        return {http::status::ok, slot.session.summary()};
      }
      if (req_.method() != http::verb::post) {
        return {http::status::method_not_allowed, {{"error", "method not allowed"}}};
      }
      if (verb == "start") {
        std::string plan;
        if (!req_.body().empty()) {
          const json body = json::parse(req_.body(), nullptr, false);
          if (body.is_discarded() || !body.is_object()) {
            return {http::status::bad_request, {{"error", "body must be a JSON object"}}};
          }
          if (body.contains("plan") && body["plan"].is_string()) plan = body["plan"];
        }
        slot.session.start(plan);
        slot.wall_start = Session::Clock::now();
        slot.sim_start = 0.0;
      } else if (verb == "reset") {
        slot.session.reset();
      } else {
        return {http::status::method_not_allowed, {{"error", "method not allowed"}}};
      }
      return {http::status::ok, slot.session.summary()};
    } catch (const BridgeError& ex) {
      return {http::status::conflict, {{"error", ex.what()}}};
    }
  }

  void reply(Response r) {
    auto res = std::make_shared<http::response<http::string_body>>(r.status, req_.version());
    res->set(http::field::server, "dressguard");
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_headers, "content-type");
    res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    if (!r.body.is_null()) {
      res->set(http::field::content_type, "application/json");
      res->body() = r.body.dump();
    }
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
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
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  SlotMap& slots_;
  const BridgeConfig& config_;
  const Corpus& corpus_;
  int& next_id_;
};

}  // namespace

struct BridgeServer::Impl {
  explicit Impl(BridgeConfig c)
      : config(std::move(c)),
        corpus(Corpus::load((config.data_dir.empty() ? default_data_dir() : config.data_dir) /
                            "corpus" / "nlu.yml")) {
    if (!(config.realtime_ratio > 0.0)) throw BridgeError("realtime ratio must be positive");
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConn>(std::move(socket), slots, config, corpus, next_id)->run();
      accept();
    });
  }

  void schedule_tick() {
    ticker.expires_after(std::chrono::milliseconds(10));
    ticker.async_wait([this](beast::error_code ec) {
      if (ec) return;
      const auto now = Session::Clock::now();
      for (auto& [id, slot] : slots) {
        const double elapsed = std::chrono::duration<double>(now - slot->wall_start).count();
        const double until = slot->sim_start + elapsed * config.realtime_ratio;
        try {
          broadcast(*slot, slot->session.advance_to(until, now));
        } catch (const std::exception& ex) {
          broadcast(*slot, {wire_message("error", id, slot->session.sim_time(),
                                         {{"message", ex.what()}})
                                .dump()});
          slot->session.reset();
        }
      }
      schedule_tick();
    });
  }

  void listen() {
    if (bound) return;
    const tcp::endpoint ep(net::ip::make_address(config.address), config.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
    bound = true;
    accept();
    schedule_tick();
  }

  BridgeConfig config;
  Corpus corpus;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::steady_timer ticker{ioc};
  SlotMap slots;
  int next_id = 1;
  std::thread thread;
  bool bound = false;
};

BridgeServer::BridgeServer(BridgeConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

BridgeServer::~BridgeServer() { stop(); }

unsigned short BridgeServer::start() {
  auto& i = *impl_;
  i.listen();
  if (!i.thread.joinable()) i.thread = std::thread([&i] { i.ioc.run(); });
  return i.acceptor.local_endpoint().port();
}

void BridgeServer::run() {
  auto& i = *impl_;
  i.listen();
  net::signal_set signals(i.ioc, SIGINT, SIGTERM);
  signals.async_wait([&i](beast::error_code, int) { i.ioc.stop(); });
  fmt::print("listening on {}:{}\n", i.config.address, i.acceptor.local_endpoint().port());
  std::fflush(stdout);
  i.ioc.run();
}

void BridgeServer::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void run_bridge(const BridgeConfig& config) {
  BridgeServer server(config);
  server.run();
}

}  // namespace dressguard
