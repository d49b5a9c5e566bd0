#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <iostream>
#include <thread>

#include "converse/service.hpp"

namespace converse {

namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

void session(tcp::socket socket, ChatService& service) {
  try {
    websocket::stream<tcp::socket> ws(std::move(socket));
    beast::flat_buffer buffer;
    beast::http::request<beast::http::string_body> req;
    beast::http::read(ws.next_layer(), buffer, req);
    if (!websocket::is_upgrade(req) || req.target() != service.config().path) {
      beast::http::response<beast::http::string_body> res{beast::http::status::not_found, req.version()};
      res.set(beast::http::field::content_type, "text/plain");
      res.body() = "not found\n";
      res.prepare_payload();
      beast::http::write(ws.next_layer(), res);
      return;
    }
    ws.accept(req);
    for (;;) {
      beast::flat_buffer msg;
      ws.read(msg);
      const std::string reply = service.handle_text(beast::buffers_to_string(msg.data()));
      ws.text(true);
      ws.write(asio::buffer(reply));
    }
  } catch (const beast::system_error& e) {
    if (e.code() != websocket::error::closed && e.code() != asio::error::eof)
      std::cerr << "websocket session: " << e.code().message() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "websocket session: " << e.what() << "\n";
  }
}

}  // namespace

void serve_websocket(ChatService& service, const std::atomic<bool>& stop) {
  asio::io_context ioc;
  const auto& cfg = service.config();
  tcp::acceptor acceptor(ioc, {asio::ip::make_address(cfg.host), cfg.port});
  acceptor.non_blocking(true);
  std::cerr << "serving ws://" << cfg.host << ":" << acceptor.local_endpoint().port() << cfg.path << "\n";
  while (!stop.load()) {
    tcp::socket socket(ioc);
    beast::error_code ec;
    acceptor.accept(socket, ec);
    if (ec == asio::error::would_block || ec == asio::error::try_again) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      continue;
    }
    if (ec) {
      std::cerr << "accept: " << ec.message() << "\n";
      continue;
    }
    socket.non_blocking(false);
    std::thread(session, std::move(socket), std::ref(service)).detach();
  }
}

}  // namespace converse
