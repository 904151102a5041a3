#include <thread>

#include <httplib.h>

#include "iaes/service.hpp"

namespace iaes {

struct HttpServer::Impl {
  const Api& api;
  httplib::Server server;
  std::thread thread;

  explicit Impl(const Api& a) : api(a) {}
};

HttpServer::HttpServer(const Api& api) : impl_(std::make_unique<Impl>(api)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [key, value] : req.params) query.emplace(key, value);
    const ApiResponse r = impl_->api.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  const char* const pattern = R"(/api(/.*)?)";
  impl_->server.Get(pattern, handler);
  impl_->server.Post(pattern, handler);
  impl_->server.Patch(pattern, handler);
  impl_->server.Put(pattern, handler);
  impl_->server.Delete(pattern, handler);
}

HttpServer::~HttpServer() {
  stop();
  wait();
}

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) return -1;
  } else if (!impl_->server.bind_to_port(host, port)) {
    return -1;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace iaes
