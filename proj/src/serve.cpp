#include "borderflux/serve.hpp"

#include <cstdio>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "borderflux/privacy.hpp"

namespace bflux::serve {

using nlohmann::json;

int run_server(const ServeOptions& options) {
  privacy::PublishedStore store(options.store_dir);
  httplib::Server server;

  auto authorized = [&](const httplib::Request& req) {
    if (options.token.empty()) return true;
    return req.get_header_value("Authorization") == "Bearer " + options.token;
  };

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"status\":\"ok\"}", "application/json");
  });

  server.Post("/query", [&](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req)) {
      res.status = 401;
      res.set_content("{\"error\":\"UNAUTHORIZED\"}", "application/json");
      return;
    }
    json request = json::parse(req.body, nullptr, false);
    if (request.is_discarded()) {
      res.status = 400;
      res.set_content("{\"error\":\"BAD_REQUEST\"}", "application/json");
      return;
    }
    try {
      json response = privacy::answer_query(request, store);
      res.set_content(response.dump(), "application/json");
    } catch (const privacy::QueryError& e) {
      res.status = 400;
      json err{{"error", e.code}};
      res.set_content(err.dump(), "application/json");
    }
  });

  std::printf("border-flux query service on %s:%d (store: %s, k=%u)\n", options.host.c_str(),
              options.port, options.store_dir.c_str(), store.policy().k);
  std::fflush(stdout);
  if (!server.listen(options.host, options.port)) {
    std::fprintf(stderr, "failed to bind %s:%d\n", options.host.c_str(), options.port);
    return 1;
  }
  return 0;
}

}  // namespace bflux::serve
