#pragma once

#include <string>

namespace bflux::serve {

struct ServeOptions {
  std::string store_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;  // empty = no auth
};

// Blocking query-service loop over a completed run directory.
// POST /query {"template": ..., "params": {...}} -> policy-checked
// aggregate; GET /health. Returns a process exit code.
int run_server(const ServeOptions& options);

}  // namespace bflux::serve
