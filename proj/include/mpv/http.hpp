#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace mpv {

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct HttpRequestOptions {
  std::chrono::milliseconds timeout{60'000};
  std::vector<std::pair<std::string, std::string>> headers;
};

/// POSTs a JSON body to `base_url` + `path`. `base_url` may carry a path prefix
/// ("http://host:8080/api"). Connection and timeout failures throw
/// TransportError; any HTTP status is returned to the caller.
HttpResponse http_post_json(const std::string& base_url, const std::string& path,
                            const std::string& body, const HttpRequestOptions& options);

}  // namespace mpv
