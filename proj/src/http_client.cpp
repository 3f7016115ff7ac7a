#include <httplib.h>

#include "mpv/error.hpp"
#include "mpv/http.hpp"

namespace mpv {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  const auto authority_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = base_url.find('/', authority_start);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.prefix = base_url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

}  // namespace

HttpResponse http_post_json(const std::string& base_url, const std::string& path,
                            const std::string& body, const HttpRequestOptions& options) {
  const auto url = split_url(base_url);
  httplib::Client client(url.origin);
  if (!client.is_valid())
    throw TransportError(Errc::ConnectionRefused, 0, "invalid base url: " + base_url);
  const auto secs = options.timeout.count() / 1000;
  const auto usecs = (options.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  for (const auto& [k, v] : options.headers) headers.emplace(k, v);

  auto result = client.Post(url.prefix + path, headers, body, "application/json");
  if (!result) {
    const auto err = result.error();
    const auto message = httplib::to_string(err) + " (" + base_url + path + ")";
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      throw TransportError(Errc::Timeout, 0, message);
    throw TransportError(Errc::ConnectionRefused, 0, message);
  }
  return HttpResponse{result->status, result->body};
}

}  // namespace mpv
