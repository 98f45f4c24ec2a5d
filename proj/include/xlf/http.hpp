#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace xlf {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Minimal POST-JSON transport. Implementations throw TransportError when no
/// HTTP response was received at all.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                 const HttpHeaders& headers, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport (http and https).
std::shared_ptr<HttpTransport> make_http_transport();

}  // namespace xlf
