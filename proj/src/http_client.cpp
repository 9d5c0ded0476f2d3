#include "ccpipe/http_client.hpp"

#include <httplib.h>

#include "ccpipe/errors.hpp"
#include "ccpipe/util.hpp"

namespace ccpipe {

namespace {

struct SplitUrl {
  std::string scheme_host;  // e.g. "https://api.example.com"
  std::string path_prefix;  // e.g. "/v1"
};

SplitUrl split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw PipelineError(ErrorCode::ConfigError,
                        "base URL must include a scheme: " + base_url);
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {base_url, ""};
  }
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') {
    prefix.pop_back();
  }
  return {base_url.substr(0, path_start), prefix};
}

}  // namespace

nlohmann::json http_post_json(const std::string& base_url,
                              const std::string& path,
                              const std::string& api_key,
                              const nlohmann::json& body) {
  if (network_guard_active()) {
    throw PipelineError(ErrorCode::ProviderError,
                        "network guard active: refusing HTTP request to " +
                            base_url + path);
  }
  const SplitUrl url = split_base_url(base_url);

  httplib::Client client(url.scheme_host);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);

  httplib::Headers headers;
  if (!api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key);
  }

  const auto result = client.Post(url.path_prefix + path, headers, body.dump(),
                                  "application/json");
  if (!result) {
    throw PipelineError(ErrorCode::ProviderError,
                        "HTTP transport failure for " + base_url + path + ": " +
                            httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw PipelineError(ErrorCode::ProviderError,
                        "HTTP " + std::to_string(result->status) + " from " +
                            base_url + path + ": " + result->body);
  }
  try {
    return nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw PipelineError(ErrorCode::ProviderError,
                        std::string("unparseable provider reply: ") + e.what());
  }
}

}  // namespace ccpipe
