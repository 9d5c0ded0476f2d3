#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ccpipe {

// POSTs a JSON body to base_url + path with a bearer token and returns the
// parsed JSON reply. Throws PipelineError(ProviderError) on transport
// failures, non-2xx statuses, unparseable replies, or when the network guard
// is active (CC_NETWORK_GUARD=1).
nlohmann::json http_post_json(const std::string& base_url,
                              const std::string& path,
                              const std::string& api_key,
                              const nlohmann::json& body);

}  // namespace ccpipe
