#pragma once

#include <string>

namespace groundloop {

struct HttpResult {
    bool ok = false;       // transport-level success and 2xx status
    int status = 0;        // 0 when the request never completed
    std::string body;
    std::string error;     // transport diagnostics when !ok
};

/// POSTs `json_body` (content type application/json) to an http:// URL.
/// Never throws; failures are reported in the result so callers can map them
/// onto their own error contracts.
HttpResult http_post_json(const std::string& url, const std::string& json_body,
                          int timeout_ms);

} // namespace groundloop
