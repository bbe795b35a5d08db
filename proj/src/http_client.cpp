#include "groundloop/http_client.hpp"

#include <httplib.h>

namespace groundloop {

namespace {

// Splits "http://host:port/path" into base and path. httplib wants them apart.
bool split_url(const std::string& url, std::string& base, std::string& path) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) return false;
    const auto slash = url.find('/', scheme.size());
    if (slash == std::string::npos) {
        base = url;
        path = "/";
    } else {
        base = url.substr(0, slash);
        path = url.substr(slash);
    }
    return true;
}

} // namespace

HttpResult http_post_json(const std::string& url, const std::string& json_body,
                          int timeout_ms) {
    HttpResult r;
    std::string base, path;
    if (!split_url(url, base, path)) {
        r.error = "unsupported URL (only plain http:// is accepted): " + url;
        return r;
    }
    httplib::Client client(base);
    const time_t sec = timeout_ms / 1000;
    const time_t usec = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    auto res = client.Post(path, json_body, "application/json");
    if (!res) {
        r.error = "request to " + url + " failed: " + httplib::to_string(res.error());
        return r;
    }
    r.status = res->status;
    r.body = res->body;
    if (res->status < 200 || res->status >= 300) {
        r.error = "request to " + url + " returned status " + std::to_string(res->status);
        return r;
    }
    r.ok = true;
    return r;
}

} // namespace groundloop
