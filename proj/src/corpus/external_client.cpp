#include <stdexcept>

#include <httplib.h>

#include "citelens/corpus.hpp"
#include "citelens/error.hpp"
#include "../fsutil.hpp"

namespace citelens::corpus {

using nlohmann::json;

json to_json(const ExternalRequest& r) {
    json j{{"title", r.title}};
    if (r.year) j["year"] = *r.year;
    return j;
}

void StubMetadataClient::add(PaperMetadata meta) {
    const auto key = normalize_title(meta.title);
    by_title_[key] = std::move(meta);
}

void StubMetadataClient::load(const std::filesystem::path& file) {
    const auto content = fsutil::read_file(file);
    if (!content) throw Error(ErrorKind::io, "cannot read metadata fixture " + file.string());
    for (const auto& item : json::parse(*content)) add(item.get<PaperMetadata>());
}

std::optional<PaperMetadata> StubMetadataClient::fetch(const ExternalRequest& request) {
    if (timeout_) throw std::runtime_error("metadata lookup timed out");
    auto it = by_title_.find(normalize_title(request.title));
    if (it == by_title_.end()) return std::nullopt;
    auto meta = it->second;
    meta.paper_id = PaperId();  // the corpus assigns ids
    return meta;
}

HttpMetadataClient::HttpMetadataClient(std::string base_url, std::string path,
                                       std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_(timeout) {}

std::optional<PaperMetadata> HttpMetadataClient::fetch(const ExternalRequest& request) {
    httplib::Client client(base_url_);
    const auto secs = timeout_.count() / 1000;
    const auto usecs = (timeout_.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    auto res = client.Post(path_, to_json(request).dump(), "application/json");
    if (!res) throw std::runtime_error("metadata service unreachable: " + httplib::to_string(res.error()));
    if (res->status == 204 || res->status == 404) return std::nullopt;
    if (res->status != 200) throw std::runtime_error("metadata service status " + std::to_string(res->status));
    const auto body = json::parse(res->body);
    if (body.is_null() || (body.is_object() && body.empty())) return std::nullopt;
    auto meta = body.get<PaperMetadata>();
    meta.paper_id = PaperId();
    return meta;
}

}  // namespace citelens::corpus
