#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace citelens {

enum class ErrorKind {
    malformed_references,
    unknown_marker,
    invalid_metadata,
    unknown_paper,
    invalid_event,
    corrupt_log,
    unparsed_document,
    unresolved_citation,
    not_in_library,
    provider_unavailable,
    invalid_input,
    io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// that transports (HTTP, CLI exit codes) can map it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace citelens
