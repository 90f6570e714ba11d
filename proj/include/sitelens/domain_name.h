#pragma once

#include <string>
#include <string_view>

namespace sitelens {

// Lowercases and strips a single trailing dot. Does not validate.
std::string NormalizeDomain(std::string_view domain);

// True for a non-empty lowercase hostname without scheme, port, path or
// trailing dot. Labels are [a-z0-9-], non-empty, at most 63 bytes.
bool IsNormalizedHostname(std::string_view domain);

// Host part of an absolute or scheme-relative URL, lowercased.
std::string HostFromUrl(std::string_view url);

// True when |host| equals |suffix| or ends with "." + suffix.
bool HostMatchesSuffix(std::string_view host, std::string_view suffix);

}  // namespace sitelens
