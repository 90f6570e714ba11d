#include "sitelens/domain_name.h"

#include <algorithm>
#include <cctype>

namespace sitelens {

std::string NormalizeDomain(std::string_view domain) {
  std::string out(domain);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (!out.empty() && out.back() == '.')
    out.pop_back();
  return out;
}

bool IsNormalizedHostname(std::string_view domain) {
  if (domain.empty() || domain.size() > 253)
    return false;
  size_t label_len = 0;
  for (char c : domain) {
    if (c == '.') {
      if (label_len == 0)
        return false;
      label_len = 0;
      continue;
    }
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
              c == '_';
    if (!ok || ++label_len > 63)
      return false;
  }
  return label_len > 0;
}

std::string HostFromUrl(std::string_view url) {
  size_t start = 0;
  if (size_t scheme = url.find("://"); scheme != std::string_view::npos)
    start = scheme + 3;
  else if (url.substr(0, 2) == "//")
    start = 2;
  size_t end = url.find_first_of("/?#", start);
  std::string_view host = url.substr(
      start, end == std::string_view::npos ? std::string_view::npos
                                           : end - start);
  if (size_t at = host.rfind('@'); at != std::string_view::npos)
    host.remove_prefix(at + 1);
  if (size_t colon = host.find(':'); colon != std::string_view::npos)
    host = host.substr(0, colon);
  return NormalizeDomain(host);
}

bool HostMatchesSuffix(std::string_view host, std::string_view suffix) {
  if (suffix.empty() || host.size() < suffix.size())
    return false;
  if (host.substr(host.size() - suffix.size()) != suffix)
    return false;
  return host.size() == suffix.size() ||
         host[host.size() - suffix.size() - 1] == '.';
}

}  // namespace sitelens
