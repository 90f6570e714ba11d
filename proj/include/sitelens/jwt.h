#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sitelens {

std::string Base64UrlEncode(std::string_view data);
// Accepts unpadded input. Returns nullopt on characters outside the
// alphabet or an impossible length.
std::optional<std::string> Base64UrlDecode(std::string_view text);

struct JwtClaims {
  std::string sub;
  std::string role;
  int64_t exp = 0;  // UTC seconds

  bool operator==(const JwtClaims&) const = default;
};

// Compact HS256 token.
std::string SignJwt(const JwtClaims& claims, std::string_view secret);

enum class JwtStatus { kValid, kMalformed, kBadAlgorithm, kBadSignature, kExpired, kMissingClaim };
std::string_view JwtStatusName(JwtStatus status);

struct JwtVerification {
  JwtStatus status = JwtStatus::kMalformed;
  JwtClaims claims;  // meaningful only when status == kValid

  bool ok() const { return status == JwtStatus::kValid; }
};

// Only HS256 is accepted. A token is expired once now >= exp.
JwtVerification VerifyJwt(std::string_view token, std::string_view secret, int64_t now);

}  // namespace sitelens
