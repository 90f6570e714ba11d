#include "sitelens/jwt.h"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>

#include "json.hpp"

namespace sitelens {

std::string Base64UrlEncode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(data.data()),
                          static_cast<int>(data.size()));
  out.resize(static_cast<size_t>(n));
  while (!out.empty() && out.back() == '=')
    out.pop_back();
  std::replace(out.begin(), out.end(), '+', '-');
  std::replace(out.begin(), out.end(), '/', '_');
  return out;
}

std::optional<std::string> Base64UrlDecode(std::string_view text) {
  if (text.size() % 4 == 1)
    return std::nullopt;
  std::string padded(text);
  for (char& c : padded) {
    if (c == '-')
      c = '+';
    else if (c == '_')
      c = '/';
    else if (c == '+' || c == '/' || c == '=')
      return std::nullopt;
  }
  size_t pad = (4 - padded.size() % 4) % 4;
  padded.append(pad, '=');
  std::string out(padded.size() / 4 * 3, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(padded.data()),
                          static_cast<int>(padded.size()));
  if (n < 0)
    return std::nullopt;
  out.resize(static_cast<size_t>(n) - pad);
  return out;
}

namespace {

std::string HmacSha256(std::string_view key, std::string_view message) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       reinterpret_cast<const unsigned char*>(message.data()), message.size(), digest, &length);
  return std::string(reinterpret_cast<char*>(digest), length);
}

const std::string& EncodedHeader() {
  static const std::string header =
      Base64UrlEncode(nlohmann::json{{"alg", "HS256"}, {"typ", "JWT"}}.dump());
  return header;
}

}  // namespace

std::string SignJwt(const JwtClaims& claims, std::string_view secret) {
  nlohmann::json payload = {{"sub", claims.sub}, {"role", claims.role}, {"exp", claims.exp}};
  std::string signing_input = EncodedHeader() + "." + Base64UrlEncode(payload.dump());
  return signing_input + "." + Base64UrlEncode(HmacSha256(secret, signing_input));
}

std::string_view JwtStatusName(JwtStatus status) {
  switch (status) {
    case JwtStatus::kValid: return "valid";
    case JwtStatus::kMalformed: return "malformed";
    case JwtStatus::kBadAlgorithm: return "bad_algorithm";
    case JwtStatus::kBadSignature: return "bad_signature";
    case JwtStatus::kExpired: return "expired";
    case JwtStatus::kMissingClaim: return "missing_claim";
  }
  return "?";
}

JwtVerification VerifyJwt(std::string_view token, std::string_view secret, int64_t now) {
  JwtVerification result;
  size_t first = token.find('.');
  size_t second = first == std::string_view::npos ? first : token.find('.', first + 1);
  if (second == std::string_view::npos || token.find('.', second + 1) != std::string_view::npos)
    return result;
  auto header_text = Base64UrlDecode(token.substr(0, first));
  auto payload_text = Base64UrlDecode(token.substr(first + 1, second - first - 1));
  auto signature = Base64UrlDecode(token.substr(second + 1));
  if (!header_text || !payload_text || !signature)
    return result;

  nlohmann::json header = nlohmann::json::parse(*header_text, nullptr, false);
  nlohmann::json payload = nlohmann::json::parse(*payload_text, nullptr, false);
  if (!header.is_object() || !payload.is_object())
    return result;
  auto alg = header.find("alg");
  if (alg == header.end() || *alg != "HS256") {
    result.status = JwtStatus::kBadAlgorithm;
    return result;
  }

  std::string expected = HmacSha256(secret, token.substr(0, second));
  if (expected.size() != signature->size() ||
      CRYPTO_memcmp(expected.data(), signature->data(), expected.size()) != 0) {
    result.status = JwtStatus::kBadSignature;
    return result;
  }

  auto sub = payload.find("sub");
  auto role = payload.find("role");
  auto exp = payload.find("exp");
  if (sub == payload.end() || !sub->is_string() || sub->get<std::string>().empty() ||
      role == payload.end() || !role->is_string() ||
      role->get<std::string>().empty() || exp == payload.end() ||
      !exp->is_number_integer()) {
    result.status = JwtStatus::kMissingClaim;
    return result;
  }
  result.claims = {sub->get<std::string>(), role->get<std::string>(), exp->get<int64_t>()};
  result.status = now >= result.claims.exp ? JwtStatus::kExpired : JwtStatus::kValid;
  return result;
}

}  // namespace sitelens
