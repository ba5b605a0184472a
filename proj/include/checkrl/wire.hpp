#pragma once

// JSON-over-HTTP checker protocol.
//
//   POST /check
//   request:  {"id": string, "claims": [string], "evidence": string}
//   response: {"id": string, "verdicts": [{"label": "entail"|"neutral"|"contradict",
//                                          "confidence": number}]}

#include <chrono>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "checkrl/checker.hpp"

namespace checkrl {

struct WireCheckRequest {
  std::string id;
  std::vector<std::string> claims;
  std::string evidence;
};

struct WireCheckResponse {
  std::string id;
  std::vector<Verdict> verdicts;
};

std::string encode_request(const WireCheckRequest& req);
std::string encode_response(const WireCheckResponse& resp);

// Throw std::runtime_error on malformed JSON or schema violations.
WireCheckRequest decode_request(std::string_view body);
WireCheckResponse decode_response(std::string_view body);

// Validates a response body against the request it answers: schema, id echo
// and verdict count.
std::variant<WireCheckResponse, CheckError> parse_check_reply(const WireCheckRequest& req, std::string_view body);

struct Endpoint {
  std::string host;
  int port = 80;
  std::string path = "/check";
};

// Accepts "http://host:port[/path]" or "host:port". Throws
// std::invalid_argument otherwise.
Endpoint parse_endpoint(std::string_view url);

class WireClient : public Checker {
 public:
  explicit WireClient(Endpoint endpoint, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

  // Unreachable hosts and read timeouts both report CheckErrorKind::Timeout.
  std::variant<WireCheckResponse, CheckError> send(const WireCheckRequest& req) const;

  CheckOutcome check(const std::string& request_id, const ClaimSet& claims, const std::string& evidence,
                     Rng& rng) const override;

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

}  // namespace checkrl
