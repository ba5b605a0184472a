#include "checkrl/wire.hpp"

#include <httplib.h>

#include <json.hpp>
#include <algorithm>
#include <stdexcept>

namespace checkrl {

namespace {

using ojson = nlohmann::ordered_json;

ojson parse_object(std::string_view body) {
  ojson j;
  try {
    j = ojson::parse(body);
  } catch (const ojson::parse_error& e) {
    throw std::runtime_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("body is not a JSON object");
  return j;
}

const ojson& require(const ojson& j, const char* key, bool (ojson::*is)() const noexcept, const char* type) {
  if (!j.contains(key)) throw std::runtime_error(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!(v.*is)()) throw std::runtime_error(std::string("field '") + key + "' is not " + type);
  return v;
}

void reject_unknown(const ojson& j, std::initializer_list<std::string_view> known) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw std::runtime_error("unexpected field '" + k + "'");
  }
}

}  // namespace

std::string encode_request(const WireCheckRequest& req) {
  return ojson{{"id", req.id}, {"claims", req.claims}, {"evidence", req.evidence}}.dump();
}

std::string encode_response(const WireCheckResponse& resp) {
  ojson verdicts = ojson::array();
  for (const auto& v : resp.verdicts)
    verdicts.push_back(ojson{{"label", std::string(to_string(v.label))}, {"confidence", v.confidence}});
  return ojson{{"id", resp.id}, {"verdicts", std::move(verdicts)}}.dump();
}

WireCheckRequest decode_request(std::string_view body) {
  const auto j = parse_object(body);
  reject_unknown(j, {"id", "claims", "evidence"});
  WireCheckRequest req;
  req.id = require(j, "id", &ojson::is_string, "a string").get<std::string>();
  for (const auto& c : require(j, "claims", &ojson::is_array, "an array")) {
    if (!c.is_string()) throw std::runtime_error("claims must be strings");
    req.claims.push_back(c.get<std::string>());
  }
  req.evidence = require(j, "evidence", &ojson::is_string, "a string").get<std::string>();
  return req;
}

WireCheckResponse decode_response(std::string_view body) {
  const auto j = parse_object(body);
  reject_unknown(j, {"id", "verdicts"});
  WireCheckResponse resp;
  resp.id = require(j, "id", &ojson::is_string, "a string").get<std::string>();
  for (const auto& v : require(j, "verdicts", &ojson::is_array, "an array")) {
    if (!v.is_object()) throw std::runtime_error("verdict is not an object");
    reject_unknown(v, {"label", "confidence"});
    const auto label = parse_label(require(v, "label", &ojson::is_string, "a string").get<std::string>());
    if (!label) throw std::runtime_error("unknown label " + v.at("label").dump());
    const double conf = require(v, "confidence", &ojson::is_number, "a number").get<double>();
    if (!(conf >= 0.0 && conf <= 1.0)) throw std::runtime_error("confidence outside [0,1]");
    resp.verdicts.push_back(Verdict{*label, conf});
  }
  return resp;
}

std::variant<WireCheckResponse, CheckError> parse_check_reply(const WireCheckRequest& req, std::string_view body) {
  WireCheckResponse resp;
  try {
    resp = decode_response(body);
  } catch (const std::exception& e) {
    return CheckError{CheckErrorKind::Protocol, e.what()};
  }
  if (resp.id != req.id) return CheckError{CheckErrorKind::Protocol, "response id '" + resp.id + "' != '" + req.id + "'"};
  if (resp.verdicts.size() != req.claims.size())
    return CheckError{CheckErrorKind::CountMismatch, std::to_string(req.claims.size()) + " claims but " +
                                                         std::to_string(resp.verdicts.size()) + " verdicts"};
  return resp;
}

Endpoint parse_endpoint(std::string_view url) {
  if (url.starts_with("http://")) url.remove_prefix(7);
  if (url.starts_with("https://")) throw std::invalid_argument("endpoint: https is not supported");
  Endpoint ep;
  if (const auto slash = url.find('/'); slash != std::string_view::npos) {
    ep.path = std::string(url.substr(slash));
    url = url.substr(0, slash);
  }
  const auto colon = url.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw std::invalid_argument("endpoint: expected host:port");
  ep.host = std::string(url.substr(0, colon));
  const auto port = url.substr(colon + 1);
  try {
    std::size_t used = 0;
    ep.port = std::stoi(std::string(port), &used);
    if (used != port.size() || ep.port <= 0 || ep.port > 65535) throw std::invalid_argument("range");
  } catch (const std::exception&) {
    throw std::invalid_argument("endpoint: bad port '" + std::string(port) + "'");
  }
  return ep;
}

WireClient::WireClient(Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

std::variant<WireCheckResponse, CheckError> WireClient::send(const WireCheckRequest& req) const {
  // One client per call: httplib::Client is not safe to share across threads.
  httplib::Client cli(endpoint_.host, endpoint_.port);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  auto res = cli.Post(endpoint_.path, encode_request(req), "application/json");
  if (!res) return CheckError{CheckErrorKind::Timeout, "no response: " + httplib::to_string(res.error())};
  if (res->status != 200)
    return CheckError{CheckErrorKind::HttpStatus, "HTTP " + std::to_string(res->status) + ": " + res->body};
  return parse_check_reply(req, res->body);
}

CheckOutcome WireClient::check(const std::string& request_id, const ClaimSet& claims, const std::string& evidence,
                               Rng&) const {
  WireCheckRequest req{request_id, {}, evidence};
  for (const auto& c : claims) req.claims.push_back(c.text);
  auto reply = send(req);
  if (auto* err = std::get_if<CheckError>(&reply)) return CheckOutcome{{}, *err};
  return CheckOutcome{std::get<WireCheckResponse>(reply).verdicts, std::nullopt};
}

}  // namespace checkrl
