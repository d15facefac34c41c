#include "vprobe/adapters.hpp"

#include <openssl/evp.h>

#include <chrono>

#include <nlohmann/json.hpp>

#include "vprobe/error.hpp"
#include "vprobe/png_io.hpp"
#include "vprobe/replay.hpp"
#include "vprobe/template_ocr.hpp"

namespace vprobe {

const char* to_string(QueryErrorKind kind) {
  switch (kind) {
    case QueryErrorKind::kTimeout: return "Timeout";
    case QueryErrorKind::kHttpStatus: return "HttpStatus";
    case QueryErrorKind::kMalformedResponse: return "MalformedResponse";
    case QueryErrorKind::kAuthMissing: return "AuthMissing";
    case QueryErrorKind::kInvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

GrayImage Query::decoded_image() const {
  if (image) return *image;
  return decode_png(png);
}

std::vector<std::uint8_t> Query::png_bytes() const {
  if (!png.empty()) return png;
  if (image) return encode_png(*image, PngColor::kRgb);
  return {};
}

namespace {

Reply invalid_input(const std::string& backend, const std::string& message) {
  Reply r;
  r.backend_id = backend;
  r.attempt_count = 0;
  r.error = QueryError{QueryErrorKind::kInvalidInput, 0, message};
  return r;
}

}  // namespace

Reply PerfectOracle::ask(const Query& query) {
  if (query.prompt.empty()) return invalid_input(id(), "empty prompt");
  if (query.trial == nullptr) return invalid_input(id(), "oracle needs the trial record");
  Reply r;
  r.backend_id = id();
  r.attempt_count = 1;
  r.text = query.trial->ground_truth;
  return r;
}

Reply TemplateOcrBackend::ask(const Query& query) {
  if (query.prompt.empty()) return invalid_input(id(), "empty prompt");
  const auto start = std::chrono::steady_clock::now();
  GrayImage img;
  try {
    img = query.decoded_image();
  } catch (const Error& e) {
    return invalid_input(id(), e.what());
  }
  Reply r;
  r.backend_id = id();
  r.attempt_count = 1;
  r.text = answer_for_prompt(template_ocr(img), query.prompt);
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::string build_chat_request(const ModelEndpointConfig& config, std::string_view prompt,
                               std::span<const std::uint8_t> png) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt}});
  content.push_back({{"type", "image_url"},
                     {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  const nlohmann::json body = {
      {"model", config.model_name},
      {"temperature", config.temperature},
      {"max_tokens", config.max_reply_tokens},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
  };
  return body.dump();
}

std::optional<std::string> parse_chat_reply(std::string_view body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) return std::nullopt;
  const auto& message = first["message"];
  const auto content = message.find("content");
  if (content == message.end()) return std::nullopt;
  if (content->is_string()) return content->get<std::string>();
  if (content->is_array()) {
    std::string text;
    for (const auto& part : *content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") && part["text"].is_string()) {
        text += part["text"].get<std::string>();
      }
    }
    return text;
  }
  return std::nullopt;
}

std::unique_ptr<Backend> make_backend(std::string_view selector, const ModelEndpointConfig& config,
                                      std::shared_ptr<RateLimiter> limiter, std::shared_ptr<ReplayLog> replay) {
  if (selector == "oracle") return std::make_unique<PerfectOracle>();
  if (selector == "template_ocr") return std::make_unique<TemplateOcrBackend>();
  if (selector == "http") return std::make_unique<HttpBackend>(config, std::move(limiter), std::move(replay));
  throw Error(ErrorCode::kValidation, "unknown backend '" + std::string(selector) +
                                          "' (expected oracle, template_ocr or http)");
}

ReplayLog::ReplayLog(const std::filesystem::path& path, bool truncate) : sink_(path, truncate) {}

void ReplayLog::record(const std::string& trial_id, const std::string& backend_id, int attempts, int status,
                       double latency_ms, const std::string& request_body, const std::string& response_body) {
  nlohmann::json request = nlohmann::json::parse(request_body, nullptr, false);
  if (request.is_discarded()) request = request_body;
  sink_.append({{"trial_id", trial_id},
                {"backend_id", backend_id},
                {"attempts", attempts},
                {"status", status},
                {"latency_ms", latency_ms},
                {"request", request},
                {"response", response_body}});
}

}  // namespace vprobe
