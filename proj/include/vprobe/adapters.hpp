#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vprobe/image.hpp"
#include "vprobe/probeforge.hpp"

namespace vprobe {

class RateLimiter;
class ReplayLog;

enum class QueryErrorKind { kTimeout, kHttpStatus, kMalformedResponse, kAuthMissing, kInvalidInput };

const char* to_string(QueryErrorKind kind);

struct QueryError {
  QueryErrorKind kind = QueryErrorKind::kTimeout;
  int http_status = 0;
  std::string message;
};

struct Reply {
  std::string text;
  double latency_ms = 0.0;
  int attempt_count = 0;
  std::string backend_id;
  std::optional<QueryError> error;

  bool ok() const { return !error.has_value(); }
};

// One model question. Either `image` or `png` carries the stimulus; `trial`
// is a side channel only the oracle backend reads.
struct Query {
  std::string prompt;
  std::optional<GrayImage> image;
  std::vector<std::uint8_t> png;
  const TrialRecord* trial = nullptr;

  GrayImage decoded_image() const;
  std::vector<std::uint8_t> png_bytes() const;
};

// Contract shared by every backend. Failures come back inside the Reply;
// ask() only throws on programming errors.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Reply ask(const Query& query) = 0;
  virtual std::string id() const = 0;
};

// Answers from the trial's ground truth, never looking at the image.
class PerfectOracle final : public Backend {
 public:
  Reply ask(const Query& query) override;
  std::string id() const override { return "oracle"; }
};

// Reads the stimulus with the template OCR.
class TemplateOcrBackend final : public Backend {
 public:
  Reply ask(const Query& query) override;
  std::string id() const override { return "template_ocr"; }
};

struct ModelEndpointConfig {
  std::string base_url;
  std::string auth_token_source;  // env var holding the bearer token; empty = no auth
  std::string model_name = "default";
  double timeout_s = 30.0;
  int max_retries = 3;
  int parallelism = 1;
  double temperature = 0.0;
  int max_reply_tokens = 32;
  double backoff_initial_ms = 500.0;
  double backoff_max_ms = 8000.0;

  void validate() const;
};

// Chat-completions client: one user message holding the text prompt and the
// PNG as a base64 data URL. Retries timeouts, 429 and 5xx with jittered
// exponential backoff; malformed bodies and other statuses are terminal.
class HttpBackend final : public Backend {
 public:
  HttpBackend(ModelEndpointConfig config, std::shared_ptr<RateLimiter> limiter = nullptr,
              std::shared_ptr<ReplayLog> replay = nullptr);
  ~HttpBackend() override;

  Reply ask(const Query& query) override;
  std::string id() const override { return "http:" + config_.model_name; }

  const ModelEndpointConfig& config() const { return config_; }

 private:
  struct Impl;
  ModelEndpointConfig config_;
  std::shared_ptr<RateLimiter> limiter_;
  std::shared_ptr<ReplayLog> replay_;
  std::unique_ptr<Impl> impl_;
};

std::string build_chat_request(const ModelEndpointConfig& config, std::string_view prompt,
                               std::span<const std::uint8_t> png);

// Pulls choices[0].message.content (string or text parts). nullopt if the body
// does not follow the schema.
std::optional<std::string> parse_chat_reply(std::string_view body);

std::string base64_encode(std::span<const std::uint8_t> bytes);

// "oracle" | "template_ocr" | "http"
std::unique_ptr<Backend> make_backend(std::string_view selector, const ModelEndpointConfig& config,
                                      std::shared_ptr<RateLimiter> limiter = nullptr,
                                      std::shared_ptr<ReplayLog> replay = nullptr);

}  // namespace vprobe
