#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "vprobe/adapters.hpp"
#include "vprobe/error.hpp"
#include "vprobe/rate_limiter.hpp"
#include "vprobe/replay.hpp"
#include "vprobe/rng.hpp"

namespace vprobe {

void ModelEndpointConfig::validate() const {
  if (base_url.empty()) throw Error(ErrorCode::kValidation, "endpoint base_url is required");
  if (!(timeout_s > 0.0)) throw Error(ErrorCode::kValidation, "timeout must be > 0");
  if (parallelism < 1) throw Error(ErrorCode::kValidation, "parallelism must be >= 1");
  if (max_retries < 0) throw Error(ErrorCode::kValidation, "max_retries must be >= 0");
  if (max_reply_tokens < 1) throw Error(ErrorCode::kValidation, "max_reply_tokens must be >= 1");
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kValidation, "endpoint url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  const std::string route = "/chat/completions";
  if (prefix.size() >= route.size() && prefix.compare(prefix.size() - route.size(), route.size(), route) == 0) {
    ep.path = prefix;
  } else {
    ep.path = prefix + route;
  }
  return ep;
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

struct HttpBackend::Impl {
  explicit Impl(int parallelism) : slots(parallelism) {}
  std::counting_semaphore<> slots;
};

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& slots) : slots_(slots) { slots_.acquire(); }
  ~SlotGuard() { slots_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& slots_;
};

}  // namespace

HttpBackend::HttpBackend(ModelEndpointConfig config, std::shared_ptr<RateLimiter> limiter,
                         std::shared_ptr<ReplayLog> replay)
    : config_(std::move(config)), limiter_(std::move(limiter)), replay_(std::move(replay)) {
  config_.validate();
  (void)split_url(config_.base_url);
  impl_ = std::make_unique<Impl>(config_.parallelism);
}

HttpBackend::~HttpBackend() = default;

Reply HttpBackend::ask(const Query& query) {
  Reply reply;
  reply.backend_id = id();
  if (query.prompt.empty()) {
    reply.error = QueryError{QueryErrorKind::kInvalidInput, 0, "empty prompt"};
    return reply;
  }

  httplib::Headers headers;
  if (!config_.auth_token_source.empty()) {
    const char* token = std::getenv(config_.auth_token_source.c_str());
    if (token == nullptr || *token == '\0') {
      reply.error = QueryError{QueryErrorKind::kAuthMissing, 0,
                               "environment variable " + config_.auth_token_source + " is not set"};
      return reply;
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const Endpoint ep = split_url(config_.base_url);
  const std::string body = build_chat_request(config_, query.prompt, query.png_bytes());
  const std::string trial_id = query.trial != nullptr ? query.trial->trial_id : "";
  CounterRng jitter(derive_seed(0x6a697474ULL, {trial_id, query.prompt}));

  std::optional<SlotGuard> in_flight;
  in_flight.emplace(impl_->slots);
  const auto start = std::chrono::steady_clock::now();
  int last_status = 0;
  std::string last_body;
  const int max_attempts = config_.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      const double base = std::min(config_.backoff_max_ms,
                                   config_.backoff_initial_ms * static_cast<double>(1LL << std::min(attempt - 2, 30)));
      const double delay = base * (0.5 + 0.5 * jitter.unit());
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }
    if (limiter_) limiter_->acquire();
    reply.attempt_count = attempt;

    httplib::Client client(ep.origin);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    auto result = client.Post(ep.path, headers, body, "application/json");
    if (!result) {
      last_status = 0;
      last_body.clear();
      reply.error = QueryError{QueryErrorKind::kTimeout, 0,
                               "transport failure: " + httplib::to_string(result.error())};
      continue;
    }
    last_status = result->status;
    last_body = result->body;
    if (result->status == 200) {
      if (auto text = parse_chat_reply(result->body)) {
        reply.text = std::move(*text);
        reply.error.reset();
      } else {
        reply.error = QueryError{QueryErrorKind::kMalformedResponse, 200, "response does not follow the chat schema"};
      }
      break;
    }
    reply.error = QueryError{QueryErrorKind::kHttpStatus, result->status, "HTTP " + std::to_string(result->status)};
    if (!retryable_status(result->status)) break;
  }
  reply.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  in_flight.reset();

  if (replay_) {
    replay_->record(trial_id, id(), reply.attempt_count, last_status, reply.latency_ms, body, last_body);
  }
  return reply;
}

}  // namespace vprobe
