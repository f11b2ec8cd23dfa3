// Copyright 2026 The MaskPress Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "maskpress/remote_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace maskpress {

using json = nlohmann::ordered_json;

EndpointConfig EndpointConfig::FromEnv() {
  EndpointConfig cfg;
  if (const char* base = std::getenv("MASKPRESS_API_BASE")) cfg.base_url = base;
  if (const char* key = std::getenv("MASKPRESS_API_KEY")) cfg.api_key = key;
  return cfg;
}

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

const std::regex& NumberPattern() {
  static const std::regex re(R"([-+]?\$?\d[\d,]*(?:\.\d+)?)");
  return re;
}

// Canonical decimal text, or nullopt when `s` is not a plain number.
std::optional<std::string> CanonicalNumber(std::string_view s) {
  std::string t;
  for (char c : s) {
    if (c != ',' && c != '$') t.push_back(c);
  }
  static const std::regex whole(R"(([-+]?)(\d+)(?:\.(\d+))?)");
  std::smatch m;
  if (!std::regex_match(t, m, whole)) return std::nullopt;
  std::string integral = m[2].str();
  integral.erase(0, std::min(integral.find_first_not_of('0'),
                             integral.size() - 1));
  std::string frac = m[3].str();
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = integral;
  if (!frac.empty()) out += "." + frac;
  if (m[1].str() == "-" && out != "0") out = "-" + out;
  return out;
}

}  // namespace

std::string NormalizeAnswer(std::string_view text) {
  std::string s = Lower(Trim(text));
  while (!s.empty() && std::string_view(".,!?;:").find(s.back()) !=
                           std::string_view::npos) {
    s.pop_back();
  }
  s = std::string(Trim(s));
  if (auto num = CanonicalNumber(s)) return *num;
  return s;
}

std::string ExtractFinalAnswer(std::string_view response,
                               std::string_view gold) {
  std::string text(response);
  const std::string lower = Lower(response);
  if (auto pos = lower.rfind("####"); pos != std::string::npos) {
    text = text.substr(pos + 4);
  } else if (auto pos2 = lower.rfind("answer is"); pos2 != std::string::npos) {
    text = text.substr(pos2 + 9);
  }
  if (CanonicalNumber(NormalizeAnswer(gold))) {
    std::string last;
    for (std::sregex_iterator it(text.begin(), text.end(), NumberPattern()), end;
         it != end; ++it) {
      last = it->str();
    }
    if (!last.empty()) return NormalizeAnswer(last);
  }
  return NormalizeAnswer(text);
}

bool AnswerMatches(std::string_view response, std::string_view gold) {
  return ExtractFinalAnswer(response, gold) == NormalizeAnswer(gold);
}

std::string BuildChatRequest(const EndpointConfig& cfg,
                             std::string_view prompt_text,
                             std::string_view question) {
  std::string content(prompt_text);
  content += "\n\n";
  content += question;
  json body;
  body["model"] = cfg.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", content}}});
  body["temperature"] = 0;
  body["max_tokens"] = cfg.max_tokens;
  return body.dump();
}

std::string ParseChatResponse(std::string_view body) {
  try {
    const auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed chat response: ") + e.what());
  }
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, no trailing slash
};

SplitUrl SplitBaseUrl(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("api base url needs a scheme: " + url);
  }
  const auto path = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, path);
  if (path != std::string::npos) out.prefix = url.substr(path);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool Retryable(int status) { return status == 429 || status >= 500; }

std::string PostWithRetry(const EndpointConfig& cfg, const SplitUrl& url,
                          const std::string& body) {
  httplib::Client client(url.origin);
  client.set_connection_timeout(cfg.timeout);
  client.set_read_timeout(cfg.timeout);
  httplib::Headers headers;
  if (!cfg.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg.api_key);
  }
  const std::string path = url.prefix + "/v1/chat/completions";
  std::string last_error;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(cfg.backoff_base * (1 << (attempt - 1)));
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    if (!Retryable(res->status)) {
      throw RemoteError("chat completion rejected: " + last_error, attempt + 1);
    }
  }
  throw RemoteError("chat completion failed after " +
                        std::to_string(cfg.max_retries) +
                        " retries: " + last_error,
                    attempts);
}

}  // namespace

Score LlmExactMatch(std::string_view prompt_text,
                    std::span<const EvalItem> eval_set,
                    const EndpointConfig& cfg) {
  if (eval_set.empty()) throw ScoringError("evaluation set is empty");
  if (cfg.base_url.empty()) {
    throw ConfigError("no endpoint configured (set MASKPRESS_API_BASE)");
  }
  const SplitUrl url = SplitBaseUrl(cfg.base_url);
  std::vector<uint8_t> detail(eval_set.size(), 0);
  std::atomic<size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (size_t i = next++; i < eval_set.size(); i = next++) {
      {
        std::lock_guard<std::mutex> lock(error_mu);
        if (first_error) return;
      }
      try {
        const std::string body =
            BuildChatRequest(cfg, prompt_text, eval_set[i].question);
        const std::string reply =
            ParseChatResponse(PostWithRetry(cfg, url, body));
        detail[i] = AnswerMatches(reply, eval_set[i].gold) ? 1 : 0;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const size_t n_workers = std::min<size_t>(
      static_cast<size_t>(std::max(1, cfg.max_in_flight)), eval_set.size());
  std::vector<std::thread> pool;
  for (size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return Score::FromDetail(std::move(detail));
}

std::vector<EvalItem> ReadEvalSet(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("no such eval set: " + path);
  }
  std::ifstream in(path);
  std::vector<EvalItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      items.push_back({j.at("question").get<std::string>(),
                       j.at("answer").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInputError(std::string("malformed eval item: ") + e.what());
    }
  }
  return items;
}

}  // namespace maskpress
