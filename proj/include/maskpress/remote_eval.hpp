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

#pragma once

// Exact-match scoring against an OpenAI-compatible chat completions
// endpoint.

#include <chrono>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskpress/score.hpp"

namespace maskpress {

struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000
  std::string api_key;
  std::string model = "default";
  int max_tokens = 256;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  int max_in_flight = 8;
  std::chrono::seconds timeout{60};

  // Reads MASKPRESS_API_BASE and MASKPRESS_API_KEY.
  static EndpointConfig FromEnv();
};

struct EvalItem {
  std::string question;
  std::string gold;
};

// Trim, lowercase, strip trailing punctuation; numbers lose thousands
// separators, a leading '$', and trailing fractional zeros.
std::string NormalizeAnswer(std::string_view text);

// Takes the text after "####" or the last "answer is" when present; when the
// gold answer is numeric, the last number in that text is used.
std::string ExtractFinalAnswer(std::string_view response, std::string_view gold);

bool AnswerMatches(std::string_view response, std::string_view gold);

// Request body for one question, as sent on the wire.
std::string BuildChatRequest(const EndpointConfig& cfg,
                             std::string_view prompt_text,
                             std::string_view question);

// choices[0].message.content; throws ProtocolError otherwise.
std::string ParseChatResponse(std::string_view body);

// Throws RemoteError after max_retries failed attempts and ProtocolError on
// malformed responses.
Score LlmExactMatch(std::string_view prompt_text,
                    std::span<const EvalItem> eval_set,
                    const EndpointConfig& cfg);

std::vector<EvalItem> ReadEvalSet(const std::string& path);

}  // namespace maskpress
