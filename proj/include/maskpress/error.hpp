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

#include <stdexcept>
#include <string>

namespace maskpress {

// Mirrors mp_status in maskpress.h; values must stay in sync.
enum class ErrorCode {
  kInvalidInput = 1,
  kShape = 2,
  kAlignment = 3,
  kSegmentation = 4,
  kConfig = 5,
  kScoring = 6,
  kRemote = 7,
  kProtocol = 8,
  kResume = 9,
  kLoss = 10,
  kTrain = 11,
  kIo = 12,
  kMissingArtifact = 13,
  kInterrupted = 14,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define MASKPRESS_DEFINE_ERROR(NAME, CODE)                        \
  class NAME : public Error {                                     \
   public:                                                        \
    explicit NAME(const std::string& message)                     \
        : Error(ErrorCode::CODE, message) {}                      \
  };

MASKPRESS_DEFINE_ERROR(InvalidInputError, kInvalidInput)
MASKPRESS_DEFINE_ERROR(ShapeError, kShape)
MASKPRESS_DEFINE_ERROR(AlignmentError, kAlignment)
MASKPRESS_DEFINE_ERROR(SegmentationError, kSegmentation)
MASKPRESS_DEFINE_ERROR(ConfigError, kConfig)
MASKPRESS_DEFINE_ERROR(ScoringError, kScoring)
MASKPRESS_DEFINE_ERROR(ProtocolError, kProtocol)
MASKPRESS_DEFINE_ERROR(ResumeError, kResume)
MASKPRESS_DEFINE_ERROR(LossError, kLoss)
MASKPRESS_DEFINE_ERROR(IoError, kIo)
MASKPRESS_DEFINE_ERROR(MissingArtifactError, kMissingArtifact)
MASKPRESS_DEFINE_ERROR(InterruptedError, kInterrupted)

#undef MASKPRESS_DEFINE_ERROR

// Transport-level failure after exhausting retries.
class RemoteError : public Error {
 public:
  RemoteError(const std::string& message, int attempts)
      : Error(ErrorCode::kRemote, message), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

}  // namespace maskpress
