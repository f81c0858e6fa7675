// This file is part of the borm scene-recognition toolkit.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace borm {

/// Error categories surfaced by every module. The numeric values are part of
/// the C ABI (see borm/borm.h) and must not be reordered.
enum class ErrorCode : int {
    kOk = 0,
    kInvalidArgument = 1,
    kIo = 2,
    kParse = 3,
    kUnknownLabel = 4,
    kDuplicateVocabEntry = 5,
    kEmptyVocabulary = 6,
    kDimMismatch = 7,
    kNonFinite = 8,
    kSplitInfeasible = 9,
    kEmptyScene = 10,
    kIndex = 11,
    kUnsupportedVersion = 12,
    kCorruptFile = 13,
    kConfig = 14,
    kEmptyTrainSet = 15,
    kEmptyValSet = 16,
    kMissingSceneFeature = 17,
    kLabelSetMismatch = 18,
    kVocabMismatch = 19,
    kInfeasibleMarginals = 20,
    kInternal = 21,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace borm
