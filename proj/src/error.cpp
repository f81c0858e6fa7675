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

#include "borm/error.hpp"

namespace borm {

const char* error_code_name(ErrorCode code) noexcept {
    switch(code) {
        case ErrorCode::kOk: return "Ok";
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kIo: return "IoError";
        case ErrorCode::kParse: return "ParseError";
        case ErrorCode::kUnknownLabel: return "UnknownLabel";
        case ErrorCode::kDuplicateVocabEntry: return "DuplicateVocabEntry";
        case ErrorCode::kEmptyVocabulary: return "EmptyVocabulary";
        case ErrorCode::kDimMismatch: return "DimMismatch";
        case ErrorCode::kNonFinite: return "NonFinite";
        case ErrorCode::kSplitInfeasible: return "SplitInfeasible";
        case ErrorCode::kEmptyScene: return "EmptySceneError";
        case ErrorCode::kIndex: return "IndexError";
        case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::kCorruptFile: return "CorruptFile";
        case ErrorCode::kConfig: return "ConfigError";
        case ErrorCode::kEmptyTrainSet: return "EmptyTrainSet";
        case ErrorCode::kEmptyValSet: return "EmptyValSet";
        case ErrorCode::kMissingSceneFeature: return "MissingSceneFeature";
        case ErrorCode::kLabelSetMismatch: return "LabelSetMismatch";
        case ErrorCode::kVocabMismatch: return "VocabMismatch";
        case ErrorCode::kInfeasibleMarginals: return "InfeasibleMarginals";
        case ErrorCode::kInternal: return "InternalError";
    }
    return "Unknown";
}

} // namespace borm
