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

#include "borm/corpus.hpp"
#include "borm/models.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace borm {

/// Top-1 accuracy summary of a model over a corpus. Accuracies are NaN when
/// there is nothing to score (no records, or no records of that scene).
struct EvalReport {
    std::vector<std::string> scene_names;
    std::size_t n_records = 0;
    double overall_accuracy = 0.0;
    std::vector<std::size_t> true_counts;
    std::vector<std::size_t> correct_counts;
    std::vector<double> per_class_accuracy;
    /// confusion[t * S + p]: records of true scene t predicted as p.
    std::vector<std::size_t> confusion;
    /// Records excluded because their scene feature row was missing.
    std::vector<std::string> skipped;

    std::size_t confusion_at(std::size_t t, std::size_t p) const { return confusion[t * scene_names.size() + p]; }
};

struct EvalOptions {
    /// Exclude records without scene features instead of failing.
    bool skip_missing = false;
    unsigned threads = 1;
};

/// Builds a report from parallel arrays of true and predicted scene indices.
EvalReport make_report(std::vector<std::string> scene_names, const std::vector<std::size_t>& truth,
                       const std::vector<std::size_t>& predicted);

/// Predicts every record. Records with missing scene features throw unless
/// `skip_missing` is set, in which case they are reported in `skipped` and
/// have no entry in the result.
struct CorpusPredictions {
    std::vector<std::size_t> record_index;
    std::vector<Prediction> predictions;
    std::vector<std::string> skipped;
};

CorpusPredictions predict_corpus(const ModelBundle& bundle, const Corpus& corpus, const SceneFeatureTable* features,
                                 const EvalOptions& options = {});

/// In-domain evaluation; the corpus must use exactly the bundle's object and
/// scene lists (LabelSetMismatch otherwise).
EvalReport evaluate(const ModelBundle& bundle, const Corpus& corpus, const SceneFeatureTable* features,
                    const EvalOptions& options = {});

/// Re-indexes a corpus onto the bundle's object and scene lists by name.
/// Throws VocabMismatch naming every label present on only one side.
Corpus remap_to_bundle(const ModelBundle& bundle, const Corpus& corpus);

/// Evaluation on a different corpus with nothing refit: statistics and
/// parameters come from the bundle unchanged.
EvalReport cross_eval(const ModelBundle& bundle, const Corpus& corpus, const SceneFeatureTable* features,
                      const EvalOptions& options = {});

enum class ReportFormat { kText, kJson, kCsv };

ReportFormat parse_report_format(const std::string& name);
std::string render_report(const EvalReport& report, ReportFormat format);
EvalReport report_from_json(const std::string& text);

} // namespace borm
