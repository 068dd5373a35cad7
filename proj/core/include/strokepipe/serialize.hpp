#pragma once

#include <string>
#include <string_view>

#include "strokepipe/ann.hpp"
#include "strokepipe/eval.hpp"
#include "strokepipe/fusion.hpp"
#include "strokepipe/nmf.hpp"
#include "strokepipe/svm.hpp"

namespace strokepipe {

// JSON documents for every persisted artifact. Matrices are written
// row-major with explicit dimensions. Doubles use shortest round-trip
// formatting, so load(save(x)) reproduces x exactly. Loaders throw
// Error(Format) on malformed documents.

std::string to_json(const SvmModel& m);
SvmModel svm_model_from_json(std::string_view text);

std::string to_json(const FusedModel& m);
FusedModel fused_model_from_json(std::string_view text);

std::string to_json(const NmfModel& m);
NmfModel nmf_model_from_json(std::string_view text);

std::string to_json(const AnnModel& m);
AnnModel ann_model_from_json(std::string_view text);

std::string to_json(const EvalReport& r);

std::string to_json(const TrainedPipeline& t);
TrainedPipeline trained_pipeline_from_json(std::string_view text);

/// Canonical dump of a fold's models; equal strings mean equal models.
std::string to_json(const FoldModels& f);

}  // namespace strokepipe
