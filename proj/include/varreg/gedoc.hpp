#pragma once

#include <optional>
#include <string>
#include <vector>

#include "varreg/geneq.hpp"

namespace varreg {

// On-disk model: the generalized equation plus its reference points and an
// optional default input signal.
struct GEDocument {
  GenEq ge;
  std::vector<RefPoint> refpoints;
  std::optional<std::string> signal;
  std::string notes;
};

// JSON text -> document.  Unknown or missing fields raise SchemaError with
// the JSON path; model-invariant violations raise ModelError.
GEDocument parse_document(const std::string& text);
GEDocument load_document(const std::string& path);

// Deterministic serialization; parse_document(document_to_json(d)) yields an
// equivalent model.
std::string document_to_json(const GEDocument& doc, int indent = 2);

}  // namespace varreg
