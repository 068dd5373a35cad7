#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "strokepipe/ann.hpp"
#include "strokepipe/features.hpp"
#include "strokepipe/image.hpp"

namespace strokepipe {

/// One manifest row with its images loaded.
struct ImageSample {
  std::string id;
  GrayImage image;                          // raw 8-bit, never masked
  std::optional<std::vector<bool>> lesion;  // true marks a removed pixel
  bool stroke = false;
};

struct ManifestRow {
  std::string id;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
  bool stroke = false;
};

/// "stroke"/"1"/"+1" and "normal"/"no-stroke"/"non-stroke"/"0"/"-1".
bool parse_label(const std::string& text);
std::string label_name(bool stroke);

/// Manifest CSV: header `id,image_path,mask_path,label`; relative paths are
/// resolved against the manifest's directory; an empty mask_path means none.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

/// Loads every image (and mask) of a manifest; errors name the sample id.
std::vector<ImageSample> load_dataset(const std::filesystem::path& manifest);

/// Feature CSV: header `source_id,kind,f0,...`; one row per vector.
void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path);

/// Risk CSV: header `id,<nine fields>,label`.
void write_risk_csv(const std::filesystem::path& path, const std::vector<RiskRecord>& rows);
std::vector<RiskRecord> read_risk_csv(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Whole file as a string; throws Error(Io) if it cannot be read.
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace strokepipe
