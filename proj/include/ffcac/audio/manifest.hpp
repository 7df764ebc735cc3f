#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ffcac::audio {

enum class Split { kTrain, kTest };

const char* to_string(Split split);

struct ManifestEntry {
  std::filesystem::path path;  // absolute, or relative to the manifest's directory
  std::string label;
  Split split = Split::kTrain;
};

// CSV with header `path,label,split`, LF line endings, split in {train,test}.
// Fields may not contain commas or quotes. Relative paths are resolved against
// the manifest's directory. IngestionError on malformed rows (with line number).
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// Paths are written as given.
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

}  // namespace ffcac::audio
