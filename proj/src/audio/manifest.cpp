#include "ffcac/audio/manifest.hpp"

#include <fstream>
#include <sstream>

#include "ffcac/error.hpp"

namespace ffcac::audio {
namespace {

constexpr const char* kHeader = "path,label,split";

bool has_forbidden(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

}  // namespace

const char* to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    if (!line.empty() && line.back() == '\r') throw IngestionError(where + "CR line ending (LF required)");
    if (lineno == 1) {
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (line != kHeader) throw IngestionError(where + "header must be `" + std::string(kHeader) + "`");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != 3) {
      throw IngestionError(where + "expected 3 fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw IngestionError(where + "empty path");
    if (fields[1].empty()) throw IngestionError(where + "empty label");
    ManifestEntry e;
    e.path = std::filesystem::path(fields[0]);
    if (e.path.is_relative()) e.path = base / e.path;
    e.label = fields[1];
    if (fields[2] == "train") {
      e.split = Split::kTrain;
    } else if (fields[2] == "test") {
      e.split = Split::kTest;
    } else {
      throw IngestionError(where + "split `" + fields[2] + "` is not train or test");
    }
    out.push_back(std::move(e));
  }
  if (lineno == 0) throw IngestionError(path.string() + ": empty manifest");
  return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const auto& e : entries) {
    const std::string p = e.path.generic_string();
    if (has_forbidden(p) || has_forbidden(e.label)) {
      throw UsageError("manifest field contains a comma, quote or newline: " + p + "," + e.label);
    }
    os << p << ',' << e.label << ',' << to_string(e.split) << '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  const std::string s = os.str();
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace ffcac::audio
