// bootsel/feature_io.hpp

// Copyright 2026 The bootsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Feature file format (all integers little-endian):
//
//    magic   - 4 bytes, ASCII "BSF1"
//    rows    - u32, number of frames T (>= 1)
//    cols    - u32, feature dimension d (>= 1)
//    payload - rows * cols IEEE-754 binary32 values, row-major, little-endian
//
// A file holds exactly one matrix; model checkpoints concatenate several
// such blocks back to back.
//
// Manifests are JSON Lines. One object per sample:
//
//    {"id": "u1", "feature_path": "features/u1.bsf", "label": "angry",
//     "soft_label": [0.7, 0.25, 0.025, 0.025], "speaker": "spk3",
//     "language": "de", "origin": "target"}
//
// "soft_label" is optional, "feature_path" is relative to the manifest.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bootsel/common.hpp"
#include "bootsel/dataset.hpp"
#include "json.hpp"

namespace bootsel {

namespace fs = std::filesystem;

class FeatureFileError : public IoError {
 public:
  enum class Code { kOpen, kBadMagic, kBadShape, kTruncated, kNonFinite, kWrite };

  FeatureFileError(Code code, const std::string& what) : IoError(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

inline constexpr char kFeatureMagic[4] = {'B', 'S', 'F', '1'};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
  return true;
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so a
/// reader never observes a half-written file.
inline void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Serializes one matrix block onto `os`.
inline void write_feature_block(std::ostream& os, const FeatureMatrix& m) {
  static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
  if (m.rows() == 0 || m.cols() == 0)
    throw FeatureFileError(FeatureFileError::Code::kBadShape, "feature matrix must be at least 1x1");
  if (!m.all_finite()) throw FeatureFileError(FeatureFileError::Code::kNonFinite, "non-finite feature value");
  os.write(kFeatureMagic, 4);
  detail::put_u32(os, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (float v : m.data()) detail::put_u32(os, std::bit_cast<std::uint32_t>(v));
}

/// Reads one matrix block from `is`. `where` names the source in messages.
inline FeatureMatrix read_feature_block(std::istream& is, const std::string& where) {
  using Code = FeatureFileError::Code;
  char magic[4];
  if (!is.read(magic, 4)) throw FeatureFileError(Code::kTruncated, where + ": truncated header");
  if (std::memcmp(magic, kFeatureMagic, 4) != 0) throw FeatureFileError(Code::kBadMagic, where + ": bad magic");
  std::uint32_t rows = 0, cols = 0;
  if (!detail::get_u32(is, rows) || !detail::get_u32(is, cols))
    throw FeatureFileError(Code::kTruncated, where + ": truncated header");
  if (rows == 0 || cols == 0) throw FeatureFileError(Code::kBadShape, where + ": zero rows or cols");
  std::size_t n = std::size_t(rows) * cols;
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    if (!detail::get_u32(is, bits)) throw FeatureFileError(Code::kTruncated, where + ": truncated payload");
    data[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(data[i])) throw FeatureFileError(Code::kNonFinite, where + ": non-finite value");
  }
  return FeatureMatrix(rows, cols, std::move(data));
}

inline void write_feature_file(const FeatureMatrix& m, const fs::path& path) {
  std::ostringstream os(std::ios::binary);
  write_feature_block(os, m);
  detail::write_file_atomic(path, os.str());
}

inline FeatureMatrix read_feature_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FeatureFileError(FeatureFileError::Code::kOpen, "cannot open feature file: " + path.string());
  return read_feature_block(in, path.string());
}

/// Lists every rule violation found in a loaded manifest.
class ValidationError : public DomainError {
 public:
  explicit ValidationError(std::vector<Violation> v)
      : DomainError(summarize(v)), violations_(std::move(v)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& v) {
    std::string s = std::to_string(v.size()) + " dataset violation(s)";
    if (!v.empty()) s += ", first: " + v.front().message();
    return s;
  }
  std::vector<Violation> violations_;
};

namespace detail {

inline LabeledSample parse_manifest_line(const std::string& line, std::size_t lineno, const fs::path& base) {
  using nlohmann::json;
  auto fail = [&](const std::string& what) -> DomainError {
    return DomainError("manifest line " + std::to_string(lineno) + ": " + what);
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw fail("expected a JSON object");
  static const std::set<std::string> known = {"id", "feature_path", "label", "soft_label",
                                              "speaker", "language", "origin"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw fail("unknown key \"" + it.key() + "\"");
  auto str = [&](const char* key) {
    if (!j.contains(key)) throw fail(std::string("missing \"") + key + "\"");
    if (!j[key].is_string()) throw fail(std::string("\"") + key + "\" must be a string");
    return j[key].get<std::string>();
  };

  LabeledSample s;
  s.id = str("id");
  std::string rel = str("feature_path");
  std::string label = str("label");
  s.speaker = str("speaker");
  s.language = str("language");
  std::string origin = str("origin");

  auto cls = parse_class(label);
  if (!cls) throw fail("unknown label \"" + label + "\"");
  s.hard_label = *cls;
  auto org = parse_origin(origin);
  if (!org) throw fail("unknown origin \"" + origin + "\"");
  s.origin = *org;

  if (j.contains("soft_label") && !j["soft_label"].is_null()) {
    const auto& a = j["soft_label"];
    if (!a.is_array() || a.size() != kNumClasses) throw fail("\"soft_label\" must be an array of 4 numbers");
    ClassProbs p{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (!a[c].is_number()) throw fail("\"soft_label\" must be an array of 4 numbers");
      p[c] = a[c].get<double>();
    }
    try {
      s.soft_label = SoftLabel::from_probs(p);
    } catch (const DomainError& e) {
      throw fail(e.what());
    }
  }

  s.features = read_feature_file(base / rel);
  return s;
}

}  // namespace detail

/// Parses a manifest and reads every referenced feature file, without running
/// validate_dataset(). Entries keep file order; the dataset's feature
/// dimension is taken from the first entry.
inline Dataset parse_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
  fs::path base = manifest_path.parent_path();
  std::vector<LabeledSample> samples;
  std::size_t dim = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LabeledSample s = detail::parse_manifest_line(line, lineno, base);
    if (samples.empty()) {
      dim = s.features.cols();
    } else if (s.features.cols() != dim) {
      throw DomainError("manifest line " + std::to_string(lineno) + ": feature dimension mismatch (" +
                        std::to_string(s.features.cols()) + " vs dataset " + std::to_string(dim) + ")");
    }
    samples.push_back(std::move(s));
  }
  return Dataset(manifest_path.stem().string(), dim, std::move(samples));
}

struct LanguageFilterResult {
  Dataset dataset;
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

/// Keeps exactly the samples tagged with `target`, preserving order.
inline LanguageFilterResult filter_by_language(const Dataset& ds, const std::string& target) {
  Dataset out = ds.filter([&](const LabeledSample& s) { return s.language == target; }, ds.name());
  std::size_t kept = out.size();
  return {std::move(out), kept, ds.size() - kept};
}

/// parse_manifest() + validate_dataset(); throws ValidationError on any
/// violation. With `expected_language`, off-language samples are dropped.
inline Dataset load_manifest(const fs::path& manifest_path,
                             const std::optional<std::string>& expected_language = std::nullopt) {
  Dataset ds = parse_manifest(manifest_path);
  auto violations = validate_dataset(ds);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  if (expected_language) return filter_by_language(ds, *expected_language).dataset;
  return ds;
}

namespace detail {

inline std::string file_stem_for(const std::string& id) {
  std::string out;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
              c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? std::string("_") : out;
}

}  // namespace detail

/// Writes `ds` as `<dir>/<manifest_name>` plus one feature file per sample
/// under `<dir>/<feature_subdir>/`.
inline fs::path write_manifest(const Dataset& ds, const fs::path& dir, const std::string& manifest_name,
                               const std::string& feature_subdir = "features") {
  fs::create_directories(dir / feature_subdir);
  std::set<std::string> used;
  std::ostringstream manifest;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds[i];
    std::string stem = detail::file_stem_for(s.id);
    if (!used.insert(stem).second) {
      stem += "_" + std::to_string(i);
      used.insert(stem);
    }
    std::string rel = feature_subdir + "/" + stem + ".bsf";
    write_feature_file(s.features, dir / rel);

    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["feature_path"] = rel;
    j["label"] = std::string(class_name(s.hard_label));
    if (s.soft_label) j["soft_label"] = s.soft_label->probs();
    j["speaker"] = s.speaker;
    j["language"] = s.language;
    j["origin"] = std::string(origin_name(s.origin));
    manifest << j.dump() << '\n';
  }
  fs::path out = dir / manifest_name;
  detail::write_file_atomic(out, manifest.str());
  return out;
}

}  // namespace bootsel
