#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "embagg/evaluation.hpp"

namespace embagg {

// On-disk dataset layout:
//
//   <dir>/manifest.json   structured text, see below
//   <dir>/embeddings.f32  raw little-endian float32, row-major, one row per
//                         image, `dim` columns, no header
//
// manifest.json:
//   {
//     "format_version": 1,
//     "dataset_name": "...",
//     "dim": 512,
//     "matrix_file": "embeddings.f32",
//     "encoding": "float32-le-row-major",
//     "persons": [
//       {"person_id": "...",
//        "images": [{"source_name": "...", "tags": ["..."], "row": 0}, ...]},
//       ...
//     ]
//   }
//
// Readers ignore unknown keys. Storage is the only place where precision
// narrows to 32 bits.

inline constexpr int kManifestFormatVersion = 1;
inline constexpr const char* kMatrixEncoding = "float32-le-row-major";

struct LoadedDataset {
  std::string name;
  std::size_t dim = 0;
  Dataset persons;
  /// SHA-256 over the manifest bytes followed by the matrix bytes.
  std::string content_hash;
};

/// Throws ManifestParseError, UnsupportedFormatVersion, MatrixSizeMismatch,
/// NonFiniteValue (message names person and image), IoError.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json and embeddings.f32 into `dir` (created if missing);
/// each file is written to a temporary name and renamed into place.
/// Throws EmptyInput, DuplicateSourceName (within one person),
/// DimensionMismatch, IoError. Returns the manifest path.
std::filesystem::path save_dataset(std::span<const PersonGallery> dataset,
                                   const std::filesystem::path& dir,
                                   const std::string& dataset_name);

// Delimited-values interchange for third-party embedding dumps:
// comma-separated, first line a header. Columns: person_id, source_name,
// optionally `tags` (';'-separated), then one column per dimension. Rows of
// one person are grouped by first appearance, images kept in row order.

Dataset read_delimited(const std::filesystem::path& path);
void write_delimited(std::span<const PersonGallery> dataset,
                     const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view bytes);

}  // namespace embagg
