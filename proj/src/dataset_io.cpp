#include "embagg/dataset_io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace embagg {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());
  return std::move(ss).str();
}

void append_f32le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((bits >> shift) & 0xffu));
  }
}

float read_f32le(const char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  }
  return std::bit_cast<float>(bits);
}

[[noreturn]] void parse_error(const std::string& what) {
  throw Error(ErrorCode::ManifestParseError, what);
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) parse_error(where + ": missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    parse_error(where + ": bad '" + key + "': " + e.what());
  }
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

LoadedDataset load_dataset(const fs::path& manifest_path) {
  const std::string manifest_text = read_file(manifest_path);
  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::parse_error& e) {
    parse_error(manifest_path.string() + ": " + e.what());
  }
  const std::string where = manifest_path.string();
  const int version = required<int>(manifest, "format_version", where);
  if (version != kManifestFormatVersion) {
    throw Error(ErrorCode::UnsupportedFormatVersion,
                "format_version " + std::to_string(version) + " (supported: " +
                    std::to_string(kManifestFormatVersion) + ")");
  }
  LoadedDataset out;
  out.name = required<std::string>(manifest, "dataset_name", where);
  const auto dim = required<std::int64_t>(manifest, "dim", where);
  if (dim <= 0) parse_error(where + ": dim must be positive");
  out.dim = static_cast<std::size_t>(dim);
  const auto encoding = required<std::string>(manifest, "encoding", where);
  if (encoding != kMatrixEncoding) parse_error(where + ": unsupported encoding " + encoding);
  const auto matrix_name = required<std::string>(manifest, "matrix_file", where);
  const json& persons = manifest.contains("persons") ? manifest.at("persons") : json();
  if (!persons.is_array()) parse_error(where + ": 'persons' must be an array");

  const std::string matrix = read_file(manifest_path.parent_path() / matrix_name);
  const std::size_t row_bytes = out.dim * sizeof(float);
  if (matrix.size() % row_bytes != 0) {
    throw Error(ErrorCode::MatrixSizeMismatch,
                matrix_name + ": " + std::to_string(matrix.size()) +
                    " bytes is not a whole number of " + std::to_string(out.dim) +
                    "-dim rows");
  }
  const std::size_t rows = matrix.size() / row_bytes;

  std::size_t referenced = 0;
  std::unordered_set<std::int64_t> seen_rows;
  std::vector<float> row(out.dim);
  for (const auto& pj : persons) {
    PersonGallery person;
    person.person_id = required<std::string>(pj, "person_id", where);
    const std::string pwhere = where + ": person '" + person.person_id + "'";
    if (!pj.contains("images") || !pj.at("images").is_array()) {
      parse_error(pwhere + ": 'images' must be an array");
    }
    for (const auto& ij : pj.at("images")) {
      const auto source = required<std::string>(ij, "source_name", pwhere);
      const auto r = required<std::int64_t>(ij, "row", pwhere);
      if (r < 0 || static_cast<std::size_t>(r) >= rows) {
        throw Error(ErrorCode::MatrixSizeMismatch,
                    pwhere + " image '" + source + "': row " + std::to_string(r) +
                        " outside matrix of " + std::to_string(rows) + " rows");
      }
      if (!seen_rows.insert(r).second) {
        parse_error(pwhere + ": row " + std::to_string(r) + " referenced twice");
      }
      TagSet tags;
      if (ij.contains("tags")) {
        for (const auto& t : ij.at("tags")) {
          if (!t.is_string()) parse_error(pwhere + ": tags must be strings");
          tags.insert(t.get<std::string>());
        }
      }
      const char* base = matrix.data() + static_cast<std::size_t>(r) * row_bytes;
      for (std::size_t j = 0; j < out.dim; ++j) row[j] = read_f32le(base + 4 * j);
      try {
        person.images.push_back({Embedding::validate(row, out.dim), std::move(tags), source});
      } catch (const Error& e) {
        throw Error(e.code(), pwhere + " image '" + source + "': " + e.what(), e.index());
      }
      ++referenced;
    }
    out.persons.push_back(std::move(person));
  }
  if (referenced != rows) {
    throw Error(ErrorCode::MatrixSizeMismatch,
                matrix_name + " has " + std::to_string(rows) + " rows, manifest references " +
                    std::to_string(referenced));
  }
  out.content_hash = sha256_hex(manifest_text + matrix);
  return out;
}

fs::path save_dataset(std::span<const PersonGallery> dataset, const fs::path& dir,
                      const std::string& dataset_name) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no persons");
  const Embedding* first = nullptr;
  for (const auto& p : dataset) {
    if (!p.images.empty()) {
      first = &p.images.front().embedding;
      break;
    }
  }
  if (!first) throw Error(ErrorCode::EmptyInput, "dataset has no images");
  const std::size_t dim = first->dim();

  json manifest;
  manifest["format_version"] = kManifestFormatVersion;
  manifest["dataset_name"] = dataset_name;
  manifest["dim"] = dim;
  manifest["matrix_file"] = "embeddings.f32";
  manifest["encoding"] = kMatrixEncoding;
  json persons = json::array();
  std::string matrix;
  std::size_t row = 0;
  for (const auto& p : dataset) {
    std::unordered_set<std::string> names;
    json images = json::array();
    for (const auto& img : p.images) {
      require_same_dim(*first, img.embedding);
      if (!names.insert(img.source_name).second) {
        throw Error(ErrorCode::DuplicateSourceName,
                    "person '" + p.person_id + "' repeats '" + img.source_name + "'");
      }
      json ij;
      ij["source_name"] = img.source_name;
      ij["tags"] = json(std::vector<std::string>(img.tags.begin(), img.tags.end()));
      ij["row"] = row++;
      images.push_back(std::move(ij));
      for (double v : img.embedding.values()) append_f32le(matrix, static_cast<float>(v));
    }
    json pj;
    pj["person_id"] = p.person_id;
    pj["images"] = std::move(images);
    persons.push_back(std::move(pj));
  }
  manifest["persons"] = std::move(persons);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
  write_file_atomic(dir / "embeddings.f32", matrix);
  const fs::path manifest_path = dir / "manifest.json";
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

Dataset read_delimited(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyInput, path.string() + " is empty");
  const auto header = split_fields(line, ',');
  if (header.size() < 3 || trim(header[0]) != "person_id" || trim(header[1]) != "source_name") {
    parse_error(path.string() + ": header must start with person_id,source_name");
  }
  const bool has_tags = trim(header[2]) == "tags";
  const std::size_t first_value = has_tags ? 3 : 2;
  if (header.size() <= first_value) parse_error(path.string() + ": no embedding columns");
  const std::size_t dim = header.size() - first_value;

  Dataset dataset;
  std::unordered_map<std::string, std::size_t> person_index;
  std::vector<float> values(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, ',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  where + ": expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      const auto text = trim(fields[first_value + j]);
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        parse_error(where + ": bad number '" + std::string(text) + "'");
      }
      values[j] = v;
    }
    TagSet tags;
    if (has_tags) {
      for (auto t : split_fields(trim(fields[2]), ';')) {
        if (!trim(t).empty()) tags.emplace(trim(t));
      }
    }
    const std::string person_id(trim(fields[0]));
    auto [it, inserted] = person_index.try_emplace(person_id, dataset.size());
    if (inserted) dataset.push_back({person_id, {}});
    Embedding emb = [&] {
      try {
        return Embedding::validate(values, dim);
      } catch (const Error& e) {
        throw Error(e.code(), where + ": " + e.what(), e.index());
      }
    }();
    dataset[it->second].images.push_back({std::move(emb), std::move(tags),
                                          std::string(trim(fields[1]))});
  }
  if (dataset.empty()) throw Error(ErrorCode::EmptyInput, path.string() + " has no rows");
  return dataset;
}

void write_delimited(std::span<const PersonGallery> dataset, const fs::path& path) {
  if (dataset.empty() || dataset.front().images.empty()) {
    throw Error(ErrorCode::EmptyInput, "nothing to write");
  }
  const std::size_t dim = dataset.front().images.front().embedding.dim();
  std::string out = "person_id,source_name,tags";
  for (std::size_t j = 0; j < dim; ++j) out += ",v" + std::to_string(j);
  out += '\n';
  char buf[64];
  for (const auto& p : dataset) {
    for (const auto& img : p.images) {
      out += p.person_id;
      out += ',';
      out += img.source_name;
      out += ',';
      bool first = true;
      for (const auto& t : img.tags) {
        if (!first) out += ';';
        out += t;
        first = false;
      }
      for (double v : img.embedding.values()) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v));
        out += ',';
        out.append(buf, res.ptr);
      }
      out += '\n';
    }
  }
  write_file_atomic(path, out);
}

}  // namespace embagg
