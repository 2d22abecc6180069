#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cbsa/error.hpp"
#include "cbsa/rng.hpp"
#include "cbsa/templates.hpp"

namespace cbsa {

template <typename T>
struct LabeledSample {
  std::size_t subject = 0;
  std::size_t sample = 0;
  T value;
  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Samples ordered by (subject, sample).
template <typename T>
using Dataset = std::vector<LabeledSample<T>>;

using FaceDataset = Dataset<FeatureVector>;
using IrisDataset = Dataset<BitTemplate>;

/// Indices into the dataset, grouped per subject in ascending subject order.
template <typename T>
std::vector<std::vector<std::size_t>> group_by_subject(const Dataset<T>& ds) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) groups[ds[i].subject].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(groups.size());
  for (auto& [_, idx] : groups) out.push_back(std::move(idx));
  return out;
}

struct SyntheticFaceConfig {
  std::size_t subjects = 20;
  std::size_t samples_per_subject = 10;
  std::size_t dim = 128;
  /// Per-coordinate standard deviation of the noise added to a unit class center.
  double intra_noise_sigma = 0.13;
  std::uint64_t seed = 1;
};

struct SyntheticIrisConfig {
  std::size_t subjects = 10;
  std::size_t samples_per_subject = 4;
  std::size_t width = 512;
  std::size_t height = 20;
  double intra_flip_prob = 0.1;
  std::uint64_t seed = 1;
};

namespace detail {
constexpr std::uint64_t kFaceStream = 0x66616365ULL;  // "face"
constexpr std::uint64_t kIrisStream = 0x69726973ULL;  // "iris"

inline void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  for (double& x : v) x /= s;
}
}  // namespace detail

inline void validate(const SyntheticFaceConfig& c) {
  require(c.subjects > 0 && c.samples_per_subject > 0 && c.dim > 0, ErrorCode::InvalidConfig,
          "face dataset sizes must be positive");
  require(std::isfinite(c.intra_noise_sigma) && c.intra_noise_sigma > 0.0, ErrorCode::InvalidConfig,
          "intra_noise_sigma must be positive");
}

inline void validate(const SyntheticIrisConfig& c) {
  require(c.subjects > 0 && c.samples_per_subject > 0 && c.width > 0 && c.height > 0, ErrorCode::InvalidConfig,
          "iris dataset sizes must be positive");
  require(c.intra_flip_prob >= 0.0 && c.intra_flip_prob < 0.5, ErrorCode::InvalidConfig,
          "intra_flip_prob must be in [0, 0.5)");
}

/// Class center uniform on the unit sphere; sample = center + isotropic
/// Gaussian noise, renormalized.
inline FaceDataset generate_face_dataset(const SyntheticFaceConfig& cfg) {
  validate(cfg);
  FaceDataset ds;
  ds.reserve(cfg.subjects * cfg.samples_per_subject);
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    Rng center_rng(derive_seed(cfg.seed, {detail::kFaceStream, s}));
    std::vector<double> center(cfg.dim);
    for (auto& v : center) v = center_rng.normal();
    detail::normalize(center);
    for (std::size_t k = 0; k < cfg.samples_per_subject; ++k) {
      Rng rng(derive_seed(cfg.seed, {detail::kFaceStream, s, k + 1}));
      std::vector<double> x = center;
      for (auto& v : x) v += rng.normal(0.0, cfg.intra_noise_sigma);
      detail::normalize(x);
      ds.push_back({s, k, FeatureVector(std::move(x))});
    }
  }
  return ds;
}

/// Uniform random master template per subject; each sample flips every bit
/// of the master independently with intra_flip_prob.
inline IrisDataset generate_iris_dataset(const SyntheticIrisConfig& cfg) {
  validate(cfg);
  IrisDataset ds;
  ds.reserve(cfg.subjects * cfg.samples_per_subject);
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    Rng master_rng(derive_seed(cfg.seed, {detail::kIrisStream, s}));
    BitTemplate master(cfg.width, cfg.height);
    for (auto& w : master.bits().words()) w = master_rng.next_u64();
    master.bits().trim();
    for (std::size_t k = 0; k < cfg.samples_per_subject; ++k) {
      Rng rng(derive_seed(cfg.seed, {detail::kIrisStream, s, k + 1}));
      BitTemplate t = master;
      const std::size_t n = t.bits().size();
      if (cfg.intra_flip_prob > 0.0)
        for (std::size_t i = rng.geometric(cfg.intra_flip_prob); i < n; i += 1 + rng.geometric(cfg.intra_flip_prob))
          t.bits().flip(i);
      ds.push_back({s, k, std::move(t)});
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Feature CSV: header "subject,sample,v0,...,v{d-1}", one vector per row,
// values printed with 17 significant digits.
// ---------------------------------------------------------------------------

inline void save_feature_csv(const std::filesystem::path& path, const FaceDataset& ds) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  const std::size_t dim = ds.empty() ? 0 : ds.front().value.dim();
  os << "subject,sample";
  for (std::size_t i = 0; i < dim; ++i) os << ",v" << i;
  os << '\n';
  char buf[32];
  for (const auto& s : ds) {
    require(s.value.dim() == dim, ErrorCode::ShapeInconsistent, "dataset mixes feature dimensions");
    os << s.subject << ',' << s.sample;
    for (double v : s.value.values()) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
  require(static_cast<bool>(os), ErrorCode::IoError, "failed writing " + path.string());
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line_no, std::size_t col) {
  field = trim(field);
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                                           ": cannot parse '" + std::string(field) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                                             ": non-finite value '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace detail

inline FaceDataset load_feature_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorCode::ParseError, "empty feature CSV");
  const auto header = detail::split_csv(line);
  require(header.size() >= 3 && detail::trim(header[0]) == "subject" && detail::trim(header[1]) == "sample",
          ErrorCode::ParseError, "line 1: expected header 'subject,sample,v0,...'");
  const std::size_t dim = header.size() - 2;

  FaceDataset ds;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != dim + 2)
      throw Error(ErrorCode::ShapeInconsistent, "line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(dim) + " values, got " +
                                                    std::to_string(fields.size() < 2 ? 0 : fields.size() - 2));
    LabeledSample<FeatureVector> s;
    s.subject = detail::parse_field<std::size_t>(fields[0], line_no, 1);
    s.sample = detail::parse_field<std::size_t>(fields[1], line_no, 2);
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = detail::parse_field<double>(fields[i + 2], line_no, i + 3);
    s.value = FeatureVector(std::move(v));
    ds.push_back(std::move(s));
  }
  std::stable_sort(ds.begin(), ds.end(), [](const auto& a, const auto& b) {
    return a.subject < b.subject || (a.subject == b.subject && a.sample < b.sample);
  });
  return ds;
}

// ---------------------------------------------------------------------------
// Bit template directory: one CBT1 file per sample named
// "{subject}_{sample}.cbt" plus manifest.json.
// ---------------------------------------------------------------------------

inline void save_bit_templates(const std::filesystem::path& dir, const IrisDataset& ds) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "CBT1";
  manifest["templates"] = nlohmann::json::array();
  for (const auto& s : ds) {
    const std::string name = std::to_string(s.subject) + "_" + std::to_string(s.sample) + ".cbt";
    save_cbt(dir / name, s.value);
    manifest["templates"].push_back({{"subject", s.subject}, {"sample", s.sample}, {"file", name}});
  }
  if (!ds.empty()) {
    manifest["width"] = ds.front().value.width();
    manifest["height"] = ds.front().value.height();
  }
  std::ofstream os(dir / "manifest.json");
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot write manifest in " + dir.string());
  os << manifest.dump(2) << '\n';
}

inline IrisDataset load_bit_templates(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  require(static_cast<bool>(is), ErrorCode::IoError, "missing manifest.json in " + dir.string());
  IrisDataset ds;
  try {
    nlohmann::json manifest;
    is >> manifest;
    require(manifest.value("format", std::string()) == "CBT1", ErrorCode::ParseError, "manifest format is not CBT1");
    for (const auto& e : manifest.at("templates")) {
      LabeledSample<BitTemplate> s;
      s.subject = e.at("subject").get<std::size_t>();
      s.sample = e.at("sample").get<std::size_t>();
      s.value = load_cbt(dir / e.at("file").get<std::string>());
      if (!ds.empty())
        require(s.value.width() == ds.front().value.width() && s.value.height() == ds.front().value.height(),
                ErrorCode::ShapeInconsistent, "template " + e.at("file").get<std::string>() + " has a different shape");
      ds.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest.json: ") + e.what());
  }
  std::stable_sort(ds.begin(), ds.end(), [](const auto& a, const auto& b) {
    return a.subject < b.subject || (a.subject == b.subject && a.sample < b.sample);
  });
  return ds;
}

}  // namespace cbsa
