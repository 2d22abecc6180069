#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cbsa/attack.hpp"
#include "cbsa/data.hpp"
#include "cbsa/error.hpp"
#include "cbsa/metrics.hpp"
#include "cbsa/scores.hpp"

namespace cbsa {

enum class DatasetKind { SyntheticFace, SyntheticIris, FeatureCsv, BitTemplates };
enum class ProbePolicy { Compromised, HeldOut };

struct AttackMode {
  std::size_t templates = 1;  // 1 = one compromised template per subject
  friend bool operator==(const AttackMode&, const AttackMode&) = default;
};

inline std::string to_string(const AttackMode& m) {
  return m.templates == 1 ? std::string("1-template") : std::to_string(m.templates) + "-templates";
}

struct ExperimentConfig {
  Scheme scheme = Scheme::BioHashing;
  std::uint64_t seed = 1;
  std::vector<std::size_t> sweep;  // l for BioHashing, w for Bloom-filter
  AttackMode attack_mode;
  std::size_t compromised_sample = 0;
  std::optional<ProbePolicy> probe;  // default: compromised (BioHashing), held_out (Bloom-filter)
  std::uint64_t sys1_seed = 0;
  std::uint64_t sys2_seed = 0;
  std::filesystem::path output_dir = "out";
  std::size_t workers = 1;

  // BioHashing
  double biohash_threshold = 0.0;
  bool biohash_orthonormalize = true;

  // Bloom-filter
  std::size_t bloom_columns_per_block = 64;
  std::size_t bloom_row_offset = 0;
  BloomDistance bloom_distance = BloomDistance::PopcountNormalized;

  DatasetKind dataset_kind = DatasetKind::SyntheticFace;
  std::filesystem::path dataset_path;
  SyntheticFaceConfig face;
  SyntheticIrisConfig iris;

  GaConfig ga;
  bool ga_seed_set = false;

  ProbePolicy effective_probe() const {
    if (probe) return *probe;
    return scheme == Scheme::BioHashing ? ProbePolicy::Compromised : ProbePolicy::HeldOut;
  }
};

namespace detail {

using Ptree = boost::property_tree::ptree;

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

class ConfigReader {
 public:
  ConfigReader(const Ptree& root) : root_(root) {}

  void allow(const std::string& section, std::set<std::string> keys) { allowed_[section] = std::move(keys); }

  void check_unknown() const {
    for (const auto& [section, body] : root_) {
      const auto it = allowed_.find(section);
      require(it != allowed_.end(), ErrorCode::InvalidConfig, "unknown config section [" + section + "]");
      require(body.data().empty() || !body.empty(), ErrorCode::InvalidConfig,
              "key '" + section + "' must be inside a section");
      for (const auto& [key, _] : body)
        require(it->second.count(key) > 0, ErrorCode::InvalidConfig, "unknown key '" + key + "' in [" + section + "]");
    }
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = root_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(Ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim_copy(*v);
  }

  template <typename T>
  void read(const std::string& section, const std::string& key, T& out) const {
    const auto v = get(section, key);
    if (!v) return;
    out = parse<T>(*v, section + "." + key);
  }

  template <typename T>
  static T parse(const std::string& s, const std::string& what) {
    std::istringstream is(s);
    T v{};
    if constexpr (std::is_same_v<T, bool>) {
      const auto l = lower(s);
      if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
      if (l == "false" || l == "0" || l == "no" || l == "off") return false;
      throw Error(ErrorCode::InvalidConfig, what + ": expected a boolean, got '" + s + "'");
    } else {
      if constexpr (std::is_unsigned_v<T>)
        require(!s.empty() && s.front() != '-', ErrorCode::InvalidConfig, what + ": expected a nonnegative integer");
      is >> v;
      require(!is.fail() && (is >> std::ws).eof(), ErrorCode::InvalidConfig,
              what + ": cannot parse '" + s + "'");
      return v;
    }
  }

 private:
  static std::string trim_copy(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  const Ptree& root_;
  std::map<std::string, std::set<std::string>> allowed_;
};

constexpr std::uint64_t kDataSeed = 0x64617461ULL;  // "data"
constexpr std::uint64_t kSys1Seed = 0x73797331ULL;  // "sys1"
constexpr std::uint64_t kSys2Seed = 0x73797332ULL;  // "sys2"
constexpr std::uint64_t kGaSeed = 0x6761ULL;        // "ga"

}  // namespace detail

/// Parses an experiment config (INI grammar, see README). Seeds that are not
/// given explicitly derive from [experiment] seed, or from seed_override.
inline ExperimentConfig parse_experiment_config(std::istream& is, std::optional<std::uint64_t> seed_override = {}) {
  detail::Ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(is, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config syntax: ") + e.what());
  }

  detail::ConfigReader r(root);
  r.allow("experiment", {"scheme", "seed", "sweep", "attack_mode", "n_templates", "compromised_sample", "probe",
                         "sys1_seed", "sys2_seed", "output_dir", "workers"});
  r.allow("biohashing", {"threshold", "orthonormalize"});
  r.allow("bloomfilter", {"columns_per_block", "row_offset", "distance"});
  r.allow("dataset", {"kind", "path", "subjects", "samples_per_subject", "dim", "intra_noise_sigma", "width",
                      "height", "intra_flip_prob", "seed"});
  r.allow("ga", {"population_size", "elite_count", "crossover_rate", "mutation_rate", "mutation_scale",
                 "max_generations", "stall_generations", "stall_tolerance", "fitness_target", "seed",
                 "tournament_size", "lower_bound", "upper_bound"});
  r.check_unknown();

  ExperimentConfig c;
  const auto scheme = r.get("experiment", "scheme");
  require(scheme.has_value(), ErrorCode::InvalidConfig, "experiment.scheme is required");
  if (*scheme == "biohashing")
    c.scheme = Scheme::BioHashing;
  else if (*scheme == "bloomfilter")
    c.scheme = Scheme::BloomFilter;
  else
    throw Error(ErrorCode::InvalidConfig, "experiment.scheme must be biohashing or bloomfilter");

  r.read("experiment", "seed", c.seed);
  if (seed_override) c.seed = *seed_override;

  if (const auto sweep = r.get("experiment", "sweep")) {
    std::string item;
    std::istringstream ss(*sweep);
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      c.sweep.push_back(detail::ConfigReader::parse<std::size_t>(item.substr(b), "experiment.sweep"));
    }
  }
  require(!c.sweep.empty(), ErrorCode::InvalidConfig, "experiment.sweep must list at least one value");

  if (const auto mode = r.get("experiment", "attack_mode")) {
    if (*mode == "one_template") {
      c.attack_mode.templates = 1;
    } else if (*mode == "n_templates") {
      c.attack_mode.templates = 3;
      r.read("experiment", "n_templates", c.attack_mode.templates);
    } else {
      throw Error(ErrorCode::InvalidConfig, "experiment.attack_mode must be one_template or n_templates");
    }
  }
  r.read("experiment", "compromised_sample", c.compromised_sample);
  if (const auto probe = r.get("experiment", "probe")) {
    if (*probe == "compromised")
      c.probe = ProbePolicy::Compromised;
    else if (*probe == "held_out")
      c.probe = ProbePolicy::HeldOut;
    else
      throw Error(ErrorCode::InvalidConfig, "experiment.probe must be compromised or held_out");
  }
  c.sys1_seed = derive_seed(c.seed, {detail::kSys1Seed});
  c.sys2_seed = derive_seed(c.seed, {detail::kSys2Seed});
  r.read("experiment", "sys1_seed", c.sys1_seed);
  r.read("experiment", "sys2_seed", c.sys2_seed);
  if (const auto out = r.get("experiment", "output_dir")) c.output_dir = *out;
  r.read("experiment", "workers", c.workers);

  r.read("biohashing", "threshold", c.biohash_threshold);
  r.read("biohashing", "orthonormalize", c.biohash_orthonormalize);

  r.read("bloomfilter", "columns_per_block", c.bloom_columns_per_block);
  r.read("bloomfilter", "row_offset", c.bloom_row_offset);
  if (const auto d = r.get("bloomfilter", "distance")) {
    if (*d == "popcount_normalized")
      c.bloom_distance = BloomDistance::PopcountNormalized;
    else if (*d == "hamming")
      c.bloom_distance = BloomDistance::Hamming;
    else
      throw Error(ErrorCode::InvalidConfig, "bloomfilter.distance must be popcount_normalized or hamming");
  }

  c.dataset_kind = c.scheme == Scheme::BioHashing ? DatasetKind::SyntheticFace : DatasetKind::SyntheticIris;
  if (const auto kind = r.get("dataset", "kind")) {
    if (*kind == "synthetic_face")
      c.dataset_kind = DatasetKind::SyntheticFace;
    else if (*kind == "synthetic_iris")
      c.dataset_kind = DatasetKind::SyntheticIris;
    else if (*kind == "feature_csv")
      c.dataset_kind = DatasetKind::FeatureCsv;
    else if (*kind == "bit_templates")
      c.dataset_kind = DatasetKind::BitTemplates;
    else
      throw Error(ErrorCode::InvalidConfig, "unknown dataset.kind '" + *kind + "'");
  }
  const bool real_data = c.dataset_kind == DatasetKind::SyntheticFace || c.dataset_kind == DatasetKind::FeatureCsv;
  require(real_data == (c.scheme == Scheme::BioHashing), ErrorCode::InvalidConfig,
          "dataset kind does not match the scheme (faces -> biohashing, iris -> bloomfilter)");
  if (const auto p = r.get("dataset", "path")) c.dataset_path = *p;
  if (c.dataset_kind == DatasetKind::FeatureCsv || c.dataset_kind == DatasetKind::BitTemplates)
    require(!c.dataset_path.empty(), ErrorCode::InvalidConfig, "dataset.path is required for file datasets");

  const std::uint64_t data_seed = derive_seed(c.seed, {detail::kDataSeed});
  c.face.seed = c.iris.seed = data_seed;
  r.read("dataset", "seed", c.face.seed);
  r.read("dataset", "seed", c.iris.seed);
  r.read("dataset", "subjects", c.face.subjects);
  r.read("dataset", "subjects", c.iris.subjects);
  r.read("dataset", "samples_per_subject", c.face.samples_per_subject);
  r.read("dataset", "samples_per_subject", c.iris.samples_per_subject);
  r.read("dataset", "dim", c.face.dim);
  r.read("dataset", "intra_noise_sigma", c.face.intra_noise_sigma);
  r.read("dataset", "width", c.iris.width);
  r.read("dataset", "height", c.iris.height);
  r.read("dataset", "intra_flip_prob", c.iris.intra_flip_prob);
  if (c.dataset_kind == DatasetKind::SyntheticFace) validate(c.face);
  if (c.dataset_kind == DatasetKind::SyntheticIris) validate(c.iris);

  auto& ga = c.ga;
  r.read("ga", "population_size", ga.population_size);
  r.read("ga", "elite_count", ga.elite_count);
  r.read("ga", "crossover_rate", ga.crossover_rate);
  if (const auto m = r.get("ga", "mutation_rate")) ga.mutation_rate = detail::ConfigReader::parse<double>(*m, "ga.mutation_rate");
  r.read("ga", "mutation_scale", ga.mutation_scale);
  r.read("ga", "max_generations", ga.max_generations);
  r.read("ga", "stall_generations", ga.stall_generations);
  r.read("ga", "stall_tolerance", ga.stall_tolerance);
  r.read("ga", "fitness_target", ga.fitness_target);
  r.read("ga", "tournament_size", ga.tournament_size);
  r.read("ga", "lower_bound", ga.real_lower_bound);
  r.read("ga", "upper_bound", ga.real_upper_bound);
  ga.seed = derive_seed(c.seed, {detail::kGaSeed});
  if (r.get("ga", "seed")) {
    r.read("ga", "seed", ga.seed);
    c.ga_seed_set = true;
  }
  validate(ga);

  require(c.workers >= 1, ErrorCode::InvalidConfig, "experiment.workers must be >= 1");
  require(c.attack_mode.templates >= 1, ErrorCode::InvalidConfig, "n_templates must be >= 1");
  if (c.dataset_kind == DatasetKind::SyntheticFace || c.dataset_kind == DatasetKind::SyntheticIris) {
    const std::size_t per_subject =
        c.dataset_kind == DatasetKind::SyntheticFace ? c.face.samples_per_subject : c.iris.samples_per_subject;
    require(c.compromised_sample + c.attack_mode.templates <= per_subject, ErrorCode::InvalidConfig,
            "compromised samples exceed samples_per_subject");
    if (c.effective_probe() == ProbePolicy::HeldOut)
      require(c.attack_mode.templates < per_subject, ErrorCode::InvalidConfig,
              "held_out probing needs a sample that is not compromised");
  }
  if (c.scheme == Scheme::BloomFilter) {
    require(c.bloom_columns_per_block > 0, ErrorCode::InvalidConfig, "bloomfilter.columns_per_block must be > 0");
    for (auto w : c.sweep) require(w >= 1 && w <= 16, ErrorCode::InvalidConfig, "word sizes must be in [1, 16]");
  } else {
    for (auto l : c.sweep) require(l >= 1, ErrorCode::InvalidConfig, "code lengths must be >= 1");
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                               std::optional<std::uint64_t> seed_override = {}) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::InvalidConfig, "cannot open config " + path.string());
  return parse_experiment_config(is, seed_override);
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

inline FaceDataset load_face_dataset(const ExperimentConfig& c) {
  return c.dataset_kind == DatasetKind::FeatureCsv ? load_feature_csv(c.dataset_path) : generate_face_dataset(c.face);
}

inline IrisDataset load_iris_dataset(const ExperimentConfig& c) {
  return c.dataset_kind == DatasetKind::BitTemplates ? load_bit_templates(c.dataset_path)
                                                     : generate_iris_dataset(c.iris);
}

/// Writes the configured dataset under `out` (features.csv or templates/) plus dataset.json.
inline void cmd_gen_data(const ExperimentConfig& c, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  nlohmann::json manifest;
  manifest["seed"] = c.seed;
  if (c.scheme == Scheme::BioHashing) {
    const auto ds = load_face_dataset(c);
    save_feature_csv(out / "features.csv", ds);
    manifest["kind"] = "feature_csv";
    manifest["path"] = "features.csv";
    manifest["samples"] = ds.size();
    manifest["dim"] = ds.empty() ? 0 : ds.front().value.dim();
  } else {
    const auto ds = load_iris_dataset(c);
    save_bit_templates(out / "templates", ds);
    manifest["kind"] = "bit_templates";
    manifest["path"] = "templates";
    manifest["samples"] = ds.size();
  }
  std::ofstream os(out / "dataset.json");
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot write dataset.json");
  os << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Experiment rows
// ---------------------------------------------------------------------------

struct ExperimentRow {
  std::string scheme;
  std::size_t param = 0;
  std::string attack_mode;
  EvaluationResult eval;
  std::map<std::string, std::size_t> stop_reasons;
  double mean_generations = 0.0;
  double mean_best_fitness = 0.0;
  // Timing lives apart from the deterministic columns.
  double mean_attack_seconds = 0.0;
  double max_attack_seconds = 0.0;
};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

inline std::string fmt_stop_reasons(const std::map<std::string, std::size_t>& m) {
  std::string s;
  for (const auto& [k, v] : m) {
    if (!s.empty()) s += ';';
    s += k + ":" + std::to_string(v);
  }
  return s;
}

}  // namespace detail

inline const char* kResultHeader =
    "scheme,param,attack_mode,theta,eer,far_at_et_normal,far_at_et_attack,ol,intersection_c,histogram_ol,"
    "mean_best_fitness,stop_reason,mean_generations";

inline std::string result_csv_line(const ExperimentRow& r) {
  using namespace detail;
  return r.scheme + "," + std::to_string(r.param) + "," + r.attack_mode + "," + fmt_num(r.eval.theta) + "," +
         fmt_num(r.eval.eer) + "," + fmt_num(r.eval.far_at_et_normal) + "," + fmt_opt(r.eval.far_at_et_attack) +
         "," + fmt_opt(r.eval.ol) + "," + fmt_opt(r.eval.intersection_c) + "," + fmt_opt(r.eval.histogram_ol) + "," +
         fmt_num(r.mean_best_fitness) + "," + fmt_stop_reasons(r.stop_reasons) + "," + fmt_num(r.mean_generations);
}

inline const char* kTimingHeader = "scheme,param,attack_mode,mean_attack_seconds,max_attack_seconds";

inline std::string timing_csv_line(const ExperimentRow& r) {
  return r.scheme + "," + std::to_string(r.param) + "," + r.attack_mode + "," + detail::fmt_num(r.mean_attack_seconds) +
         "," + detail::fmt_num(r.max_attack_seconds);
}

inline void write_convergence_csv(const std::filesystem::path& path, const std::vector<GenerationStats>& log) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + path.string());
  os << "generation,best_fitness,mean_fitness\n";
  char buf[96];
  for (const auto& g : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f\n", g.generation, g.best_fitness, g.mean_fitness);
    os << buf;
  }
}

namespace detail {

/// Runs fn(i) for i in [0, n) on `workers` threads; the first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline HelperData make_helper(const ExperimentConfig& c, std::size_t param, std::uint64_t seed, std::size_t dim,
                              std::size_t width, std::size_t height) {
  if (c.scheme == Scheme::BioHashing)
    return HelperData::biohashing(seed, dim, param, c.biohash_threshold, c.biohash_orthonormalize);
  require(width % c.bloom_columns_per_block == 0, ErrorCode::InvalidConfig,
          "template width " + std::to_string(width) + " is not a multiple of columns_per_block");
  auto h = HelperData::bloom_filter(static_cast<unsigned>(param), width / c.bloom_columns_per_block,
                                    c.bloom_columns_per_block, height, seed);
  h.bloom.row_offset = c.bloom_row_offset;
  h.bloom.distance = c.bloom_distance;
  validate_bloom_params(h.bloom);
  return h;
}

template <typename T>
T preimage_value(const Genome& g, const HelperData& helper);

template <>
inline FeatureVector preimage_value<FeatureVector>(const Genome& g, const HelperData&) {
  return FeatureVector(std::get<RealGenome>(g).values);
}

template <>
inline BitTemplate preimage_value<BitTemplate>(const Genome& g, const HelperData& helper) {
  return decode_bloom_genome(std::get<BitGenome>(g), helper.bloom);
}

struct SubjectAttack {
  std::size_t subject = 0;
  AttackResult result;
};

/// Attacks every subject of `ds` in the sys1 system and scores the
/// preimages in sys2.
template <typename T>
ExperimentRow run_sweep_value(const ExperimentConfig& c, const Dataset<T>& ds, std::size_t param,
                              const HelperData& sys1, const HelperData& sys2, const std::filesystem::path& conv_dir,
                              std::ostream* log) {
  const Transformer t1(sys1);
  const auto groups = group_by_subject(ds);
  const std::size_t n = c.attack_mode.templates;

  std::vector<SubjectAttack> attacks(groups.size());
  std::vector<Preimage<T>> preimages(groups.size());
  std::mutex log_mutex;

  parallel_for(groups.size(), c.workers, [&](std::size_t gi) {
    const auto& idx = groups[gi];
    const std::size_t subject = ds[idx.front()].subject;
    std::vector<std::size_t> compromised;
    std::vector<std::size_t> held_out;
    std::vector<ProtectedTemplate> targets;
    for (std::size_t i : idx) {
      const std::size_t k = ds[i].sample;
      if (k >= c.compromised_sample && k < c.compromised_sample + n) {
        compromised.push_back(k);
        targets.push_back(t1(ds[i].value));
      } else {
        held_out.push_back(k);
      }
    }
    require(targets.size() == n, ErrorCode::MissingAttackResult,
            "subject " + std::to_string(subject) + " lacks the compromised samples");
    GaConfig ga = c.ga;
    ga.seed = derive_seed(c.ga.seed, {param, subject});
    auto res = run_attack(targets, sys1, ga);

    Preimage<T> p{subject, preimage_value<T>(res.best_genome, sys1),
                  c.effective_probe() == ProbePolicy::Compromised ? compromised : held_out};
    require(!p.probe_samples.empty(), ErrorCode::MissingAttackResult,
            "subject " + std::to_string(subject) + " has no probe samples");
    write_convergence_csv(conv_dir / ("subject_" + std::to_string(subject) + ".csv"), res.convergence_log);
    if (log) {
      std::lock_guard lock(log_mutex);
      *log << "  param " << param << " subject " << subject << ": best " << fmt_num(res.best_fitness) << " after "
           << res.generations_run << " generations (" << to_string(res.stop_reason) << ", "
           << fmt_num(res.wall_time_seconds) << " s)\n";
      log->flush();
    }
    attacks[gi] = {subject, std::move(res)};
    preimages[gi] = std::move(p);
  });

  const auto scores = assemble_scores(ds, sys1, sys2, preimages);

  ExperimentRow row;
  row.scheme = to_string(c.scheme);
  row.param = param;
  row.attack_mode = to_string(c.attack_mode);
  row.eval = evaluate(scores);
  double gens = 0.0;
  double fit = 0.0;
  for (const auto& a : attacks) {
    ++row.stop_reasons[to_string(a.result.stop_reason)];
    gens += static_cast<double>(a.result.generations_run);
    fit += a.result.best_fitness;
    row.mean_attack_seconds += a.result.wall_time_seconds;
    row.max_attack_seconds = std::max(row.max_attack_seconds, a.result.wall_time_seconds);
  }
  const auto na = static_cast<double>(attacks.size());
  row.mean_generations = gens / na;
  row.mean_best_fitness = fit / na;
  row.mean_attack_seconds /= na;
  return row;
}

inline std::string row_file_name(const ExperimentRow& r) {
  return r.scheme + "_" + std::to_string(r.param) + "_" + r.attack_mode;
}

inline void write_single_row(const std::filesystem::path& path, const std::string& header, const std::string& line) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + path.string());
  os << header << '\n' << line << '\n';
}

}  // namespace detail

/// Runs the whole sweep. Output layout under c.output_dir:
///   results.csv, timing.csv      one row per sweep value
///   rows/<scheme>_<param>_<mode>.csv, rows/<...>.timing.csv
///   convergence/<param>/subject_<s>.csv
/// A failing sweep value leaves a RESUMABLE marker; a rerun skips values
/// whose row files exist.
inline std::vector<ExperimentRow> cmd_run_experiment(const ExperimentConfig& c, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  const fs::path out = c.output_dir;
  fs::create_directories(out / "rows");
  const fs::path marker = out / "RESUMABLE";
  const bool resuming = fs::exists(marker);

  std::optional<FaceDataset> faces;
  std::optional<IrisDataset> irises;
  std::size_t dim = 0, width = 0, height = 0;
  if (c.scheme == Scheme::BioHashing) {
    faces = load_face_dataset(c);
    require(!faces->empty(), ErrorCode::InvalidConfig, "empty face dataset");
    dim = faces->front().value.dim();
  } else {
    irises = load_iris_dataset(c);
    require(!irises->empty(), ErrorCode::InvalidConfig, "empty iris dataset");
    width = irises->front().value.width();
    height = irises->front().value.height();
  }

  std::vector<ExperimentRow> rows;
  for (std::size_t param : c.sweep) {
    ExperimentRow probe_row;
    probe_row.scheme = to_string(c.scheme);
    probe_row.param = param;
    probe_row.attack_mode = to_string(c.attack_mode);
    const fs::path row_path = out / "rows" / (detail::row_file_name(probe_row) + ".csv");
    if (resuming && fs::exists(row_path)) {
      if (log) *log << "param " << param << ": already complete, skipping\n";
      continue;
    }
    try {
      const auto sys1 = detail::make_helper(c, param, c.sys1_seed, dim, width, height);
      const auto sys2 = detail::make_helper(c, param, c.sys2_seed, dim, width, height);
      const fs::path conv_dir = out / "convergence" / std::to_string(param);
      fs::create_directories(conv_dir);
      if (log) *log << "param " << param << ": attacking\n";
      ExperimentRow row = faces ? detail::run_sweep_value(c, *faces, param, sys1, sys2, conv_dir, log)
                                : detail::run_sweep_value(c, *irises, param, sys1, sys2, conv_dir, log);
      detail::write_single_row(row_path, kResultHeader, result_csv_line(row));
      detail::write_single_row(out / "rows" / (detail::row_file_name(row) + ".timing.csv"), kTimingHeader,
                               timing_csv_line(row));
      rows.push_back(std::move(row));
    } catch (...) {
      std::ofstream(marker) << "failed at param " << param << "\n";
      throw;
    }
  }

  std::ofstream results(out / "results.csv");
  std::ofstream timing(out / "timing.csv");
  require(results && timing, ErrorCode::IoError, "cannot write results in " + out.string());
  results << kResultHeader << '\n';
  timing << kTimingHeader << '\n';
  for (const auto& r : rows) {
    results << result_csv_line(r) << '\n';
    timing << timing_csv_line(r) << '\n';
  }
  if (!resuming || rows.size() == c.sweep.size()) fs::remove(marker);
  return rows;
}

/// Single-subject attack that writes its convergence CSV to `out_csv`.
inline AttackResult cmd_attack(const ExperimentConfig& c, std::size_t subject, std::size_t param,
                               const std::filesystem::path& out_csv) {
  const std::size_t n = c.attack_mode.templates;
  std::vector<ProtectedTemplate> targets;
  HelperData sys1;
  auto collect = [&](const auto& ds, std::size_t dim, std::size_t w, std::size_t h) {
    sys1 = detail::make_helper(c, param, c.sys1_seed, dim, w, h);
    const Transformer t1(sys1);
    for (const auto& s : ds)
      if (s.subject == subject && s.sample >= c.compromised_sample && s.sample < c.compromised_sample + n)
        targets.push_back(t1(s.value));
  };
  if (c.scheme == Scheme::BioHashing) {
    const auto ds = load_face_dataset(c);
    require(!ds.empty(), ErrorCode::InvalidConfig, "empty face dataset");
    collect(ds, ds.front().value.dim(), 0, 0);
  } else {
    const auto ds = load_iris_dataset(c);
    require(!ds.empty(), ErrorCode::InvalidConfig, "empty iris dataset");
    collect(ds, 0, ds.front().value.width(), ds.front().value.height());
  }
  require(targets.size() == n, ErrorCode::MissingAttackResult,
          "subject " + std::to_string(subject) + " lacks the compromised samples");
  GaConfig ga = c.ga;
  ga.seed = derive_seed(c.ga.seed, {param, subject});
  auto res = run_attack(targets, sys1, ga);
  if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
  write_convergence_csv(out_csv, res.convergence_log);
  return res;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportRow {
  std::map<std::string, std::string> fields;
  std::string get(const std::string& k) const {
    const auto it = fields.find(k);
    return it == fields.end() ? std::string() : it->second;
  }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<ReportRow> read_rows(const std::filesystem::path& file) {
  std::ifstream is(file);
  std::string header_line, line;
  std::vector<ReportRow> rows;
  if (!std::getline(is, header_line)) return rows;
  const auto header = split_line(header_line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto vals = split_line(line);
    require(vals.size() == header.size(), ErrorCode::ParseError, "malformed row in " + file.string());
    ReportRow r;
    for (std::size_t i = 0; i < header.size(); ++i) r.fields[header[i]] = vals[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace detail

/// Merges every rows/*.csv under `dir` (recursively), sorted by scheme,
/// parameter and attack mode, into report.csv and report.txt.
inline std::vector<ReportRow> cmd_report(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dir), ErrorCode::NoResults, dir.string() + " is not a directory");
  std::vector<ReportRow> rows;
  std::map<std::string, ReportRow> timing;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().parent_path().filename() == "rows" && e.path().extension() == ".csv")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const bool is_timing = f.stem().extension() == ".timing";
    for (auto& r : detail::read_rows(f)) {
      const std::string key = r.get("scheme") + "|" + r.get("param") + "|" + r.get("attack_mode");
      if (is_timing)
        timing[key] = std::move(r);
      else
        rows.push_back(std::move(r));
    }
  }
  require(!rows.empty(), ErrorCode::NoResults, "no result rows under " + dir.string());

  auto param_of = [](const ReportRow& r) {
    try {
      return std::stoull(r.get("param"));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "row with non-numeric param '" + r.get("param") + "'");
    }
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ReportRow& a, const ReportRow& b) {
    if (a.get("scheme") != b.get("scheme")) return a.get("scheme") < b.get("scheme");
    if (param_of(a) != param_of(b)) return param_of(a) < param_of(b);
    return a.get("attack_mode") < b.get("attack_mode");
  });
  for (auto& r : rows) {
    const auto it = timing.find(r.get("scheme") + "|" + r.get("param") + "|" + r.get("attack_mode"));
    if (it != timing.end()) {
      r.fields["mean_attack_seconds"] = it->second.get("mean_attack_seconds");
      r.fields["max_attack_seconds"] = it->second.get("max_attack_seconds");
    }
  }

  const std::vector<std::string> cols = {"scheme", "param", "attack_mode", "theta", "eer", "far_at_et_normal",
                                         "far_at_et_attack", "ol", "histogram_ol", "stop_reason", "mean_generations",
                                         "mean_attack_seconds", "max_attack_seconds"};
  std::ofstream csv(dir / "report.csv");
  require(static_cast<bool>(csv), ErrorCode::IoError, "cannot write report.csv");
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << r.get(cols[i]);
    csv << '\n';
  }

  std::ofstream txt(dir / "report.txt");
  require(static_cast<bool>(txt), ErrorCode::IoError, "cannot write report.txt");
  auto pct = [](const std::string& s) {
    if (s.empty()) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", std::stod(s));
    return std::string(buf);
  };
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %6s %-12s | %7s %7s %8s | %8s %7s | %9s %s\n", "scheme", "param", "mode",
                "theta", "EER", "FAR@ET", "FAR@ET", "OL", "mean_gen", "stop_reasons");
  txt << std::string(38, ' ') << "| Normal                   | Attack           |\n" << buf;
  txt << std::string(std::string(buf).size() - 1, '-') << '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %6s %-12s | %7s %7s %8s | %8s %7s | %9s %s\n", r.get("scheme").c_str(),
                  r.get("param").c_str(), r.get("attack_mode").c_str(), pct(r.get("theta")).c_str(),
                  pct(r.get("eer")).c_str(), pct(r.get("far_at_et_normal")).c_str(),
                  pct(r.get("far_at_et_attack")).c_str(), pct(r.get("ol")).c_str(),
                  pct(r.get("mean_generations")).c_str(), r.get("stop_reason").c_str());
    txt << buf;
  }
  return rows;
}

}  // namespace cbsa
