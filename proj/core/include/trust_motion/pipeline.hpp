#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "trust_motion/alignment.hpp"
#include "trust_motion/clustering.hpp"
#include "trust_motion/common.hpp"
#include "trust_motion/embeddings.hpp"
#include "trust_motion/factor_analysis.hpp"
#include "trust_motion/ingest.hpp"
#include "trust_motion/trajectory.hpp"

namespace trust_motion {

inline constexpr std::array<std::string_view, 7> kStageNames = {
    "ingest", "characterize", "efa", "cluster", "embed", "align", "analyze"};

/// A stage failed; what() carries "<stage>: <original message>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// The pipeline config failed validation; problems() lists every issue.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// --- factor score table ---------------------------------------------------

struct ScoreTable {
  std::vector<EventMeta> events;
  std::vector<std::string> factor_names;
  Matrix rows;  ///< n x m
};

/// record_id, sender_id, subsystem, sent_time, then one column per factor at
/// 17 significant digits.
void write_scores_csv(std::ostream& out, const ScoreTable& table);
/// Throws Error prefixed "schema error" on missing columns or bad cells.
ScoreTable read_scores_csv(std::istream& in);

// --- stage functions (file in, file out) -----------------------------------

struct IngestSummary {
  std::size_t parsed = 0;
  std::size_t kept = 0;
};

/// Parse errors abort the stage, listing the offending lines.
IngestSummary run_ingest(const std::string& input, const FilterPolicy& policy, const std::string& output);

/// Sender statistics come from `corpus` (the unfiltered input) when given,
/// otherwise from the records themselves.
std::size_t run_characterize(const std::string& input, const std::string& corpus, const std::string& output);

FactorModel run_efa(const std::string& characteristics_csv, std::optional<std::size_t> factors,
                    const std::string& model_json, const std::string& scores_csv, const PafOptions& paf = {});

struct ClusterPaths {
  std::string labeled_csv;
  std::string meta_csv;
  std::string model_json;
};

KMeansResult run_cluster(const std::string& scores_csv, std::size_t k, std::size_t restarts,
                         std::uint64_t seed, const ClusterPaths& out);

struct TuneOptions {
  std::size_t budget = 0;  ///< 0 disables tuning
  SearchSpace space{{0.01, 0.025, 0.05}, {3, 5, 10}, {kHour, 4 * kHour, 12 * kHour}, {3, 5, 10}};
};

EmbeddingSet run_embed(const std::string& labeled_csv, const std::string& meta_csv, Seconds slice_len,
                       const SgnsConfig& config, const TuneOptions& tune, const std::string& out_dir);

/// Aligns every slice of `in_dir` into the last slice's frame and writes the
/// aligned set plus rotations.json to `out_dir`.
AlignmentChain run_align(const std::string& in_dir, const std::string& out_dir,
                         std::optional<std::size_t> min_shared = std::nullopt);

enum class ProjectionKind { pca, tsne };

struct AnalyzeOptions {
  ProjectionKind projection = ProjectionKind::tsne;
  TsneConfig tsne;
  OperationThresholds thresholds;
  ProximityMode proximity = ProximityMode::mean;
  ContextShiftMode context_shift = ContextShiftMode::distance_profile;
  /// Scale every activity vector to unit length before measuring distances.
  bool normalize = true;
  /// Trajectories exported: tokens matching `focus` plus the most active
  /// non-reference tokens, up to this many in total.
  std::size_t project_tokens = 20;
  std::vector<TokenPattern> focus;
};

struct TokenAnalysis {
  ActivityToken token;
  std::string initialism;
  std::size_t present_slices = 0;
  std::size_t events = 0;
  bool reference = false;
  ProximityTrend trend;
  OperationClass operation;
};

struct AnalyzeResult {
  std::vector<TokenAnalysis> tokens;      ///< every token present in >= 2 slices
  std::vector<TrajectoryReport> reports;  ///< exported trajectories
  Matrix projection;
  std::vector<std::pair<std::size_t, double>> kl_history;
};

/// Scale rows of every slice's activity matrix to unit length (zero rows stay).
std::vector<SliceEmbeddings> normalize_rows(std::span<const SliceEmbeddings> slices);

/// In-memory analysis over an aligned set.
AnalyzeResult analyze(const EmbeddingSet& aligned, const ReferenceSet& reference, const AnalyzeOptions& options);

/// Writes trajectories.csv to `out_csv` and classes.csv next to it.
AnalyzeResult run_analyze(const std::string& aligned_dir, const std::string& reference_json,
                          const AnalyzeOptions& options, const std::string& out_csv,
                          const std::string& classes_csv);

void write_classes_csv(std::ostream& out, std::span<const TokenAnalysis> tokens);

// --- orchestration ---------------------------------------------------------

struct PipelineConfig {
  std::string input;        ///< events JSONL
  std::string output_dir;   ///< every stage artifact lands here
  std::string reference;    ///< reference set JSON, needed by analyze
  std::optional<std::uint64_t> seed = 7;
  std::array<bool, 7> stages = {true, true, true, true, true, true, true};
  FilterPolicy filter;
  std::optional<std::size_t> factors;  ///< unset: Kaiser criterion
  PafOptions paf;
  std::size_t clusters = 5;
  std::size_t restarts = 50;
  Seconds slice_len = kWeek;
  SgnsConfig sgns;
  TuneOptions tune;
  std::optional<std::size_t> min_shared;
  AnalyzeOptions analysis;

  bool stage_enabled(std::string_view name) const;
};

/// Relative paths resolve against `base_dir` (normally the config's folder).
PipelineConfig parse_pipeline_config(std::string_view json_text, const std::string& base_dir = "");
std::string pipeline_config_to_json(const PipelineConfig& config);

/// Every violated constraint, empty when the config is usable.
std::vector<std::string> validate_config(const PipelineConfig& config);

struct StageRecord {
  std::string name;
  std::string version;
  std::string status;  ///< "completed", "failed", or "skipped"
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> inputs;   ///< path, hash
  std::vector<std::pair<std::string, std::string>> outputs;  ///< path, hash
  std::string error;
};

struct RunManifest {
  std::string config_hash;
  std::vector<StageRecord> stages;

  std::size_t completed() const;
  std::string to_json() const;
};

/// Artifact paths inside output_dir.
struct PipelinePaths {
  std::string filtered, characteristics, factor_model, scores, labeled, labeled_meta, clusters, embeddings,
      aligned, trajectories, classes, manifest;

  static PipelinePaths under(const std::string& output_dir);
};

/// FNV-1a over a file, or over every file of a directory in name order.
std::string hash_path(const std::string& path);

/// Runs the enabled stages in order and writes manifest.json. A failing stage
/// is recorded in the manifest, then rethrown as StageError; earlier outputs
/// stay in place. Throws ConfigError before any stage runs when validation
/// fails.
RunManifest run_pipeline(const PipelineConfig& config);

}  // namespace trust_motion
