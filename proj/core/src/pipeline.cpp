#include "trust_motion/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "json_text.hpp"
#include "trust_motion/alignment.hpp"
#include "trust_motion/characteristics.hpp"
#include "trust_motion/csv.hpp"

namespace trust_motion {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kStageVersion = "1";

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  return in;
}

void write_stream_file(const std::string& path, const std::ostringstream& os) { write_file(path, os.str()); }

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

std::string normalized(const std::string& path) {
  if (path.empty()) return path;
  return fs::absolute(fs::path(path)).lexically_normal().string();
}

std::vector<std::string> activity_names_for(const EmbeddingSet& set) {
  return set.activity_names;
}

std::string activity_name(const std::vector<std::string>& names, std::size_t label) {
  if (label < names.size() && !names[label].empty()) return names[label];
  return label_name(label);
}

std::string_view projection_name(ProjectionKind k) { return k == ProjectionKind::pca ? "pca" : "tsne"; }

ProjectionKind projection_from(std::string_view name) {
  if (name == "pca") return ProjectionKind::pca;
  if (name == "tsne") return ProjectionKind::tsne;
  throw Error(fmt::format("unknown projection '{}' (expected pca or tsne)", name));
}

std::string_view proximity_name(ProximityMode m) { return m == ProximityMode::min ? "min" : "mean"; }

ProximityMode proximity_from(std::string_view name) {
  if (name == "mean") return ProximityMode::mean;
  if (name == "min") return ProximityMode::min;
  throw Error(fmt::format("unknown proximity mode '{}' (expected mean or min)", name));
}

std::string_view shift_name(ContextShiftMode m) {
  return m == ContextShiftMode::centroid_cosine ? "centroid_cosine" : "distance_profile";
}

ContextShiftMode shift_from(std::string_view name) {
  if (name == "distance_profile") return ContextShiftMode::distance_profile;
  if (name == "centroid_cosine") return ContextShiftMode::centroid_cosine;
  throw Error(fmt::format("unknown context shift mode '{}'", name));
}

Seconds duration_of(const json& v) {
  if (v.is_string()) return parse_duration(v.get<std::string>());
  return v.get<Seconds>();
}

json pattern_json(const TokenPattern& p) {
  json j = json::array();
  j.push_back(p.label ? json(*p.label) : json(nullptr));
  j.push_back(p.sender_id ? json(*p.sender_id) : json(nullptr));
  j.push_back(p.subsystem ? json(*p.subsystem) : json(nullptr));
  return j;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

// --- score table -------------------------------------------------------------

void write_scores_csv(std::ostream& out, const ScoreTable& table) {
  std::vector<std::string> header = {"record_id", "sender_id", "subsystem", "sent_time"};
  header.insert(header.end(), table.factor_names.begin(), table.factor_names.end());
  write_csv_row(out, header);
  for (std::size_t i = 0; i < table.events.size(); ++i) {
    const EventMeta& e = table.events[i];
    std::vector<std::string> row = {e.record_id, e.sender_id, e.subsystem, format_iso8601(e.sent_time)};
    for (Eigen::Index c = 0; c < table.rows.cols(); ++c) {
      row.push_back(format_real(table.rows(static_cast<Eigen::Index>(i), c)));
    }
    write_csv_row(out, row);
  }
}

ScoreTable read_scores_csv(std::istream& in) {
  CsvTable csv;
  try {
    csv = read_csv(in);
  } catch (const Error& e) {
    throw Error(fmt::format("schema error in scores table: {}", e.what()));
  }
  static const std::array<std::string_view, 4> meta = {"record_id", "sender_id", "subsystem", "sent_time"};
  for (std::size_t c = 0; c < meta.size(); ++c) {
    if (csv.header.size() <= c || csv.header[c] != meta[c]) {
      throw Error(fmt::format("schema error in scores table: column {} must be '{}'", c + 1, meta[c]));
    }
  }
  if (csv.header.size() < 5) throw Error("schema error in scores table: no factor columns");
  ScoreTable t;
  t.factor_names.assign(csv.header.begin() + 4, csv.header.end());
  const auto m = static_cast<Eigen::Index>(t.factor_names.size());
  t.rows.resize(static_cast<Eigen::Index>(csv.rows.size()), m);
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    try {
      t.events.push_back({row[0], row[1], row[2], parse_timestamp(row[3])});
      for (Eigen::Index c = 0; c < m; ++c) {
        const double v = parse_real(row[static_cast<std::size_t>(c) + 4]);
        if (!std::isfinite(v)) throw Error("non-finite score");
        t.rows(static_cast<Eigen::Index>(i), c) = v;
      }
    } catch (const Error& e) {
      throw Error(fmt::format("schema error in scores table: data row {}: {}", i + 1, e.what()));
    }
  }
  return t;
}

// --- stages ------------------------------------------------------------------

IngestSummary run_ingest(const std::string& input, const FilterPolicy& policy, const std::string& output) {
  const ParseResult parsed = parse_events_file(input);
  if (!parsed.errors.empty()) {
    std::string msg = fmt::format("{} invalid line(s) in '{}'", parsed.errors.size(), input);
    const std::size_t shown = std::min<std::size_t>(parsed.errors.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
      msg += fmt::format("\n  line {}: {}", parsed.errors[i].line, parsed.errors[i].message);
    }
    throw Error(msg);
  }
  const auto kept = filter_events(parsed.records, policy);
  std::ostringstream os;
  write_events(os, kept);
  ensure_parent(output);
  write_stream_file(output, os);
  return {parsed.records.size(), kept.size()};
}

std::size_t run_characterize(const std::string& input, const std::string& corpus, const std::string& output) {
  auto load = [](const std::string& path) {
    ParseResult r = parse_events_file(path);
    if (!r.errors.empty()) {
      throw Error(fmt::format("'{}' line {}: {}", path, r.errors.front().line, r.errors.front().message));
    }
    return std::move(r.records);
  };
  const auto records = load(input);
  const auto stats = compute_sender_stats(corpus.empty() || corpus == input ? records : load(corpus));
  const auto events = characterize(records, stats);
  std::ostringstream os;
  write_characteristics_csv(os, events);
  ensure_parent(output);
  write_stream_file(output, os);
  return events.size();
}

FactorModel run_efa(const std::string& characteristics_csv, std::optional<std::size_t> factors,
                    const std::string& model_json, const std::string& scores_csv, const PafOptions& paf) {
  auto in = open_input(characteristics_csv);
  const auto events = read_characteristics_csv(in);
  if (events.size() < 3) throw Error(fmt::format("{} events is too few for factor analysis", events.size()));
  Matrix x(static_cast<Eigen::Index>(events.size()), static_cast<Eigen::Index>(kCharacteristicCount));
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto v = events[i].characteristics.values();
    for (std::size_t j = 0; j < v.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  std::vector<std::string> names;
  for (const auto n : CharacteristicVector::field_names()) names.emplace_back(n);
  FactorModel model = fit_factor_model(x, factors, names, {}, paf);
  const FactorScores scores = score(model, x);

  ScoreTable table;
  table.factor_names = scores.factor_names;
  table.rows = scores.rows;
  for (const auto& e : events) table.events.push_back({e.record_id, e.sender_id, e.subsystem, e.sent_time});
  std::ostringstream os;
  write_scores_csv(os, table);
  ensure_parent(model_json);
  ensure_parent(scores_csv);
  write_file(model_json, factor_model_to_json(model));
  write_stream_file(scores_csv, os);
  return model;
}

KMeansResult run_cluster(const std::string& scores_csv, std::size_t k, std::size_t restarts, std::uint64_t seed,
                         const ClusterPaths& out) {
  auto in = open_input(scores_csv);
  const ScoreTable table = read_scores_csv(in);
  if (table.events.size() < k) {
    throw Error(fmt::format("{} scored events cannot form {} clusters", table.events.size(), k));
  }
  KMeansResult result = kmeans(table.rows, k, seed, restarts);
  result.model.cluster_names = name_clusters(result.model, table.factor_names);
  const auto labeled = label_events(table.rows, result.assignments, table.events);

  std::ostringstream labeled_os;
  write_labeled_csv(labeled_os, table.factor_names, labeled);
  std::ostringstream meta_os;
  write_labeled_meta_csv(meta_os, labeled, result.model.cluster_names);
  ensure_parent(out.labeled_csv);
  write_stream_file(out.labeled_csv, labeled_os);
  ensure_parent(out.meta_csv);
  write_stream_file(out.meta_csv, meta_os);

  std::string js = "{\n";
  js += fmt::format("  \"k\": {},\n  \"seed\": {},\n  \"restarts\": {},\n  \"best_restart\": {},\n", k, seed,
                    restarts, result.best_restart);
  js += "  \"inertia\": " + json_text::number(result.model.inertia) + ",\n";
  js += "  \"factor_names\": " + json_text::strings(table.factor_names) + ",\n";
  js += "  \"cluster_names\": " + json_text::strings(result.model.cluster_names) + ",\n";
  js += "  \"centroids\": " + json_text::matrix(result.model.centroids, "  ") + "\n}\n";
  ensure_parent(out.model_json);
  write_file(out.model_json, js);
  return result;
}

EmbeddingSet run_embed(const std::string& labeled_csv, const std::string& meta_csv, Seconds slice_len,
                       const SgnsConfig& config, const TuneOptions& tune, const std::string& out_dir) {
  auto labeled_in = open_input(labeled_csv);
  LabeledDataset data;
  if (meta_csv.empty()) {
    data = read_labeled(labeled_in);
  } else {
    auto meta_in = open_input(meta_csv);
    data = read_labeled(labeled_in, &meta_in);
  }
  if (data.rows.empty()) throw Error("no labeled events to embed");
  const auto slices = slice_events(data.rows, slice_len);

  SgnsConfig chosen = config;
  std::string tuning;
  if (tune.budget > 0) {
    const TuneResult tr = tune_hyperparameters(slices, tune.space, tune.budget, config.seed, config);
    chosen = tr.best;
    json trials = json::array();
    for (const auto& t : tr.trials) {
      trials.push_back({{"config", json::parse(sgns_config_to_json(t.config))}, {"objective", t.objective}});
    }
    tuning = json{{"best", json::parse(sgns_config_to_json(tr.best))}, {"objective", tr.objective}, {"trials", trials}}
                 .dump(2) + "\n";
  }

  EmbeddingSet set;
  set.config = chosen;
  set.slice_len = slice_len;
  set.activity_names = data.activity_names;
  set.embeddings = train_slices(slices, chosen);
  for (const auto& s : slices) set.slices.push_back({s.index, s.start, s.end, s.events.size(), s.empty(), ""});
  write_embedding_set(out_dir, set);
  if (!tuning.empty()) write_file((fs::path(out_dir) / "tuning.json").string(), tuning);
  return set;
}

AlignmentChain run_align(const std::string& in_dir, const std::string& out_dir, std::optional<std::size_t> min_shared) {
  EmbeddingSet set = read_embedding_set(in_dir);
  if (set.embeddings.empty()) throw Error(fmt::format("'{}' holds no non-empty slices", in_dir));
  AlignmentResult result = align_chain(set.embeddings, min_shared);
  set.embeddings = std::move(result.aligned);
  write_embedding_set(out_dir, set);
  write_rotations((fs::path(out_dir) / "rotations.json").string(), result.chain);
  return result.chain;
}

std::vector<SliceEmbeddings> normalize_rows(std::span<const SliceEmbeddings> slices) {
  std::vector<SliceEmbeddings> out(slices.begin(), slices.end());
  for (auto& s : out) {
    for (Eigen::Index r = 0; r < s.activity.rows(); ++r) {
      const double n = s.activity.row(r).norm();
      if (n > 0.0) s.activity.row(r) /= n;
    }
  }
  return out;
}

AnalyzeResult analyze(const EmbeddingSet& aligned, const ReferenceSet& reference, const AnalyzeOptions& options) {
  const std::vector<SliceEmbeddings> slices =
      options.normalize ? normalize_rows(aligned.embeddings)
                        : std::vector<SliceEmbeddings>(aligned.embeddings.begin(), aligned.embeddings.end());
  const auto names = activity_names_for(aligned);

  struct Tally {
    std::size_t present = 0;
    std::size_t events = 0;
  };
  std::map<ActivityToken, Tally> tally;
  for (const auto& s : slices) {
    for (std::size_t r = 0; r < s.vocab.size(); ++r) {
      Tally& t = tally[s.vocab.tokens[r]];
      ++t.present;
      t.events += s.vocab.counts[r];
    }
  }

  AnalyzeResult result;
  std::map<ActivityToken, std::size_t> position;
  for (const auto& [token, t] : tally) {
    if (t.present < 2) continue;
    TokenAnalysis a;
    a.token = token;
    a.initialism = render_initialism(token, activity_name(names, token.label));
    a.present_slices = t.present;
    a.events = t.events;
    a.reference = reference.contains(token);
    a.trend = proximity_trend(token, reference, slices, options.proximity);
    // Counts span every slice of the set, empty ones included as zeros.
    std::vector<double> counts;
    std::size_t next = 0;
    const auto per_slice = token_activity_counts(token, slices);
    for (const auto& info : aligned.slices) {
      if (info.empty) {
        counts.push_back(0.0);
      } else {
        counts.push_back(per_slice.at(next++));
      }
    }
    a.operation = classify_operation(a.trend, counts, options.thresholds);
    position[token] = result.tokens.size();
    result.tokens.push_back(std::move(a));
  }

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < result.tokens.size(); ++i) {
    const auto& tok = result.tokens[i].token;
    if (std::any_of(options.focus.begin(), options.focus.end(), [&](const TokenPattern& p) { return p.matches(tok); })) {
      chosen.push_back(i);
    }
  }
  std::vector<std::size_t> by_activity;
  for (std::size_t i = 0; i < result.tokens.size(); ++i) {
    if (!result.tokens[i].reference && std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
      by_activity.push_back(i);
    }
  }
  std::stable_sort(by_activity.begin(), by_activity.end(), [&](std::size_t a, std::size_t b) {
    return result.tokens[a].events > result.tokens[b].events;
  });
  for (const std::size_t i : by_activity) {
    if (chosen.size() >= options.project_tokens) break;
    chosen.push_back(i);
  }

  for (const std::size_t i : chosen) {
    const TokenAnalysis& a = result.tokens[i];
    TrajectoryReport report;
    report.trajectory = extract_trajectory(a.token, slices);
    try {
      report.trajectory.context_shift_series = context_shift(a.token, reference, slices, options.context_shift);
    } catch (const Error&) {
      // Left blank: some consecutive pair shares no reference token.
    }
    report.initialism = a.initialism;
    report.operation = a.operation;
    result.reports.push_back(std::move(report));
  }

  const Matrix points = stack_present_points(result.reports);
  if (points.rows() > 0) {
    if (options.projection == ProjectionKind::pca) {
      result.projection = project_pca(points);
    } else {
      TsneResult t = project_tsne(points, options.tsne);
      result.projection = std::move(t.embedding);
      result.kl_history = std::move(t.kl_history);
    }
  } else {
    result.projection = Matrix(0, 2);
  }
  return result;
}

void write_classes_csv(std::ostream& out, std::span<const TokenAnalysis> tokens) {
  write_csv_row(out, {"initialism", "label", "sender_id", "subsystem", "present_slices", "events", "reference",
                      "rho", "burstiness", "class"});
  for (const auto& a : tokens) {
    write_csv_row(out, {a.initialism, std::to_string(a.token.label), a.token.sender_id, a.token.subsystem,
                        std::to_string(a.present_slices), std::to_string(a.events), a.reference ? "1" : "0",
                        a.trend.rho ? format_real(*a.trend.rho) : "NA",
                        format_real(a.operation.evidence.burstiness),
                        std::string(operation_name(a.operation.kind))});
  }
}

AnalyzeResult run_analyze(const std::string& aligned_dir, const std::string& reference_json,
                          const AnalyzeOptions& options, const std::string& out_csv, const std::string& classes_csv) {
  const EmbeddingSet set = read_embedding_set(aligned_dir);
  const ReferenceSet reference = parse_reference_set(read_file(reference_json));
  AnalyzeResult result = analyze(set, reference, options);
  std::ostringstream traj;
  export_trajectories(traj, result.reports, result.projection);
  std::ostringstream classes;
  write_classes_csv(classes, result.tokens);
  ensure_parent(out_csv);
  write_stream_file(out_csv, traj);
  ensure_parent(classes_csv);
  write_stream_file(classes_csv, classes);
  return result;
}

// --- config ------------------------------------------------------------------

bool PipelineConfig::stage_enabled(std::string_view name) const {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return stages[i];
  }
  throw Error(fmt::format("unknown stage '{}'", name));
}

PipelineConfig parse_pipeline_config(std::string_view json_text, const std::string& base_dir) {
  PipelineConfig c;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) throw Error("pipeline config must be a JSON object");
    for (const auto& [key, v] : doc.items()) {
      if (key == "input") {
        c.input = resolve(base_dir, v.get<std::string>());
      } else if (key == "output_dir") {
        c.output_dir = resolve(base_dir, v.get<std::string>());
      } else if (key == "reference") {
        c.reference = resolve(base_dir, v.get<std::string>());
      } else if (key == "seed") {
        c.seed = v.is_null() ? std::nullopt : std::optional<std::uint64_t>(v.get<std::uint64_t>());
      } else if (key == "stages") {
        if (v.is_array()) {
          c.stages.fill(false);
          for (const auto& name : v) {
            const auto s = name.get<std::string>();
            const auto it = std::find(kStageNames.begin(), kStageNames.end(), s);
            if (it == kStageNames.end()) throw Error(fmt::format("unknown stage '{}'", s));
            c.stages[static_cast<std::size_t>(it - kStageNames.begin())] = true;
          }
        } else {
          for (const auto& [name, on] : v.items()) {
            const auto it = std::find(kStageNames.begin(), kStageNames.end(), name);
            if (it == kStageNames.end()) throw Error(fmt::format("unknown stage '{}'", name));
            c.stages[static_cast<std::size_t>(it - kStageNames.begin())] = on.get<bool>();
          }
        }
      } else if (key == "filter") {
        c.filter = parse_filter_policy(v.dump());
      } else if (key == "factors") {
        c.factors = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
      } else if (key == "efa") {
        for (const auto& [ek, ev] : v.items()) {
          if (ek == "max_iterations") c.paf.max_iterations = ev.get<std::size_t>();
          else if (ek == "tolerance") c.paf.tolerance = ev.get<double>();
          else throw Error(fmt::format("unknown efa key '{}'", ek));
        }
      } else if (key == "clusters") {
        c.clusters = v.get<std::size_t>();
      } else if (key == "restarts") {
        c.restarts = v.get<std::size_t>();
      } else if (key == "slice_len") {
        c.slice_len = duration_of(v);
      } else if (key == "sgns") {
        c.sgns = sgns_config_from_json(v.dump(), c.sgns);
      } else if (key == "tune") {
        for (const auto& [tk, tv] : v.items()) {
          if (tk == "budget") c.tune.budget = tv.get<std::size_t>();
          else if (tk == "learning_rates") c.tune.space.learning_rates = tv.get<std::vector<double>>();
          else if (tk == "negatives") c.tune.space.negatives = tv.get<std::vector<std::size_t>>();
          else if (tk == "epochs") c.tune.space.epochs = tv.get<std::vector<std::size_t>>();
          else if (tk == "windows") {
            c.tune.space.windows.clear();
            for (const auto& w : tv) c.tune.space.windows.push_back(duration_of(w));
          } else {
            throw Error(fmt::format("unknown tune key '{}'", tk));
          }
        }
      } else if (key == "min_shared") {
        c.min_shared = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
      } else if (key == "analysis") {
        AnalyzeOptions& a = c.analysis;
        for (const auto& [ak, av] : v.items()) {
          if (ak == "projection") a.projection = projection_from(av.get<std::string>());
          else if (ak == "perplexity") a.tsne.perplexity = av.get<double>();
          else if (ak == "iterations") a.tsne.iterations = av.get<std::size_t>();
          else if (ak == "learning_rate") a.tsne.learning_rate = av.get<double>();
          else if (ak == "normalize") a.normalize = av.get<bool>();
          else if (ak == "proximity") a.proximity = proximity_from(av.get<std::string>());
          else if (ak == "context_shift") a.context_shift = shift_from(av.get<std::string>());
          else if (ak == "burstiness") a.thresholds.burstiness = av.get<double>();
          else if (ak == "approach_rho") a.thresholds.approach_rho = av.get<double>();
          else if (ak == "recede_rho") a.thresholds.recede_rho = av.get<double>();
          else if (ak == "project_tokens") a.project_tokens = av.get<std::size_t>();
          else if (ak == "focus") {
            a.focus.clear();
            if (!av.empty()) a.focus = parse_reference_set(json{{"tokens", av}}.dump()).tokens;
          }
          else throw Error(fmt::format("unknown analysis key '{}'", ak));
        }
      } else {
        throw Error(fmt::format("unknown config key '{}'", key));
      }
    }
  } catch (const json::exception& e) {
    throw Error(fmt::format("invalid pipeline config: {}", e.what()));
  }
  if (c.seed) {
    c.sgns.seed = *c.seed;
    c.analysis.tsne.seed = *c.seed;
  }
  return c;
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  json stages = json::object();
  for (std::size_t i = 0; i < kStageNames.size(); ++i) stages[std::string(kStageNames[i])] = c.stages[i];
  json focus = json::array();
  for (const auto& p : c.analysis.focus) focus.push_back(pattern_json(p));
  json windows = json::array();
  for (const Seconds w : c.tune.space.windows) windows.push_back(format_duration(w));
  json doc = {
      {"input", c.input},
      {"output_dir", c.output_dir},
      {"reference", c.reference},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"stages", stages},
      {"filter", json::parse(filter_policy_to_json(c.filter))},
      {"factors", c.factors ? json(*c.factors) : json(nullptr)},
      {"efa", {{"max_iterations", c.paf.max_iterations}, {"tolerance", c.paf.tolerance}}},
      {"clusters", c.clusters},
      {"restarts", c.restarts},
      {"slice_len", format_duration(c.slice_len)},
      {"sgns", json::parse(sgns_config_to_json(c.sgns))},
      {"tune",
       {{"budget", c.tune.budget},
        {"learning_rates", c.tune.space.learning_rates},
        {"negatives", c.tune.space.negatives},
        {"windows", windows},
        {"epochs", c.tune.space.epochs}}},
      {"min_shared", c.min_shared ? json(*c.min_shared) : json(nullptr)},
      {"analysis",
       {{"projection", projection_name(c.analysis.projection)},
        {"perplexity", c.analysis.tsne.perplexity},
        {"iterations", c.analysis.tsne.iterations},
        {"learning_rate", c.analysis.tsne.learning_rate},
        {"normalize", c.analysis.normalize},
        {"proximity", proximity_name(c.analysis.proximity)},
        {"context_shift", shift_name(c.analysis.context_shift)},
        {"burstiness", c.analysis.thresholds.burstiness},
        {"approach_rho", c.analysis.thresholds.approach_rho},
        {"recede_rho", c.analysis.thresholds.recede_rho},
        {"project_tokens", c.analysis.project_tokens},
        {"focus", focus}}},
  };
  return doc.dump(2) + "\n";
}

PipelinePaths PipelinePaths::under(const std::string& output_dir) {
  const fs::path d(output_dir);
  auto at = [&](const char* name) { return (d / name).string(); };
  return {at("filtered.jsonl"), at("characteristics.csv"), at("factor_model.json"), at("scores.csv"),
          at("labeled.csv"),    at("labeled_meta.csv"),    at("clusters.json"),     at("embeddings"),
          at("aligned"),        at("trajectories.csv"),    at("classes.csv"),       at("manifest.json")};
}

std::vector<std::string> validate_config(const PipelineConfig& c) {
  std::vector<std::string> errors;
  const bool needs_input = c.stage_enabled("ingest") || c.stage_enabled("characterize");
  if (needs_input && c.input.empty()) errors.emplace_back("input path is required by ingest/characterize");
  if (c.output_dir.empty()) errors.emplace_back("output_dir is required");
  if (c.stage_enabled("analyze") && c.reference.empty()) errors.emplace_back("reference path is required by analyze");
  const bool stochastic = c.stage_enabled("cluster") || c.stage_enabled("embed") ||
                          (c.stage_enabled("analyze") && c.analysis.projection == ProjectionKind::tsne);
  if (stochastic && !c.seed) errors.emplace_back("seed is required when a stochastic stage is enabled");
  if (c.clusters < 1) errors.emplace_back("k ≥ 1 (clusters must be at least 1)");
  if (c.restarts < 1) errors.emplace_back("restarts ≥ 1");
  if (c.factors && (*c.factors < 1 || *c.factors > kCharacteristicCount)) {
    errors.push_back(fmt::format("factors must be in [1, {}]", kCharacteristicCount));
  }
  if (c.paf.max_iterations < 1) errors.emplace_back("efa.max_iterations ≥ 1");
  if (!(c.paf.tolerance > 0.0)) errors.emplace_back("efa.tolerance must be positive");
  if (c.slice_len <= 0) errors.emplace_back("slice_len must be positive");
  try {
    c.sgns.validate();
  } catch (const Error& e) {
    errors.push_back(fmt::format("sgns: {}", e.what()));
  }
  if (c.tune.budget > 0) {
    const auto& s = c.tune.space;
    if (s.learning_rates.empty() || s.negatives.empty() || s.windows.empty() || s.epochs.empty()) {
      errors.emplace_back("tune: every search dimension needs at least one candidate");
    }
  }
  const AnalyzeOptions& a = c.analysis;
  if (a.project_tokens < 1) errors.emplace_back("analysis.project_tokens ≥ 1");
  if (a.projection == ProjectionKind::tsne) {
    if (!(a.tsne.perplexity > 0.0)) errors.emplace_back("analysis.perplexity must be positive");
    if (a.tsne.iterations < 1) errors.emplace_back("analysis.iterations ≥ 1");
    if (!(a.tsne.learning_rate > 0.0)) errors.emplace_back("analysis.learning_rate must be positive");
    // Each exported trajectory contributes at least two points.
    const double expected_n = 2.0 * static_cast<double>(a.project_tokens);
    if (a.tsne.perplexity >= expected_n) {
      errors.push_back(fmt::format("analysis.perplexity {} must be below the expected point count {}",
                                   a.tsne.perplexity, expected_n));
    }
  }
  if (!(a.thresholds.burstiness >= 0.0)) errors.emplace_back("analysis.burstiness ≥ 0");
  if (!(a.thresholds.approach_rho >= -1.0 && a.thresholds.approach_rho <= 1.0)) {
    errors.emplace_back("analysis.approach_rho in [-1, 1]");
  }
  if (!(a.thresholds.recede_rho >= -1.0 && a.thresholds.recede_rho <= 1.0)) {
    errors.emplace_back("analysis.recede_rho in [-1, 1]");
  }

  if (!c.output_dir.empty()) {
    const PipelinePaths p = PipelinePaths::under(c.output_dir);
    const std::vector<std::string> artifacts = {p.filtered, p.characteristics, p.factor_model, p.scores,
                                                p.labeled,  p.labeled_meta,    p.clusters,     p.embeddings,
                                                p.aligned,  p.trajectories,    p.classes,      p.manifest};
    std::set<std::string> produced;
    for (const auto& f : artifacts) produced.insert(normalized(f));
    if (!c.input.empty() && produced.count(normalized(c.input))) {
      errors.push_back(fmt::format("input '{}' collides with a pipeline output", c.input));
    }
    if (!c.reference.empty() && produced.count(normalized(c.reference))) {
      errors.push_back(fmt::format("reference '{}' collides with a pipeline output", c.reference));
    }
  }
  if (!c.input.empty() && !c.reference.empty() && normalized(c.input) == normalized(c.reference)) {
    errors.emplace_back("input and reference must be different files");
  }
  return errors;
}

// --- run ---------------------------------------------------------------------

std::string hash_path(const std::string& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a("");
    for (const auto& f : files) {
      h = fnv1a(fs::relative(f, path).generic_string(), h);
      h = fnv1a(read_file(f.string()), h);
    }
    return hex64(h);
  }
  if (!fs::exists(path)) return "missing";
  return hex64(fnv1a(read_file(path)));
}

std::size_t RunManifest::completed() const {
  return static_cast<std::size_t>(
      std::count_if(stages.begin(), stages.end(), [](const StageRecord& s) { return s.status == "completed"; }));
}

std::string RunManifest::to_json() const {
  json list = json::array();
  for (const auto& s : stages) {
    json inputs = json::array();
    for (const auto& [path, hash] : s.inputs) inputs.push_back({{"path", path}, {"hash", hash}});
    json outputs = json::array();
    for (const auto& [path, hash] : s.outputs) outputs.push_back({{"path", path}, {"hash", hash}});
    json j = {{"name", s.name},     {"version", s.version}, {"status", s.status},
              {"wall_seconds", s.wall_seconds}, {"inputs", inputs}, {"outputs", outputs}};
    if (!s.error.empty()) j["error"] = s.error;
    list.push_back(std::move(j));
  }
  json doc = {{"format", "trust-motion-run/1"}, {"config_hash", config_hash}, {"stages", list}};
  return doc.dump(2) + "\n";
}

RunManifest run_pipeline(const PipelineConfig& config) {
  if (auto problems = validate_config(config); !problems.empty()) throw ConfigError(std::move(problems));
  fs::create_directories(config.output_dir);
  const PipelinePaths p = PipelinePaths::under(config.output_dir);
  const std::uint64_t seed = config.seed.value_or(0);

  RunManifest manifest;
  manifest.config_hash = hex64(fnv1a(pipeline_config_to_json(config)));

  struct Stage {
    std::string_view name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::function<void()> run;
  };
  const std::vector<Stage> stages = {
      {"ingest", {config.input}, {p.filtered}, [&] { run_ingest(config.input, config.filter, p.filtered); }},
      {"characterize",
       {p.filtered, config.input},
       {p.characteristics},
       [&] { run_characterize(p.filtered, config.input, p.characteristics); }},
      {"efa",
       {p.characteristics},
       {p.factor_model, p.scores},
       [&] { run_efa(p.characteristics, config.factors, p.factor_model, p.scores, config.paf); }},
      {"cluster",
       {p.scores},
       {p.labeled, p.labeled_meta, p.clusters},
       [&] { run_cluster(p.scores, config.clusters, config.restarts, seed, {p.labeled, p.labeled_meta, p.clusters}); }},
      {"embed",
       {p.labeled, p.labeled_meta},
       {p.embeddings},
       [&] { run_embed(p.labeled, p.labeled_meta, config.slice_len, config.sgns, config.tune, p.embeddings); }},
      {"align", {p.embeddings}, {p.aligned}, [&] { run_align(p.embeddings, p.aligned, config.min_shared); }},
      {"analyze",
       {p.aligned, config.reference},
       {p.trajectories, p.classes},
       [&] { run_analyze(p.aligned, config.reference, config.analysis, p.trajectories, p.classes); }},
  };

  for (const Stage& stage : stages) {
    StageRecord rec;
    rec.name = std::string(stage.name);
    rec.version = kStageVersion;
    if (!config.stage_enabled(stage.name)) {
      rec.status = "skipped";
      manifest.stages.push_back(std::move(rec));
      continue;
    }
    for (const auto& in : stage.inputs) rec.inputs.emplace_back(in, hash_path(in));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      stage.run();
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      manifest.stages.push_back(std::move(rec));
      write_file(p.manifest, manifest.to_json());
      throw StageError(std::string(stage.name), e.what());
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.status = "completed";
    for (const auto& out : stage.outputs) rec.outputs.emplace_back(out, hash_path(out));
    manifest.stages.push_back(std::move(rec));
  }
  write_file(p.manifest, manifest.to_json());
  return manifest;
}

}  // namespace trust_motion
