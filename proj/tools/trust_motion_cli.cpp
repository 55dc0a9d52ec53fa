// trust-motion: command-line front end for every pipeline stage.
//
// Exit codes: 0 success, 2 invalid arguments or configuration, 3 a stage
// failed while running. Every long option can also be supplied through an
// environment variable TRUST_MOTION_<NAME> (dashes become underscores).

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "trust_motion/trust_motion.hpp"

namespace tmo = trust_motion;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitStage = 3;

/// Raised for option values CLI11 accepts syntactically but the stage rejects.
struct UsageError : tmo::Error {
  using tmo::Error::Error;
};

void bind_environment(CLI::App& app) {
  for (CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || opt->get_lnames().empty()) continue;
    std::string env = "TRUST_MOTION_";
    for (const char c : opt->get_lnames().front()) {
      env.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    opt->envname(env);
  }
  for (CLI::App* sub : app.get_subcommands({})) bind_environment(*sub);
}

tmo::Seconds duration_arg(const std::string& text, const char* what) {
  try {
    return tmo::parse_duration(text);
  } catch (const tmo::Error& e) {
    throw UsageError(fmt::format("--{}: {}", what, e.what()));
  }
}

struct SgnsFlags {
  std::string config;
  std::optional<std::size_t> dim, negatives, epochs;
  std::optional<std::string> window, granularity;
  std::optional<double> learning_rate, subsample, alpha;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "SGNS config JSON file");
    cmd->add_option("--dim", dim, "embedding dimension");
    cmd->add_option("--window", window, "context window m, e.g. 4h");
    cmd->add_option("--negatives", negatives, "negative samples per pair");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--learning-rate", learning_rate, "initial learning rate");
    cmd->add_option("--subsample", subsample, "subsampling threshold (0 disables)");
    cmd->add_option("--alpha", alpha, "negative sampling exponent");
    cmd->add_option("--granularity", granularity, "full or label_subsystem");
    cmd->add_option("--seed", seed, "training seed");
  }

  tmo::SgnsConfig resolve() const {
    tmo::SgnsConfig c;
    if (!config.empty()) c = tmo::sgns_config_from_json(tmo::read_file(config), c);
    if (dim) c.dim = *dim;
    if (window) c.window = duration_arg(*window, "window");
    if (negatives) c.negatives = *negatives;
    if (epochs) c.epochs = *epochs;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (subsample) c.subsample = *subsample;
    if (alpha) c.alpha = *alpha;
    if (seed) c.seed = *seed;
    if (granularity) {
      if (*granularity == "full") c.granularity = tmo::TokenGranularity::label_sender_subsystem;
      else if (*granularity == "label_subsystem") c.granularity = tmo::TokenGranularity::label_subsystem;
      else throw UsageError(fmt::format("--granularity must be full or label_subsystem, got '{}'", *granularity));
    }
    try {
      c.validate();
    } catch (const tmo::Error& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal activity embeddings and trust-ascendancy trajectories"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "trust-motion 0.1.0");

  // ingest
  std::string ingest_input, ingest_policy, ingest_output;
  auto* ingest = app.add_subcommand("ingest", "Validate and filter a JSONL record file");
  ingest->add_option("--input", ingest_input, "records JSONL")->required();
  ingest->add_option("--policy", ingest_policy, "filter policy JSON (defaults apply when omitted)");
  ingest->add_option("--output", ingest_output, "filtered JSONL")->required();

  // characterize
  std::string char_input, char_corpus, char_output;
  auto* characterize = app.add_subcommand("characterize", "Compute per-event characteristic vectors");
  characterize->add_option("--input", char_input, "records JSONL")->required();
  characterize->add_option("--corpus", char_corpus, "unfiltered JSONL for sender statistics");
  characterize->add_option("--output", char_output, "characteristics CSV")->required();

  // efa
  std::string efa_input, efa_model, efa_scores;
  std::optional<std::size_t> efa_factors;
  std::size_t efa_max_iter = 200;
  double efa_tol = 1e-6;
  auto* efa = app.add_subcommand("efa", "Fit the factor model and score every event");
  efa->add_option("--input", efa_input, "characteristics CSV")->required();
  efa->add_option("--factors", efa_factors, "number of factors (Kaiser criterion when omitted)");
  efa->add_option("--max-iterations", efa_max_iter, "principal-axis iteration budget")->capture_default_str();
  efa->add_option("--tolerance", efa_tol, "communality change tolerance")->capture_default_str();
  efa->add_option("--model", efa_model, "factor model JSON")->required();
  efa->add_option("--scores", efa_scores, "factor scores CSV")->required();

  // cluster
  std::string cl_scores, cl_output, cl_meta, cl_model;
  std::size_t cl_k = 5;
  std::size_t cl_restarts = 50;
  std::uint64_t cl_seed = 7;
  auto* cluster = app.add_subcommand("cluster", "Label events by k-means over factor scores");
  cluster->add_option("--scores", cl_scores, "factor scores CSV")->required();
  cluster->add_option("--k", cl_k, "number of clusters")->capture_default_str();
  cluster->add_option("--restarts", cl_restarts, "k-means++ restarts")->capture_default_str();
  cluster->add_option("--seed", cl_seed, "seed")->capture_default_str();
  cluster->add_option("--output", cl_output, "labeled CSV")->required();
  cluster->add_option("--meta", cl_meta, "companion metadata CSV (defaults to <output>_meta.csv)");
  cluster->add_option("--model", cl_model, "cluster model JSON (defaults to clusters.json next to --output)");

  // embed
  std::string em_labeled, em_meta, em_out, em_slice = "1w";
  std::size_t em_budget = 0;
  SgnsFlags em_flags;
  auto* embed = app.add_subcommand("embed", "Train per-slice skip-gram embeddings");
  embed->add_option("--labeled", em_labeled, "labeled CSV")->required();
  embed->add_option("--meta", em_meta, "companion metadata CSV (defaults to <labeled>_meta.csv when present)");
  embed->add_option("--slice,--slice-len", em_slice, "slice length, e.g. 1w")->capture_default_str();
  embed->add_option("--tune-budget", em_budget, "random-search trials (0 disables)")->capture_default_str();
  embed->add_option("--out", em_out, "embedding directory")->required();
  em_flags.add(embed);

  // align
  std::string al_in, al_out;
  std::optional<std::size_t> al_min_shared;
  auto* align = app.add_subcommand("align", "Rotate every slice into the last slice's frame");
  align->add_option("--embeds,--embeddings", al_in, "embedding directory")->required();
  align->add_option("--min-shared", al_min_shared, "minimum shared tokens per adjacent pair");
  align->add_option("--out", al_out, "aligned embedding directory")->required();

  // analyze
  std::string an_aligned, an_reference, an_out, an_classes, an_project = "tsne", an_proximity = "mean",
                                                            an_shift = "distance_profile";
  std::uint64_t an_seed = 7;
  double an_perplexity = 30.0;
  std::size_t an_iterations = 1000;
  std::size_t an_tokens = 20;
  bool an_raw = false;
  double an_burst = 1.5, an_approach = -0.5, an_recede = 0.5;
  auto* analyze = app.add_subcommand("analyze", "Trajectories, proximity trends, classes, and projection");
  analyze->add_option("--aligned", an_aligned, "aligned embedding directory")->required();
  analyze->add_option("--reference", an_reference, "reference set JSON")->required();
  analyze->add_option("--project", an_project, "tsne or pca")->capture_default_str();
  analyze->add_option("--seed", an_seed, "t-SNE seed")->capture_default_str();
  analyze->add_option("--perplexity", an_perplexity, "t-SNE perplexity")->capture_default_str();
  analyze->add_option("--iterations", an_iterations, "t-SNE iterations")->capture_default_str();
  analyze->add_option("--proximity", an_proximity, "mean or min distance to references")->capture_default_str();
  analyze->add_option("--context-shift", an_shift, "distance_profile or centroid_cosine")->capture_default_str();
  analyze->add_option("--project-tokens", an_tokens, "trajectories to export")->capture_default_str();
  analyze->add_flag("--raw-vectors", an_raw, "skip unit-length normalization");
  analyze->add_option("--burstiness", an_burst, "opportunistic burstiness threshold")->capture_default_str();
  analyze->add_option("--approach-rho", an_approach, "opportunistic rho threshold")->capture_default_str();
  analyze->add_option("--recede-rho", an_recede, "awry rho threshold")->capture_default_str();
  analyze->add_option("--out", an_out, "trajectories CSV")->required();
  analyze->add_option("--classes", an_classes, "per-token classes CSV (defaults next to --out)");

  // synth
  std::string sy_spec, sy_out;
  std::optional<std::uint64_t> sy_seed;
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus with planted truth");
  synth->add_option("--spec", sy_spec, "synth spec JSON (defaults when omitted)");
  synth->add_option("--seed", sy_seed, "override the spec seed");
  synth->add_option("--out", sy_out, "output directory")->required();

  // pipeline
  std::string pl_config;
  bool pl_validate = false;
  auto* pipeline = app.add_subcommand("pipeline", "Run every enabled stage from one config");
  pipeline->add_option("--config", pl_config, "pipeline config JSON")->required();
  pipeline->add_flag("--validate-only", pl_validate, "check the config and exit");

  bind_environment(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*ingest) {
      const tmo::FilterPolicy policy =
          ingest_policy.empty() ? tmo::FilterPolicy{} : tmo::parse_filter_policy(tmo::read_file(ingest_policy));
      const auto s = tmo::run_ingest(ingest_input, policy, ingest_output);
      fmt::print(stderr, "ingest: kept {} of {} records\n", s.kept, s.parsed);
    } else if (*characterize) {
      const auto n = tmo::run_characterize(char_input, char_corpus, char_output);
      fmt::print(stderr, "characterize: {} events\n", n);
    } else if (*efa) {
      const auto model = tmo::run_efa(efa_input, efa_factors, efa_model, efa_scores, {efa_tol, efa_max_iter});
      fmt::print(stderr, "efa: {} factors over {} variables\n", model.m, model.p);
    } else if (*cluster) {
      if (cl_k < 1) throw UsageError("k ≥ 1");
      if (cl_restarts < 1) throw UsageError("restarts ≥ 1");
      const std::filesystem::path out(cl_output);
      if (cl_meta.empty()) cl_meta = (out.parent_path() / (out.stem().string() + "_meta.csv")).string();
      if (cl_model.empty()) cl_model = (out.parent_path() / "clusters.json").string();
      const auto r = tmo::run_cluster(cl_scores, cl_k, cl_restarts, cl_seed, {cl_output, cl_meta, cl_model});
      fmt::print(stderr, "cluster: inertia {}\n", r.model.inertia);
    } else if (*embed) {
      if (em_meta.empty()) {
        const std::filesystem::path labeled(em_labeled);
        const auto sidecar = labeled.parent_path() / (labeled.stem().string() + "_meta.csv");
        if (std::filesystem::exists(sidecar)) em_meta = sidecar.string();
      }
      tmo::TuneOptions tune;
      tune.budget = em_budget;
      const auto set = tmo::run_embed(em_labeled, em_meta, duration_arg(em_slice, "slice"), em_flags.resolve(),
                                     tune, em_out);
      fmt::print(stderr, "embed: {} slices, {} trained\n", set.slices.size(), set.embeddings.size());
    } else if (*align) {
      const auto chain = tmo::run_align(al_in, al_out, al_min_shared);
      fmt::print(stderr, "align: {} slices\n", chain.slice_indices.size());
    } else if (*analyze) {
      tmo::AnalyzeOptions o;
      if (an_project == "pca") o.projection = tmo::ProjectionKind::pca;
      else if (an_project == "tsne") o.projection = tmo::ProjectionKind::tsne;
      else throw UsageError(fmt::format("--project must be tsne or pca, got '{}'", an_project));
      if (an_proximity == "mean") o.proximity = tmo::ProximityMode::mean;
      else if (an_proximity == "min") o.proximity = tmo::ProximityMode::min;
      else throw UsageError(fmt::format("--proximity must be mean or min, got '{}'", an_proximity));
      if (an_shift == "distance_profile") o.context_shift = tmo::ContextShiftMode::distance_profile;
      else if (an_shift == "centroid_cosine") o.context_shift = tmo::ContextShiftMode::centroid_cosine;
      else throw UsageError("--context-shift must be distance_profile or centroid_cosine");
      o.tsne.seed = an_seed;
      o.tsne.perplexity = an_perplexity;
      o.tsne.iterations = an_iterations;
      o.project_tokens = an_tokens;
      o.normalize = !an_raw;
      o.thresholds = {an_burst, an_approach, an_recede};
      const std::string classes =
          an_classes.empty() ? (std::filesystem::path(an_out).parent_path() / "classes.csv").string() : an_classes;
      const auto r = tmo::run_analyze(an_aligned, an_reference, o, an_out, classes);
      fmt::print(stderr, "analyze: {} tokens classified, {} trajectories exported\n", r.tokens.size(),
                 r.reports.size());
    } else if (*synth) {
      tmo::SynthSpec spec;
      if (!sy_spec.empty()) {
        const std::string text = tmo::read_file(sy_spec);
        try {
          spec = tmo::parse_synth_spec(text);
        } catch (const tmo::Error& e) {
          throw UsageError(e.what());
        }
      }
      if (sy_seed) spec.seed = *sy_seed;
      const auto corpus = tmo::synthesize(spec);
      tmo::write_corpus(sy_out, corpus);
      fmt::print(stderr, "synth: {} records\n", corpus.rendered.records.size());
    } else if (*pipeline) {
      const std::string base = std::filesystem::path(pl_config).parent_path().string();
      tmo::PipelineConfig config;
      try {
        config = tmo::parse_pipeline_config(tmo::read_file(pl_config), base);
      } catch (const tmo::Error& e) {
        throw UsageError(e.what());
      }
      if (pl_validate) {
        const auto problems = tmo::validate_config(config);
        for (const auto& p : problems) fmt::print(stderr, "{}\n", p);
        return problems.empty() ? 0 : kExitInvalid;
      }
      const auto manifest = tmo::run_pipeline(config);
      fmt::print(stderr, "pipeline: {} stages completed\n", manifest.completed());
    }
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInvalid;
  } catch (const tmo::ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitStage;
  }
  return 0;
}
