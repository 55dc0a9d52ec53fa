#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trust_motion/common.hpp"
#include "trust_motion/ingest.hpp"

namespace trust_motion {

/// The sender whose activity is planted to drift towards (or away from) a
/// subsystem's maintainers.
struct PlantedSpec {
  bool enabled = true;
  std::string sender_id = "Pat Mallory";
  std::size_t label = 0;
  std::size_t target_subsystem = 0;
  /// Subsystem whose bursts host the planted events that do not sit next to
  /// reference events; unset picks target_subsystem + 1 (mod n_subsystems).
  std::optional<std::size_t> origin_subsystem;
  /// The first `reference_senders` senders homed in the target subsystem.
  std::size_t reference_senders = 3;
  /// Fraction of slice s's planted events placed next to reference events is
  /// approach_rate * s / T (reversed: approach_rate * (T - s + 1) / T).
  double approach_rate = 1.0;
  /// Planted events in slice s: ceil(base_count * growth^(s-1)).
  double base_count = 4.0;
  double growth = 1.2;
  bool reverse = false;
};

struct SynthSpec {
  std::size_t n_events = 12000;  ///< expected background events
  std::size_t n_senders = 40;
  std::size_t n_subsystems = 4;
  Matrix true_loadings;  ///< p x m; empty selects default_loadings()
  double noise_scale = 1.0;
  std::size_t slices = 12;
  Seconds slice_len = kWeek;
  Timestamp start = 1672876800;  ///< floored to a multiple of slice_len
  /// Subsystems take turns being active for burst_length, separated by
  /// burst_gap. burst_length 0 keeps every sender active throughout.
  Seconds burst_length = 6 * kHour;
  Seconds burst_gap = 10 * kHour;
  Seconds window = 4 * kHour;  ///< context window m used for planting
  double label_purity = 0.85;
  /// Mean of the dominant latent factor for events of each label.
  double cluster_separation = 3.0;
  PlantedSpec planted;
  std::uint64_t seed = 7;

  const Matrix& loadings() const;
  std::size_t factors() const { return static_cast<std::size_t>(loadings().cols()); }
  Timestamp aligned_start() const;

  /// Throws Error listing every violated constraint.
  void validate() const;
};

/// 14 x 5 simple-structure loadings over the characteristic fields.
const Matrix& default_loadings();

SynthSpec parse_synth_spec(std::string_view json_text);
std::string synth_spec_to_json(const SynthSpec& spec);

struct FactorData {
  Matrix characteristics;  ///< n x p
  Matrix factor_scores;    ///< n x m
};

/// F ~ N(0, I); X = F L^T + noise_scale * E diag(sqrt(1 - h^2)). Throws when
/// any communality exceeds 1.
FactorData generate_factor_data(const Matrix& loadings, std::size_t n, double noise_scale,
                                std::uint64_t seed);
FactorData generate_factor_data(const SynthSpec& spec, std::size_t n);

struct SynthEvent {
  std::string record_id;
  std::string sender_id;
  std::string subsystem;
  Timestamp sent_time = 0;
  std::size_t label = 0;
  bool planted = false;
};

struct EventStream {
  std::vector<SynthEvent> events;  ///< sorted by (sent_time, record_id)
  std::vector<std::string> senders;
  std::vector<std::string> subsystems;
  std::vector<std::size_t> home;  ///< home subsystem per sender
  double rate = 0.0;              ///< per-sender arrivals per active second
};

std::string synth_sender_name(std::size_t index);
std::string synth_subsystem_name(std::size_t index);

/// Whether subsystem `sub` is inside one of its bursts at time t.
bool subsystem_active(const SynthSpec& spec, std::size_t sub, Timestamp t);

/// Per-sender Poisson arrivals restricted to the home subsystem's bursts,
/// labels from per-sender mixtures (dominant label sender % m with
/// probability label_purity). Record ids are assigned in time order.
EventStream generate_event_stream(const SynthSpec& spec);

struct PlantedDescriptor {
  std::string sender_id;
  std::string subsystem;
  std::size_t label = 0;
  std::vector<std::string> reference_senders;
  std::vector<std::size_t> slice_counts;     ///< planted events per slice
  std::vector<std::size_t> cooccurrence;     ///< planted events within m of a reference event
  std::string expected_class;
};

struct PlantedStream {
  EventStream stream;
  PlantedDescriptor descriptor;
};

/// Inserts the planted sender's events. The co-occurring share sits within
/// m/4 of reference events; the rest sits next to events of the origin
/// subsystem (anywhere in the slice when there is only one subsystem).
/// The co-occurring count is strictly monotone across slices as long as the
/// slice counts allow it. Throws when a slice has no reference event.
PlantedStream plant_trajectory(EventStream stream, const SynthSpec& spec);

/// A maintainers reference set over the descriptor's reference senders in
/// the target subsystem, any activity label.
std::string reference_set_json(const PlantedDescriptor& descriptor);

struct RenderedCorpus {
  std::vector<RawRecord> records;
  Matrix factor_scores;  ///< latent F, one row per record
};

/// Realizes records from latent factor scores (mean cluster_separation on the
/// event label's factor): booleans above a latent value of 1, bodies sized for the target
/// words-per-sentence and syllables-per-word, latency exp(6 + x/2) seconds, and
/// replies to the previous event of the same subsystem.
RenderedCorpus render_records(const EventStream& stream, const SynthSpec& spec);

struct SynthCorpus {
  SynthSpec spec;
  PlantedStream planted;
  RenderedCorpus rendered;
};

SynthCorpus synthesize(const SynthSpec& spec);

/// events.jsonl, truth.csv, planted.json, maintainers.json, spec.json.
void write_corpus(const std::string& dir, const SynthCorpus& corpus);

}  // namespace trust_motion
