#include "trust_motion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "json_text.hpp"
#include "trust_motion/characteristics.hpp"
#include "trust_motion/csv.hpp"
#include "trust_motion/rng.hpp"

namespace trust_motion {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Stream tags for derive_seed so each generator draws independently.
constexpr std::uint64_t kFactorStream = 0xFAC7;
constexpr std::uint64_t kSenderStream = 0x5E4D;
constexpr std::uint64_t kPlantStream = 0x9A17;
constexpr std::uint64_t kRenderStream = 0x7E4D;

// Boolean characteristics switch on above this latent value, so an event
// mostly carries the flags of its own label's factor.
constexpr double kFlagThreshold = 1.0;

Seconds json_seconds(const json& v) {
  if (v.is_string()) return parse_duration(v.get<std::string>());
  return v.get<Seconds>();
}

Timestamp json_timestamp(const json& v) {
  if (v.is_string()) return parse_timestamp(v.get<std::string>());
  return v.get<Timestamp>();
}

Matrix json_matrix(const json& v) {
  if (!v.is_array() || v.empty()) throw Error("true_loadings must be a non-empty list of rows");
  const std::size_t cols = v.at(0).size();
  Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols) throw Error("true_loadings rows must have equal length");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  return m;
}

void parse_planted(const json& obj, PlantedSpec& p) {
  for (const auto& [key, v] : obj.items()) {
    if (key == "enabled") p.enabled = v.get<bool>();
    else if (key == "sender_id") p.sender_id = v.get<std::string>();
    else if (key == "label") p.label = v.get<std::size_t>();
    else if (key == "target_subsystem") p.target_subsystem = v.get<std::size_t>();
    else if (key == "origin_subsystem") {
      p.origin_subsystem = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
    }
    else if (key == "reference_senders") p.reference_senders = v.get<std::size_t>();
    else if (key == "approach_rate") p.approach_rate = v.get<double>();
    else if (key == "base_count") p.base_count = v.get<double>();
    else if (key == "growth") p.growth = v.get<double>();
    else if (key == "reverse") p.reverse = v.get<bool>();
    else throw Error(fmt::format("unknown planted key '{}'", key));
  }
}

std::size_t ceil_count(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

/// Buckets of filler words by syllable count under count_syllables.
struct WordPools {
  std::vector<std::string> by_syllables[4];

  WordPools() {
    static const char* words[] = {
        "patch",    "fix",       "code",      "lock",     "tree",      "test",     "bug",
        "path",     "call",      "stack",     "port",     "bit",       "flag",     "map",
        "kernel",   "driver",    "buffer",    "commit",   "merge",     "signal",   "module",
        "socket",   "thread",    "pointer",   "device",   "update",    "handler",  "cleanup",
        "interrupt", "register", "memory",    "allocate", "callback",  "validate", "property",
        "controller", "regression", "dependency", "identify", "initialize"};
    for (const char* w : words) {
      const std::size_t s = count_syllables(w);
      if (s >= 1 && s <= 3) by_syllables[s].emplace_back(w);
    }
  }
};

const WordPools& word_pools() {
  static const WordPools pools;
  return pools;
}

/// `sentences` sentences of `per_sentence` words whose mean syllables per
/// word is as close to `spw` as the 1..3 word pools allow.
std::string render_body(SplitMix64& rng, std::size_t sentences, std::size_t per_sentence, double spw) {
  const auto& pools = word_pools();
  const std::size_t n = sentences * per_sentence;
  std::vector<std::size_t> syl(n, 1);
  std::size_t total = n;
  const std::size_t target = static_cast<std::size_t>(std::llround(std::clamp(spw, 1.0, 3.0) * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(std::span(order), rng);
  for (std::size_t pass = 0; pass < 2 && total < target; ++pass) {
    for (const std::size_t i : order) {
      if (total >= target) break;
      if (syl[i] < 3) {
        ++syl[i];
        ++total;
      }
    }
  }
  std::string body;
  for (std::size_t s = 0; s < sentences; ++s) {
    if (s) body += ' ';
    for (std::size_t w = 0; w < per_sentence; ++w) {
      const auto& pool = pools.by_syllables[syl[s * per_sentence + w]];
      if (w) body += ' ';
      body += pool[rng.below(pool.size())];
    }
    body += '.';
  }
  return body;
}

}  // namespace

const Matrix& default_loadings() {
  static const Matrix l = [] {
    Matrix m = Matrix::Zero(14, 5);
    // Code Contribution: patch_email, bug_fix, new_feature
    m(3, 0) = 0.8;
    m(4, 0) = 0.75;
    m(5, 0) = 0.7;
    // Knowledge Sharing: fkre, fkgl, verbosity
    m(7, 1) = -0.8;
    m(8, 1) = 0.8;
    m(9, 1) = 0.7;
    // Patch Posting: persuasive, patch_churn
    m(2, 2) = 0.75;
    m(6, 2) = 0.8;
    // Progress Control: sender_engagement, response_latency, first_patch_thread
    m(1, 3) = 0.6;
    m(10, 3) = 0.8;
    m(11, 3) = 0.75;
    // Acknowledgment: sender_experience, accepted_patch, accepted_commit
    m(0, 4) = 0.6;
    m(12, 4) = 0.8;
    m(13, 4) = 0.8;
    // Mild cross-loadings.
    m(3, 2) = 0.25;
    m(9, 0) = 0.2;
    return m;
  }();
  return l;
}

const Matrix& SynthSpec::loadings() const {
  return true_loadings.size() == 0 ? default_loadings() : true_loadings;
}

Timestamp SynthSpec::aligned_start() const {
  if (slice_len <= 0) return start;
  Timestamp q = start / slice_len;
  if (start % slice_len != 0 && start < 0) --q;
  return q * slice_len;
}

void SynthSpec::validate() const {
  std::vector<std::string> errors;
  if (n_events < 1) errors.emplace_back("n_events must be >= 1");
  if (n_senders < 1) errors.emplace_back("n_senders must be >= 1");
  if (n_subsystems < 1) errors.emplace_back("n_subsystems must be >= 1");
  if (slices < 1) errors.emplace_back("slices must be >= 1");
  if (slice_len <= 0) errors.emplace_back("slice_len must be positive");
  if (burst_length < 0 || burst_gap < 0) errors.emplace_back("burst_length and burst_gap must be >= 0");
  if (burst_length > 0 && burst_length + burst_gap <= 0) errors.emplace_back("burst cycle must be positive");
  if (window <= 0) errors.emplace_back("window must be positive");
  if (!(noise_scale >= 0.0)) errors.emplace_back("noise_scale must be >= 0");
  if (!(label_purity >= 0.0 && label_purity <= 1.0)) errors.emplace_back("label_purity must be in [0, 1]");
  const Matrix& l = loadings();
  for (Eigen::Index j = 0; j < l.rows(); ++j) {
    const double h = l.row(j).squaredNorm();
    if (h > 1.0 + 1e-12) errors.push_back(fmt::format("communality of variable {} is {} > 1", j, h));
  }
  if (planted.enabled) {
    if (!(planted.approach_rate > 0.0 && planted.approach_rate <= 1.0)) {
      errors.emplace_back("approach_rate must be in (0, 1]");
    }
    if (!(planted.base_count >= 1.0)) errors.emplace_back("base_count must be >= 1");
    if (!(planted.growth > 0.0)) errors.emplace_back("growth must be positive");
    if (planted.label >= static_cast<std::size_t>(l.cols())) errors.emplace_back("planted label must be < m");
    if (planted.target_subsystem >= n_subsystems) errors.emplace_back("target_subsystem must be < n_subsystems");
    if (planted.origin_subsystem &&
        (*planted.origin_subsystem >= n_subsystems || *planted.origin_subsystem == planted.target_subsystem)) {
      errors.emplace_back("origin_subsystem must be < n_subsystems and differ from target_subsystem");
    }
    if (planted.reference_senders < 1) errors.emplace_back("reference_senders must be >= 1");
    const std::size_t homed = n_subsystems == 0 ? 0
                                                : n_senders / n_subsystems +
                                                      (planted.target_subsystem < n_senders % n_subsystems ? 1 : 0);
    if (planted.reference_senders > homed) {
      errors.push_back(fmt::format("reference_senders {} exceeds the {} senders homed in the target subsystem",
                                   planted.reference_senders, homed));
    }
    if (planted.sender_id.empty()) errors.emplace_back("planted sender_id must be non-empty");
  }
  if (!errors.empty()) {
    std::string msg = "invalid synth spec:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(msg);
  }
}

SynthSpec parse_synth_spec(std::string_view json_text) {
  SynthSpec spec;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) throw Error("synth spec must be a JSON object");
    for (const auto& [key, v] : doc.items()) {
      if (key == "n_events") spec.n_events = v.get<std::size_t>();
      else if (key == "n_senders") spec.n_senders = v.get<std::size_t>();
      else if (key == "n_subsystems") spec.n_subsystems = v.get<std::size_t>();
      else if (key == "true_loadings") spec.true_loadings = json_matrix(v);
      else if (key == "noise_scale") spec.noise_scale = v.get<double>();
      else if (key == "slices") spec.slices = v.get<std::size_t>();
      else if (key == "slice_len") spec.slice_len = json_seconds(v);
      else if (key == "start") spec.start = json_timestamp(v);
      else if (key == "burst_length") spec.burst_length = json_seconds(v);
      else if (key == "burst_gap") spec.burst_gap = json_seconds(v);
      else if (key == "window") spec.window = json_seconds(v);
      else if (key == "label_purity") spec.label_purity = v.get<double>();
      else if (key == "cluster_separation") spec.cluster_separation = v.get<double>();
      else if (key == "planted") parse_planted(v, spec.planted);
      else if (key == "seed") spec.seed = v.get<std::uint64_t>();
      else throw Error(fmt::format("unknown synth spec key '{}'", key));
    }
  } catch (const json::exception& e) {
    throw Error(fmt::format("invalid synth spec: {}", e.what()));
  }
  spec.validate();
  return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  const PlantedSpec& p = spec.planted;
  std::string out = "{\n";
  out += fmt::format("  \"n_events\": {},\n  \"n_senders\": {},\n  \"n_subsystems\": {},\n", spec.n_events,
                     spec.n_senders, spec.n_subsystems);
  out += "  \"true_loadings\": " + json_text::matrix(spec.loadings(), "  ") + ",\n";
  out += fmt::format("  \"noise_scale\": {},\n  \"slices\": {},\n  \"slice_len\": {},\n  \"start\": {},\n",
                     json_text::number(spec.noise_scale), spec.slices, spec.slice_len, spec.start);
  out += fmt::format("  \"burst_length\": {},\n  \"burst_gap\": {},\n  \"window\": {},\n", spec.burst_length,
                     spec.burst_gap, spec.window);
  out += fmt::format("  \"label_purity\": {},\n  \"cluster_separation\": {},\n",
                     json_text::number(spec.label_purity), json_text::number(spec.cluster_separation));
  out += fmt::format(
      "  \"planted\": {{\"enabled\": {}, \"sender_id\": {}, \"label\": {}, \"target_subsystem\": {}, "
      "\"origin_subsystem\": {}, \"reference_senders\": {}, \"approach_rate\": {}, \"base_count\": {}, "
      "\"growth\": {}, \"reverse\": {}}},\n",
      p.enabled, json_text::quote(p.sender_id), p.label, p.target_subsystem,
      p.origin_subsystem ? std::to_string(*p.origin_subsystem) : std::string("null"), p.reference_senders,
      json_text::number(p.approach_rate), json_text::number(p.base_count), json_text::number(p.growth),
      p.reverse);
  out += fmt::format("  \"seed\": {}\n}}\n", spec.seed);
  return out;
}

FactorData generate_factor_data(const Matrix& loadings, std::size_t n, double noise_scale, std::uint64_t seed) {
  const Eigen::Index p = loadings.rows();
  const Eigen::Index m = loadings.cols();
  Vector uniq(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double h = loadings.row(j).squaredNorm();
    if (h > 1.0 + 1e-12) throw Error(fmt::format("communality of variable {} is {} > 1", j, h));
    uniq(j) = std::sqrt(std::max(0.0, 1.0 - h));
  }
  SplitMix64 rng(derive_seed(seed, kFactorStream));
  FactorData out;
  const auto rows = static_cast<Eigen::Index>(n);
  out.factor_scores.resize(rows, m);
  Matrix noise(rows, p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < m; ++c) out.factor_scores(i, c) = rng.normal();
    for (Eigen::Index j = 0; j < p; ++j) noise(i, j) = rng.normal();
  }
  out.characteristics = out.factor_scores * loadings.transpose();
  if (noise_scale != 0.0) out.characteristics += noise_scale * noise * uniq.asDiagonal();
  return out;
}

FactorData generate_factor_data(const SynthSpec& spec, std::size_t n) {
  return generate_factor_data(spec.loadings(), n, spec.noise_scale, spec.seed);
}

std::string synth_sender_name(std::size_t index) {
  static const char* first[] = {"Alice", "Bruno", "Chen",  "Dana",  "Emil",  "Farah", "Gita",
                                "Hugo",  "Ines",  "Jonas", "Kira",  "Luis",  "Mara",  "Nils",
                                "Olga",  "Pavel", "Quinn", "Rosa",  "Sami",  "Tomas", "Uma",
                                "Viktor", "Wren", "Xenia", "Yusuf", "Zoe"};
  static const char* last[] = {"Abbott", "Brandt", "Castro", "Dietz",  "Eklund", "Fischer", "Garcia",
                               "Horvat", "Ito",    "Jansen", "Kovacs", "Lund",   "Moreau",  "Novak",
                               "Okafor", "Petrov", "Quist",  "Reyes",  "Sato",   "Torres",  "Ueda",
                               "Varga",  "Weber",  "Xu",     "Yilmaz", "Zeller"};
  const std::size_t f = index % 26;
  const std::size_t l = (index / 26 + index * 7) % 26;
  std::string name = fmt::format("{} {}", first[f], last[l]);
  if (index >= 26 * 26) name += fmt::format(" {}", index / (26 * 26));
  return name;
}

std::string synth_subsystem_name(std::size_t index) {
  static const char* names[] = {"USB",        "Networking", "Memory management", "Scheduler",
                                "Filesystems", "Graphics",   "Sound",             "Block layer"};
  if (index < std::size(names)) return names[index];
  return fmt::format("Subsystem {}", index);
}

bool subsystem_active(const SynthSpec& spec, std::size_t sub, Timestamp t) {
  if (spec.burst_length <= 0) return true;
  const Seconds period = spec.burst_length + spec.burst_gap;
  const Seconds cycle = period * static_cast<Seconds>(spec.n_subsystems);
  Seconds rel = (t - spec.aligned_start()) % cycle;
  if (rel < 0) rel += cycle;
  const Seconds begin = static_cast<Seconds>(sub) * period;
  return rel >= begin && rel < begin + spec.burst_length;
}

EventStream generate_event_stream(const SynthSpec& spec) {
  spec.validate();
  const std::size_t m = spec.factors();
  const Timestamp begin = spec.aligned_start();
  const Timestamp end = begin + spec.slice_len * static_cast<Seconds>(spec.slices);
  const double span = static_cast<double>(end - begin);
  double active_fraction = 1.0;
  if (spec.burst_length > 0) {
    active_fraction = static_cast<double>(spec.burst_length) /
                      static_cast<double>((spec.burst_length + spec.burst_gap) * static_cast<Seconds>(spec.n_subsystems));
  }

  EventStream stream;
  stream.rate = static_cast<double>(spec.n_events) /
                (static_cast<double>(spec.n_senders) * span * active_fraction);
  for (std::size_t s = 0; s < spec.n_subsystems; ++s) stream.subsystems.push_back(synth_subsystem_name(s));

  for (std::size_t i = 0; i < spec.n_senders; ++i) {
    const std::string sender = synth_sender_name(i);
    const std::size_t home = i % spec.n_subsystems;
    stream.senders.push_back(sender);
    stream.home.push_back(home);
    SplitMix64 rng(derive_seed(spec.seed, kSenderStream + i));
    const std::size_t dominant = i % m;
    double t = static_cast<double>(begin);
    while (true) {
      t += rng.exponential(stream.rate);
      if (t >= static_cast<double>(end)) break;
      const auto ts = static_cast<Timestamp>(std::floor(t));
      // Thinning: arrivals outside the home subsystem's bursts are dropped.
      if (!subsystem_active(spec, home, ts)) continue;
      std::size_t label = dominant;
      if (m > 1 && rng.uniform() >= spec.label_purity) {
        label = (dominant + 1 + rng.below(m - 1)) % m;
      }
      stream.events.push_back({"", sender, stream.subsystems[home], ts, label, false});
    }
  }
  std::stable_sort(stream.events.begin(), stream.events.end(), [](const SynthEvent& a, const SynthEvent& b) {
    return std::tie(a.sent_time, a.sender_id) < std::tie(b.sent_time, b.sender_id);
  });
  for (std::size_t i = 0; i < stream.events.size(); ++i) stream.events[i].record_id = fmt::format("e{:06d}", i);
  return stream;
}

PlantedStream plant_trajectory(EventStream stream, const SynthSpec& spec) {
  spec.validate();
  const PlantedSpec& ps = spec.planted;
  PlantedStream out;
  PlantedDescriptor& d = out.descriptor;
  d.sender_id = ps.sender_id;
  d.subsystem = synth_subsystem_name(ps.target_subsystem);
  d.label = ps.label;
  d.expected_class = ps.reverse ? "awry" : "opportunistic";
  for (std::size_t i = 0; i < stream.senders.size() && d.reference_senders.size() < ps.reference_senders; ++i) {
    if (stream.home[i] == ps.target_subsystem) d.reference_senders.push_back(stream.senders[i]);
  }
  if (std::find(stream.senders.begin(), stream.senders.end(), ps.sender_id) != stream.senders.end()) {
    throw Error(fmt::format("planted sender '{}' already exists in the stream", ps.sender_id));
  }
  auto is_reference = [&](const SynthEvent& e) {
    return e.subsystem == d.subsystem &&
           std::find(d.reference_senders.begin(), d.reference_senders.end(), e.sender_id) != d.reference_senders.end();
  };

  const std::string origin =
      spec.n_subsystems > 1
          ? synth_subsystem_name(ps.origin_subsystem.value_or((ps.target_subsystem + 1) % spec.n_subsystems))
          : std::string();
  const Timestamp begin = spec.aligned_start();
  const std::size_t T = spec.slices;
  const Seconds jitter = std::max<Seconds>(1, spec.window / 4);
  SplitMix64 rng(derive_seed(spec.seed, kPlantStream));
  std::vector<SynthEvent> planted;
  std::size_t prev_co = 0;
  for (std::size_t s = 1; s <= T; ++s) {
    const Timestamp lo = begin + spec.slice_len * static_cast<Seconds>(s - 1);
    const Timestamp hi = lo + spec.slice_len;
    std::vector<Timestamp> refs;
    std::vector<Timestamp> outsiders;
    for (const auto& e : stream.events) {
      if (e.sent_time < lo || e.sent_time >= hi) continue;
      if (is_reference(e)) refs.push_back(e.sent_time);
      else if (e.subsystem == origin) outsiders.push_back(e.sent_time);
    }
    if (refs.empty()) throw Error(fmt::format("no reference event in slice {} to plant against", s));

    const std::size_t count = ceil_count(ps.base_count * std::pow(ps.growth, static_cast<double>(s - 1)));
    const double frac = ps.approach_rate * static_cast<double>(ps.reverse ? T - s + 1 : s) / static_cast<double>(T);
    std::size_t co = std::min(count, ceil_count(frac * static_cast<double>(count)));
    if (!ps.reverse && s > 1 && co <= prev_co) co = std::min(count, prev_co + 1);
    if (ps.reverse && s > 1 && co >= prev_co && prev_co > 0) co = prev_co - 1;
    prev_co = co;

    for (std::size_t k = 0; k < count; ++k) {
      Timestamp anchor;
      if (k < co) {
        anchor = refs[rng.below(refs.size())];
      } else if (!outsiders.empty()) {
        anchor = outsiders[rng.below(outsiders.size())];
      } else {
        anchor = lo + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(spec.slice_len)));
      }
      const Timestamp offset = static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(2 * jitter + 1))) - jitter;
      const Timestamp t = std::clamp(anchor + offset, lo, hi - 1);
      planted.push_back({fmt::format("p{:05d}", planted.size()), ps.sender_id, d.subsystem, t, ps.label, true});
    }
    d.slice_counts.push_back(count);
  }

  std::vector<Timestamp> ref_times;
  for (const auto& e : stream.events) {
    if (is_reference(e)) ref_times.push_back(e.sent_time);
  }
  std::sort(ref_times.begin(), ref_times.end());
  d.cooccurrence.assign(T, 0);
  for (const auto& e : planted) {
    const auto it = std::lower_bound(ref_times.begin(), ref_times.end(), e.sent_time - spec.window);
    if (it != ref_times.end() && *it <= e.sent_time + spec.window) {
      const auto s = static_cast<std::size_t>((e.sent_time - begin) / spec.slice_len);
      ++d.cooccurrence[s];
    }
  }

  stream.senders.push_back(ps.sender_id);
  stream.home.push_back(ps.target_subsystem);
  stream.events.insert(stream.events.end(), planted.begin(), planted.end());
  std::stable_sort(stream.events.begin(), stream.events.end(), [](const SynthEvent& a, const SynthEvent& b) {
    return std::tie(a.sent_time, a.record_id) < std::tie(b.sent_time, b.record_id);
  });
  out.stream = std::move(stream);
  return out;
}

std::string reference_set_json(const PlantedDescriptor& descriptor) {
  std::string out = "{\n  \"name\": " + json_text::quote(descriptor.subsystem + " maintainers") + ",\n  \"tokens\": [";
  for (std::size_t i = 0; i < descriptor.reference_senders.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    out += fmt::format("[null, {}, {}]", json_text::quote(descriptor.reference_senders[i]),
                       json_text::quote(descriptor.subsystem));
  }
  return out + "\n  ]\n}\n";
}

RenderedCorpus render_records(const EventStream& stream, const SynthSpec& spec) {
  const Matrix& l = spec.loadings();
  if (l.rows() != static_cast<Eigen::Index>(kCharacteristicCount)) {
    throw Error(fmt::format("rendering records needs {} loadings rows, got {}", kCharacteristicCount, l.rows()));
  }
  const Eigen::Index m = l.cols();
  const Eigen::Index p = l.rows();
  Vector uniq(p);
  for (Eigen::Index j = 0; j < p; ++j) uniq(j) = std::sqrt(std::max(0.0, 1.0 - l.row(j).squaredNorm()));

  SplitMix64 rng(derive_seed(spec.seed, kRenderStream));
  RenderedCorpus out;
  const auto n = static_cast<Eigen::Index>(stream.events.size());
  out.factor_scores.resize(n, m);
  std::map<std::string, std::pair<std::string, std::string>> last_in_subsystem;  // record_id, thread_id

  for (Eigen::Index i = 0; i < n; ++i) {
    const SynthEvent& e = stream.events[static_cast<std::size_t>(i)];
    Vector f(m);
    for (Eigen::Index c = 0; c < m; ++c) f(c) = rng.normal();
    f(static_cast<Eigen::Index>(e.label % static_cast<std::size_t>(m))) += spec.cluster_separation;
    out.factor_scores.row(i) = f.transpose();
    Vector x = l * f;
    for (Eigen::Index j = 0; j < p; ++j) x(j) += spec.noise_scale * uniq(j) * rng.normal();

    RawRecord r;
    r.record_id = e.record_id;
    r.sender_id = e.sender_id;
    r.subsystem = e.subsystem;
    r.sent_time = e.sent_time;
    const double latency = std::exp(6.0 + 0.5 * std::clamp(x(10), -6.0, 6.0));
    r.received_time = e.sent_time + static_cast<Seconds>(std::llround(latency));
    r.persuasive = x(2) > kFlagThreshold;
    r.is_patch = x(3) > kFlagThreshold;
    r.is_bug_fix = x(4) > kFlagThreshold;
    r.is_new_feature = x(5) > kFlagThreshold;
    r.is_revision = x(6) > kFlagThreshold;
    r.accepted_patch = x(12) > kFlagThreshold;
    r.accepted_commit = x(13) > kFlagThreshold;

    auto prev = last_in_subsystem.find(e.subsystem);
    if (x(11) > kFlagThreshold || prev == last_in_subsystem.end()) {
      r.is_first_in_thread = x(11) > kFlagThreshold;
      r.thread_id = r.record_id;
    } else {
      r.in_reply_to = prev->second.first;
      r.thread_id = prev->second.second;
    }
    last_in_subsystem[e.subsystem] = {r.record_id, r.thread_id};

    const auto per_sentence =
        static_cast<std::size_t>(std::clamp<long long>(std::llround(std::exp(2.6 + 0.35 * x(9))), 4, 40));
    const double spw = 1.6 + 0.3 * (x(8) - x(7)) / 2.0;
    const std::size_t sentences = 2 + rng.below(3);
    r.body_text = render_body(rng, sentences, per_sentence, spw);
    out.records.push_back(std::move(r));
  }
  return out;
}

SynthCorpus synthesize(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus corpus;
  corpus.spec = spec;
  EventStream stream = generate_event_stream(spec);
  if (spec.planted.enabled) {
    corpus.planted = plant_trajectory(std::move(stream), spec);
  } else {
    corpus.planted.stream = std::move(stream);
  }
  corpus.rendered = render_records(corpus.planted.stream, spec);
  return corpus;
}

void write_corpus(const std::string& dir, const SynthCorpus& corpus) {
  fs::create_directories(dir);
  const fs::path root(dir);
  {
    std::ostringstream os;
    write_events(os, corpus.rendered.records);
    write_file((root / "events.jsonl").string(), os.str());
  }
  {
    std::ostringstream os;
    std::vector<std::string> header = {"record_id", "sender_id", "subsystem", "sent_time", "label", "planted"};
    for (Eigen::Index c = 0; c < corpus.rendered.factor_scores.cols(); ++c) header.push_back(fmt::format("f{}", c));
    write_csv_row(os, header);
    const auto& events = corpus.planted.stream.events;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      std::vector<std::string> row = {e.record_id, e.sender_id, e.subsystem, format_iso8601(e.sent_time),
                                      std::to_string(e.label), e.planted ? "1" : "0"};
      for (Eigen::Index c = 0; c < corpus.rendered.factor_scores.cols(); ++c) {
        row.push_back(format_real(corpus.rendered.factor_scores(static_cast<Eigen::Index>(i), c)));
      }
      write_csv_row(os, row);
    }
    write_file((root / "truth.csv").string(), os.str());
  }
  if (corpus.spec.planted.enabled) {
    const auto& d = corpus.planted.descriptor;
    std::string js = "{\n";
    js += "  \"sender_id\": " + json_text::quote(d.sender_id) + ",\n";
    js += "  \"subsystem\": " + json_text::quote(d.subsystem) + ",\n";
    js += fmt::format("  \"label\": {},\n", d.label);
    js += "  \"reference_senders\": " + json_text::strings(d.reference_senders) + ",\n";
    js += "  \"slice_counts\": " + json_text::integers(d.slice_counts) + ",\n";
    js += "  \"cooccurrence\": " + json_text::integers(d.cooccurrence) + ",\n";
    js += "  \"expected_class\": " + json_text::quote(d.expected_class) + "\n}\n";
    write_file((root / "planted.json").string(), js);
    write_file((root / "maintainers.json").string(), reference_set_json(d));
  }
  write_file((root / "spec.json").string(), synth_spec_to_json(corpus.spec));
}

}  // namespace trust_motion
