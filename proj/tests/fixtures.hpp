#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "trust_motion/clustering.hpp"
#include "trust_motion/embeddings.hpp"
#include "trust_motion/rng.hpp"

namespace trust_motion::fixtures {

inline LabeledActivity event(const std::string& sender, const std::string& subsystem, Timestamp t,
                             std::size_t label = 0) {
  LabeledActivity a;
  a.record_id = sender + "@" + std::to_string(t);
  a.sender_id = sender;
  a.subsystem = subsystem;
  a.sent_time = t;
  a.label = label;
  return a;
}

/// Two communities of `per_community` developers ("A0".., "B0"..) whose
/// activity alternates in 2-hour bursts separated by 10 quiet hours, so no
/// 4-hour context window ever spans both communities.
inline std::vector<LabeledActivity> two_communities(std::size_t n_events, std::size_t per_community,
                                                    std::uint64_t seed, Timestamp start = 1672876800) {
  SplitMix64 rng(seed);
  const Seconds period = 12 * kHour;
  const Seconds burst = 2 * kHour;
  std::vector<LabeledActivity> out;
  for (std::size_t i = 0; i < n_events; ++i) {
    const std::size_t cycle = rng.below(14);
    const bool b = cycle % 2 == 1;
    const Timestamp t = start + static_cast<Timestamp>(cycle) * period + static_cast<Timestamp>(rng.below(burst));
    const std::string who = std::string(b ? "B" : "A") + std::to_string(rng.below(per_community));
    out.push_back(event(who, b ? "Beta" : "Alpha", t));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LabeledActivity& x, const LabeledActivity& y) { return x.sent_time < y.sent_time; });
  return out;
}

inline TimeSlice single_slice(std::vector<LabeledActivity> events, std::size_t index = 1) {
  TimeSlice s;
  s.index = index;
  s.start = events.empty() ? 0 : events.front().sent_time;
  s.end = events.empty() ? 0 : events.back().sent_time + 1;
  s.events = std::move(events);
  return s;
}

/// Embeddings for a fixed token list; counts default to one.
inline SliceEmbeddings make_slice(std::size_t index, const std::vector<ActivityToken>& tokens,
                                  const RowMatrix& activity, const RowMatrix& context,
                                  const std::vector<std::size_t>& counts = {}) {
  SliceEmbeddings e;
  e.slice_index = index;
  e.start = static_cast<Timestamp>(index) * kWeek;
  e.end = e.start + kWeek;
  for (std::size_t i = 0; i < tokens.size(); ++i) e.vocab.add(tokens[i], counts.empty() ? 1 : counts[i]);
  e.activity = activity;
  e.context = context;
  e.config.dim = static_cast<std::size_t>(activity.cols());
  return e;
}

inline std::vector<ActivityToken> numbered_tokens(std::size_t n, const std::string& prefix = "dev") {
  std::vector<ActivityToken> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({i % 3, prefix + std::to_string(i), "USB"});
  return out;
}

}  // namespace trust_motion::fixtures
