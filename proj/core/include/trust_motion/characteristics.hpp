#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trust_motion/common.hpp"
#include "trust_motion/ingest.hpp"

namespace trust_motion {

struct TextStats {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
  /// Sentences closed by '.', '!' or '?'; the open tail segment is excluded.
  std::size_t complete_sentences = 0;

  bool operator==(const TextStats&) const = default;
};

/// Vowel-run heuristic: maximal runs of a/e/i/o/u/y, minus one for a silent
/// trailing 'e' after a consonant when more than one run exists. Never zero.
std::size_t count_syllables(std::string_view word);

/// Words are whitespace-delimited tokens holding at least one alphanumeric
/// character. A sentence ends at '.', '!' or '?' followed by whitespace or
/// end of text, or at end of text itself.
TextStats text_stats(std::string_view body);

/// Flesch reading ease: 206.835 - 1.015 (words/sentences) - 84.6 (syllables/words).
/// nullopt is the undefined-score marker for empty text.
std::optional<double> fkre(std::size_t words, std::size_t sentences, std::size_t syllables);

/// Flesch-Kincaid grade level: 0.39 (words/sentences) + 11.8 (syllables/words) - 15.59.
std::optional<double> fkgl(std::size_t words, std::size_t sentences, std::size_t syllables);

/// accepted / submitted, zero when nothing was submitted.
double sender_experience(std::size_t accepted, std::size_t submitted);

/// max(0, new_threads - bot_spam) / sent clamped to [0, 1]; zero when sent is zero.
double sender_engagement(std::size_t new_threads, std::size_t bot_spam, std::size_t sent);

struct SenderStats {
  std::string sender_id;
  std::size_t accepted_count = 0;
  std::size_t submitted_count = 0;
  std::size_t new_thread_count = 0;
  std::size_t bot_spam_count = 0;
  std::size_t sent_count = 0;
};

/// Per-sender counters over a corpus. A new thread is a record without
/// in_reply_to; bot spam is a new thread whose record carries is_bot.
std::map<std::string, SenderStats> compute_sender_stats(std::span<const RawRecord> corpus);

inline constexpr std::size_t kCharacteristicCount = 14;

struct CharacteristicVector {
  double sender_experience = 0.0;
  double sender_engagement = 0.0;
  double persuasive = 0.0;
  double patch_email = 0.0;
  double bug_fix = 0.0;
  double new_feature = 0.0;
  double patch_churn = 0.0;
  std::optional<double> fkre_score;
  std::optional<double> fkgl_score;
  double verbosity = 0.0;
  double response_latency = 0.0;
  double first_patch_thread = 0.0;
  double accepted_patch = 0.0;
  double accepted_commit = 0.0;

  static const std::array<std::string_view, kCharacteristicCount>& field_names();

  /// Values in field order; undefined readability scores become NaN.
  std::array<double, kCharacteristicCount> values() const;
};

struct CharacterizedEvent {
  std::string record_id;
  std::string sender_id;
  std::string subsystem;
  Timestamp sent_time = 0;
  CharacteristicVector characteristics;
};

/// One vector per record. Throws when a record's sender has no stats entry.
std::vector<CharacterizedEvent> characterize(std::span<const RawRecord> records,
                                             const std::map<std::string, SenderStats>& sender_stats);

/// Metadata columns (record_id, sender_id, subsystem, sent_time) followed by
/// the characteristic columns in field order. Undefined scores are written "NA".
void write_characteristics_csv(std::ostream& out, std::span<const CharacterizedEvent> events);
std::vector<CharacterizedEvent> read_characteristics_csv(std::istream& in);

}  // namespace trust_motion
