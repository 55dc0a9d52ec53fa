#include "trust_motion/characteristics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "trust_motion/csv.hpp"

namespace trust_motion {
namespace {

bool is_vowel(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
    default: return false;
  }
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::size_t count_syllables(std::string_view word) {
  std::string letters;
  for (const char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      letters.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (letters.empty()) return 1;

  std::size_t runs = 0;
  bool in_run = false;
  for (const char c : letters) {
    const bool v = is_vowel(c);
    if (v && !in_run) ++runs;
    in_run = v;
  }
  const std::size_t n = letters.size();
  if (runs > 1 && letters[n - 1] == 'e' && n >= 2 && !is_vowel(letters[n - 2])) --runs;
  return std::max<std::size_t>(runs, 1);
}

TextStats text_stats(std::string_view body) {
  TextStats stats;

  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && is_space(body[i])) ++i;
    const std::size_t start = i;
    while (i < body.size() && !is_space(body[i])) ++i;
    const std::string_view token = body.substr(start, i - start);
    if (token.empty()) continue;
    const bool has_alnum = std::any_of(token.begin(), token.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) != 0;
    });
    if (!has_alnum) continue;
    ++stats.words;
    stats.syllables += count_syllables(token);
  }

  bool segment_has_word = false;
  for (std::size_t k = 0; k < body.size(); ++k) {
    const char c = body[k];
    if (std::isalnum(static_cast<unsigned char>(c))) segment_has_word = true;
    if (!is_terminator(c)) continue;
    const bool closes = k + 1 == body.size() || is_space(body[k + 1]) || is_terminator(body[k + 1]);
    if (closes && segment_has_word) {
      ++stats.sentences;
      ++stats.complete_sentences;
      segment_has_word = false;
    }
  }
  if (segment_has_word) ++stats.sentences;
  if (stats.words > 0) stats.sentences = std::max<std::size_t>(stats.sentences, 1);
  return stats;
}

std::optional<double> fkre(std::size_t words, std::size_t sentences, std::size_t syllables) {
  if (words == 0 || sentences == 0) return std::nullopt;
  const double w = static_cast<double>(words);
  return 206.835 - 1.015 * (w / static_cast<double>(sentences)) -
         84.6 * (static_cast<double>(syllables) / w);
}

std::optional<double> fkgl(std::size_t words, std::size_t sentences, std::size_t syllables) {
  if (words == 0 || sentences == 0) return std::nullopt;
  const double w = static_cast<double>(words);
  return 0.39 * (w / static_cast<double>(sentences)) +
         11.8 * (static_cast<double>(syllables) / w) - 15.59;
}

double sender_experience(std::size_t accepted, std::size_t submitted) {
  if (accepted > submitted) {
    throw InvariantViolation(fmt::format(
        "invariant violation: accepted patches ({}) exceed submitted patches ({})", accepted,
        submitted));
  }
  if (submitted == 0) return 0.0;
  return static_cast<double>(accepted) / static_cast<double>(submitted);
}

double sender_engagement(std::size_t new_threads, std::size_t bot_spam, std::size_t sent) {
  if (sent == 0 || bot_spam >= new_threads) return 0.0;
  const double ratio = static_cast<double>(new_threads - bot_spam) / static_cast<double>(sent);
  return std::clamp(ratio, 0.0, 1.0);
}

std::map<std::string, SenderStats> compute_sender_stats(std::span<const RawRecord> corpus) {
  std::map<std::string, SenderStats> stats;
  for (const RawRecord& r : corpus) {
    SenderStats& s = stats[r.sender_id];
    s.sender_id = r.sender_id;
    ++s.sent_count;
    if (r.is_patch) {
      ++s.submitted_count;
      if (r.accepted_patch) ++s.accepted_count;
    }
    if (!r.in_reply_to) {
      ++s.new_thread_count;
      if (r.is_bot) ++s.bot_spam_count;
    }
  }
  return stats;
}

const std::array<std::string_view, kCharacteristicCount>& CharacteristicVector::field_names() {
  static const std::array<std::string_view, kCharacteristicCount> names = {
      "sender_experience", "sender_engagement", "persuasive",       "patch_email",
      "bug_fix",           "new_feature",       "patch_churn",      "fkre_score",
      "fkgl_score",        "verbosity",         "response_latency", "first_patch_thread",
      "accepted_patch",    "accepted_commit"};
  return names;
}

std::array<double, kCharacteristicCount> CharacteristicVector::values() const {
  const double nan = std::nan("");
  return {sender_experience,     sender_engagement,     persuasive,       patch_email,
          bug_fix,               new_feature,           patch_churn,      fkre_score.value_or(nan),
          fkgl_score.value_or(nan), verbosity,          response_latency, first_patch_thread,
          accepted_patch,        accepted_commit};
}

std::vector<CharacterizedEvent> characterize(std::span<const RawRecord> records,
                                             const std::map<std::string, SenderStats>& sender_stats) {
  std::vector<CharacterizedEvent> out;
  out.reserve(records.size());
  for (const RawRecord& r : records) {
    const auto it = sender_stats.find(r.sender_id);
    if (it == sender_stats.end()) {
      throw Error(fmt::format("missing sender stats for sender '{}'", r.sender_id));
    }
    const SenderStats& s = it->second;
    const TextStats text = text_stats(r.body_text);

    CharacteristicVector v;
    v.sender_experience = sender_experience(s.accepted_count, s.submitted_count);
    v.sender_engagement = sender_engagement(s.new_thread_count, s.bot_spam_count, s.sent_count);
    v.persuasive = r.persuasive ? 1.0 : 0.0;
    v.patch_email = r.is_patch ? 1.0 : 0.0;
    v.bug_fix = r.is_bug_fix ? 1.0 : 0.0;
    v.new_feature = r.is_new_feature ? 1.0 : 0.0;
    v.patch_churn = r.is_revision ? 1.0 : 0.0;
    v.fkre_score = fkre(text.words, text.sentences, text.syllables);
    v.fkgl_score = fkgl(text.words, text.sentences, text.syllables);
    v.verbosity = text.sentences == 0
                      ? 0.0
                      : static_cast<double>(text.words) / static_cast<double>(text.sentences);
    v.response_latency = static_cast<double>(r.received_time - r.sent_time);
    v.first_patch_thread = r.is_first_in_thread ? 1.0 : 0.0;
    v.accepted_patch = r.accepted_patch ? 1.0 : 0.0;
    v.accepted_commit = r.accepted_commit ? 1.0 : 0.0;

    out.push_back({r.record_id, r.sender_id, r.subsystem, r.sent_time, v});
  }
  return out;
}

void write_characteristics_csv(std::ostream& out, std::span<const CharacterizedEvent> events) {
  std::vector<std::string> header = {"record_id", "sender_id", "subsystem", "sent_time"};
  for (const auto name : CharacteristicVector::field_names()) header.emplace_back(name);
  write_csv_row(out, header);
  for (const CharacterizedEvent& e : events) {
    std::vector<std::string> row = {e.record_id, e.sender_id, e.subsystem,
                                    format_iso8601(e.sent_time)};
    for (const double v : e.characteristics.values()) row.push_back(format_real(v));
    write_csv_row(out, row);
  }
}

std::vector<CharacterizedEvent> read_characteristics_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const std::size_t id = table.column("record_id");
  const std::size_t sender = table.column("sender_id");
  const std::size_t subsystem = table.column("subsystem");
  const std::size_t sent = table.column("sent_time");
  std::array<std::size_t, kCharacteristicCount> cols{};
  for (std::size_t j = 0; j < kCharacteristicCount; ++j) {
    cols[j] = table.column(CharacteristicVector::field_names()[j]);
  }

  std::vector<CharacterizedEvent> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    try {
      std::array<double, kCharacteristicCount> v{};
      for (std::size_t j = 0; j < kCharacteristicCount; ++j) v[j] = parse_real(row[cols[j]]);
      auto optional = [](double x) { return std::isnan(x) ? std::nullopt : std::optional<double>(x); };
      CharacteristicVector c{v[0], v[1], v[2],  v[3],  v[4],  v[5],  v[6],
                             optional(v[7]), optional(v[8]), v[9], v[10], v[11], v[12], v[13]};
      out.push_back({row[id], row[sender], row[subsystem], parse_timestamp(row[sent]), c});
    } catch (const Error& e) {
      throw Error(fmt::format("characteristics row {}: {}", i + 2, e.what()));
    }
  }
  return out;
}

}  // namespace trust_motion
