#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trust_motion/common.hpp"

namespace trust_motion {

/// One mailing-list event as delivered by the upstream collector. The
/// persuasion, bot, and patch-linking flags are computed elsewhere and taken
/// as given.
struct RawRecord {
  std::string record_id;
  std::string sender_id;
  std::string subsystem;
  Timestamp sent_time = 0;
  Timestamp received_time = 0;
  std::string thread_id;
  std::optional<std::string> in_reply_to;
  std::string body_text;
  bool is_bot = false;
  bool persuasive = false;
  bool is_patch = false;
  bool is_bug_fix = false;
  bool is_new_feature = false;
  bool is_revision = false;
  bool is_first_in_thread = false;
  bool accepted_patch = false;
  bool accepted_commit = false;

  bool operator==(const RawRecord&) const = default;
};

enum class ReplyMode {
  direct,   ///< children whose in_reply_to names the record
  subtree,  ///< every transitive descendant in the reply tree
};

struct FilterPolicy {
  std::size_t min_words = 50;
  bool require_reply = true;
  bool require_human = true;
  /// Applies to patch emails only.
  bool require_persuasive = true;
  ReplyMode reply_mode = ReplyMode::direct;

  /// Admits everything; filter_events is then the identity.
  static FilterPolicy permissive();
};

struct ParseIssue {
  std::size_t line = 0;  ///< 1-based
  std::string message;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<ParseIssue> errors;
};

/// Reads the JSONL record format. Blank lines are skipped; every other line
/// either yields a record or a ParseIssue carrying its line number.
ParseResult parse_events(std::istream& in);
ParseResult parse_events_file(const std::string& path);

/// Writes records in the same JSONL schema parse_events accepts, with
/// timestamps rendered as ISO-8601 UTC strings.
void write_events(std::ostream& out, std::span<const RawRecord> records);

struct ReplyCounts {
  /// Every record id in the corpus, including those with zero replies.
  std::map<std::string, std::size_t> counts;
  /// Ids of records whose in_reply_to names no record in the corpus.
  std::vector<std::string> orphans;

  std::size_t at(const std::string& record_id) const;
};

ReplyCounts count_replies(std::span<const RawRecord> records, ReplyMode mode = ReplyMode::direct);

/// True when the body meets the word threshold or, failing that, contains at
/// least one sentence closed by a terminator.
bool passes_length_rule(std::string_view body, std::size_t min_words);

/// Keeps human records; patch emails must additionally satisfy the length,
/// reply, and persuasion predicates. Reply counts are taken over the
/// surviving set and the predicates are re-applied until nothing changes, so
/// the result is a fixed point and filtering is idempotent.
std::vector<RawRecord> filter_events(std::span<const RawRecord> records, const FilterPolicy& policy);

FilterPolicy parse_filter_policy(std::string_view json_text);
std::string filter_policy_to_json(const FilterPolicy& policy);

}  // namespace trust_motion
