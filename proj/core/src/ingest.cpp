#include "trust_motion/ingest.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "trust_motion/characteristics.hpp"

namespace trust_motion {

using nlohmann::json;

FilterPolicy FilterPolicy::permissive() {
  FilterPolicy policy;
  policy.min_words = 0;
  policy.require_reply = false;
  policy.require_human = false;
  policy.require_persuasive = false;
  return policy;
}

namespace {

const json& required(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw Error(fmt::format("missing required field '{}'", key));
  return *it;
}

std::string string_field(const json& value, const char* key) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  throw Error(fmt::format("field '{}' must be a string", key));
}

Timestamp time_field(const json& value, const char* key) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_string()) {
    try {
      return parse_timestamp(value.get<std::string>());
    } catch (const Error& e) {
      throw Error(fmt::format("field '{}': {}", key, e.what()));
    }
  }
  throw Error(fmt::format("field '{}' must be an ISO-8601 string or epoch seconds", key));
}

bool bool_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_number_integer()) {
    const auto v = it->get<std::int64_t>();
    if (v == 0 || v == 1) return v == 1;
  }
  throw Error(fmt::format("field '{}' must be a boolean", key));
}

RawRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw Error("line is not a JSON object");
  RawRecord r;
  r.record_id = string_field(required(obj, "record_id"), "record_id");
  r.sender_id = string_field(required(obj, "sender_id"), "sender_id");
  r.subsystem = string_field(required(obj, "subsystem"), "subsystem");
  r.sent_time = time_field(required(obj, "sent_time"), "sent_time");
  r.received_time = time_field(required(obj, "received_time"), "received_time");
  r.body_text = string_field(required(obj, "body_text"), "body_text");
  if (const auto it = obj.find("thread_id"); it != obj.end() && !it->is_null()) {
    r.thread_id = string_field(*it, "thread_id");
  } else {
    r.thread_id = r.record_id;
  }
  if (const auto it = obj.find("in_reply_to"); it != obj.end() && !it->is_null()) {
    r.in_reply_to = string_field(*it, "in_reply_to");
  }
  r.is_bot = bool_field(obj, "is_bot");
  r.persuasive = bool_field(obj, "persuasive");
  r.is_patch = bool_field(obj, "is_patch");
  r.is_bug_fix = bool_field(obj, "is_bug_fix");
  r.is_new_feature = bool_field(obj, "is_new_feature");
  r.is_revision = bool_field(obj, "is_revision");
  r.is_first_in_thread = bool_field(obj, "is_first_in_thread");
  r.accepted_patch = bool_field(obj, "accepted_patch");
  r.accepted_commit = bool_field(obj, "accepted_commit");

  if (r.received_time < r.sent_time) {
    throw InvariantViolation("invariant violation: received_time precedes sent_time");
  }
  if (r.is_first_in_thread && r.in_reply_to) {
    throw InvariantViolation("invariant violation: is_first_in_thread record has in_reply_to");
  }
  return r;
}

json record_to_json(const RawRecord& r) {
  json obj = json::object();
  obj["record_id"] = r.record_id;
  obj["sender_id"] = r.sender_id;
  obj["subsystem"] = r.subsystem;
  obj["sent_time"] = format_iso8601(r.sent_time);
  obj["received_time"] = format_iso8601(r.received_time);
  obj["thread_id"] = r.thread_id;
  obj["in_reply_to"] = r.in_reply_to ? json(*r.in_reply_to) : json(nullptr);
  obj["body_text"] = r.body_text;
  obj["is_bot"] = r.is_bot;
  obj["persuasive"] = r.persuasive;
  obj["is_patch"] = r.is_patch;
  obj["is_bug_fix"] = r.is_bug_fix;
  obj["is_new_feature"] = r.is_new_feature;
  obj["is_revision"] = r.is_revision;
  obj["is_first_in_thread"] = r.is_first_in_thread;
  obj["accepted_patch"] = r.accepted_patch;
  obj["accepted_commit"] = r.accepted_commit;
  return obj;
}

}  // namespace

ParseResult parse_events(std::istream& in) {
  ParseResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      RawRecord r = record_from_json(json::parse(line));
      if (!seen.insert(r.record_id).second) {
        throw InvariantViolation(
            fmt::format("invariant violation: duplicate record_id '{}'", r.record_id));
      }
      result.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      result.errors.push_back({number, fmt::format("malformed JSON: {}", e.what())});
    } catch (const Error& e) {
      result.errors.push_back({number, e.what()});
    }
  }
  return result;
}

ParseResult parse_events_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}' for reading", path));
  return parse_events(in);
}

void write_events(std::ostream& out, std::span<const RawRecord> records) {
  for (const RawRecord& r : records) out << record_to_json(r).dump() << '\n';
}

std::size_t ReplyCounts::at(const std::string& record_id) const {
  const auto it = counts.find(record_id);
  return it == counts.end() ? 0 : it->second;
}

ReplyCounts count_replies(std::span<const RawRecord> records, ReplyMode mode) {
  ReplyCounts out;
  for (const RawRecord& r : records) out.counts.emplace(r.record_id, 0);

  std::unordered_map<std::string, std::string> parent;
  for (const RawRecord& r : records) {
    if (!r.in_reply_to) continue;
    if (!out.counts.contains(*r.in_reply_to)) {
      out.orphans.push_back(r.record_id);
      continue;
    }
    parent.emplace(r.record_id, *r.in_reply_to);
  }

  for (const auto& [child, direct_parent] : parent) {
    if (mode == ReplyMode::direct) {
      ++out.counts[direct_parent];
      continue;
    }
    // Credit every ancestor once; the visited set guards malformed cycles.
    std::set<std::string> visited{child};
    std::string current = direct_parent;
    while (visited.insert(current).second) {
      ++out.counts[current];
      const auto up = parent.find(current);
      if (up == parent.end()) break;
      current = up->second;
    }
  }
  return out;
}

bool passes_length_rule(std::string_view body, std::size_t min_words) {
  const TextStats stats = text_stats(body);
  return stats.words >= min_words || stats.complete_sentences >= 1;
}

std::vector<RawRecord> filter_events(std::span<const RawRecord> records, const FilterPolicy& policy) {
  std::vector<RawRecord> current;
  current.reserve(records.size());
  for (const RawRecord& r : records) {
    if (policy.require_human && r.is_bot) continue;
    if (r.is_patch) {
      if (policy.require_persuasive && !r.persuasive) continue;
      if (!passes_length_rule(r.body_text, policy.min_words)) continue;
    }
    current.push_back(r);
  }
  if (!policy.require_reply) return current;

  // Dropping a patch can strip the only reply of another patch, so iterate.
  for (;;) {
    const ReplyCounts replies = count_replies(current, policy.reply_mode);
    std::vector<RawRecord> next;
    next.reserve(current.size());
    for (RawRecord& r : current) {
      if (r.is_patch && replies.at(r.record_id) == 0) continue;
      next.push_back(std::move(r));
    }
    const bool stable = next.size() == current.size();
    current = std::move(next);
    if (stable) return current;
  }
}

FilterPolicy parse_filter_policy(std::string_view json_text) {
  FilterPolicy policy;
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(fmt::format("filter policy: malformed JSON: {}", e.what()));
  }
  if (!obj.is_object()) throw Error("filter policy must be a JSON object");
  try {
  for (const auto& [key, value] : obj.items()) {
    if (key == "min_words") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw Error("filter policy: min_words must be a non-negative integer");
      }
      policy.min_words = value.get<std::size_t>();
    } else if (key == "require_reply") {
      policy.require_reply = value.get<bool>();
    } else if (key == "require_human") {
      policy.require_human = value.get<bool>();
    } else if (key == "require_persuasive") {
      policy.require_persuasive = value.get<bool>();
    } else if (key == "reply_mode") {
      const auto mode = value.get<std::string>();
      if (mode == "direct") {
        policy.reply_mode = ReplyMode::direct;
      } else if (mode == "subtree") {
        policy.reply_mode = ReplyMode::subtree;
      } else {
        throw Error(fmt::format("filter policy: unknown reply_mode '{}'", mode));
      }
    } else {
      throw Error(fmt::format("filter policy: unknown key '{}'", key));
    }
  }
  } catch (const json::exception& e) {
    throw Error(fmt::format("filter policy: {}", e.what()));
  }
  return policy;
}

std::string filter_policy_to_json(const FilterPolicy& policy) {
  json obj = {{"min_words", policy.min_words},
              {"require_reply", policy.require_reply},
              {"require_human", policy.require_human},
              {"require_persuasive", policy.require_persuasive},
              {"reply_mode", policy.reply_mode == ReplyMode::direct ? "direct" : "subtree"}};
  return obj.dump(2);
}

}  // namespace trust_motion
