#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "trust_motion/csv.hpp"
#include "trust_motion/embeddings.hpp"

namespace trust_motion {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* granularity_name(TokenGranularity g) {
  return g == TokenGranularity::label_subsystem ? "label_subsystem" : "label_sender_subsystem";
}

TokenGranularity granularity_from(const std::string& name) {
  if (name == "label_sender_subsystem") return TokenGranularity::label_sender_subsystem;
  if (name == "label_subsystem") return TokenGranularity::label_subsystem;
  throw Error(fmt::format("unknown token granularity '{}'", name));
}

json config_json(const SgnsConfig& c) {
  return {{"dim", c.dim},
          {"window", format_duration(c.window)},
          {"negatives", c.negatives},
          {"alpha", c.alpha},
          {"subsample", c.subsample},
          {"learning_rate", c.learning_rate},
          {"min_learning_rate", c.min_learning_rate},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"granularity", granularity_name(c.granularity)}};
}

Seconds duration_value(const json& v) {
  if (v.is_number_integer()) return v.get<Seconds>();
  return parse_duration(v.get<std::string>());
}

SgnsConfig config_from(const json& j, SgnsConfig c) {
  for (const auto& [key, v] : j.items()) {
    if (key == "dim") c.dim = v.get<std::size_t>();
    else if (key == "window") c.window = duration_value(v);
    else if (key == "negatives") c.negatives = v.get<std::size_t>();
    else if (key == "alpha") c.alpha = v.get<double>();
    else if (key == "subsample") c.subsample = v.get<double>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "min_learning_rate") c.min_learning_rate = v.get<double>();
    else if (key == "epochs") c.epochs = v.get<std::size_t>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "granularity") c.granularity = granularity_from(v.get<std::string>());
    else throw Error(fmt::format("unknown SGNS config key '{}'", key));
  }
  return c;
}

void write_slice_csv(const fs::path& path, const SliceEmbeddings& e) {
  std::ostringstream out;
  std::vector<std::string> header = {"label", "sender_id", "subsystem", "count"};
  for (std::size_t j = 0; j < e.dim(); ++j) header.push_back(fmt::format("y{}", j));
  for (std::size_t j = 0; j < e.dim(); ++j) header.push_back(fmt::format("c{}", j));
  write_csv_row(out, header);
  for (std::size_t i = 0; i < e.vocab.size(); ++i) {
    const ActivityToken& t = e.vocab.tokens[i];
    std::vector<std::string> row = {std::to_string(t.label), t.sender_id, t.subsystem,
                                    std::to_string(e.vocab.counts[i])};
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < e.activity.cols(); ++j) row.push_back(format_real(e.activity(r, j)));
    for (Eigen::Index j = 0; j < e.context.cols(); ++j) row.push_back(format_real(e.context(r, j)));
    write_csv_row(out, row);
  }
  write_file(path.string(), out.str());
}

void read_slice_csv(const fs::path& path, SliceEmbeddings& e, std::size_t dim) {
  const CsvTable table = read_csv_file(path.string());
  if (table.header.size() != 4 + 2 * dim) {
    throw Error(fmt::format("{}: expected {} columns for dim {}", path.string(), 4 + 2 * dim, dim));
  }
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  e.activity.resize(n, static_cast<Eigen::Index>(dim));
  e.context.resize(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const auto label = parse_int(row[0]);
    const auto count = parse_int(row[3]);
    if (label < 0 || count < 0) throw Error(fmt::format("{}: negative label or count", path.string()));
    const ActivityToken token{static_cast<std::size_t>(label), row[1], row[2]};
    if (e.vocab.find(token)) throw Error(fmt::format("{}: duplicate token row {}", path.string(), i + 2));
    e.vocab.add(token, static_cast<std::size_t>(count));
    for (std::size_t j = 0; j < dim; ++j) {
      e.activity(i, static_cast<Eigen::Index>(j)) = parse_real(row[4 + j]);
      e.context(i, static_cast<Eigen::Index>(j)) = parse_real(row[4 + dim + j]);
    }
  }
  if (!e.activity.allFinite() || !e.context.allFinite()) {
    throw Error(fmt::format("{}: non-finite embedding entries", path.string()));
  }
}

}  // namespace

std::string sgns_config_to_json(const SgnsConfig& config) { return config_json(config).dump(2); }

SgnsConfig sgns_config_from_json(std::string_view text, const SgnsConfig& base) {
  try {
    return config_from(json::parse(text), base);
  } catch (const json::exception& e) {
    throw Error(fmt::format("SGNS config: {}", e.what()));
  }
}

void write_embedding_set(const std::string& dir, const EmbeddingSet& set) {
  fs::create_directories(dir);
  json slices = json::array();
  std::size_t next = 0;
  for (const SliceInfo& info : set.slices) {
    json s = {{"index", info.index},
              {"start", format_iso8601(info.start)},
              {"end", format_iso8601(info.end)},
              {"events", info.events},
              {"empty", info.empty}};
    if (!info.empty) {
      if (next >= set.embeddings.size() || set.embeddings[next].slice_index != info.index) {
        throw Error(fmt::format("no embeddings for non-empty slice {}", info.index));
      }
      const SliceEmbeddings& e = set.embeddings[next++];
      const std::string file = fmt::format("slice_{:04d}.csv", info.index);
      write_slice_csv(fs::path(dir) / file, e);
      s["file"] = file;
      s["seed"] = e.seed;
      s["vocabulary"] = e.vocab.size();
      s["epoch_loss"] = e.epoch_loss;
    }
    slices.push_back(std::move(s));
  }
  json manifest = {{"format", "trust-motion-embeddings/1"},
                   {"slice_len", format_duration(set.slice_len)},
                   {"config", config_json(set.config)},
                   {"seed", set.config.seed},
                   {"activity_names", set.activity_names},
                   {"slices", slices}};
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

EmbeddingSet read_embedding_set(const std::string& dir) {
  EmbeddingSet set;
  json manifest;
  try {
    manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    set.config = config_from(manifest.at("config"), SgnsConfig{});
    set.slice_len = duration_value(manifest.at("slice_len"));
    set.activity_names = manifest.value("activity_names", std::vector<std::string>{});
    for (const auto& s : manifest.at("slices")) {
      SliceInfo info;
      info.index = s.at("index").get<std::size_t>();
      info.start = parse_timestamp(s.at("start").get<std::string>());
      info.end = parse_timestamp(s.at("end").get<std::string>());
      info.events = s.at("events").get<std::size_t>();
      info.empty = s.at("empty").get<bool>();
      if (!info.empty) {
        info.file = s.at("file").get<std::string>();
        SliceEmbeddings e;
        e.slice_index = info.index;
        e.start = info.start;
        e.end = info.end;
        e.config = set.config;
        e.seed = s.value("seed", std::uint64_t{0});
        e.epoch_loss = s.value("epoch_loss", std::vector<double>{});
        read_slice_csv(fs::path(dir) / info.file, e, set.config.dim);
        set.embeddings.push_back(std::move(e));
      }
      set.slices.push_back(std::move(info));
    }
  } catch (const json::exception& e) {
    throw Error(fmt::format("{}: invalid embeddings manifest: {}", dir, e.what()));
  }
  return set;
}

}  // namespace trust_motion
