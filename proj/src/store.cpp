#include "oerrec/store.hpp"

#include <unistd.h>
#include <zlib.h>

#include <fstream>
#include <sstream>

#include "oerrec/error.hpp"

namespace oerrec {

namespace fs = std::filesystem;

namespace {

struct ParsedLog {
  std::vector<Json> events;
  std::uintmax_t valid_bytes = 0;  // prefix made of complete, well-formed lines
};

ParsedLog parse_log(const fs::path& path) {
  ParsedLog parsed;
  std::ifstream in(path, std::ios::binary);
  if (!in) return parsed;
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::uint64_t previous_seq = 0;
  while (pos < data.size()) {
    ++line_no;
    const std::size_t newline = data.find('\n', pos);
    const bool complete = newline != std::string::npos;
    const std::string line = data.substr(pos, complete ? newline - pos : std::string::npos);
    Json event = Json::parse(line, nullptr, false);
    const bool well_formed = !event.is_discarded() && event.is_object() && event.contains("seq") &&
                             event["seq"].is_number_unsigned() && event.contains("type");
    if (!complete || !well_formed) {
      const bool last_line = !complete || newline + 1 == data.size();
      if (last_line) break;  // torn tail
      throw PersistenceError(path.string() + ": corrupt event at line " + std::to_string(line_no));
    }
    const auto seq = event["seq"].get<std::uint64_t>();
    if (seq <= previous_seq) {
      throw PersistenceError(path.string() + ": non-increasing sequence number at line " +
                             std::to_string(line_no));
    }
    previous_seq = seq;
    parsed.events.push_back(std::move(event));
    pos = newline + 1;
    parsed.valid_bytes = pos;
  }
  return parsed;
}

void fsync_file(std::FILE* f) {
  if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) throw PersistenceError("cannot flush event log");
}

void fsync_dir(const fs::path& dir) {
  if (std::FILE* d = std::fopen(dir.c_str(), "r")) {
    ::fsync(::fileno(d));
    std::fclose(d);
  }
}

}  // namespace

std::uint32_t state_checksum(const Json& state) {
  const std::string bytes = state.dump();
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

Store::Store(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw PersistenceError("cannot create data directory " + dir_.string() + ": " + ec.message());
  open_log();
}

Store::~Store() {
  if (log_) std::fclose(log_);
}

void Store::open_log() {
  const fs::path path = log_path();
  ParsedLog parsed = parse_log(path);
  if (fs::exists(path) && fs::file_size(path) != parsed.valid_bytes) fs::resize_file(path, parsed.valid_bytes);
  if (!parsed.events.empty()) last_seq_ = parsed.events.back()["seq"].get<std::uint64_t>();
  if (auto snapshot = read_snapshot()) last_seq_ = std::max(last_seq_, snapshot->manifest.last_seq);
  log_ = std::fopen(path.c_str(), "ab");
  if (!log_) throw PersistenceError("data directory not writable: " + dir_.string());
}

std::optional<Snapshot> Store::read_snapshot() const {
  const fs::path path = snapshot_path();
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  const Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("manifest") || !doc.contains("state")) {
    throw PersistenceError(path.string() + ": malformed snapshot");
  }
  Snapshot snapshot;
  try {
    const Json& m = doc.at("manifest");
    snapshot.manifest.schema_version = m.at("schema_version").get<int>();
    if (snapshot.manifest.schema_version > kSnapshotSchemaVersion) {
      throw PersistenceError(path.string() + ": snapshot schema version " +
                             std::to_string(snapshot.manifest.schema_version) + " is newer than supported version " +
                             std::to_string(kSnapshotSchemaVersion));
    }
    m.at("counts").get_to(snapshot.manifest.counts);
    m.at("checksum").get_to(snapshot.manifest.checksum);
    m.at("created").get_to(snapshot.manifest.created);
    m.at("last_seq").get_to(snapshot.manifest.last_seq);
    const std::uint32_t actual = state_checksum(doc.at("state"));
    if (actual != snapshot.manifest.checksum) {
      throw PersistenceError(path.string() + ": snapshot checksum mismatch (manifest " +
                             std::to_string(snapshot.manifest.checksum) + ", content " + std::to_string(actual) + ")");
    }
    doc.at("state").get_to(snapshot.state);
  } catch (const Json::exception& e) {
    throw PersistenceError(path.string() + ": malformed snapshot: " + e.what());
  } catch (const InvalidArgument& e) {
    throw PersistenceError(path.string() + ": malformed snapshot: " + e.what());
  }
  return snapshot;
}

void Store::write_snapshot(const EngineState& state, Timestamp created) {
  const Json encoded = state;
  Json manifest{{"schema_version", kSnapshotSchemaVersion},
                {"counts",
                 {{"learners", state.learners.size()},
                  {"oers", state.catalog.size()},
                  {"job_profiles", state.job_profiles.size()},
                  {"recommendations", state.recommendations.size()},
                  {"ratings", state.ratings.size()}}},
                {"checksum", state_checksum(encoded)},
                {"created", created},
                {"last_seq", last_seq_}};
  const std::string text = Json{{"manifest", manifest}, {"state", encoded}}.dump();

  const fs::path tmp = dir_ / "snapshot.json.tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw PersistenceError("cannot write " + tmp.string());
  const bool written = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  const bool synced = written && std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
  std::fclose(f);
  if (!synced) throw PersistenceError("cannot write " + tmp.string());
  fs::rename(tmp, snapshot_path());
  fsync_dir(dir_);
}

std::vector<Json> Store::read_events(std::uint64_t after) const {
  std::vector<Json> out;
  for (Json& e : parse_log(log_path()).events) {
    if (e["seq"].get<std::uint64_t>() > after) out.push_back(std::move(e));
  }
  return out;
}

std::uint64_t Store::append(Json event) {
  event["seq"] = last_seq_ + 1;
  const std::string line = event.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), log_) != line.size()) {
    throw PersistenceError("cannot append to event log");
  }
  fsync_file(log_);
  return ++last_seq_;
}

RecoveryReport recover(const Store& store, Engine& engine) {
  RecoveryReport report;
  if (auto snapshot = store.read_snapshot()) {
    engine.restore(std::move(snapshot->state));
    report.from_snapshot = true;
    report.snapshot_seq = snapshot->manifest.last_seq;
  }
  for (const Json& e : store.read_events(report.snapshot_seq)) {
    try {
      replay_event(engine, e);
    } catch (const PersistenceError&) {
      throw;
    } catch (const std::exception& ex) {
      throw PersistenceError("replay of event " + std::to_string(e["seq"].get<std::uint64_t>()) +
                             " failed: " + ex.what());
    }
    ++report.replayed;
  }
  return report;
}

}  // namespace oerrec
