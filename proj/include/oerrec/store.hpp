#pragma once

// Durable engine state: an append-only JSON-lines event log plus snapshots
// with a manifest (schema version, entity counts, CRC-32 of the state).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <vector>

#include "oerrec/engine.hpp"

namespace oerrec {

inline constexpr int kSnapshotSchemaVersion = 1;

struct SnapshotManifest {
  int schema_version = kSnapshotSchemaVersion;
  std::map<std::string, std::size_t> counts;
  std::uint32_t checksum = 0;
  Timestamp created = 0;
  std::uint64_t last_seq = 0;
};

struct Snapshot {
  SnapshotManifest manifest;
  EngineState state;
};

/// CRC-32 of the compact JSON encoding of the state.
std::uint32_t state_checksum(const Json& state);

class Store {
 public:
  /// Creates the directory if needed. Throws PersistenceError when it is
  /// not writable.
  explicit Store(std::filesystem::path dir);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path log_path() const { return dir_ / "events.log"; }
  std::filesystem::path snapshot_path() const { return dir_ / "snapshot.json"; }

  /// Throws PersistenceError on a checksum mismatch, a newer schema
  /// version or malformed content. nullopt when no snapshot exists.
  std::optional<Snapshot> read_snapshot() const;
  /// Written to a temporary file and renamed into place.
  void write_snapshot(const EngineState& state, Timestamp created);

  /// Events with seq > after, in order. A torn final line (crash during an
  /// append) is ignored; any other malformed line is a PersistenceError.
  std::vector<Json> read_events(std::uint64_t after = 0) const;

  /// Assigns the next sequence number, appends the event and flushes it to
  /// stable storage before returning the number.
  std::uint64_t append(Json event);
  std::uint64_t last_seq() const noexcept { return last_seq_; }

 private:
  void open_log();

  std::filesystem::path dir_;
  std::FILE* log_ = nullptr;
  std::uint64_t last_seq_ = 0;
};

struct RecoveryReport {
  bool from_snapshot = false;
  std::uint64_t snapshot_seq = 0;
  std::size_t replayed = 0;
};

/// Loads the snapshot into `engine` and replays later events. The engine's
/// journal must not point at `store` while recovering.
RecoveryReport recover(const Store& store, Engine& engine);

}  // namespace oerrec
