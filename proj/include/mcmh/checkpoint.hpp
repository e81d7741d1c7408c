#pragma once

// Text checkpoints: a versioned header, a [metadata] section of key=value
// lines, then one [network NAME] section per player with shape-annotated
// row-major values. Doubles are written with 17 significant digits so a
// reload is bit-exact.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "mcmh/game.hpp"

namespace mcmh {

inline constexpr std::string_view kCheckpointHeader = "# mcmh-checkpoint v1";

struct CheckpointMeta {
  std::string relation;
  std::string mode;
  std::uint64_t seed = 0;
  double best_dev_map = 0.0;
  int epoch = 0;
  /// Vocabulary file the model was trained against, relative to the checkpoint.
  std::string vocabulary;
};

struct Checkpoint {
  CheckpointMeta meta;
  GameModel model;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
/// Throws DataError on a malformed document or inconsistent shapes.
Checkpoint read_checkpoint(std::istream& in, std::string_view source = "<stream>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mcmh
