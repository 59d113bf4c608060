#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lcone/dynamics.hpp"

namespace lcone {

/// Writes `content` to `path` through a temporary sibling and a rename, so a
/// reader never sees a partial file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Snapshot export: `<stem>.bin` holds the amplitudes as little-endian
/// float64 pairs (re, im), snapshot-major; `<stem>.json` describes geometry,
/// times, integrator statistics and the run metadata. Returns the manifest path.
std::filesystem::path write_trajectory(const Trajectory& trajectory,
                                       const std::filesystem::path& directory,
                                       const std::string& stem);

/// Re-ingests a trajectory from its JSON manifest.
Trajectory read_trajectory(const std::filesystem::path& manifest);

}  // namespace lcone
