#include "lcone/trajectory_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "lcone/error.hpp"

namespace lcone {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary snapshots assume little-endian");

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path write_trajectory(const Trajectory& tr, const fs::path& directory, const std::string& stem) {
  const std::size_t n = tr.geometry.site_count();
  std::string blob(tr.size() * n * 2 * sizeof(double), '\0');
  char* p = blob.data();
  for (const auto& s : tr.states) {
    if (static_cast<std::size_t>(s.size()) != n) throw Error("snapshot size mismatch");
    std::memcpy(p, s.data(), n * sizeof(cplx));
    p += n * sizeof(cplx);
  }
  const fs::path bin = directory / (stem + ".bin");
  write_atomic(bin, blob);

  nlohmann::json m;
  m["format"] = "lcone-trajectory-1";
  m["data"] = bin.filename().string();
  m["layout"] = "snapshot-major complex128 little-endian";
  m["geometry"] = {{"dimension", tr.geometry.dimension()},
                   {"half_width", tr.geometry.half_width()},
                   {"norm", to_string(tr.geometry.norm())}};
  m["times"] = tr.times;
  m["norm_drift"] = tr.norm_drift;
  m["steps"] = {{"accepted", tr.accepted_steps},
                {"rejected", tr.rejected_steps},
                {"smallest", tr.smallest_step},
                {"largest", tr.largest_step},
                {"max_local_error", tr.max_local_error}};
  m["max_amplitude"] = tr.max_amplitude;
  m["hypothesis_violation"] = tr.hypothesis_violation;
  m["metadata"] = tr.metadata;
  const fs::path manifest = directory / (stem + ".json");
  write_atomic(manifest, m.dump(2) + "\n");
  return manifest;
}

Trajectory read_trajectory(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open " + manifest.string());
  const nlohmann::json m = nlohmann::json::parse(in);
  if (m.value("format", "") != "lcone-trajectory-1")
    throw ValidationError("format", "not a trajectory manifest: " + manifest.string());

  Trajectory tr;
  const auto& g = m.at("geometry");
  tr.geometry = BoxGeometry(g.at("dimension").get<int>(), g.at("half_width").get<int>(),
                            parse_norm(g.at("norm").get<std::string>()));
  tr.times = m.at("times").get<std::vector<double>>();
  tr.norm_drift = m.at("norm_drift").get<std::vector<double>>();
  const auto& st = m.at("steps");
  tr.accepted_steps = st.at("accepted").get<long>();
  tr.rejected_steps = st.at("rejected").get<long>();
  tr.smallest_step = st.at("smallest").get<double>();
  tr.largest_step = st.at("largest").get<double>();
  tr.max_local_error = st.at("max_local_error").get<double>();
  tr.max_amplitude = m.value("max_amplitude", 0.0);
  tr.hypothesis_violation = m.value("hypothesis_violation", false);
  tr.metadata = m.value("metadata", nlohmann::json::object());

  const std::size_t n = tr.geometry.site_count();
  const fs::path bin = manifest.parent_path() / m.at("data").get<std::string>();
  std::ifstream data(bin, std::ios::binary);
  if (!data) throw Error("cannot open " + bin.string());
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    CVector s(static_cast<Eigen::Index>(n));
    data.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(n * sizeof(cplx)));
    if (!data) throw Error("truncated snapshot file " + bin.string());
    tr.states.push_back(std::move(s));
  }
  return tr;
}

}  // namespace lcone
