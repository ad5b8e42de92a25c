#include "triplane/dataset_io.hpp"

#include <fstream>

#include "triplane/errors.hpp"
#include "triplane/volume_io.hpp"

namespace fs = std::filesystem;

namespace triplane {

void save_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset dir " + dir.string() + ": " + ec.message());

  const auto& vols = ds.manifest.at("volumes");
  if (vols.size() != ds.pairs.size())
    throw IoError("dataset manifest lists " + std::to_string(vols.size()) + " volumes but " +
                  std::to_string(ds.pairs.size()) + " pairs are in memory");

  for (size_t i = 0; i < ds.pairs.size(); ++i) {
    write_vol(ds.pairs[i].clean, dir / vols.at(i).at("clean").get<std::string>());
    write_vol(ds.pairs[i].noisy, dir / vols.at(i).at("noisy").get<std::string>());
  }

  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot open " + (dir / "manifest.json").string() + " for writing");
  out << ds.manifest.dump(2) << '\n';
  if (!out) throw IoError("short write to " + (dir / "manifest.json").string());
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + manifest_path.string());

  Dataset ds;
  try {
    ds.manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }

  try {
    if (ds.manifest.at("format").get<std::string>() != "triplane-dataset-v1")
      throw IoError(manifest_path.string() + ": unsupported format tag");
    for (const auto& entry : ds.manifest.at("volumes")) {
      VolumePair p;
      p.clean = read_vol(dir / entry.at("clean").get<std::string>());
      p.noisy = read_vol(dir / entry.at("noisy").get<std::string>());
      if (p.clean.dims() != p.noisy.dims())
        throw IoError("dataset " + dir.string() + ": clean/noisy dims mismatch at index " +
                      entry.at("index").dump());
      ds.pairs.push_back(std::move(p));
    }
    ds.manifest.at("train").get_to(ds.train_indices);
    ds.manifest.at("test").get_to(ds.test_indices);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }

  for (size_t idx : ds.train_indices)
    if (idx >= ds.pairs.size())
      throw IoError(manifest_path.string() + ": train index " + std::to_string(idx) +
                    " out of range");
  for (size_t idx : ds.test_indices)
    if (idx >= ds.pairs.size())
      throw IoError(manifest_path.string() + ": test index " + std::to_string(idx) +
                    " out of range");
  return ds;
}

}  // namespace triplane
