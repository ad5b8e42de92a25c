#pragma once

#include <filesystem>

#include "triplane/scene.hpp"

namespace triplane {

// Writes manifest.json plus clean_NNNN.vol / noisy_NNNN.vol into `dir`
// (created if missing). Filenames come from the manifest's volume table.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Inverse of save_dataset. Throws IoError on missing or inconsistent files.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace triplane
