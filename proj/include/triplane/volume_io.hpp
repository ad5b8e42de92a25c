#pragma once

#include <filesystem>

#include "triplane/volume.hpp"

namespace triplane {

// ".vol" container: magic "TVX1", then T, H, W as u32 little-endian, then
// T*H*W IEEE-754 float32 little-endian in (t, y, x) row-major order.
void write_vol(const Volume& v, const std::filesystem::path& path);
Volume read_vol(const std::filesystem::path& path);

// Binary PGM (P5, maxval 255), intensity = round(255 * clamp(v, 0, 1)).
void write_pgm(const Image& img, const std::filesystem::path& path);

// Writes frame_0000.pgm, frame_0001.pgm, ... into dir (created if missing).
void export_frames_pgm(const Volume& v, const std::filesystem::path& dir);

}  // namespace triplane
