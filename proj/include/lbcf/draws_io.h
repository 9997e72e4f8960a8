#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "lbcf/sampler.h"

namespace lbcf {

inline constexpr const char* kDrawFormat = "lbcf-draws";
inline constexpr int kDrawFormatVersion = 1;

// Newline-delimited JSON: one header object (format tag, version, config,
// hyperparameters, schema, subjects, chains) followed by one object per saved
// draw. Doubles are written in shortest round-trip form, so a reloaded file
// reproduces predictions bitwise.
void write_draws(std::ostream& out, const PosteriorDraws& draws);
void write_draws_file(const std::filesystem::path& path, const PosteriorDraws& draws);
PosteriorDraws read_draws(std::istream& in);
PosteriorDraws read_draws_file(const std::filesystem::path& path);

}  // namespace lbcf
