#pragma once

#include <optional>
#include <string>

#include "riskreg/problems.hpp"

namespace riskreg {

inline constexpr std::uint32_t kContainerVersion = 1;

/// A problem instance and optionally one noisy data vector.
///
/// Byte layout (all integers and floats little-endian):
///   8 bytes   magic "RISKREG\0"
///   uint32    format version
///   uint32    header length L
///   L bytes   UTF-8 JSON header
///   float64   blocks in the order listed by header["blocks"]
/// Dense operators store block "A" column-major. parallel_tomo stores its
/// geometry in the header instead and is regenerated on load.
struct Container {
  ProblemInstance problem;
  bool has_f_true = true;
  std::optional<NoisyData> data;
};

void write_container(const std::string& path, const ProblemInstance& problem,
                     const NoisyData* data = nullptr, bool include_f_true = true);
/// Throws InputError on a malformed or unreadable file.
Container read_container(const std::string& path);

}  // namespace riskreg
