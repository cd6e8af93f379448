#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrlab/walk_fluct.hpp"
#include "mrlab/wetting.hpp"

namespace mrlab {

/// Binary artifact: "MRLB", uint32 header length, JSON header, then named
/// little-endian double arrays back to back. The header lists the arrays and
/// an FNV-1a checksum of the payload bytes.
struct Artifact {
  nlohmann::json header;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  const std::vector<double>& array(std::string_view name) const;
};

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text);

void write_artifact(const std::filesystem::path& path, const std::string& kind, nlohmann::json meta,
                    const std::vector<std::pair<std::string, std::span<const double>>>& arrays);
Artifact read_artifact(const std::filesystem::path& path, const std::string& expected_kind);

void save_tensor(const std::filesystem::path& path, const ConstrainedKernelTensor& tensor);
ConstrainedKernelTensor load_tensor(const std::filesystem::path& path);

void save_spectral(const std::filesystem::path& path, const SpectralResult& r, double beta_c, double lambda);

void save_partition(const std::filesystem::path& path, const PartitionTable& table);
/// The table is bound to `tensor`; its header must match the tensor's model and grid.
PartitionTable load_partition(const std::filesystem::path& path, const ConstrainedKernelTensor& tensor);

}  // namespace mrlab
