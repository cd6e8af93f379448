#include "mrlab/artifact_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mrlab/error.hpp"

namespace mrlab {

static_assert(std::endian::native == std::endian::little, "artifacts are written in native little-endian order");

namespace {

constexpr char kMagic[4] = {'M', 'R', 'L', 'B'};

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

std::span<const unsigned char> bytes_of(std::span<const double> v) {
  return {reinterpret_cast<const unsigned char*>(v.data()), v.size() * sizeof(double)};
}

}  // namespace

const std::vector<double>& Artifact::array(std::string_view name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return v;
  throw MissingArtifact("artifact has no array '" + std::string(name) + "'");
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text) {
  return fnv1a({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

void write_artifact(const std::filesystem::path& path, const std::string& kind, nlohmann::json meta,
                    const std::vector<std::pair<std::string, std::span<const double>>>& arrays) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, data] : arrays) {
    h = fnv1a(bytes_of(data), h);
    list.push_back({{"name", name}, {"size", data.size()}});
  }
  nlohmann::json header = {{"kind", kind}, {"version", MRLAB_VERSION}, {"meta", std::move(meta)},
                           {"arrays", list}, {"checksum", hex(h)}};
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingArtifact("cannot write " + path.string());
  const auto len = static_cast<std::uint32_t>(text.size());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, data] : arrays) {
    const auto b = bytes_of(data);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  }
  if (!out) throw MissingArtifact("short write to " + path.string());
}

Artifact read_artifact(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("missing artifact " + path.string());
  char magic[4];
  std::uint32_t len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw MissingArtifact(path.string() + ": not an artifact file");
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw MissingArtifact(path.string() + ": truncated header");
  Artifact a;
  try {
    a.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MissingArtifact(path.string() + ": bad header: " + e.what());
  }
  if (a.header.value("kind", std::string()) != expected_kind)
    throw MissingArtifact(path.string() + ": expected a " + expected_kind + " artifact");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& entry : a.header.at("arrays")) {
    std::vector<double> v(entry.at("size").get<std::size_t>());
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw MissingArtifact(path.string() + ": truncated payload");
    h = fnv1a(bytes_of(v), h);
    a.arrays.emplace_back(entry.at("name").get<std::string>(), std::move(v));
  }
  if (hex(h) != a.header.value("checksum", std::string()))
    throw MissingArtifact(path.string() + ": checksum mismatch");
  return a;
}

void save_tensor(const std::filesystem::path& path, const ConstrainedKernelTensor& t) {
  nlohmann::json meta = {{"model", t.model.to_json()},
                         {"G", t.G()},
                         {"M", t.M},
                         {"n_max", t.n_max},
                         {"halfline_cells", t.halfline_cells}};
  write_artifact(path, "constrained_kernel", meta,
                 {{"f", t.f},
                  {"survival", t.survival},
                  {"fbar", t.fbar},
                  {"phi", t.phi},
                  {"strip_tail", t.strip_tail},
                  {"defect", t.defect},
                  {"truncation", t.truncation},
                  {"mass_balance", t.mass_balance}});
}

ConstrainedKernelTensor load_tensor(const std::filesystem::path& path) {
  const Artifact a = read_artifact(path, "constrained_kernel");
  const auto& m = a.header.at("meta");
  ConstrainedKernelTensor t;
  t.model = WalkModel::from_json(m.at("model"));
  t.grid = StateGrid(t.model.a, m.at("G").get<std::size_t>());
  t.M = m.at("M").get<double>();
  t.n_max = m.at("n_max").get<std::int64_t>();
  t.halfline_cells = m.at("halfline_cells").get<std::size_t>();
  t.f = a.array("f");
  t.survival = a.array("survival");
  t.fbar = a.array("fbar");
  t.phi = a.array("phi");
  t.strip_tail = a.array("strip_tail");
  t.defect = a.array("defect");
  t.truncation = a.array("truncation");
  t.mass_balance = a.array("mass_balance");
  const std::size_t G = t.G();
  const auto n = static_cast<std::size_t>(t.n_max);
  if (t.f.size() != n * G * G || t.survival.size() != (n + 1) * G || t.phi.size() != G * G)
    throw MissingArtifact(path.string() + ": array sizes do not match the header");
  return t;
}

void save_spectral(const std::filesystem::path& path, const SpectralResult& r, double beta_c, double lambda) {
  nlohmann::json meta = {{"delta", r.delta},
                         {"delta_left", r.delta_left},
                         {"beta_c", beta_c},
                         {"lambda", lambda},
                         {"residual_right", r.residual_right},
                         {"residual_left", r.residual_left}};
  write_artifact(path, "spectral", meta, {{"v", r.v}, {"w", r.w}});
}

void save_partition(const std::filesystem::path& path, const PartitionTable& table) {
  nlohmann::json meta = {{"beta", table.beta},
                         {"N", table.N},
                         {"mode", table.mode == LastExcursion::Renewal ? "renewal" : "constrained"},
                         {"model", table.tensor->model.to_json()},
                         {"G", table.G()}};
  write_artifact(path, "partition", meta, {{"Z", table.Z}});
}

PartitionTable load_partition(const std::filesystem::path& path, const ConstrainedKernelTensor& tensor) {
  const Artifact a = read_artifact(path, "partition");
  const auto& m = a.header.at("meta");
  if (m.at("G").get<std::size_t>() != tensor.G() || m.at("model") != tensor.model.to_json())
    throw MissingArtifact(path.string() + ": partition table was built from a different tensor");
  PartitionTable t;
  t.tensor = &tensor;
  t.beta = m.at("beta").get<double>();
  t.N = m.at("N").get<std::int64_t>();
  t.mode = m.at("mode").get<std::string>() == "renewal" ? LastExcursion::Renewal : LastExcursion::Constrained;
  t.Z = a.array("Z");
  if (t.Z.size() != static_cast<std::size_t>(t.N + 1) * tensor.G())
    throw MissingArtifact(path.string() + ": array sizes do not match the header");
  return t;
}

}  // namespace mrlab
